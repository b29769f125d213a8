#include "doctest.h"

#include "srcr/mask.hpp"
#include "srcr/pruning.hpp"
#include "srcr/synth.hpp"

using namespace srcr;

namespace {

DenseMatrix row_matrix(std::vector<double> vals) {
    std::size_t n = vals.size();
    return DenseMatrix(1, n, std::move(vals));
}

} // namespace

TEST_CASE("layer objective") {
    DenseMatrix w(1, 1, {1.0});
    DenseMatrix w0(1, 1, {0.0});
    DenseMatrix x(1, 2, {2.0, 2.0});
    CHECK(layer_objective(w, w, x) == 0.0);
    CHECK(layer_objective(w, w0, x) == doctest::Approx(8.0));
    // homogeneity: scaling x by c scales the objective by c^2
    DenseMatrix x3(1, 2, {6.0, 6.0});
    CHECK(layer_objective(w, w0, x3) == doctest::Approx(9.0 * 8.0));
    CHECK_THROWS_AS(layer_objective(w, w0, DenseMatrix::zeros(2, 2)), validation_error);
}

TEST_CASE("magnitude mask basics") {
    DenseMatrix w = row_matrix({1, -2, 3, -4});
    SparsityMask half = magnitude_mask(w, CompressionConfig::pruning_only(Rational(1, 2)));
    CHECK(half.at(0, 0) == 0);
    CHECK(half.at(0, 1) == 0);
    CHECK(half.at(0, 2) == 1);
    CHECK(half.at(0, 3) == 1);

    SparsityMask nm24 = magnitude_mask(w, CompressionConfig::pruning_only_nm(NMPattern{2, 4}));
    CHECK(nm24.at(0, 0) == 0);
    CHECK(nm24.at(0, 1) == 0);
    CHECK(nm24.at(0, 2) == 1);
    CHECK(nm24.at(0, 3) == 1);

    SparsityMask none = magnitude_mask(w, CompressionConfig::baseline());
    CHECK(none.count_ones() == 4);

    CHECK_THROWS_AS(magnitude_mask(row_matrix({1, 2, 3}),
                                   CompressionConfig::pruning_only_nm(NMPattern{1, 4})),
                    validation_error);
}

TEST_CASE("saliency ties break toward the lower column index") {
    DenseMatrix w = row_matrix({1.0, -1.0, 2.0, -2.0});
    SparsityMask m = magnitude_mask(w, CompressionConfig::pruning_only(Rational(1, 4)));
    CHECK(m.at(0, 0) == 0); // |w0| == |w1|: index 0 pruned
    CHECK(m.at(0, 1) == 1);

    PruneReport r = sparsegpt_prune(w, DenseMatrix::identity(4),
                                    CompressionConfig::pruning_only(Rational(1, 4)));
    CHECK(r.mask.at(0, 0) == 0);
    CHECK(r.mask.at(0, 1) == 1);
}

TEST_CASE("sparsegpt with identity calibration reduces to magnitude pruning") {
    DenseMatrix w = row_matrix({0.1, -0.5, 0.3, 0.2});
    DenseMatrix x = DenseMatrix::identity(4);

    PruneReport r = sparsegpt_prune(w, x, CompressionConfig::pruning_only(Rational(1, 4)), 128,
                                    0.01);
    CHECK(r.mask.at(0, 0) == 0);
    CHECK(r.mask.at(0, 1) == 1);
    CHECK(r.mask.at(0, 2) == 1);
    CHECK(r.mask.at(0, 3) == 1);
    CHECK(r.pruned_weights.at(0, 0) == 0.0);
    CHECK(r.pruned_weights.at(0, 1) == -0.5);
    CHECK(r.pruned_weights.at(0, 2) == 0.3);
    CHECK(r.pruned_weights.at(0, 3) == 0.2);
    CHECK(r.achieved_sparsity == doctest::Approx(0.25));

    PruneReport nm = sparsegpt_prune(w, x, CompressionConfig::pruning_only_nm(NMPattern{1, 4}),
                                     128, 0.01);
    CHECK(nm.mask.at(0, 0) == 0);
    CHECK(nm.mask.at(0, 1) == 1);
}

TEST_CASE("sparsegpt mask equals magnitude mask under identity calibration") {
    SyntheticLayerSpec spec;
    spec.seed = 5;
    spec.out_dim = 12;
    spec.in_dim = 32;
    spec.n_samples = 8;
    auto [w, x_unused] = generate_layer(spec);
    DenseMatrix x = DenseMatrix::identity(32);
    CompressionConfig cfg = CompressionConfig::pruning_only(Rational(1, 3));

    PruneReport r = sparsegpt_prune(w, x, cfg);
    SparsityMask m = magnitude_mask(w, cfg);
    CHECK(r.mask.bits == m.bits);
    // no compensation updates with a diagonal Hessian
    for (std::size_t i = 0; i < w.size(); ++i)
        if (r.mask.bits[i]) CHECK(r.pruned_weights.data()[i] == w.data()[i]);
}

TEST_CASE("sparsity zero is a no-op") {
    SyntheticLayerSpec spec;
    spec.seed = 6;
    spec.out_dim = 4;
    spec.in_dim = 8;
    spec.n_samples = 16;
    auto [w, x] = generate_layer(spec);
    PruneReport r = sparsegpt_prune(w, x, CompressionConfig::baseline());
    CHECK(r.mask.count_ones() == w.size());
    CHECK(r.pruned_weights == w);
    CHECK(r.layer_objective_delta == 0.0);
}

TEST_CASE("pruned weights are exactly zero where the mask is zero") {
    SyntheticLayerSpec spec;
    spec.seed = 77;
    spec.out_dim = 16;
    spec.in_dim = 48;
    spec.n_samples = 128;
    spec.calib_correlation = 0.8;
    auto [w, x] = generate_layer(spec);
    PruneReport r = sparsegpt_prune(w, x, CompressionConfig::pruning_only(Rational(1, 2)));
    for (std::size_t i = 0; i < w.size(); ++i)
        if (!r.mask.bits[i]) CHECK(r.pruned_weights.data()[i] == 0.0);
}

TEST_CASE("unstructured achieved sparsity within one element per row") {
    SyntheticLayerSpec spec;
    spec.seed = 8;
    spec.out_dim = 10;
    spec.in_dim = 64;
    spec.n_samples = 128;
    spec.calib_correlation = 0.5;
    auto [w, x] = generate_layer(spec);
    for (Rational s : {Rational(1, 4), Rational(1, 3), Rational(1, 2)}) {
        PruneReport r = sparsegpt_prune(w, x, CompressionConfig::pruning_only(s));
        for (std::size_t row = 0; row < r.mask.rows; ++row) {
            std::size_t zeros = 0;
            for (std::size_t c = 0; c < r.mask.cols; ++c) zeros += r.mask.at(row, c) == 0;
            CHECK(std::fabs(static_cast<double>(zeros) -
                            s.to_double() * static_cast<double>(r.mask.cols)) <= 1.0);
        }
    }
}

TEST_CASE("n:m masks always validate across patterns and seeds") {
    for (NMPattern nm : {NMPattern{2, 4}, NMPattern{1, 4}, NMPattern{2, 8}, NMPattern{2, 6},
                         NMPattern{1, 3}}) {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            SyntheticLayerSpec spec;
            spec.seed = seed;
            spec.out_dim = 8;
            spec.in_dim = 48;
            spec.n_samples = 96;
            spec.calib_correlation = 0.6;
            auto [w, x] = generate_layer(spec);
            CompressionConfig cfg = CompressionConfig::pruning_only_nm(nm);

            PruneReport r = sparsegpt_prune(w, x, cfg);
            MaskValidationReport v = validate_mask(r.mask, cfg);
            CHECK(v.pattern_ok);
            CHECK(v.violations.empty());
            CHECK(r.achieved_sparsity == doctest::Approx(nm.sparsity().to_double()));

            MaskValidationReport vm = validate_mask(magnitude_mask(w, cfg), cfg);
            CHECK(vm.pattern_ok);
        }
    }
}

TEST_CASE("validate_mask reports violating groups") {
    SparsityMask bad{1, 4, {0, 0, 1, 1}};
    MaskValidationReport v =
        validate_mask(bad, CompressionConfig::pruning_only_nm(NMPattern{1, 4}));
    CHECK(!v.pattern_ok);
    REQUIRE(v.violations.size() == 1);
    CHECK(v.violations[0].row == 0);
    CHECK(v.violations[0].group_start == 0);
    CHECK(v.violations[0].zeros_found == 2);
    CHECK(v.violations[0].zeros_expected == 1);

    MaskValidationReport ok =
        validate_mask(SparsityMask::ones(2, 4), CompressionConfig::baseline());
    CHECK(ok.ok());
}

TEST_CASE("mask overhead bits") {
    CHECK(mask_overhead_bits(NMPattern{2, 8}) == doctest::Approx(0.6009).epsilon(2e-4));
    CHECK(mask_overhead_bits(NMPattern{2, 4}) == doctest::Approx(0.6462).epsilon(2e-4));
    CHECK(mask_overhead_bits(NMPattern{0, 8}) == 0.0);
    CHECK(mask_overhead_bits(CompressionConfig::pruning_only(Rational(1, 2))) == 1.0);
    CHECK(mask_overhead_bits(CompressionConfig::baseline()) == 0.0);
}

TEST_CASE("binomial coefficients are exact") {
    CHECK(binomial(8, 2) == 28);
    CHECK(binomial(4, 2) == 6);
    CHECK(binomial(6, 2) == 15);
    CHECK(binomial(3, 1) == 3);
    CHECK(binomial(10, 0) == 1);
    CHECK(binomial(52, 5) == 2598960ULL);
}

TEST_CASE("compensated pruning beats magnitude pruning on correlated layers") {
    int wins = 0;
    const int trials = 100;
    for (int t = 0; t < trials; ++t) {
        SyntheticLayerSpec spec;
        spec.seed = 1000 + static_cast<std::uint64_t>(t);
        spec.out_dim = 8;
        spec.in_dim = 8;
        spec.n_samples = 64;
        spec.calib_correlation = 0.9;
        auto [w, x] = generate_layer(spec);
        CompressionConfig cfg = CompressionConfig::pruning_only(Rational(1, 2));

        PruneReport r = sparsegpt_prune(w, x, cfg);
        SparsityMask m = magnitude_mask(w, cfg);
        DenseMatrix wm = w;
        for (std::size_t i = 0; i < w.size(); ++i)
            if (!m.bits[i]) wm.data()[i] = 0.0;
        double magnitude_objective = layer_objective(w, wm, x);
        if (r.layer_objective_delta <= magnitude_objective) ++wins;
    }
    CHECK(wins >= 90);
}

TEST_CASE("processed blocks are frozen: later columns cannot reach back") {
    // weights that differ only in the second block must produce identical
    // first-block output (selection and compensation both look forward only)
    SyntheticLayerSpec spec;
    spec.seed = 61;
    spec.out_dim = 6;
    spec.in_dim = 16;
    spec.n_samples = 96;
    spec.calib_correlation = 0.8;
    auto [w, x] = generate_layer(spec);
    const std::size_t block = 8;

    DenseMatrix w2 = w;
    for (std::size_t r = 0; r < w.rows(); ++r)
        for (std::size_t c = block; c < w.cols(); ++c) w2.at(r, c) += 0.37 * (r + c % 3);

    CompressionConfig cfg = CompressionConfig::pruning_only(Rational(1, 4));
    PruneReport a = sparsegpt_prune(w, x, cfg, block, 0.01);
    PruneReport b = sparsegpt_prune(w2, x, cfg, block, 0.01);
    for (std::size_t r = 0; r < w.rows(); ++r)
        for (std::size_t c = 0; c < block; ++c) {
            CHECK(a.mask.at(r, c) == b.mask.at(r, c));
            CHECK(a.pruned_weights.at(r, c) == b.pruned_weights.at(r, c));
        }
}

TEST_CASE("pruning runs are deterministic") {
    SyntheticLayerSpec spec;
    spec.seed = 55;
    spec.out_dim = 4;
    spec.in_dim = 12;
    spec.n_samples = 64;
    spec.calib_correlation = 0.7;
    auto [w, x] = generate_layer(spec);
    CompressionConfig cfg = CompressionConfig::pruning_only(Rational(1, 3));

    PruneReport a = sparsegpt_prune(w, x, cfg, 4, 0.01);
    PruneReport b = sparsegpt_prune(w, x, cfg, 4, 0.01);
    CHECK(a.pruned_weights == b.pruned_weights);
    CHECK(a.mask.bits == b.mask.bits);

    // small blocks still hit the per-row quota
    PruneReport tiny = sparsegpt_prune(w, x, cfg, 1, 0.01);
    CHECK(tiny.achieved_sparsity == doctest::Approx(a.achieved_sparsity));
}

TEST_CASE("dimension mismatches are rejected") {
    DenseMatrix w = DenseMatrix::zeros(2, 4);
    DenseMatrix x = DenseMatrix::zeros(3, 5);
    CHECK_THROWS_AS(sparsegpt_prune(w, x, CompressionConfig::pruning_only(Rational(1, 4))),
                    validation_error);
}
