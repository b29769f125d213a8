#include "doctest.h"

#include "srcr/metrics.hpp"
#include "srcr/synth.hpp"

using namespace srcr;

TEST_CASE("compression config validation and strings") {
    CompressionConfig base = CompressionConfig::baseline();
    CHECK(base.is_baseline());
    CHECK(base.to_string() == "s=0%;q=16b;pat=none");

    CompressionConfig joint = CompressionConfig::joint(Rational(1, 3), Rational(3));
    CHECK(joint.to_string() == "s=1/3%;q=3b;pat=unstructured");
    CHECK(CompressionConfig::parse("s=1/3%;q=3b;pat=unstructured") == joint);

    CompressionConfig nm = CompressionConfig::pruning_only_nm(NMPattern{2, 8});
    CHECK(nm.sparsity == Rational(1, 4));
    CHECK(nm.to_string() == "s=1/4%;q=16b;pat=2:8");
    CHECK(CompressionConfig::parse(nm.to_string()) == nm);

    SUBCASE("invariants") {
        CompressionConfig bad;
        bad.sparsity = Rational(1, 2);
        bad.pattern = PatternKind::none;
        CHECK_THROWS_AS(bad.validate(), validation_error);

        bad = CompressionConfig::baseline();
        bad.bits = Rational(17);
        CHECK_THROWS_AS(bad.validate(), validation_error);

        bad = CompressionConfig::baseline();
        bad.bits = Rational(0);
        CHECK_THROWS_AS(bad.validate(), validation_error);

        CHECK_THROWS_AS(NMPattern::parse("3:2"), validation_error);
    }
}

TEST_CASE("config from_fields overrides sparsity with the pattern ratio") {
    CompressionConfig c = CompressionConfig::from_fields(Rational(1, 4), Rational(4), "2:8");
    CHECK(c.sparsity == Rational(1, 4));
    CHECK(c.is_joint());
}

TEST_CASE("theoretical compression rate: reference grid cells") {
    auto tcr = [](Rational s, Rational b) {
        CompressionConfig c;
        c.sparsity = s;
        c.bits = b;
        c.pattern = s == Rational(0) ? PatternKind::none : PatternKind::unstructured;
        return theoretical_compression_rate(c);
    };
    // pruning-only row
    CHECK(tcr(Rational(1, 2), Rational(16)) == Rational(1, 2));
    CHECK(tcr(Rational(0), Rational(16)) == Rational(0));
    // highlighted joint cells
    CHECK(tcr(Rational(1, 4), Rational(4)) == Rational(13, 16));
    CHECK(tcr(Rational(1, 4), Rational(4)).to_percent_string() == "81.25%");
    CHECK(tcr(Rational(1, 3), Rational(3)) == Rational(7, 8));
    CHECK(tcr(Rational(1, 3), Rational(3)).to_percent_string() == "87.5%");
    // quantization-only column
    CHECK(tcr(Rational(0), Rational(8)) == Rational(1, 2));
    CHECK(tcr(Rational(0), Rational(2)) == Rational(7, 8));
}

TEST_CASE("tcr table reproduces the full 20-cell grid") {
    TcrTable t = tcr_table(default_table_sparsities(), default_table_bits());
    REQUIRE(t.cells.size() == 5);
    REQUIRE(t.cells[0].size() == 4);
    // row-major by bits {16,8,4,3,2}, columns s {0, 1/4, 1/3, 1/2}
    const Rational expect[5][4] = {
        {Rational(0), Rational(1, 4), Rational(1, 3), Rational(1, 2)},
        {Rational(1, 2), Rational(5, 8), Rational(2, 3), Rational(3, 4)},
        {Rational(3, 4), Rational(13, 16), Rational(5, 6), Rational(7, 8)},
        {Rational(13, 16), Rational(55, 64), Rational(7, 8), Rational(29, 32)},
        {Rational(7, 8), Rational(29, 32), Rational(11, 12), Rational(15, 16)},
    };
    for (int r = 0; r < 5; ++r)
        for (int c = 0; c < 4; ++c) CHECK(t.cells[r][c] == expect[r][c]);

    TcrTable single = tcr_table({Rational(0)}, {Rational(16)});
    CHECK(single.cells[0][0] == Rational(0));
    TcrTable cell75 = tcr_table({Rational(1, 2)}, {Rational(8)});
    CHECK(cell75.cells[0][0] == Rational(3, 4));

    CHECK_THROWS_AS(tcr_table({}, {Rational(8)}), validation_error);
}

TEST_CASE("tcr monotone in sparsity and bits") {
    std::vector<Rational> sparsities{Rational(0), Rational(1, 10), Rational(1, 4), Rational(1, 3),
                                     Rational(1, 2), Rational(3, 4), Rational(1)};
    std::vector<Rational> bits{Rational(16), Rational(8), Rational(4), Rational(3), Rational(2),
                               Rational(1)};
    TcrTable t = tcr_table(sparsities, bits);
    for (std::size_t r = 0; r < bits.size(); ++r)
        for (std::size_t c = 0; c < sparsities.size(); ++c) {
            if (c + 1 < sparsities.size()) CHECK(t.cells[r][c] <= t.cells[r][c + 1]);
            if (r + 1 < bits.size()) CHECK(t.cells[r][c] <= t.cells[r + 1][c]);
        }
}

TEST_CASE("joint tcr reduces to single-method formulas at the boundary") {
    for (long long num = 0; num <= 4; ++num) {
        Rational s(num, 4);
        CompressionConfig prune_like;
        prune_like.sparsity = s;
        prune_like.bits = Rational(16);
        prune_like.pattern = s == Rational(0) ? PatternKind::none : PatternKind::unstructured;
        CHECK(theoretical_compression_rate(prune_like) == s);
    }
    for (long long b = 1; b <= 16; ++b) {
        CompressionConfig quant_like = CompressionConfig::quantization_only(Rational(b));
        CHECK(theoretical_compression_rate(quant_like) ==
              Rational(1) - Rational(b, 16));
    }
}

TEST_CASE("retention rate") {
    CHECK(retention_rate({"mmlu_pro", 35.4, 33.3, 0, 0}) == doctest::Approx(0.9407).epsilon(1e-4));
    CHECK(retention_rate({"t", 12.0, 12.0, 0, 0}) == doctest::Approx(1.0));
    CHECK(retention_rate({"mean", 38.5, 38.7, 0, 0}) == doctest::Approx(1.0052).epsilon(1e-4));
    CHECK_THROWS_AS(retention_rate({"t", 0.0, 5.0, 0, 0}), validation_error);
}

TEST_CASE("retention stderr propagation") {
    // sigma_R = R*sqrt((sc/Pc)^2 + (so/Po)^2), rewritten to survive Pc = 0
    TaskScore s{"t", 50.0, 25.0, 1.0, 0.5};
    double expect = 0.5 * std::sqrt((0.5 / 25) * (0.5 / 25) + (1.0 / 50) * (1.0 / 50));
    CHECK(retention_stderr(s) == doctest::Approx(expect));
    TaskScore zero{"t", 50.0, 0.0, 1.0, 0.5};
    CHECK(retention_stderr(zero) == doctest::Approx(0.5 / 50.0));
}

TEST_CASE("semantic retention sr1") {
    std::vector<TaskScore> llama3bit{
        {"mmlu_pro", 35.4, 21.3, 0, 0}, {"bbh", 62.3, 43.8, 0, 0}, {"math", 17.7, 4.2, 0, 0}};
    CHECK(semantic_retention_sr1(llama3bit) == doctest::Approx(0.5140).epsilon(1e-4));

    std::vector<TaskScore> constant{{"a", 10, 7.5, 0, 0}, {"b", 40, 30, 0, 0}};
    CHECK(semantic_retention_sr1(constant) == doctest::Approx(0.75));

    std::vector<TaskScore> single{{"a", 20, 15, 0, 0}};
    CHECK(semantic_retention_sr1(single) == doctest::Approx(retention_rate(single[0])));
    CHECK_THROWS_AS(semantic_retention_sr1({}), validation_error);
}

TEST_CASE("semantic retention sr2") {
    std::vector<TaskScore> mistral3bit{
        {"mmlu_pro", 30.3, 23.3, 0, 0}, {"bbh", 58.0, 43.0, 0, 0}, {"math", 12.8, 6.4, 0, 0}};
    CHECK(semantic_retention_sr2(mistral3bit) == doctest::Approx(0.7191).epsilon(1e-4));

    std::vector<TaskScore> constant{{"a", 10, 7.5, 0, 0}, {"b", 40, 30, 0, 0}};
    CHECK(semantic_retention_sr2(constant) == doctest::Approx(0.75));
    CHECK_THROWS_AS(semantic_retention_sr2({}), validation_error);
}

TEST_CASE("sr2 equals the retention-weighted identity on random inputs") {
    DeterministicRng rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<TaskScore> scores;
        int n = 1 + static_cast<int>(rng.uniform01() * 8);
        for (int i = 0; i < n; ++i) {
            double orig = rng.uniform(1.0, 100.0);
            double comp = rng.uniform(0.0, 100.0);
            scores.push_back({"t" + std::to_string(i), orig, comp, 0, 0});
        }
        double sum_orig = 0.0;
        for (const auto& s : scores) sum_orig += s.original;
        double weighted = 0.0;
        for (const auto& s : scores) weighted += s.original * retention_rate(s) / sum_orig;
        CHECK(semantic_retention_sr2(scores) == doctest::Approx(weighted).epsilon(1e-12));
    }
}

TEST_CASE("sr1 equals sr2 when all originals are equal") {
    DeterministicRng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<TaskScore> scores;
        double orig = rng.uniform(5.0, 95.0);
        int n = 1 + static_cast<int>(rng.uniform01() * 6);
        for (int i = 0; i < n; ++i)
            scores.push_back({"t" + std::to_string(i), orig, rng.uniform(0.0, 100.0), 0, 0});
        CHECK(semantic_retention_sr1(scores) ==
              doctest::Approx(semantic_retention_sr2(scores)).epsilon(1e-12));
    }
}

TEST_CASE("srcr pruning component") {
    SrcrBreakdown b = srcr_pruning(Rational(1, 4), 0.9496);
    CHECK(b.compression_factor == doctest::Approx(0.5));
    CHECK(b.srcr == doctest::Approx(0.4748).epsilon(1e-4));
    CHECK(srcr_pruning(Rational(0), 0.73).srcr == doctest::Approx(0.0));
    CHECK(srcr_pruning(Rational(1), 1.0).srcr == doctest::Approx(1.0));
    CHECK_THROWS_AS(srcr_pruning(Rational(3, 2), 1.0), validation_error);
}

TEST_CASE("srcr quantization component") {
    CHECK(srcr_quantization(Rational(16), 0.9).srcr == doctest::Approx(0.0));
    CHECK(srcr_quantization(Rational(1), 1.0).srcr == doctest::Approx(1.0));
    SrcrBreakdown b = srcr_quantization(Rational(3), 0.7181);
    CHECK(b.compression_factor == doctest::Approx(0.603759).epsilon(1e-5));
    CHECK(b.srcr == doctest::Approx(0.4336).epsilon(1e-4));
    CHECK_THROWS_AS(srcr_quantization(Rational(17), 1.0), validation_error);
    CHECK_THROWS_AS(srcr_quantization(Rational(0), 1.0), validation_error);
}

TEST_CASE("srcr joint component") {
    SrcrBreakdown llama = srcr_joint(CompressionConfig::joint(Rational(1, 4), Rational(4)), 0.8182);
    CHECK(llama.compression_factor == doctest::Approx(0.25));
    CHECK(llama.srcr == doctest::Approx(0.2045).epsilon(1e-3));

    SrcrBreakdown mx = srcr_joint(CompressionConfig::joint(Rational(1, 3), Rational(3)), 0.6469);
    CHECK(mx.srcr == doctest::Approx(0.2255).epsilon(1e-3));

    CHECK(srcr_joint(CompressionConfig::joint(Rational(1), Rational(1)), 1.0).srcr ==
          doctest::Approx(1.0));
    // no joint configuration: zero by definition
    CHECK(srcr_joint(CompressionConfig::quantization_only(Rational(4)), 0.9).srcr == 0.0);
    CHECK(srcr_joint(CompressionConfig::pruning_only(Rational(1, 4)), 0.9).srcr == 0.0);
}

TEST_CASE("srcr joint decomposes into its factors exactly") {
    DeterministicRng rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        long long ds = 1 + static_cast<long long>(rng.uniform01() * 9);
        long long ns = 1 + static_cast<long long>(rng.uniform01() * static_cast<double>(ds - 1));
        Rational s(std::min(ns, ds), ds);
        Rational bits(1 + static_cast<long long>(rng.uniform01() * 15));
        double sr = rng.uniform(0.0, 1.2);
        CompressionConfig cfg = CompressionConfig::joint(s, bits);
        if (!cfg.is_joint()) continue;
        SrcrBreakdown b = srcr_joint(cfg, sr);
        CHECK(b.srcr == quantization_weight(bits) * pruning_weight(s) * sr);
        CHECK(b.srcr == b.compression_factor * b.sr);
        // bounded by sr (weights are at most 1)
        CHECK(b.srcr <= sr + 1e-15);
        CHECK(b.srcr >= 0.0);
    }
}

TEST_CASE("srcr estimate is the product of single-method runs") {
    SrcrBreakdown p = srcr_pruning(Rational(1, 4), 32.0 / 33.7);
    SrcrBreakdown q = srcr_quantization(Rational(4), 31.5 / 33.7);
    CHECK(srcr_estimate(p, q) == doctest::Approx(0.2219).epsilon(1e-3));
    CHECK(srcr_estimate(srcr_pruning(Rational(0), 1.0), q) == doctest::Approx(0.0));
    CHECK(srcr_estimate(srcr_pruning(Rational(1), 1.0),
                        srcr_quantization(Rational(1), 1.0)) == doctest::Approx(1.0));
}

TEST_CASE("optimal config search ranks the published joint configs") {
    std::vector<std::pair<CompressionConfig, double>> records{
        {CompressionConfig::joint(Rational(1, 2), Rational(8)), 21.3 / 38.5},
        {CompressionConfig::joint(Rational(1, 4), Rational(4)), 31.5 / 38.5},
        {CompressionConfig::joint(Rational(1, 3), Rational(3)), 20.9 / 38.5},
    };
    auto ranking = optimal_config_search(records);
    REQUIRE(ranking.size() == 3);
    CHECK(ranking[0].config == records[1].first);
    CHECK(ranking[0].srcr == doctest::Approx(0.2045).epsilon(1e-3));
    CHECK(ranking[1].srcr == doctest::Approx(0.1893).epsilon(1e-3));
    CHECK(ranking[2].srcr == doctest::Approx(0.0978).epsilon(1e-3));

    SUBCASE("single record") {
        auto one = optimal_config_search({records[0]});
        REQUIRE(one.size() == 1);
        CHECK(one[0].config == records[0].first);
    }

    SUBCASE("ties break toward higher compression, then fewer bits") {
        // same srcr by construction: sr chosen so factor*sr matches
        CompressionConfig a = CompressionConfig::joint(Rational(1, 4), Rational(4)); // tcr 13/16
        CompressionConfig b = CompressionConfig::joint(Rational(1, 2), Rational(4)); // tcr 7/8
        double fa = 0.25, fb = quantization_weight(Rational(4)) * pruning_weight(Rational(1, 2));
        auto tied = optimal_config_search({{a, 0.5}, {b, 0.5 * fa / fb}});
        REQUIRE(tied.size() == 2);
        CHECK(tied[0].srcr == tied[1].srcr);
        CHECK(tied[0].config == b); // higher tcr first
    }

    SUBCASE("ranking invariant under uniform positive scaling of sr") {
        auto scaled = records;
        for (auto& [cfg, sr] : scaled) sr *= 3.7;
        auto r1 = optimal_config_search(records);
        auto r2 = optimal_config_search(scaled);
        REQUIRE(r1.size() == r2.size());
        for (std::size_t i = 0; i < r1.size(); ++i) CHECK(r1[i].config == r2[i].config);
    }

    SUBCASE("empty input is an error; non-joint records are skipped") {
        CHECK_THROWS_AS(optimal_config_search({}), validation_error);
        auto only_single = optimal_config_search(
            {{CompressionConfig::quantization_only(Rational(4)), 0.9}});
        CHECK(only_single.empty());
    }
}
