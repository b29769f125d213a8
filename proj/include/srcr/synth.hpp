#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>

#include "srcr/matrix.hpp"

namespace srcr {

// Deterministic draws on top of the (standardized) mt19937_64 stream. The
// std distributions are implementation-defined, so uniform and normal are
// spelled out here.
class DeterministicRng {
public:
    explicit DeterministicRng(std::uint64_t seed) : engine_(seed) {}

    // uniform in [0, 1)
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // standard normal via the polar method
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
    }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

struct WeightDist {
    enum class Kind { gaussian, uniform } kind = Kind::gaussian;
    double sigma = 1.0; // gaussian
    double lo = -1.0;   // uniform
    double hi = 1.0;

    static WeightDist gaussian(double sigma) { return {Kind::gaussian, sigma, 0, 0}; }
    static WeightDist uniform(double lo, double hi) { return {Kind::uniform, 0, lo, hi}; }

    std::string to_string() const {
        if (kind == Kind::gaussian) return "gaussian(" + std::to_string(sigma) + ")";
        return "uniform(" + std::to_string(lo) + "," + std::to_string(hi) + ")";
    }
};

// Seeded synthetic linear layer: weights (out x in) plus calibration inputs
// (in x samples) standing in for real calibration text.
struct SyntheticLayerSpec {
    std::uint64_t seed = 1;
    std::size_t out_dim = 64;
    std::size_t in_dim = 64;
    std::size_t n_samples = 1024;
    WeightDist weight_dist = WeightDist::gaussian(1.0);
    double calib_correlation = 0.0; // pairwise feature correlation rho

    void validate() const {
        if (out_dim == 0 || in_dim == 0 || n_samples == 0)
            throw validation_error("synthetic layer dimensions must be positive");
        if (calib_correlation < 0.0 || calib_correlation >= 1.0)
            throw validation_error("calibration correlation must lie in [0,1)");
        if (calib_correlation > 0.0 && in_dim < 2)
            throw validation_error("correlated calibration needs at least two features");
    }
};

// Calibration samples use a common-factor construction,
// x_i = sqrt(rho)*z + sqrt(1-rho)*e_i, so every feature pair has correlation
// rho and the Hessian 2XX^T picks up real off-diagonal mass.
inline std::pair<DenseMatrix, DenseMatrix> generate_layer(const SyntheticLayerSpec& spec) {
    spec.validate();
    DeterministicRng rng(spec.seed);

    DenseMatrix w = DenseMatrix::zeros(spec.out_dim, spec.in_dim);
    for (double& v : w.data()) {
        v = spec.weight_dist.kind == WeightDist::Kind::gaussian
                ? spec.weight_dist.sigma * rng.normal()
                : rng.uniform(spec.weight_dist.lo, spec.weight_dist.hi);
    }

    const double rho = spec.calib_correlation;
    const double a = std::sqrt(rho);
    const double b = std::sqrt(1.0 - rho);
    DenseMatrix x = DenseMatrix::zeros(spec.in_dim, spec.n_samples);
    for (std::size_t s = 0; s < spec.n_samples; ++s) {
        double z = rho > 0.0 ? rng.normal() : 0.0;
        for (std::size_t i = 0; i < spec.in_dim; ++i) x.at(i, s) = a * z + b * rng.normal();
    }
    return {std::move(w), std::move(x)};
}

} // namespace srcr
