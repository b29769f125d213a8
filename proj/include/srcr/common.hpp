#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace srcr {

inline constexpr const char* kToolVersion = "0.1.0";

// Bad input data, config violations, file parse failures. CLI maps this to exit 2.
class validation_error : public std::runtime_error {
public:
    explicit validation_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical breakdown (non-PD Hessian, singular system). CLI maps this to exit 3.
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Rounding used everywhere a weight meets a grid: half away from zero,
// so that round(-x) == -round(x) independent of FE state.
inline double round_half_away(double x) {
    return x >= 0.0 ? std::floor(x + 0.5) : std::ceil(x - 0.5);
}

inline long long llround_half_away(double x) {
    return static_cast<long long>(round_half_away(x));
}

} // namespace srcr
