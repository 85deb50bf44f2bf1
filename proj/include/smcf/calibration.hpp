#pragma once

#include <string_view>
#include <utility>

// Empirical constants measured once on fixed seeds and frozen as regression
// bounds. Every entry is echoed into the run manifest.
namespace smcf::calibration {

// ||P_k f||_inf <= C 2^{kd/2} ||P_k f||_2 for random band-limited f, d = 2.
inline constexpr double kBernsteinConstant = 0.45;  // measured 0.414

// Z^{0,s}(time-constant f) / ||f||_{H^s}, s = 2, over smooth random fields.
inline constexpr double kZSobolevLower = 0.7;   // measured 0.749
inline constexpr double kZSobolevUpper = 0.95;  // measured 0.889

// ||fg||_{Y0lo} <= C ||f||_{Y0lo} ||g||_{Y0lo} (surrogates), delta = 0.5, d = 2.
inline constexpr double kY0LoAlgebraConstant = 0.05;  // measured 0.0401

// ||d phi||_inf <= C ||h||_inf for the harmonic coordinate shift, BUMP eps = 0.05.
inline constexpr double kHarmonicShiftConstant = 0.7;  // measured 0.625

inline constexpr std::pair<std::string_view, double> kAll[] = {
    {"bernstein_constant", kBernsteinConstant},
    {"z_sobolev_lower", kZSobolevLower},
    {"z_sobolev_upper", kZSobolevUpper},
    {"y0lo_algebra_constant", kY0LoAlgebraConstant},
    {"harmonic_shift_constant", kHarmonicShiftConstant},
};

}  // namespace smcf::calibration
