#pragma once

// Default experiment settings shared by the CLI, the dataset bundle and the
// acceptance checks.

#include <array>

namespace daisyworld::defaults {

/// Luminosities accepted anywhere in the command-line front end.
inline constexpr double kLuminosityLo = 0.5;
inline constexpr double kLuminosityHi = 1.7;

/// Rate-induced tipping scenario: start on coexistence at L_min and raise L
/// by delta_L. L_max = 1.2 lies just above the basin-instability threshold.
inline constexpr double kLmin = 0.8;
inline constexpr double kDeltaL = 0.4;
inline constexpr double kLmax = kLmin + kDeltaL;
inline constexpr double kSlowRate = 0.5;
inline constexpr double kFastRate = 1.0;

/// Tipping diagram grids.
inline constexpr double kRateLo = 1e-2;
inline constexpr double kRateHi = 1e2;
inline constexpr int kRateCount = 25;
inline constexpr double kDeltaLLo = 0.1;
inline constexpr double kDeltaLHi = 0.8;
inline constexpr int kDeltaLCount = 29;

/// Basin grid resolution.
inline constexpr int kBasinResolution = 201;

/// Bifurcation-induced tipping ramps: white-only state pushed past its upper
/// fold, black-only state pulled below its lower fold.
inline constexpr double kWhiteRampStart = 1.4;
inline constexpr double kWhiteRampEnd = 1.6;
inline constexpr double kBlackRampStart = 0.68;
inline constexpr double kBlackRampEnd = 0.6;
inline constexpr double kRampRate = 1e-3;

/// Phase-portrait luminosities.
inline constexpr std::array<double, 6> kPortraitL{0.65, 0.75, 1.0, 1.2, 1.4, 1.5};

}  // namespace daisyworld::defaults
