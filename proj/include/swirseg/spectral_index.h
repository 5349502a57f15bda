#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "swirseg/raster.h"

namespace swirseg {

// Wet-window (numerator) and dry-window (denominator) bounds in micrometers.
// Membership is inclusive at both ends.
inline constexpr double kWetWindowLow = 1.55;
inline constexpr double kWetWindowHigh = 1.75;
inline constexpr double kDryWindowLow = 2.09;
inline constexpr double kDryWindowHigh = 2.35;

// Sentinel stored in WetnessMap::ratios for pixels that failed the guard.
inline constexpr float kInvalidWetness = -1.0f;

struct WetnessOptions {
  // Divide each window sum by its band count, so a flat spectrum scores 1.
  bool mean_normalized = false;
};

struct BandWindows {
  std::vector<std::size_t> numerator;
  std::vector<std::size_t> denominator;
};

// Throws ValidationError when either window holds no band.
BandWindows wetness_windows(std::span<const double> wavelengths_um);

// Ratio of summed wet-window values to summed dry-window values. Returns
// nullopt when the denominator is <= den_guard or the numerator is negative.
std::optional<double> wetness_index(std::span<const float> spectrum,
                                    std::span<const double> wavelengths_um,
                                    const WetnessOptions& options = {}, double den_guard = 0.0);
std::optional<double> wetness_index(std::span<const float> spectrum, const BandWindows& windows,
                                    const WetnessOptions& options = {}, double den_guard = 0.0);

struct WetnessMap {
  std::size_t width = 0;   // cube samples
  std::size_t height = 0;  // cube lines
  std::vector<float> ratios;
  std::vector<std::uint8_t> valid;

  float at(std::size_t x, std::size_t y) const { return ratios[y * width + x]; }
  bool is_valid(std::size_t x, std::size_t y) const { return valid[y * width + x] != 0; }
  std::size_t valid_count() const;
};

// Denominator guard factor relative to the cube's maximum value.
inline constexpr double kDenominatorGuardFactor = 1e-9;

WetnessMap wetness_map(const HyperCube& cube, const WetnessOptions& options = {});

// Midpoint of the lowest and highest valid ratio.
double adaptive_threshold(const WetnessMap& map);

// Wetness maps persist in the DEM raster format; invalid pixels carry the
// negative sentinel.
DemGrid wetness_as_grid(const WetnessMap& map);
WetnessMap wetness_from_grid(const DemGrid& grid);

struct BetaParams {
  double alpha = 1.0;
  double beta = 1.0;
};

double beta_pdf(double x, const BetaParams& params);
// Method-of-moments fit. Throws ValidationError for fewer than two samples,
// samples outside (0, 1), zero variance, or variance >= m(1 - m).
BetaParams beta_fit_moments(std::span<const double> samples);

}  // namespace swirseg
