#include "swirseg/spectral_index.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "swirseg/error.h"

namespace swirseg {

BandWindows wetness_windows(std::span<const double> wavelengths_um) {
  BandWindows w;
  for (std::size_t i = 0; i < wavelengths_um.size(); ++i) {
    const double wl = wavelengths_um[i];
    if (wl >= kWetWindowLow && wl <= kWetWindowHigh) w.numerator.push_back(i);
    if (wl >= kDryWindowLow && wl <= kDryWindowHigh) w.denominator.push_back(i);
  }
  if (w.numerator.empty()) {
    throw ValidationError("wavelength axis has no band within the 1.55-1.75 um window");
  }
  if (w.denominator.empty()) {
    throw ValidationError("wavelength axis has no band within the 2.09-2.35 um window");
  }
  return w;
}

std::optional<double> wetness_index(std::span<const float> spectrum, const BandWindows& windows,
                                    const WetnessOptions& options, double den_guard) {
  double num = 0.0;
  for (std::size_t b : windows.numerator) num += spectrum[b];
  double den = 0.0;
  for (std::size_t b : windows.denominator) den += spectrum[b];
  if (options.mean_normalized) {
    num /= static_cast<double>(windows.numerator.size());
    den /= static_cast<double>(windows.denominator.size());
  }
  if (!(den > den_guard) || num < 0.0) return std::nullopt;
  const double ratio = num / den;
  if (!std::isfinite(ratio)) return std::nullopt;
  return ratio;
}

std::optional<double> wetness_index(std::span<const float> spectrum,
                                    std::span<const double> wavelengths_um,
                                    const WetnessOptions& options, double den_guard) {
  if (spectrum.size() != wavelengths_um.size()) {
    throw ValidationError("spectrum and wavelength axis differ in length");
  }
  return wetness_index(spectrum, wetness_windows(wavelengths_um), options, den_guard);
}

std::size_t WetnessMap::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

WetnessMap wetness_map(const HyperCube& cube, const WetnessOptions& options) {
  const BandWindows windows = wetness_windows(cube.wavelengths());
  const double guard = kDenominatorGuardFactor * std::max(0.0f, cube.max_value());

  WetnessMap map;
  map.width = cube.samples();
  map.height = cube.lines();
  map.ratios.assign(cube.pixel_count(), kInvalidWetness);
  map.valid.assign(cube.pixel_count(), 0);

  std::vector<float> spectrum;
  for (std::size_t line = 0; line < cube.lines(); ++line) {
    for (std::size_t sample = 0; sample < cube.samples(); ++sample) {
      cube.spectrum(line, sample, spectrum);
      const auto ratio = wetness_index(spectrum, windows, options, guard);
      const std::size_t i = line * cube.samples() + sample;
      if (ratio) {
        map.ratios[i] = static_cast<float>(*ratio);
        map.valid[i] = 1;
      }
    }
  }
  return map;
}

double adaptive_threshold(const WetnessMap& map) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < map.ratios.size(); ++i) {
    if (!map.valid[i]) continue;
    lo = std::min(lo, static_cast<double>(map.ratios[i]));
    hi = std::max(hi, static_cast<double>(map.ratios[i]));
  }
  if (lo > hi) throw ValidationError("wetness map has no valid pixels");
  return 0.5 * (lo + hi);
}

DemGrid wetness_as_grid(const WetnessMap& map) {
  DemGrid grid;
  grid.width = map.width;
  grid.height = map.height;
  grid.elevations = map.ratios;
  for (std::size_t i = 0; i < map.ratios.size(); ++i) {
    if (!map.valid[i]) grid.elevations[i] = kInvalidWetness;
  }
  return grid;
}

WetnessMap wetness_from_grid(const DemGrid& grid) {
  WetnessMap map;
  map.width = grid.width;
  map.height = grid.height;
  map.ratios = grid.elevations;
  map.valid.resize(map.ratios.size());
  for (std::size_t i = 0; i < map.ratios.size(); ++i) {
    map.valid[i] = map.ratios[i] >= 0.0f ? 1 : 0;
  }
  return map;
}

double beta_pdf(double x, const BetaParams& p) {
  if (!(p.alpha > 0.0) || !(p.beta > 0.0)) {
    throw ValidationError("beta shape parameters must be positive");
  }
  if (!(x > 0.0 && x < 1.0)) throw ValidationError("beta_pdf argument must lie in (0, 1)");
  const double log_b = std::lgamma(p.alpha) + std::lgamma(p.beta) - std::lgamma(p.alpha + p.beta);
  return std::exp((p.alpha - 1.0) * std::log(x) + (p.beta - 1.0) * std::log1p(-x) - log_b);
}

BetaParams beta_fit_moments(std::span<const double> samples) {
  if (samples.size() < 2) throw ValidationError("beta fit needs at least two samples");
  double mean = 0.0;
  for (double s : samples) {
    if (!(s > 0.0 && s < 1.0)) throw ValidationError("beta fit samples must lie in (0, 1)");
    mean += s;
  }
  mean /= static_cast<double>(samples.size());
  double var = 0.0;
  for (double s : samples) var += (s - mean) * (s - mean);
  var /= static_cast<double>(samples.size());
  if (!(var > 0.0)) throw ValidationError("beta fit samples have zero variance");
  const double spread = mean * (1.0 - mean);
  if (var >= spread) throw ValidationError("sample variance too large for the beta family");
  const double common = spread / var - 1.0;
  return {mean * common, (1.0 - mean) * common};
}

}  // namespace swirseg
