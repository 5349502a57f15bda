#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "swirseg/raster.h"

namespace swirseg {

namespace fs = std::filesystem;

// Cube format: an ASCII key = value header plus a raw band-sequential
// float32 little-endian data file. Recognized keys:
//
//   lines = 1163
//   samples = 829
//   bands = 260
//   interleave = bsq
//   data type = 32-bit IEEE-754 little-endian   (ENVI "4" also accepted)
//   data file = cube.raw                          (relative to the header)
//   wavelength = {0.9, 0.90618, ...}              (micrometers)
//
// Unknown keys are ignored so that ENVI headers can be adapted by hand.
HyperCube read_cube(const fs::path& header_path);
// Writes the header and a data file next to it (header stem + ".raw").
void write_cube(const HyperCube& cube, const fs::path& header_path);

// DEM format: raw float32 little-endian row-major grid at `raw_path` plus a
// JSON sidecar at raw_path with extension ".json":
//   {"width":W,"height":H,"pixel_size_m":1.0,"origin_x":0.0,"origin_y":0.0}
DemGrid read_dem(const fs::path& raw_path);
void write_dem(const DemGrid& dem, const fs::path& raw_path);
fs::path dem_sidecar_path(const fs::path& raw_path);

// Binary PGM (P5). Images are written with 16-bit big-endian samples and
// normalized to [0, 1] by maxval on load; 8-bit files are also readable.
GrayImage read_pgm(const fs::path& path);
void write_pgm(const GrayImage& image, const fs::path& path);

// Raw 8-bit label codes in a P5 container (maxval 255).
struct LabelImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> codes;
};
LabelImage read_pgm_codes(const fs::path& path);
void write_pgm_codes(const LabelImage& image, const fs::path& path);

struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> rgb;  // 3 bytes per pixel, row-major
};
// Binary PPM (P6, maxval 255).
void write_ppm(const RgbImage& image, const fs::path& path);
RgbImage read_ppm(const fs::path& path);

}  // namespace swirseg
