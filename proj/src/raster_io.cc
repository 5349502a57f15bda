#include "swirseg/raster_io.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include <json.hpp>

#include "binary_io.h"
#include "swirseg/error.h"

namespace swirseg {
namespace {

using json = nlohmann::json;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// key = value pairs; a value opening with '{' runs to the matching '}' and
// may span lines.
std::map<std::string, std::string> parse_header(const std::string& text) {
  std::map<std::string, std::string> fields;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string line = text.substr(pos, eol - pos);
    pos = eol + 1;
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;  // magic line, blank line or comment
    std::string key = lower(trim(std::string_view(line).substr(0, eq)));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (!value.empty() && value.front() == '{' && value.find('}') == std::string::npos) {
      const std::size_t close = text.find('}', pos);
      if (close == std::string::npos) throw InputError("unterminated '{' for header key " + key);
      value += " " + text.substr(pos, close - pos + 1);
      pos = text.find('\n', close);
      pos = pos == std::string::npos ? text.size() : pos + 1;
    }
    fields[key] = value;
  }
  return fields;
}

std::size_t parse_count(const std::map<std::string, std::string>& fields, const std::string& key) {
  const auto it = fields.find(key);
  if (it == fields.end()) throw InputError("cube header missing '" + key + "'");
  std::size_t value = 0;
  const auto& s = it->second;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw InputError("cube header field '" + key + "' is not a count: " + s);
  }
  return value;
}

std::vector<double> parse_list(const std::string& braced, const std::string& key) {
  const auto open = braced.find('{');
  const auto close = braced.rfind('}');
  if (open == std::string::npos || close == std::string::npos || close < open) {
    throw InputError("cube header field '" + key + "' must be a {...} list");
  }
  std::vector<double> out;
  std::stringstream ss(braced.substr(open + 1, close - open - 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InputError("cube header field '" + key + "' has a non-numeric entry: " + item);
    }
  }
  return out;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

// Reads a P5/P6 header and returns (width, height, maxval); leaves the
// stream at the first sample byte.
struct PnmHeader {
  std::size_t width = 0;
  std::size_t height = 0;
  unsigned maxval = 0;
};

PnmHeader read_pnm_header(std::istream& in, const std::string& magic, const fs::path& path) {
  std::string tag;
  in >> tag;
  if (tag != magic) throw InputError(path.string() + ": expected " + magic + " magic");
  auto next_number = [&]() -> long {
    while (true) {
      in >> std::ws;
      if (in.peek() == '#') {
        std::string comment;
        std::getline(in, comment);
        continue;
      }
      long v = -1;
      if (!(in >> v)) throw InputError(path.string() + ": garbled header");
      return v;
    }
  };
  PnmHeader h;
  const long w = next_number();
  const long ht = next_number();
  const long mv = next_number();
  if (w <= 0 || ht <= 0 || mv <= 0 || mv > 65535) {
    throw InputError(path.string() + ": invalid dimensions or maxval");
  }
  in.get();  // single whitespace before raster
  h.width = static_cast<std::size_t>(w);
  h.height = static_cast<std::size_t>(ht);
  h.maxval = static_cast<unsigned>(mv);
  return h;
}

}  // namespace

HyperCube read_cube(const fs::path& header_path) {
  const auto fields = parse_header(read_text(header_path));
  const std::size_t lines = parse_count(fields, "lines");
  const std::size_t samples = parse_count(fields, "samples");
  const std::size_t bands = parse_count(fields, "bands");
  if (lines == 0 || samples == 0 || bands == 0) throw InputError("cube header has a zero dimension");

  if (auto it = fields.find("interleave"); it != fields.end() && lower(it->second) != "bsq") {
    throw InputError("unsupported interleave '" + it->second + "' (only bsq)");
  }
  if (auto it = fields.find("data type"); it != fields.end()) {
    const std::string dt = lower(it->second);
    if (dt != "32-bit ieee-754 little-endian" && dt != "4") {
      throw InputError("unsupported data type '" + it->second + "'");
    }
  }
  if (auto it = fields.find("byte order"); it != fields.end() && trim(it->second) != "0") {
    throw InputError("unsupported byte order (only little-endian)");
  }

  const auto wl_it = fields.find("wavelength");
  if (wl_it == fields.end()) throw InputError("cube header missing 'wavelength'");
  std::vector<double> wavelengths = parse_list(wl_it->second, "wavelength");
  if (wavelengths.size() != bands) {
    throw InputError("cube header lists " + std::to_string(wavelengths.size()) +
                     " wavelengths for " + std::to_string(bands) + " bands");
  }
  for (std::size_t i = 1; i < wavelengths.size(); ++i) {
    if (!(wavelengths[i] > wavelengths[i - 1])) {
      throw InputError("cube wavelengths are not strictly increasing");
    }
  }

  fs::path data_path;
  if (auto it = fields.find("data file"); it != fields.end()) {
    data_path = header_path.parent_path() / it->second;
  } else {
    data_path = fs::path(header_path).replace_extension(".raw");
  }
  const std::uintmax_t expected = lines * samples * bands * sizeof(float);
  std::error_code ec;
  const std::uintmax_t actual = fs::file_size(data_path, ec);
  if (ec) throw InputError("cannot stat cube data file " + data_path.string());
  if (actual != expected) {
    throw InputError("cube data file " + data_path.string() + " holds " + std::to_string(actual) +
                     " bytes, header implies " + std::to_string(expected));
  }
  std::ifstream in(data_path, std::ios::binary);
  if (!in) throw InputError("cannot open " + data_path.string());
  std::vector<float> values(lines * samples * bands);
  detail::read_f32_le(in, values, "cube data");
  try {
    return HyperCube(lines, samples, std::move(wavelengths), std::move(values));
  } catch (const ValidationError& e) {
    throw InputError(std::string("invalid cube: ") + e.what());
  }
}

void write_cube(const HyperCube& cube, const fs::path& header_path) {
  const fs::path data_path = fs::path(header_path).replace_extension(".raw");
  {
    auto out = open_out(data_path);
    detail::write_f32_le(out, cube.values());
  }
  auto out = open_out(header_path);
  out << "ENVI\n";
  out << "lines = " << cube.lines() << "\n";
  out << "samples = " << cube.samples() << "\n";
  out << "bands = " << cube.bands() << "\n";
  out << "interleave = bsq\n";
  out << "data type = 32-bit IEEE-754 little-endian\n";
  out << "data file = " << data_path.filename().string() << "\n";
  out << "wavelength units = micrometers\n";
  out << "wavelength = {";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < cube.bands(); ++i) {
    out << (i ? ", " : "") << cube.wavelengths()[i];
  }
  out << "}\n";
}

fs::path dem_sidecar_path(const fs::path& raw_path) {
  return fs::path(raw_path).replace_extension(".json");
}

DemGrid read_dem(const fs::path& raw_path) {
  json meta;
  try {
    meta = json::parse(read_text(dem_sidecar_path(raw_path)));
  } catch (const json::exception& e) {
    throw InputError("garbled DEM sidecar " + dem_sidecar_path(raw_path).string() + ": " + e.what());
  }
  DemGrid dem;
  try {
    dem.width = meta.at("width").get<std::size_t>();
    dem.height = meta.at("height").get<std::size_t>();
    dem.pixel_size = meta.value("pixel_size_m", 1.0);
    dem.origin_x = meta.value("origin_x", 0.0);
    dem.origin_y = meta.value("origin_y", 0.0);
  } catch (const json::exception& e) {
    throw InputError("DEM sidecar missing fields: " + std::string(e.what()));
  }
  const std::uintmax_t expected = dem.width * dem.height * sizeof(float);
  std::error_code ec;
  const std::uintmax_t actual = fs::file_size(raw_path, ec);
  if (ec) throw InputError("cannot stat DEM raster " + raw_path.string());
  if (actual != expected) throw InputError("DEM raster size does not match sidecar dimensions");
  std::ifstream in(raw_path, std::ios::binary);
  dem.elevations.resize(dem.width * dem.height);
  detail::read_f32_le(in, dem.elevations, "DEM raster");
  try {
    dem.validate();
  } catch (const ValidationError& e) {
    throw InputError(std::string("invalid DEM: ") + e.what());
  }
  return dem;
}

void write_dem(const DemGrid& dem, const fs::path& raw_path) {
  dem.validate();
  {
    auto out = open_out(raw_path);
    detail::write_f32_le(out, dem.elevations);
  }
  json meta = {{"width", dem.width},
               {"height", dem.height},
               {"pixel_size_m", dem.pixel_size},
               {"origin_x", dem.origin_x},
               {"origin_y", dem.origin_y}};
  auto out = open_out(dem_sidecar_path(raw_path));
  out << meta.dump(2) << "\n";
}

GrayImage read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  const PnmHeader h = read_pnm_header(in, "P5", path);
  GrayImage image(h.width, h.height);
  const double scale = 1.0 / h.maxval;
  if (h.maxval < 256) {
    std::vector<unsigned char> raw(h.width * h.height);
    if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
      throw InputError(path.string() + ": truncated raster");
    }
    for (std::size_t i = 0; i < raw.size(); ++i) {
      image.pixels[i] = static_cast<float>(std::min(1.0, raw[i] * scale));
    }
  } else {
    std::vector<unsigned char> raw(2 * h.width * h.height);
    if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
      throw InputError(path.string() + ": truncated raster");
    }
    for (std::size_t i = 0; i < image.pixels.size(); ++i) {
      const unsigned v = (static_cast<unsigned>(raw[2 * i]) << 8) | raw[2 * i + 1];
      image.pixels[i] = static_cast<float>(std::min(1.0, v * scale));
    }
  }
  return image;
}

void write_pgm(const GrayImage& image, const fs::path& path) {
  auto out = open_out(path);
  out << "P5\n" << image.width << " " << image.height << "\n65535\n";
  std::vector<unsigned char> raw(2 * image.pixels.size());
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    const double clamped = std::clamp(static_cast<double>(image.pixels[i]), 0.0, 1.0);
    const auto v = static_cast<unsigned>(std::lround(clamped * 65535.0));
    raw[2 * i] = static_cast<unsigned char>(v >> 8);
    raw[2 * i + 1] = static_cast<unsigned char>(v & 0xFF);
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

LabelImage read_pgm_codes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  const PnmHeader h = read_pnm_header(in, "P5", path);
  if (h.maxval > 255) throw InputError(path.string() + ": label images must be 8-bit");
  LabelImage image{h.width, h.height, std::vector<std::uint8_t>(h.width * h.height)};
  if (!in.read(reinterpret_cast<char*>(image.codes.data()),
               static_cast<std::streamsize>(image.codes.size()))) {
    throw InputError(path.string() + ": truncated raster");
  }
  return image;
}

void write_pgm_codes(const LabelImage& image, const fs::path& path) {
  auto out = open_out(path);
  out << "P5\n" << image.width << " " << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.codes.data()),
            static_cast<std::streamsize>(image.codes.size()));
}

void write_ppm(const RgbImage& image, const fs::path& path) {
  auto out = open_out(path);
  out << "P6\n" << image.width << " " << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.rgb.data()),
            static_cast<std::streamsize>(image.rgb.size()));
}

RgbImage read_ppm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  const PnmHeader h = read_pnm_header(in, "P6", path);
  if (h.maxval > 255) throw InputError(path.string() + ": only 8-bit PPM supported");
  RgbImage image{h.width, h.height, std::vector<std::uint8_t>(3 * h.width * h.height)};
  if (!in.read(reinterpret_cast<char*>(image.rgb.data()),
               static_cast<std::streamsize>(image.rgb.size()))) {
    throw InputError(path.string() + ": truncated raster");
  }
  return image;
}

}  // namespace swirseg
