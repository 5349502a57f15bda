#include "swirseg/features.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <tuple>

#include "binary_io.h"
#include "swirseg/error.h"

namespace swirseg {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kBorder = 5;
constexpr int kDescWidth = 4;
constexpr int kDescBins = 8;
constexpr double kDescScaleFactor = 3.0;
constexpr double kOriSigmaFactor = 1.5;
constexpr double kOriRadiusFactor = 3.0;

struct Plane {
  int w = 0;
  int h = 0;
  std::vector<float> px;

  Plane() = default;
  Plane(int width, int height) : w(width), h(height), px(static_cast<std::size_t>(width) * height) {}
  float at(int x, int y) const { return px[static_cast<std::size_t>(y) * w + x]; }
  float& at(int x, int y) { return px[static_cast<std::size_t>(y) * w + x]; }
};

Plane gaussian_blur(const Plane& src, double sigma) {
  if (sigma <= 0.0) return src;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    total += kernel[i + radius];
  }
  for (double& k : kernel) k /= total;

  Plane tmp(src.w, src.h);
  for (int y = 0; y < src.h; ++y) {
    for (int x = 0; x < src.w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const int xx = std::clamp(x + i, 0, src.w - 1);
        acc += kernel[i + radius] * src.at(xx, y);
      }
      tmp.at(x, y) = static_cast<float>(acc);
    }
  }
  Plane out(src.w, src.h);
  for (int y = 0; y < src.h; ++y) {
    for (int x = 0; x < src.w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const int yy = std::clamp(y + i, 0, src.h - 1);
        acc += kernel[i + radius] * tmp.at(x, yy);
      }
      out.at(x, y) = static_cast<float>(acc);
    }
  }
  return out;
}

Plane downsample(const Plane& src) {
  Plane out(src.w / 2, src.h / 2);
  for (int y = 0; y < out.h; ++y) {
    for (int x = 0; x < out.w; ++x) out.at(x, y) = src.at(2 * x, 2 * y);
  }
  return out;
}

Plane upsample2x(const Plane& src) {
  Plane out(src.w * 2, src.h * 2);
  for (int y = 0; y < out.h; ++y) {
    for (int x = 0; x < out.w; ++x) {
      const double sx = std::min(x * 0.5, src.w - 1.0);
      const double sy = std::min(y * 0.5, src.h - 1.0);
      const int x0 = static_cast<int>(sx);
      const int y0 = static_cast<int>(sy);
      const int x1 = std::min(x0 + 1, src.w - 1);
      const int y1 = std::min(y0 + 1, src.h - 1);
      const double fx = sx - x0;
      const double fy = sy - y0;
      out.at(x, y) = static_cast<float>(
          (1 - fx) * (1 - fy) * src.at(x0, y0) + fx * (1 - fy) * src.at(x1, y0) +
          (1 - fx) * fy * src.at(x0, y1) + fx * fy * src.at(x1, y1));
    }
  }
  return out;
}

Plane equalize(const Plane& src) {
  constexpr int kBins = 256;
  std::array<std::size_t, kBins> hist{};
  auto bin_of = [](float v) { return std::clamp(static_cast<int>(v * (kBins - 1) + 0.5f), 0, kBins - 1); };
  for (float v : src.px) ++hist[bin_of(v)];
  std::array<double, kBins> cdf{};
  std::size_t running = 0;
  for (int i = 0; i < kBins; ++i) {
    running += hist[i];
    cdf[i] = static_cast<double>(running) / static_cast<double>(src.px.size());
  }
  Plane out = src;
  for (float& v : out.px) v = static_cast<float>(cdf[bin_of(v)]);
  return out;
}

struct Octave {
  std::vector<Plane> gauss;  // intervals + 3 levels
  std::vector<Plane> dog;    // intervals + 2 levels
};

struct Candidate {
  int octave = 0;
  int layer = 0;
  int x = 0;
  int y = 0;
  double offset_x = 0.0;
  double offset_y = 0.0;
  double offset_s = 0.0;
};

class ScaleSpace {
 public:
  ScaleSpace(const GrayImage& image, const SiftConfig& config) : cfg_(config) {
    Plane base(static_cast<int>(image.width), static_cast<int>(image.height));
    for (std::size_t i = 0; i < image.pixels.size(); ++i) base.px[i] = image.pixels[i];
    if (cfg_.equalize) base = equalize(base);
    double blur = cfg_.assumed_blur;
    if (cfg_.upsample) {
      base = upsample2x(base);
      blur *= 2.0;
      coord_scale_ = 0.5;
    }
    const double initial = std::sqrt(std::max(0.01, cfg_.base_sigma * cfg_.base_sigma - blur * blur));
    base = gaussian_blur(base, initial);

    const int s = cfg_.intervals;
    const double k = std::pow(2.0, 1.0 / s);
    std::vector<double> increments(s + 3, 0.0);
    for (int i = 1; i < s + 3; ++i) {
      const double prev = cfg_.base_sigma * std::pow(k, i - 1);
      const double cur = prev * k;
      increments[i] = std::sqrt(cur * cur - prev * prev);
    }

    Plane level0 = std::move(base);
    while (static_cast<std::size_t>(std::min(level0.w, level0.h)) >= cfg_.min_octave_size) {
      Octave oct;
      oct.gauss.reserve(s + 3);
      oct.gauss.push_back(level0);
      for (int i = 1; i < s + 3; ++i) oct.gauss.push_back(gaussian_blur(oct.gauss.back(), increments[i]));
      for (int i = 0; i + 1 < s + 3; ++i) {
        Plane d(level0.w, level0.h);
        for (std::size_t p = 0; p < d.px.size(); ++p) d.px[p] = oct.gauss[i + 1].px[p] - oct.gauss[i].px[p];
        oct.dog.push_back(std::move(d));
      }
      level0 = downsample(oct.gauss[s]);
      octaves_.push_back(std::move(oct));
    }
  }

  std::vector<Descriptor> run() const {
    std::vector<Descriptor> out;
    for (int o = 0; o < static_cast<int>(octaves_.size()); ++o) {
      for (const Candidate& c : find_extrema(o)) describe(c, out);
    }
    std::sort(out.begin(), out.end(), [](const Descriptor& a, const Descriptor& b) {
      const auto& ka = a.keypoint;
      const auto& kb = b.keypoint;
      return std::tie(ka.y, ka.x, ka.scale, ka.orientation) <
             std::tie(kb.y, kb.x, kb.scale, kb.orientation);
    });
    return out;
  }

 private:
  std::vector<Candidate> find_extrema(int o) const {
    const Octave& oct = octaves_[o];
    const int s = cfg_.intervals;
    const float prelim = static_cast<float>(0.5 * cfg_.contrast_threshold / s);
    std::vector<Candidate> found;
    const int w = oct.dog[0].w;
    const int h = oct.dog[0].h;
    for (int layer = 1; layer <= s; ++layer) {
      for (int y = kBorder; y < h - kBorder; ++y) {
        for (int x = kBorder; x < w - kBorder; ++x) {
          const float v = oct.dog[layer].at(x, y);
          if (std::abs(v) <= prelim) continue;
          if (!is_extremum(oct, layer, x, y, v)) continue;
          Candidate c{o, layer, x, y};
          if (refine(c)) found.push_back(c);
        }
      }
    }
    return found;
  }

  static bool is_extremum(const Octave& oct, int layer, int x, int y, float v) {
    const bool maximum = v > 0;
    for (int dl = -1; dl <= 1; ++dl) {
      const Plane& p = oct.dog[layer + dl];
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dl == 0 && dy == 0 && dx == 0) continue;
          const float n = p.at(x + dx, y + dy);
          if (maximum ? !(v > n) : !(v < n)) return false;
        }
      }
    }
    return true;
  }

  // Quadratic fit of the DoG around the sample, moving to a neighbor while
  // the offset exceeds half a sample. Applies contrast and edge tests.
  bool refine(Candidate& c) const {
    const Octave& oct = octaves_[c.octave];
    const int s = cfg_.intervals;
    const int w = oct.dog[0].w;
    const int h = oct.dog[0].h;
    double ox = 0, oy = 0, os = 0;
    double gx = 0, gy = 0, gs = 0;
    bool converged = false;
    for (int step = 0; step < cfg_.max_interpolation_steps; ++step) {
      const Plane& prev = oct.dog[c.layer - 1];
      const Plane& cur = oct.dog[c.layer];
      const Plane& next = oct.dog[c.layer + 1];
      const int x = c.x;
      const int y = c.y;
      const double v2 = 2.0 * cur.at(x, y);
      gx = 0.5 * (cur.at(x + 1, y) - cur.at(x - 1, y));
      gy = 0.5 * (cur.at(x, y + 1) - cur.at(x, y - 1));
      gs = 0.5 * (next.at(x, y) - prev.at(x, y));
      const double dxx = cur.at(x + 1, y) + cur.at(x - 1, y) - v2;
      const double dyy = cur.at(x, y + 1) + cur.at(x, y - 1) - v2;
      const double dss = next.at(x, y) + prev.at(x, y) - v2;
      const double dxy = 0.25 * (cur.at(x + 1, y + 1) - cur.at(x - 1, y + 1) - cur.at(x + 1, y - 1) +
                                 cur.at(x - 1, y - 1));
      const double dxs = 0.25 * (next.at(x + 1, y) - next.at(x - 1, y) - prev.at(x + 1, y) +
                                 prev.at(x - 1, y));
      const double dys = 0.25 * (next.at(x, y + 1) - next.at(x, y - 1) - prev.at(x, y + 1) +
                                 prev.at(x, y - 1));
      // Solve H * offset = -g by Cramer's rule.
      const double det = dxx * (dyy * dss - dys * dys) - dxy * (dxy * dss - dys * dxs) +
                         dxs * (dxy * dys - dyy * dxs);
      if (std::abs(det) < 1e-12) return false;
      const double inv = 1.0 / det;
      const double bx = -gx, by = -gy, bs = -gs;
      ox = inv * (bx * (dyy * dss - dys * dys) - dxy * (by * dss - dys * bs) + dxs * (by * dys - dyy * bs));
      oy = inv * (dxx * (by * dss - dys * bs) - bx * (dxy * dss - dys * dxs) + dxs * (dxy * bs - by * dxs));
      os = inv * (dxx * (dyy * bs - by * dys) - dxy * (dxy * bs - by * dxs) + bx * (dxy * dys - dyy * dxs));
      if (std::abs(ox) < 0.5 && std::abs(oy) < 0.5 && std::abs(os) < 0.5) {
        converged = true;
        break;
      }
      if (std::abs(ox) > 1e3 || std::abs(oy) > 1e3 || std::abs(os) > 1e3) return false;
      c.x += static_cast<int>(std::lround(ox));
      c.y += static_cast<int>(std::lround(oy));
      c.layer += static_cast<int>(std::lround(os));
      if (c.layer < 1 || c.layer > s || c.x < kBorder || c.x >= w - kBorder || c.y < kBorder ||
          c.y >= h - kBorder) {
        return false;
      }
    }
    if (!converged) return false;

    const Plane& cur = oct.dog[c.layer];
    const double contrast = cur.at(c.x, c.y) + 0.5 * (gx * ox + gy * oy + gs * os);
    if (std::abs(contrast) < cfg_.contrast_threshold) return false;

    const double v2 = 2.0 * cur.at(c.x, c.y);
    const double dxx = cur.at(c.x + 1, c.y) + cur.at(c.x - 1, c.y) - v2;
    const double dyy = cur.at(c.x, c.y + 1) + cur.at(c.x, c.y - 1) - v2;
    const double dxy = 0.25 * (cur.at(c.x + 1, c.y + 1) - cur.at(c.x - 1, c.y + 1) -
                               cur.at(c.x + 1, c.y - 1) + cur.at(c.x - 1, c.y - 1));
    const double tr = dxx + dyy;
    const double det = dxx * dyy - dxy * dxy;
    const double r = cfg_.edge_ratio;
    if (det <= 0.0 || tr * tr * r >= (r + 1.0) * (r + 1.0) * det) return false;

    c.offset_x = ox;
    c.offset_y = oy;
    c.offset_s = os;
    return true;
  }

  void describe(const Candidate& c, std::vector<Descriptor>& out) const {
    const Octave& oct = octaves_[c.octave];
    const Plane& img = oct.gauss[c.layer];
    const double local_sigma =
        cfg_.base_sigma * std::pow(2.0, (c.layer + c.offset_s) / cfg_.intervals);
    const double octave_scale = std::ldexp(1.0, c.octave) * coord_scale_;

    Keypoint base;
    base.x = static_cast<float>((c.x + c.offset_x) * octave_scale);
    base.y = static_cast<float>((c.y + c.offset_y) * octave_scale);
    base.scale = static_cast<float>(local_sigma * octave_scale);

    for (double angle : orientations(img, c.x, c.y, local_sigma)) {
      Descriptor d;
      d.keypoint = base;
      d.keypoint.orientation = static_cast<float>(angle);
      if (d.keypoint.orientation >= static_cast<float>(kTwoPi)) d.keypoint.orientation = 0.0f;
      if (compute_vector(img, c.x + c.offset_x, c.y + c.offset_y, local_sigma, angle, d.vector)) {
        out.push_back(d);
      }
    }
  }

  std::vector<double> orientations(const Plane& img, int cx, int cy, double sigma) const {
    const int bins = cfg_.orientation_bins;
    const double ori_sigma = kOriSigmaFactor * sigma;
    const int radius = static_cast<int>(std::lround(kOriRadiusFactor * ori_sigma));
    std::vector<double> hist(bins, 0.0);
    const double denom = -0.5 / (ori_sigma * ori_sigma);
    for (int dy = -radius; dy <= radius; ++dy) {
      const int y = cy + dy;
      if (y <= 0 || y >= img.h - 1) continue;
      for (int dx = -radius; dx <= radius; ++dx) {
        const int x = cx + dx;
        if (x <= 0 || x >= img.w - 1) continue;
        const double gx = img.at(x + 1, y) - img.at(x - 1, y);
        const double gy = img.at(x, y + 1) - img.at(x, y - 1);
        const double mag = std::sqrt(gx * gx + gy * gy);
        if (mag == 0.0) continue;
        double ang = std::atan2(gy, gx);
        if (ang < 0) ang += kTwoPi;
        int bin = static_cast<int>(std::lround(bins * ang / kTwoPi));
        bin = ((bin % bins) + bins) % bins;
        hist[bin] += std::exp(denom * (dx * dx + dy * dy)) * mag;
      }
    }
    std::vector<double> smooth(bins);
    for (int i = 0; i < bins; ++i) {
      auto h = [&](int j) { return hist[((i + j) % bins + bins) % bins]; };
      smooth[i] = (h(-2) + h(2)) * (1.0 / 16) + (h(-1) + h(1)) * (4.0 / 16) + h(0) * (6.0 / 16);
    }
    const double peak = *std::max_element(smooth.begin(), smooth.end());
    std::vector<double> angles;
    if (!(peak > 0.0)) return angles;
    for (int i = 0; i < bins; ++i) {
      const double l = smooth[(i + bins - 1) % bins];
      const double r = smooth[(i + 1) % bins];
      const double v = smooth[i];
      if (v > l && v > r && v >= cfg_.orientation_peak_ratio * peak) {
        double bin = i + 0.5 * (l - r) / (l - 2.0 * v + r);
        if (bin < 0) bin += bins;
        if (bin >= bins) bin -= bins;
        angles.push_back(kTwoPi * bin / bins);
      }
    }
    return angles;
  }

  bool compute_vector(const Plane& img, double kx, double ky, double sigma, double angle,
                      std::array<float, kDescriptorDim>& vec) const {
    const double hist_width = kDescScaleFactor * sigma;
    const int radius = static_cast<int>(
        std::lround(hist_width * std::numbers::sqrt2 * (kDescWidth + 1) * 0.5));
    const double cos_t = std::cos(angle) / hist_width;
    const double sin_t = std::sin(angle) / hist_width;
    const double weight_denom = -1.0 / (0.5 * kDescWidth * kDescWidth);
    const double bins_per_rad = kDescBins / kTwoPi;

    constexpr int kPad = kDescWidth + 2;
    std::array<double, kPad * kPad * (kDescBins + 2)> hist{};
    auto slot = [](int r, int c, int o) { return (r * kPad + c) * (kDescBins + 2) + o; };

    const int cx = static_cast<int>(std::lround(kx));
    const int cy = static_cast<int>(std::lround(ky));
    for (int dy = -radius; dy <= radius; ++dy) {
      for (int dx = -radius; dx <= radius; ++dx) {
        const int x = cx + dx;
        const int y = cy + dy;
        if (x <= 0 || x >= img.w - 1 || y <= 0 || y >= img.h - 1) continue;
        const double rx = x - kx;
        const double ry = y - ky;
        const double x_rot = cos_t * rx + sin_t * ry;
        const double y_rot = -sin_t * rx + cos_t * ry;
        const double rbin = y_rot + kDescWidth / 2.0 - 0.5;
        const double cbin = x_rot + kDescWidth / 2.0 - 0.5;
        if (!(rbin > -1.0 && rbin < kDescWidth && cbin > -1.0 && cbin < kDescWidth)) continue;
        const double gx = img.at(x + 1, y) - img.at(x - 1, y);
        const double gy = img.at(x, y + 1) - img.at(x, y - 1);
        const double mag = std::sqrt(gx * gx + gy * gy);
        double ori = std::atan2(gy, gx) - angle;
        ori = std::fmod(ori, kTwoPi);
        if (ori < 0) ori += kTwoPi;
        const double obin = ori * bins_per_rad;
        const double weight = std::exp(weight_denom * (x_rot * x_rot + y_rot * y_rot)) * mag;

        const int r0 = static_cast<int>(std::floor(rbin));
        const int c0 = static_cast<int>(std::floor(cbin));
        int o0 = static_cast<int>(std::floor(obin));
        const double fr = rbin - r0;
        const double fc = cbin - c0;
        const double fo = obin - o0;
        o0 = o0 % kDescBins;
        for (int ir = 0; ir <= 1; ++ir) {
          const double wr = weight * (ir ? fr : 1.0 - fr);
          for (int ic = 0; ic <= 1; ++ic) {
            const double wc = wr * (ic ? fc : 1.0 - fc);
            for (int io = 0; io <= 1; ++io) {
              hist[slot(r0 + 1 + ir, c0 + 1 + ic, o0 + io)] += wc * (io ? fo : 1.0 - fo);
            }
          }
        }
      }
    }

    std::array<double, kDescriptorDim> raw{};
    for (int r = 0; r < kDescWidth; ++r) {
      for (int c = 0; c < kDescWidth; ++c) {
        double* cell = &hist[slot(r + 1, c + 1, 0)];
        cell[0] += cell[kDescBins];
        for (int o = 0; o < kDescBins; ++o) raw[(r * kDescWidth + c) * kDescBins + o] = cell[o];
      }
    }
    auto normalize = [&raw]() {
      double norm = 0.0;
      for (double v : raw) norm += v * v;
      norm = std::sqrt(norm);
      if (!(norm > 0.0)) return false;
      for (double& v : raw) v /= norm;
      return true;
    };
    if (!normalize()) return false;
    for (double& v : raw) v = std::min(v, cfg_.descriptor_clip);
    if (!normalize()) return false;
    for (std::size_t i = 0; i < kDescriptorDim; ++i) vec[i] = static_cast<float>(raw[i]);
    return true;
  }

  const SiftConfig& cfg_;
  double coord_scale_ = 1.0;
  std::vector<Octave> octaves_;
};

}  // namespace

std::vector<Descriptor> detect_and_describe(const GrayImage& image, const SiftConfig& config) {
  if (image.width < 32 || image.height < 32) {
    throw ValidationError("feature detection needs an image of at least 32x32 pixels");
  }
  if (config.intervals < 1 || config.base_sigma <= 0.0 || config.min_octave_size < 8) {
    throw ValidationError("invalid scale-space configuration");
  }
  return ScaleSpace(image, config).run();
}

double squared_distance(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return acc;
}

std::vector<DescriptorMatch> match_ratio_test(std::span<const Descriptor> queries,
                                              std::span<const Descriptor> targets, double ratio) {
  if (targets.size() < 2) throw ValidationError("ratio test needs at least two targets");
  if (!(ratio > 0.0 && ratio < 1.0)) throw ValidationError("ratio must lie in (0, 1)");
  std::vector<DescriptorMatch> matches;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    double best = std::numeric_limits<double>::infinity();
    double second = std::numeric_limits<double>::infinity();
    std::size_t best_idx = 0;
    for (std::size_t t = 0; t < targets.size(); ++t) {
      const double d = squared_distance(queries[q].vector, targets[t].vector);
      if (d < best) {
        second = best;
        best = d;
        best_idx = t;
      } else if (d < second) {
        second = d;
      }
    }
    const double d1 = std::sqrt(best);
    const double d2 = std::sqrt(second);
    if (d2 > 0.0 && d1 / d2 <= ratio) matches.push_back({q, best_idx, d1});
  }
  return matches;
}

void write_descriptors(std::span<const Descriptor> descriptors, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  detail::write_u32_le(out, static_cast<std::uint32_t>(descriptors.size()));
  detail::write_u32_le(out, static_cast<std::uint32_t>(kDescriptorDim));
  for (const auto& d : descriptors) {
    const std::array<float, 4> rec{d.keypoint.x, d.keypoint.y, d.keypoint.scale, d.keypoint.orientation};
    detail::write_f32_le(out, rec);
  }
  for (const auto& d : descriptors) detail::write_f32_le(out, d.vector);
}

std::vector<Descriptor> read_descriptors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  const std::uint32_t count = detail::read_u32_le(in, "descriptor header");
  const std::uint32_t dim = detail::read_u32_le(in, "descriptor header");
  if (dim != kDescriptorDim) {
    throw InputError(path.string() + ": descriptor dimension " + std::to_string(dim) + " != 128");
  }
  std::vector<Descriptor> out(count);
  for (auto& d : out) {
    std::array<float, 4> rec{};
    detail::read_f32_le(in, rec, "keypoint records");
    d.keypoint = {rec[0], rec[1], rec[2], rec[3]};
  }
  for (auto& d : out) detail::read_f32_le(in, d.vector, "descriptor vectors");
  return out;
}

}  // namespace swirseg
