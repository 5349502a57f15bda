#include "swirseg/robust_estimation.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <Eigen/Dense>
#include <json.hpp>

#include "swirseg/error.h"
#include "swirseg/random.h"

namespace swirseg {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Maps points so their centroid is the origin and mean distance is sqrt(2).
Eigen::Matrix3d normalizing_transform(std::span<const Point2> pts) {
  double cx = 0, cy = 0;
  for (const auto& p : pts) {
    cx += p.x;
    cy += p.y;
  }
  cx /= static_cast<double>(pts.size());
  cy /= static_cast<double>(pts.size());
  double mean_dist = 0;
  for (const auto& p : pts) mean_dist += std::hypot(p.x - cx, p.y - cy);
  mean_dist /= static_cast<double>(pts.size());
  if (!(mean_dist > 0.0)) throw ValidationError("degenerate configuration: coincident points");
  const double s = std::sqrt(2.0) / mean_dist;
  Eigen::Matrix3d t;
  t << s, 0, -s * cx, 0, s, -s * cy, 0, 0, 1;
  return t;
}

HomographyModel from_eigen(const Eigen::Matrix3d& h) {
  HomographyModel model;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) model.m[r * 3 + c] = h(r, c);
  }
  model.normalize();
  return model;
}

Eigen::Matrix3d to_eigen(const HomographyModel& model) {
  Eigen::Matrix3d h;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) h(r, c) = model.m[r * 3 + c];
  }
  return h;
}

bool all_collinear(std::span<const Point2> pts) {
  double cx = 0, cy = 0;
  for (const auto& p : pts) {
    cx += p.x;
    cy += p.y;
  }
  cx /= static_cast<double>(pts.size());
  cy /= static_cast<double>(pts.size());
  double sxx = 0, syy = 0, sxy = 0;
  for (const auto& p : pts) {
    sxx += (p.x - cx) * (p.x - cx);
    syy += (p.y - cy) * (p.y - cy);
    sxy += (p.x - cx) * (p.y - cy);
  }
  const double tr = sxx + syy;
  const double det = sxx * syy - sxy * sxy;
  // Smaller eigenvalue of the scatter matrix relative to the larger one.
  const double disc = std::sqrt(std::max(0.0, tr * tr / 4 - det));
  const double lo = tr / 2 - disc;
  const double hi = tr / 2 + disc;
  return !(hi > 0.0) || lo < 1e-10 * hi;
}

double log_iterations(double confidence, double inlier_ratio, std::size_t sample_size) {
  const double good = std::pow(inlier_ratio, static_cast<double>(sample_size));
  if (good <= 0.0) return kInf;
  if (good >= 1.0) return 1.0;
  return std::log(1.0 - confidence) / std::log(1.0 - good);
}

bool relative_shift(double before, double after) {
  return std::abs(after - before) > 0.05 * std::abs(before);
}

}  // namespace

bool HomographyModel::apply(const Point2& p, Point2& out) const {
  const double w = m[6] * p.x + m[7] * p.y + m[8];
  const double scale = std::abs(m[6] * p.x) + std::abs(m[7] * p.y) + std::abs(m[8]);
  if (!std::isfinite(w) || std::abs(w) <= 1e-12 * scale) return false;
  out.x = (m[0] * p.x + m[1] * p.y + m[2]) / w;
  out.y = (m[3] * p.x + m[4] * p.y + m[5]) / w;
  return std::isfinite(out.x) && std::isfinite(out.y);
}

void HomographyModel::normalize() {
  if (std::abs(m[8]) > 1e-12) {
    const double inv = 1.0 / m[8];
    for (double& v : m) v *= inv;
    return;
  }
  double norm = 0.0;
  for (double v : m) norm += v * v;
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (double& v : m) v /= norm;
  }
}

HomographyModel HomographyModel::inverse() const { return from_eigen(to_eigen(*this).inverse()); }

HomographyModel HomographyModel::compose(const HomographyModel& rhs) const {
  return from_eigen(to_eigen(*this) * to_eigen(rhs));
}

std::size_t minimal_sample_size(ModelFamily family) {
  return family == ModelFamily::kHomography ? 4 : 2;
}

bool degenerate_configuration(std::span<const Point2> pts) {
  double scale = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      scale = std::max(scale, std::hypot(pts[i].x - pts[j].x, pts[i].y - pts[j].y));
    }
  }
  if (!(scale > 0.0)) return true;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      if (std::hypot(pts[i].x - pts[j].x, pts[i].y - pts[j].y) < 1e-9 * scale) return true;
      for (std::size_t k = j + 1; k < pts.size(); ++k) {
        const double cross = (pts[j].x - pts[i].x) * (pts[k].y - pts[i].y) -
                             (pts[j].y - pts[i].y) * (pts[k].x - pts[i].x);
        if (std::abs(cross) < 1e-6 * scale * scale) return true;
      }
    }
  }
  return false;
}

HomographyModel fit_homography_dlt(std::span<const PointPair> pairs) {
  if (pairs.size() < 4) throw ValidationError("homography fit needs at least 4 pairs");
  std::vector<Point2> src(pairs.size()), dst(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    src[i] = pairs[i].source;
    dst[i] = pairs[i].target;
  }
  if (pairs.size() == 4) {
    if (degenerate_configuration(src) || degenerate_configuration(dst)) {
      throw ValidationError("degenerate configuration: collinear or coincident points");
    }
  } else if (all_collinear(src) || all_collinear(dst)) {
    throw ValidationError("degenerate configuration: collinear points");
  }
  const Eigen::Matrix3d t_src = normalizing_transform(src);
  const Eigen::Matrix3d t_dst = normalizing_transform(dst);

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(std::max<std::size_t>(2 * pairs.size(), 9)), 9);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Eigen::Vector3d s = t_src * Eigen::Vector3d(src[i].x, src[i].y, 1.0);
    const Eigen::Vector3d d = t_dst * Eigen::Vector3d(dst[i].x, dst[i].y, 1.0);
    const double x = s.x(), y = s.y(), u = d.x(), v = d.y();
    const auto r = static_cast<Eigen::Index>(2 * i);
    a.row(r) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
    a.row(r + 1) << x, y, 1, 0, 0, 0, -u * x, -u * y, -u;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  const Eigen::Matrix3d full = t_dst.inverse() * hn * t_src;
  if (!full.allFinite() || std::abs(full.determinant()) < 1e-14 * std::pow(full.norm(), 3)) {
    throw ValidationError("degenerate configuration: singular homography");
  }
  return from_eigen(full);
}

HomographyModel fit_similarity(std::span<const PointPair> pairs) {
  if (pairs.size() < 2) throw ValidationError("similarity fit needs at least 2 pairs");
  double sx = 0, sy = 0, tx = 0, ty = 0;
  for (const auto& p : pairs) {
    sx += p.source.x;
    sy += p.source.y;
    tx += p.target.x;
    ty += p.target.y;
  }
  const double n = static_cast<double>(pairs.size());
  sx /= n, sy /= n, tx /= n, ty /= n;
  double a = 0, b = 0, var = 0;
  for (const auto& p : pairs) {
    const double px = p.source.x - sx, py = p.source.y - sy;
    const double qx = p.target.x - tx, qy = p.target.y - ty;
    a += px * qx + py * qy;
    b += px * qy - py * qx;
    var += px * px + py * py;
  }
  if (!(var > 0.0) || !(std::hypot(a, b) > 0.0)) {
    throw ValidationError("degenerate configuration: coincident points");
  }
  const double c = a / var;  // scale * cos
  const double s = b / var;  // scale * sin
  return {{c, -s, tx - (c * sx - s * sy), s, c, ty - (s * sx + c * sy), 0, 0, 1}};
}

HomographyModel fit_model(ModelFamily family, std::span<const PointPair> pairs) {
  return family == ModelFamily::kHomography ? fit_homography_dlt(pairs) : fit_similarity(pairs);
}

double reprojection_error(const HomographyModel& model, const PointPair& pair) {
  Point2 projected;
  if (!model.apply(pair.source, projected)) return kInf;
  return std::hypot(projected.x - pair.target.x, projected.y - pair.target.y);
}

void SprtState::update_threshold() {
  constexpr double kModelCost = 100.0;    // t_M: model fit cost in point evaluations
  constexpr double kModelsPerSample = 1;  // m_S
  const double c = (1.0 - delta) * std::log((1.0 - delta) / (1.0 - epsilon)) +
                   delta * std::log(delta / epsilon);
  const double base = c * kModelCost / kModelsPerSample + 1.0;
  double a = base;
  for (int i = 0; i < 1000; ++i) {
    const double next = base + std::log(a);
    if (std::abs(next - a) < 1e-4) {
      a = next;
      break;
    }
    a = next;
  }
  threshold = std::max(a, 1.0 + 1e-9);
}

RansacResult ransac_sprt(std::span<const PointPair> pairs, const RansacConfig& config) {
  const std::size_t sample_size = minimal_sample_size(config.family);
  const std::size_t n = pairs.size();
  if (n < std::max<std::size_t>(4, sample_size)) {
    throw ValidationError("robust estimation needs at least 4 pairs");
  }
  if (!(config.confidence > 0.0 && config.confidence < 1.0)) {
    throw ValidationError("confidence must lie in (0, 1)");
  }
  if (!(config.tolerance_px > 0.0)) throw ValidationError("tolerance must be positive");

  Rng sample_rng(config.seed);
  Rng verify_rng(derive_seed(config.seed, 1));

  RansacResult result;
  SprtState& sprt = result.sprt;
  sprt.update_threshold();

  bool have_best = false;
  std::size_t best_count = 0;
  double best_error = kInf;
  HomographyModel best_model;
  double required = static_cast<double>(config.max_iterations);
  std::size_t degenerate_draws = 0;

  std::vector<std::size_t> pool(n);
  std::vector<std::size_t> order(n);
  std::vector<PointPair> sample(sample_size);
  std::vector<Point2> sample_src(sample_size), sample_dst(sample_size);

  while (result.iterations < config.max_iterations &&
         static_cast<double>(result.iterations) < required) {
    // Minimal sample by partial Fisher-Yates.
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < sample_size; ++i) {
      const std::size_t j = i + uniform_index(sample_rng, n - i);
      std::swap(pool[i], pool[j]);
      sample[i] = pairs[pool[i]];
      sample_src[i] = sample[i].source;
      sample_dst[i] = sample[i].target;
    }
    HomographyModel model;
    bool ok = !degenerate_configuration(sample_src) && !degenerate_configuration(sample_dst);
    if (ok) {
      try {
        model = fit_model(config.family, sample);
      } catch (const ValidationError&) {
        ok = false;
      }
    }
    if (!ok) {
      ++degenerate_draws;
      const double bound = std::min(required, static_cast<double>(config.max_iterations));
      if (degenerate_draws >= 10 * static_cast<std::size_t>(bound)) {
        if (!have_best) throw RegistrationError("every sampled minimal set was degenerate");
        break;
      }
      continue;
    }
    ++result.iterations;
    ++sprt.models_tested;

    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(std::span<std::size_t>(order), verify_rng);

    double lambda = 1.0;
    std::size_t inliers = 0;
    std::size_t evaluated = 0;
    double error_sum = 0.0;
    bool rejected = false;
    const double inlier_step = sprt.delta / sprt.epsilon;
    const double outlier_step = (1.0 - sprt.delta) / (1.0 - sprt.epsilon);
    for (std::size_t j : order) {
      ++evaluated;
      const double err = reprojection_error(model, pairs[j]);
      const bool inlier = err <= config.tolerance_px;
      if (inlier) {
        ++inliers;
        error_sum += err;
      }
      if (config.sprt) {
        lambda *= inlier ? inlier_step : outlier_step;
        if (lambda > sprt.threshold) {
          rejected = true;
          break;
        }
      }
    }
    result.points_evaluated += evaluated;
    sprt.points_evaluated += evaluated;

    if (rejected) {
      ++sprt.rejections;
      sprt.rejected_inlier_fraction_sum += static_cast<double>(inliers) / static_cast<double>(evaluated);
      const double mean = sprt.rejected_inlier_fraction_sum / static_cast<double>(sprt.rejections);
      const double next_delta = std::min(std::max(mean, 0.01), sprt.epsilon / 2.0);
      if (relative_shift(sprt.delta, next_delta)) {
        sprt.delta = next_delta;
        sprt.update_threshold();
      }
      continue;
    }

    if (!have_best || inliers > best_count || (inliers == best_count && error_sum < best_error)) {
      have_best = true;
      best_count = inliers;
      best_error = error_sum;
      best_model = model;
      const double ratio = static_cast<double>(inliers) / static_cast<double>(n);
      required = std::min(static_cast<double>(config.max_iterations),
                          log_iterations(config.confidence, ratio, sample_size));
      const double next_eps = std::clamp(ratio, 0.02, 0.99);
      if (config.sprt && relative_shift(sprt.epsilon, next_eps)) {
        sprt.epsilon = next_eps;
        sprt.delta = std::min(sprt.delta, sprt.epsilon / 2.0);
        sprt.update_threshold();
      }
    }
  }

  if (!have_best) return result;

  auto collect = [&](const HomographyModel& m, std::vector<std::size_t>& ids, double& err_sum) {
    ids.clear();
    err_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = reprojection_error(m, pairs[i]);
      if (e <= config.tolerance_px) {
        ids.push_back(i);
        err_sum += e;
      }
    }
  };
  result.model = best_model;
  double err_sum = 0.0;
  collect(result.model, result.inlier_ids, err_sum);

  // Least-squares refit on the consensus set while it does not shrink.
  for (int round = 0; round < 3; ++round) {
    if (result.inlier_ids.size() < std::max<std::size_t>(4, sample_size)) break;
    std::vector<PointPair> consensus;
    consensus.reserve(result.inlier_ids.size());
    for (std::size_t i : result.inlier_ids) consensus.push_back(pairs[i]);
    HomographyModel refit;
    try {
      refit = fit_model(config.family, consensus);
    } catch (const ValidationError&) {
      break;
    }
    std::vector<std::size_t> refit_ids;
    double refit_err = 0.0;
    collect(refit, refit_ids, refit_err);
    if (refit_ids.size() < result.inlier_ids.size() ||
        (refit_ids.size() == result.inlier_ids.size() && refit_err >= err_sum)) {
      break;
    }
    result.model = refit;
    result.inlier_ids = std::move(refit_ids);
    err_sum = refit_err;
  }
  result.accepted = result.inlier_ids.size() > config.min_inliers_exclusive;
  return result;
}

void write_model_json(const RansacResult& result, const std::filesystem::path& path) {
  nlohmann::json j = {{"matrix", result.model.m},
                      {"inlier_ids", result.inlier_ids},
                      {"iterations", result.iterations},
                      {"points_evaluated", result.points_evaluated},
                      {"accepted", result.accepted}};
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace swirseg
