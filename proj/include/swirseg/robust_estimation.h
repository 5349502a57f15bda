#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "swirseg/raster.h"

namespace swirseg {

// Planar projective transform, row-major. Normalized so that m[8] == 1, or
// to unit Frobenius norm when that entry vanishes.
struct HomographyModel {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  static HomographyModel identity() { return {}; }
  static HomographyModel translation(double tx, double ty) { return {{1, 0, tx, 0, 1, ty, 0, 0, 1}}; }

  // Returns false when the point maps to (or near) the plane at infinity.
  bool apply(const Point2& p, Point2& out) const;
  HomographyModel inverse() const;
  HomographyModel compose(const HomographyModel& rhs) const;  // this * rhs
  void normalize();
};

// Source (SWIR image) point paired with its target (DEM plane) point.
struct PointPair {
  Point2 source;
  Point2 target;
};

enum class ModelFamily { kHomography, kSimilarity };

std::size_t minimal_sample_size(ModelFamily family);

// Normalized direct linear transform over >= 4 pairs; least squares when
// over-determined. Throws ValidationError on degenerate input.
HomographyModel fit_homography_dlt(std::span<const PointPair> pairs);
// Least-squares similarity (rotation, uniform scale, translation), >= 2 pairs.
HomographyModel fit_similarity(std::span<const PointPair> pairs);
HomographyModel fit_model(ModelFamily family, std::span<const PointPair> pairs);

// True when some three of the points are (nearly) collinear or two coincide.
bool degenerate_configuration(std::span<const Point2> points);

// Euclidean distance between the projected source and the target; infinity
// when the projection is at infinity.
double reprojection_error(const HomographyModel& model, const PointPair& pair);

// Sequential probability ratio test state used to cut model verification
// short. epsilon: inlier ratio of a good model; delta: inlier ratio of a bad
// one; threshold: decision threshold A.
struct SprtState {
  double epsilon = 0.2;
  double delta = 0.05;
  double threshold = 0.0;
  std::size_t models_tested = 0;
  std::size_t points_evaluated = 0;
  std::size_t rejections = 0;
  double rejected_inlier_fraction_sum = 0.0;

  // Evaluates A <- C * t_M / m_S + 1 + log A to a fixed point.
  void update_threshold();
};

struct RansacConfig {
  double tolerance_px = 2.0;
  double confidence = 0.99;
  std::uint64_t seed = 0;
  bool sprt = true;
  ModelFamily family = ModelFamily::kHomography;
  std::size_t max_iterations = 10000;
  // Registration is accepted when inliers exceed this count.
  std::size_t min_inliers_exclusive = 5;
};

struct RansacResult {
  HomographyModel model;
  std::vector<std::size_t> inlier_ids;
  std::size_t iterations = 0;
  std::size_t points_evaluated = 0;
  bool accepted = false;
  SprtState sprt;
};

// Randomized sample consensus with optional SPRT early rejection. The
// minimal-sample stream depends only on the seed, so SPRT on and off see the
// same hypotheses. Throws ValidationError for too few pairs and
// RegistrationError when every sampled minimal set is degenerate.
RansacResult ransac_sprt(std::span<const PointPair> pairs, const RansacConfig& config);

// JSON: {"matrix":[9 row-major], "inlier_ids":[...], "iterations":N,
//        "points_evaluated":N, "accepted":bool}
void write_model_json(const RansacResult& result, const std::filesystem::path& path);

}  // namespace swirseg
