#include "swirseg/features.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>

#include <gtest/gtest.h>

#include "swirseg/error.h"
#include "test_support.h"

namespace swirseg {
namespace {

using testing::blob_image;
using testing::random_descriptor;

GrayImage scattered_blobs(std::size_t w, std::size_t h, std::size_t pad, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Point2> centers;
  for (int i = 0; i < 14; ++i) {
    centers.push_back({pad + 10 + uniform_unit(rng) * (w - 2 * pad - 20),
                       pad + 10 + uniform_unit(rng) * (h - 2 * pad - 20)});
  }
  return blob_image(w, h, centers, 2.5);
}

TEST(Detect, ConstantImageHasNoKeypoints) {
  EXPECT_TRUE(detect_and_describe(GrayImage(64, 64, 0.4f)).empty());
}

TEST(Detect, TooSmallImageRejected) {
  EXPECT_THROW(detect_and_describe(GrayImage(31, 64, 0.4f)), ValidationError);
}

TEST(Detect, GaussianBlobLocalizedAtItsScale) {
  const double sigma_b = 4.0;
  const Point2 c{47.3, 52.6};
  const auto ds = detect_and_describe(blob_image(96, 96, {c}, sigma_b));
  bool found = false;
  for (const auto& d : ds) {
    const double dist = std::hypot(d.keypoint.x - c.x, d.keypoint.y - c.y);
    if (dist <= 1.5 && d.keypoint.scale >= sigma_b / 1.5 && d.keypoint.scale <= sigma_b * 1.5) found = true;
  }
  EXPECT_TRUE(found) << ds.size() << " keypoints, none at the blob";
}

TEST(Detect, DescriptorsAreUnitNormSortedAndInBounds) {
  const GrayImage img = scattered_blobs(128, 96, 0, 3);
  const auto ds = detect_and_describe(img);
  ASSERT_FALSE(ds.empty());
  for (const auto& d : ds) {
    double n = 0.0;
    for (float v : d.vector) {
      EXPECT_GE(v, 0.0f);
      n += static_cast<double>(v) * v;
    }
    EXPECT_NEAR(std::sqrt(n), 1.0, 1e-6);
    EXPECT_GE(d.keypoint.x, 0.0f);
    EXPECT_LT(d.keypoint.x, 128.0f);
    EXPECT_GE(d.keypoint.y, 0.0f);
    EXPECT_LT(d.keypoint.y, 96.0f);
    EXPECT_GT(d.keypoint.scale, 0.0f);
    EXPECT_GE(d.keypoint.orientation, 0.0f);
    EXPECT_LT(d.keypoint.orientation, static_cast<float>(2 * std::numbers::pi));
  }
  for (std::size_t i = 1; i < ds.size(); ++i) {
    const auto& a = ds[i - 1].keypoint;
    const auto& b = ds[i].keypoint;
    EXPECT_LE(std::tie(a.y, a.x, a.scale, a.orientation), std::tie(b.y, b.x, b.scale, b.orientation));
  }
}

TEST(Detect, DeterministicByteForByte) {
  const GrayImage img = scattered_blobs(96, 96, 0, 8);
  const auto a = detect_and_describe(img);
  const auto b = detect_and_describe(img);
  ASSERT_EQ(a.size(), b.size());
  EXPECT_EQ(0, std::memcmp(a.data(), b.data(), a.size() * sizeof(Descriptor)));
}

TEST(Detect, IntegerShiftMovesKeypoints) {
  const std::size_t w = 128, h = 128, shift = 16;
  const GrayImage base = scattered_blobs(w, h, 24, 12);
  GrayImage moved(w, h, 0.1f);
  for (std::size_t y = 0; y + shift < h; ++y)
    for (std::size_t x = 0; x + shift < w; ++x) moved.at(x + shift, y + shift) = base.at(x, y);
  const auto a = detect_and_describe(base);
  const auto b = detect_and_describe(moved);
  std::size_t interior = 0, matched = 0;
  for (const auto& d : a) {
    if (d.keypoint.x < 20 || d.keypoint.y < 20 || d.keypoint.x > w - shift - 20 || d.keypoint.y > h - shift - 20) continue;
    ++interior;
    for (const auto& e : b) {
      if (std::hypot(e.keypoint.x - d.keypoint.x - shift, e.keypoint.y - d.keypoint.y - shift) <= 0.5) {
        ++matched;
        break;
      }
    }
  }
  ASSERT_GT(interior, 0u);
  EXPECT_EQ(matched, interior);
}

TEST(Detect, RotationRepeatability) {
  const std::size_t n = 128;
  const GrayImage img = scattered_blobs(n, n, 16, 21);
  GrayImage rot(n, n);
  // 90 degrees clockwise: (x, y) -> (n - 1 - y, x).
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x) rot.at(n - 1 - y, x) = img.at(x, y);
  const auto a = detect_and_describe(img);
  const auto b = detect_and_describe(rot);
  ASSERT_FALSE(a.empty());
  std::size_t hit = 0;
  for (const auto& d : a) {
    const double rx = static_cast<double>(n - 1) - d.keypoint.y;
    const double ry = d.keypoint.x;
    for (const auto& e : b) {
      if (std::hypot(e.keypoint.x - rx, e.keypoint.y - ry) <= 1.5) {
        ++hit;
        break;
      }
    }
  }
  EXPECT_GE(static_cast<double>(hit) / a.size(), 0.8) << hit << " of " << a.size();
}

// Exhaustive double-loop oracle with the same tie rule.
std::vector<DescriptorMatch> oracle_matches(const std::vector<Descriptor>& q,
                                            const std::vector<Descriptor>& t, double ratio) {
  std::vector<DescriptorMatch> out;
  for (std::size_t i = 0; i < q.size(); ++i) {
    std::vector<std::pair<double, std::size_t>> d;
    for (std::size_t j = 0; j < t.size(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < kDescriptorDim; ++k) {
        const double e = static_cast<double>(q[i].vector[k]) - t[j].vector[k];
        s += e * e;
      }
      d.push_back({s, j});
    }
    std::sort(d.begin(), d.end());
    const double d1 = std::sqrt(d[0].first), d2 = std::sqrt(d[1].first);
    if (d2 > 0.0 && d1 / d2 <= ratio) out.push_back({i, d[0].second, d1});
  }
  return out;
}

TEST(RatioTest, ExactHitAndAmbiguity) {
  std::vector<Descriptor> targets(3);
  targets[0].vector[0] = 1.0f;
  targets[1].vector[1] = 1.0f;
  targets[2].vector[2] = 1.0f;
  std::vector<Descriptor> q(2);
  q[0].vector[1] = 1.0f;
  q[1].vector[0] = q[1].vector[1] = static_cast<float>(std::sqrt(0.5));
  const auto m = match_ratio_test(q, targets);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].query, 0u);
  EXPECT_EQ(m[0].target, 1u);
  EXPECT_DOUBLE_EQ(m[0].distance, 0.0);

  EXPECT_THROW(match_ratio_test(q, std::span(targets).first(1)), ValidationError);
  EXPECT_THROW(match_ratio_test(q, targets, 1.0), ValidationError);
}

TEST(RatioTest, MatchesExhaustiveOracleAndIgnoresTargetOrder) {
  Rng rng(77);
  std::vector<Descriptor> q, t;
  for (int i = 0; i < 50; ++i) t.push_back(random_descriptor(rng));
  for (int i = 0; i < 50; ++i) {
    if (i % 2 == 0) {
      Descriptor d = t[uniform_index(rng, t.size())];
      for (auto& v : d.vector) v += 0.01f * static_cast<float>(uniform_unit(rng));
      q.push_back(d);
    } else {
      q.push_back(random_descriptor(rng));
    }
  }
  const auto got = match_ratio_test(q, t);
  const auto want = oracle_matches(q, t, 0.7);
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    EXPECT_EQ(got[i].query, want[i].query);
    EXPECT_EQ(got[i].target, want[i].target);
    EXPECT_NEAR(got[i].distance, want[i].distance, 1e-12);
  }

  std::vector<std::size_t> perm(t.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  shuffle(std::span(perm), rng);
  std::vector<Descriptor> tp;
  for (std::size_t i : perm) tp.push_back(t[i]);
  const auto shuffled = match_ratio_test(q, tp);
  ASSERT_EQ(shuffled.size(), got.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(perm[shuffled[i].target], got[i].target);
}

TEST(DescriptorIo, RoundTrip) {
  testing::TempDir dir("desc");
  Rng rng(1);
  std::vector<Descriptor> ds;
  for (int i = 0; i < 7; ++i) ds.push_back(random_descriptor(rng, 1.5f * i, 2.0f));
  write_descriptors(ds, dir / "d.bin");
  const auto back = read_descriptors(dir / "d.bin");
  ASSERT_EQ(back.size(), ds.size());
  EXPECT_EQ(0, std::memcmp(back.data(), ds.data(), ds.size() * sizeof(Descriptor)));
  EXPECT_THROW(read_descriptors(dir / "none.bin"), InputError);
}

}  // namespace
}  // namespace swirseg
