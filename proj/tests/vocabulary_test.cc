#include "swirseg/vocabulary.h"

#include <algorithm>
#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "swirseg/error.h"
#include "swirseg/synth_scene.h"
#include "test_support.h"

namespace swirseg {
namespace {

using testing::random_descriptor;

DemGrid ramp_dem(std::size_t w, std::size_t h) {
  DemGrid dem;
  dem.width = w;
  dem.height = h;
  dem.origin_x = 500.0;
  dem.origin_y = 700.0;
  dem.pixel_size = 2.0;
  for (std::size_t i = 0; i < w * h; ++i) dem.elevations.push_back(10.0f + static_cast<float>(i));
  return dem;
}

std::vector<DescriptorVector> vectors_of(const std::vector<Descriptor>& ds) {
  std::vector<DescriptorVector> v;
  for (const auto& d : ds) v.push_back(d.vector);
  return v;
}

TEST(Lift, AggregatesPerPixelAndReadsElevation) {
  const DemGrid dem = ramp_dem(8, 6);
  Rng rng(1);
  std::vector<Descriptor> ds{random_descriptor(rng, 3.2f, 2.1f), random_descriptor(rng, 2.8f, 1.9f),
                             random_descriptor(rng, 5.0f, 4.0f), random_descriptor(rng, 40.0f, 1.0f)};
  const PointCloud cloud = lift_to_3d(ds, dem);
  ASSERT_EQ(cloud.points.size(), 2u);
  EXPECT_EQ(cloud.dropped, 1u);
  const Point3D& a = cloud.points[0];
  EXPECT_EQ(a.col, 3u);
  EXPECT_EQ(a.row, 2u);
  EXPECT_EQ(a.descriptor_ids.size(), 2u);
  EXPECT_DOUBLE_EQ(a.z, dem.at(3, 2));
  EXPECT_DOUBLE_EQ(a.x, 500.0 + 3 * 2.0);
  EXPECT_DOUBLE_EQ(a.y, 700.0 + 2 * 2.0);
  EXPECT_DOUBLE_EQ(cloud.points[1].z, dem.at(5, 4));
}

TEST(Lift, SyntheticSceneSurfaceReadExactly) {
  SceneConfig c;
  c.seed = 4;
  const SyntheticScene s = generate_scene(c);
  std::vector<double> wide(s.ortho.pixels.begin(), s.ortho.pixels.end());
  GrayImage o = s.ortho;
  o.pixels = normalize_unit(wide);
  const PointCloud cloud = lift_to_3d(detect_and_describe(o), s.dem);
  ASSERT_FALSE(cloud.points.empty());
  for (const auto& p : cloud.points) {
    EXPECT_EQ(p.z, static_cast<double>(s.dem.at(p.col, p.row)));
    const Point2 scene = s.dem.pixel_to_scene(static_cast<double>(p.col), static_cast<double>(p.row));
    EXPECT_EQ(p.x, scene.x);
    EXPECT_EQ(p.y, scene.y);
  }
}

TEST(KMeans, TrivialCases) {
  Rng rng(5);
  std::vector<Descriptor> ds;
  for (int i = 0; i < 9; ++i) ds.push_back(random_descriptor(rng));
  const auto v = vectors_of(ds);

  KMeansConfig all{9, 3, 50};
  const KMeansResult r = kmeans(v, all);
  EXPECT_NEAR(r.objective_history.back(), 0.0, 1e-12);
  std::vector<std::size_t> a = r.assignments;
  std::sort(a.begin(), a.end());
  EXPECT_EQ(std::unique(a.begin(), a.end()), a.end());

  const KMeansResult one = kmeans(v, KMeansConfig{1, 3, 50});
  for (std::size_t k = 0; k < kDescriptorDim; ++k) {
    double mean = 0.0;
    for (const auto& x : v) mean += x[k];
    EXPECT_NEAR(one.centroids[0][k], mean / 9.0, 1e-6);
  }

  EXPECT_THROW(kmeans(v, KMeansConfig{0, 1, 50}), ValidationError);
  EXPECT_THROW(kmeans(v, KMeansConfig{10, 1, 50}), ValidationError);
}

TEST(KMeans, SeparatedBlobsRecovered) {
  const double sigma = 0.02;
  Rng rng(31);
  DescriptorVector m0{}, m1{};
  for (std::size_t k = 0; k < kDescriptorDim; ++k) m0[k] = 0.3f;
  m1 = m0;
  m1[0] += static_cast<float>(10.0 * sigma);
  std::vector<DescriptorVector> v;
  std::vector<int> truth;
  const double per_axis = sigma / std::sqrt(static_cast<double>(kDescriptorDim));
  for (int i = 0; i < 200; ++i) {
    DescriptorVector x = (i % 2) ? m1 : m0;
    for (auto& c : x) c += static_cast<float>(per_axis * standard_normal(rng));
    v.push_back(x);
    truth.push_back(i % 2);
  }
  const KMeansResult r = kmeans(v, KMeansConfig{2, 17, 50});
  EXPECT_TRUE(r.converged);
  for (int t = 0; t < 2; ++t) {
    const DescriptorVector& m = t ? m1 : m0;
    double best = 1e9;
    for (const auto& c : r.centroids) best = std::min(best, std::sqrt(squared_distance(c, m)));
    EXPECT_LT(best, 0.5 * sigma);
  }
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(r.assignments[i] == r.assignments[0], truth[i] == truth[0]);
}

TEST(KMeans, ObjectiveMonotoneAndAssignmentsNearest) {
  Rng rng(8);
  std::vector<Descriptor> ds;
  for (int i = 0; i < 300; ++i) ds.push_back(random_descriptor(rng));
  const auto v = vectors_of(ds);
  const KMeansResult r = kmeans(v, KMeansConfig{12, 4, 50});
  for (std::size_t i = 1; i < r.objective_history.size(); ++i) {
    EXPECT_LE(r.objective_history[i], r.objective_history[i - 1]);
  }
  EXPECT_NEAR(r.objective_history.back(), within_cluster_sum_of_squares(v, r.centroids, r.assignments), 1e-9);
  if (r.converged) {
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(r.assignments[i], nearest_centroid(v[i], r.centroids));
  }
}

TEST(KMeans, DeterministicAndPermutationStable) {
  Rng rng(13);
  std::vector<DescriptorVector> v;
  // Four tight groups so the partition itself is unambiguous.
  for (int g = 0; g < 4; ++g) {
    DescriptorVector c{};
    c[static_cast<std::size_t>(g)] = 1.0f;
    for (int i = 0; i < 25; ++i) {
      DescriptorVector x = c;
      for (auto& e : x) e += static_cast<float>(0.01 * uniform_unit(rng));
      v.push_back(x);
    }
  }
  const KMeansConfig cfg{4, 99, 50};
  const KMeansResult a = kmeans(v, cfg);
  const KMeansResult b = kmeans(v, cfg);
  EXPECT_EQ(a.assignments, b.assignments);
  EXPECT_EQ(a.centroids, b.centroids);

  std::vector<std::size_t> perm(v.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  shuffle(std::span(perm), rng);
  std::vector<DescriptorVector> pv;
  for (std::size_t i : perm) pv.push_back(v[i]);
  const KMeansResult p = kmeans(pv, cfg);

  // Relabel both runs by lexicographic centroid order, then compare per vector.
  auto canonical = [](const KMeansResult& r) {
    std::vector<std::size_t> order(r.centroids.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return r.centroids[x] > r.centroids[y]; });
    std::vector<std::size_t> rank(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = i;
    return rank;
  };
  const auto ra = canonical(a), rp = canonical(p);
  for (std::size_t i = 0; i < perm.size(); ++i) EXPECT_EQ(rp[p.assignments[i]], ra[a.assignments[perm[i]]]);
}

TEST(Vocabulary, WordsCoverRetainedPointsAndRestrict) {
  const DemGrid dem = ramp_dem(20, 20);
  Rng rng(2);
  std::vector<Descriptor> ds;
  for (int i = 0; i < 60; ++i) {
    ds.push_back(random_descriptor(rng, static_cast<float>(uniform_index(rng, 20)),
                                   static_cast<float>(uniform_index(rng, 20))));
  }
  const PointCloud cloud = lift_to_3d(ds, dem);
  const Vocabulary vocab = build_vocabulary(cloud, KMeansConfig{8, 1, 50});
  ASSERT_EQ(vocab.size(), 8u);
  std::vector<int> seen(cloud.points.size(), 0);
  for (const auto& wp : vocab.word_points)
    for (std::size_t p : wp) seen[p] = 1;
  for (int s : seen) EXPECT_EQ(s, 1);
  // Each descriptor's word is its nearest centroid, so its point is listed there.
  for (std::size_t p = 0; p < cloud.points.size(); ++p) {
    for (std::size_t id : cloud.points[p].descriptor_ids) {
      const std::size_t w = nearest_centroid(cloud.descriptors[id].vector, vocab.centroids);
      EXPECT_NE(std::find(vocab.word_points[w].begin(), vocab.word_points[w].end(), p), vocab.word_points[w].end());
    }
  }

  const PixelRegion region{0, 0, 10, 10};
  const Vocabulary local = restrict_vocabulary(vocab, cloud, region);
  EXPECT_LE(local.size(), vocab.size());
  for (const auto& wp : local.word_points) {
    EXPECT_FALSE(wp.empty());
    for (std::size_t p : wp) EXPECT_TRUE(region.contains(cloud.points[p].col, cloud.points[p].row));
  }
}

TEST(Vocabulary, PersistenceRoundTrip) {
  testing::TempDir dir("vocab");
  const DemGrid dem = ramp_dem(16, 16);
  Rng rng(6);
  std::vector<Descriptor> ds;
  for (int i = 0; i < 30; ++i) {
    ds.push_back(random_descriptor(rng, static_cast<float>(uniform_index(rng, 16)),
                                   static_cast<float>(uniform_index(rng, 16))));
  }
  const PointCloud cloud = lift_to_3d(ds, dem);
  const Vocabulary vocab = build_vocabulary(cloud, KMeansConfig{5, 2, 50});
  write_vocabulary(vocab, cloud, dir / "v.bin", dir / "v.json");
  const auto [v2, c2] = read_vocabulary(dir / "v.bin", dir / "v.json", cloud.descriptors);
  EXPECT_EQ(v2.centroids, vocab.centroids);
  EXPECT_EQ(v2.word_points, vocab.word_points);
  ASSERT_EQ(c2.points.size(), cloud.points.size());
  for (std::size_t i = 0; i < c2.points.size(); ++i) {
    EXPECT_EQ(c2.points[i].descriptor_ids, cloud.points[i].descriptor_ids);
    EXPECT_EQ(c2.points[i].z, cloud.points[i].z);
  }
  EXPECT_THROW(read_vocabulary(dir / "none.bin", dir / "v.json", cloud.descriptors), InputError);
}

}  // namespace
}  // namespace swirseg
