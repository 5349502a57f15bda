// Standalone acceptance run. Prints one [PASS]/[FAIL] line per criterion
// and exits non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "swirseg/correspondence.h"
#include "swirseg/evaluation.h"
#include "swirseg/features.h"
#include "swirseg/fusion.h"
#include "swirseg/pipeline.h"
#include "swirseg/random.h"
#include "swirseg/robust_estimation.h"
#include "swirseg/spectral_index.h"
#include "swirseg/synth_scene.h"
#include "swirseg/vocabulary.h"

namespace {

using namespace swirseg;
using Clock = std::chrono::steady_clock;

// Pinned tolerances.
constexpr double kPrecisionTolPp = 0.15;
constexpr double kAccuracyTolPp = 0.05;
constexpr double kOverallTolPp = 0.05;
constexpr double kTableBudgetS = 1.0;
constexpr std::size_t kPipelineSeeds = 10;
constexpr std::size_t kMinAcceptedRuns = 9;
constexpr double kMaxRmsPx = 1.5;
constexpr double kMinOverallAccuracy = 0.95;
constexpr double kPipelineBudgetS = 60.0;
constexpr double kMinSeparation = 0.99;
constexpr double kWetnessBudgetS = 5.0;
constexpr std::size_t kSprtSeeds = 20;
constexpr double kModelMatchPx = 0.5;
constexpr double kMinModelMatchRate = 0.95;
constexpr double kRelTol = 1e-9;
constexpr double kQuadratureTol = 1e-6;

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::printf("[%s] %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool rel_close(double a, double b) { return std::abs(a - b) <= kRelTol * std::max(1.0, std::abs(b)); }

Point2 project(const HomographyModel& h, const Point2& p) {
  const auto& m = h.m;
  const double w = m[6] * p.x + m[7] * p.y + m[8];
  return {(m[0] * p.x + m[1] * p.y + m[2]) / w, (m[3] * p.x + m[4] * p.y + m[5]) / w};
}

Descriptor random_descriptor(Rng& rng, float x = 0, float y = 0) {
  Descriptor d;
  d.keypoint.x = x;
  d.keypoint.y = y;
  double n = 0.0;
  for (auto& v : d.vector) {
    v = static_cast<float>(uniform_unit(rng));
    n += static_cast<double>(v) * v;
  }
  for (auto& v : d.vector) v = static_cast<float>(v / std::sqrt(n));
  return d;
}

double euclid(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------

void table_regression() {
  const auto t0 = Clock::now();
  ConfusionMatrix cm;
  cm.counts = {{{478, 1, 8, 13, 0}, {3, 491, 0, 0, 6}, {54, 0, 446, 0, 0}, {7, 4, 41, 448, 0}, {0, 5, 0, 0, 495}}};
  const ClassMetrics m = metrics(cm);
  const double recall[] = {95.6, 98.2, 89.2, 89.6, 99.0};
  const double precision[] = {88.1, 98.0, 90.1, 97.2, 98.8};
  const double accuracy[] = {96.6, 99.2, 95.9, 97.4, 99.6};
  bool r_ok = true, p_ok = true, a_ok = true;
  double p_worst = 0.0, a_worst = 0.0;
  for (std::size_t c = 0; c < kClassCount; ++c) {
    r_ok = r_ok && m.recall[c] && percent_1dp(*m.recall[c]) == recall[c];
    const double dp = std::abs(100.0 * m.precision[c].value_or(-1) - precision[c]);
    const double da = std::abs(100.0 * m.accuracy[c].value_or(-1) - accuracy[c]);
    p_worst = std::max(p_worst, dp);
    a_worst = std::max(a_worst, da);
    p_ok = p_ok && dp <= kPrecisionTolPp;
    a_ok = a_ok && da <= kAccuracyTolPp;
  }
  const double overall = 100.0 * m.overall_accuracy;
  const double elapsed = seconds_since(t0);
  report(r_ok, "table/recall", "five recalls equal the published values at one decimal");
  report(p_ok, "table/precision", fmt("worst deviation %.3f pp (tolerance 0.15)", p_worst));
  report(a_ok, "table/accuracy", fmt("worst deviation %.3f pp (tolerance 0.05)", a_worst));
  report(std::abs(overall - 97.7) <= kOverallTolPp, "table/overall", fmt("%.4f%% vs 97.7 +- 0.05", overall));
  report(elapsed < kTableBudgetS, "table/runtime", fmt("%.4f s (budget 1 s)", elapsed));
}

// ---------------------------------------------------------------------------

void end_to_end() {
  std::size_t accepted = 0;
  bool rms_ok = true, acc_ok = true, time_ok = true;
  double worst_rms = 0.0, worst_acc = 1.0, worst_time = 0.0;
  for (std::uint64_t seed = 1; seed <= kPipelineSeeds; ++seed) {
    PipelineConfig c;
    c.seed = seed;
    c.scene.seed = seed;
    const auto t0 = Clock::now();
    double rms = 0.0, acc = 0.0;
    bool ok = false;
    try {
      const PipelineResult r = run_pipeline(c);
      const double elapsed = seconds_since(t0);
      worst_time = std::max(worst_time, elapsed);
      time_ok = time_ok && elapsed < kPipelineBudgetS;
      ok = r.registration.accepted();
      const HomographyModel truth = generate_scene(c.scene).truth.transform;
      const std::size_t w = c.scene.swir_width, mid = w / 2, h = c.scene.swir_height;
      rms = std::max(transform_rms(r.models[0], truth, 0, mid, h), transform_rms(r.models[1], truth, mid, w, h));
      acc = r.metrics ? r.metrics->overall_accuracy : 0.0;
    } catch (const std::exception& e) {
      std::printf("       seed %llu threw: %s\n", static_cast<unsigned long long>(seed), e.what());
      worst_time = std::max(worst_time, seconds_since(t0));
    }
    std::printf("       seed %llu: accepted=%d worst-half rms=%.3f px overall accuracy=%.2f%%\n",
                static_cast<unsigned long long>(seed), ok ? 1 : 0, rms, 100.0 * acc);
    if (ok) {
      ++accepted;
      worst_rms = std::max(worst_rms, rms);
      rms_ok = rms_ok && rms <= kMaxRmsPx;
    }
    worst_acc = std::min(worst_acc, acc);
    acc_ok = acc_ok && acc >= kMinOverallAccuracy;
  }
  report(accepted >= kMinAcceptedRuns, "pipeline/registration-accepted",
         std::to_string(accepted) + "/10 seeds accepted (need 9)");
  report(rms_ok, "pipeline/transform-rms", fmt("worst accepted half %.3f px (limit 1.5)", worst_rms));
  report(acc_ok, "pipeline/overall-accuracy", fmt("lowest %.2f%% (need 95)", 100.0 * worst_acc));
  report(time_ok, "pipeline/runtime", fmt("slowest seed %.2f s (budget 60 s)", worst_time));
}

// ---------------------------------------------------------------------------

void wetness_separation() {
  bool ok = true, time_ok = true;
  double worst_veg = 1.0, worst_man = 1.0, worst_time = 0.0;
  for (std::uint64_t seed = 1; seed <= kPipelineSeeds; ++seed) {
    SceneConfig c;
    c.seed = seed;
    const SyntheticScene s = generate_scene(c);
    const auto t0 = Clock::now();
    const WetnessMap m = wetness_map(s.cube);
    const double thr = adaptive_threshold(m);
    std::size_t veg = 0, veg_above = 0, man = 0, man_below = 0;
    for (std::size_t i = 0; i < m.ratios.size(); ++i) {
      const bool above = m.valid[i] && m.ratios[i] >= thr;
      if (is_vegetation(s.truth.materials[i])) {
        ++veg;
        veg_above += above;
      } else {
        ++man;
        man_below += !above;
      }
    }
    const double elapsed = seconds_since(t0);
    worst_time = std::max(worst_time, elapsed);
    time_ok = time_ok && elapsed < kWetnessBudgetS;
    const double fv = veg ? static_cast<double>(veg_above) / veg : 0.0;
    const double fm = man ? static_cast<double>(man_below) / man : 0.0;
    worst_veg = std::min(worst_veg, fv);
    worst_man = std::min(worst_man, fm);
    ok = ok && fv >= kMinSeparation && fm >= kMinSeparation;
  }
  report(ok, "wetness/separation",
         fmt("lowest vegetation-above %.4f", worst_veg) + fmt(", lowest manmade-below %.4f (need 0.99)", worst_man));
  report(time_ok, "wetness/runtime", fmt("slowest scene %.3f s (budget 5 s)", worst_time));
}

// ---------------------------------------------------------------------------

struct Planted {
  HomographyModel truth;
  std::vector<PointPair> pairs;
  std::vector<bool> inlier;
};

Planted planted(std::uint64_t seed, std::size_t n, double outlier_fraction) {
  Rng rng(seed);
  auto u = [&](double lo, double hi) { return lo + (hi - lo) * uniform_unit(rng); };
  Planted p;
  const double a = u(-0.3, 0.3), s = u(0.8, 1.2);
  p.truth = HomographyModel{{s * std::cos(a), -s * std::sin(a), u(-20, 20), s * std::sin(a), s * std::cos(a),
                             u(-20, 20), u(-1e-4, 1e-4), u(-1e-4, 1e-4), 1.0}};
  const auto outliers = static_cast<std::size_t>(std::lround(outlier_fraction * static_cast<double>(n)));
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 src{u(0, 100), u(0, 100)};
    if (i < outliers) {
      p.pairs.push_back({src, {u(-20, 120), u(-20, 120)}});
      p.inlier.push_back(false);
    } else {
      p.pairs.push_back({src, project(p.truth, src)});
      p.inlier.push_back(true);
    }
  }
  // Interleave so outliers are not all at the front of the verification order.
  Rng order(seed ^ 0x5eed);
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  shuffle(std::span(idx), order);
  Planted q{p.truth, {}, {}};
  for (std::size_t i : idx) {
    q.pairs.push_back(p.pairs[i]);
    q.inlier.push_back(p.inlier[i]);
  }
  return q;
}

double model_error(const HomographyModel& h, const Planted& p) {
  double worst = 0.0;
  for (std::size_t i = 0; i < p.pairs.size(); ++i) {
    if (!p.inlier[i]) continue;
    const Point2 a = project(h, p.pairs[i].source), b = project(p.truth, p.pairs[i].source);
    worst = std::max(worst, std::hypot(a.x - b.x, a.y - b.y));
  }
  return worst;
}

void sprt_property() {
  for (double frac : {0.3, 0.5, 0.7}) {
    std::size_t on_points = 0, off_points = 0, matched = 0, trials = 0;
    for (std::uint64_t s = 1; s <= kSprtSeeds; ++s) {
      const Planted p = planted(1000 * static_cast<std::uint64_t>(frac * 10) + s, 100, frac);
      RansacConfig on;
      on.seed = s;
      on.tolerance_px = 1.0;
      RansacConfig off = on;
      off.sprt = false;
      const RansacResult a = ransac_sprt(p.pairs, on);
      const RansacResult b = ransac_sprt(p.pairs, off);
      on_points += a.points_evaluated;
      off_points += b.points_evaluated;
      trials += 2;
      matched += (a.accepted && model_error(a.model, p) <= kModelMatchPx);
      matched += (b.accepted && model_error(b.model, p) <= kModelMatchPx);
    }
    const std::string tag = std::to_string(static_cast<int>(std::lround(frac * 100)));
    report(on_points < off_points, "sprt/points-evaluated-" + tag + "pct",
           "on " + std::to_string(on_points) + " vs off " + std::to_string(off_points) + " over 20 seeds");
    const double rate = static_cast<double>(matched) / static_cast<double>(trials);
    report(rate >= kMinModelMatchRate, "sprt/model-within-0.5px-" + tag + "pct",
           fmt("%.3f of trials (need 0.95)", rate));
  }
}

// ---------------------------------------------------------------------------

std::vector<Correspondence> triple_scan(const std::vector<Descriptor>& queries, const Vocabulary& vocab,
                                        const PointCloud& cloud, std::size_t cap, double ratio) {
  std::vector<Correspondence> out;
  std::map<std::size_t, std::size_t> slot;
  for (std::size_t q = 0; q < queries.size() && out.size() < cap; ++q) {
    std::vector<std::pair<double, std::size_t>> words;
    for (std::size_t w = 0; w < vocab.size(); ++w) words.push_back({euclid(queries[q].vector, vocab.centroids[w]), w});
    std::stable_sort(words.begin(), words.end(), [](auto& a, auto& b) { return a.first < b.first; });
    if (!(words[1].first > 0.0 && words[0].first / words[1].first <= ratio)) continue;
    std::vector<std::tuple<double, std::size_t, std::size_t>> cands;
    std::size_t rank = 0;
    for (std::size_t p : vocab.word_points[words[0].second])
      for (std::size_t id : cloud.points[p].descriptor_ids)
        cands.push_back({euclid(queries[q].vector, cloud.descriptors[id].vector), rank++, p});
    if (cands.empty()) continue;
    std::sort(cands.begin(), cands.end());
    const auto [d, r, p] = cands.front();
    Correspondence c;
    c.query = q;
    c.world_point = p;
    c.distance = d;
    if (auto it = slot.find(p); it != slot.end()) {
      if (d < out[it->second].distance) out[it->second] = c;
      continue;
    }
    slot[p] = out.size();
    out.push_back(c);
  }
  return out;
}

DemGrid flat_dem(std::size_t w, std::size_t h) {
  DemGrid dem;
  dem.width = w;
  dem.height = h;
  dem.elevations.assign(w * h, 50.0f);
  return dem;
}

void oracles() {
  {
    bool ok = true;
    std::size_t instances = 0, compared = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      Rng rng(seed);
      const DemGrid dem = flat_dem(40, 40);
      std::vector<Descriptor> ortho;
      for (int i = 0; i < 200; ++i) {
        ortho.push_back(random_descriptor(rng, static_cast<float>(uniform_index(rng, 40)),
                                          static_cast<float>(uniform_index(rng, 40))));
      }
      const PointCloud cloud = lift_to_3d(ortho, dem);
      const Vocabulary vocab = build_vocabulary(cloud, KMeansConfig{16, seed, 50});
      std::vector<Descriptor> queries;
      for (int i = 0; i < 150; ++i) {
        Descriptor d = (i % 4 == 0) ? random_descriptor(rng)
                                    : cloud.descriptors[uniform_index(rng, cloud.descriptors.size())];
        for (auto& v : d.vector) v += static_cast<float>(0.01 * uniform_unit(rng));
        queries.push_back(d);
      }
      for (double ratio : {0.7, 0.9}) {
        SearchBudget b;
        b.ratio = ratio;
        b.max_correspondences = 5 + 5 * seed;
        const auto got = find_correspondences(queries, vocab, cloud, b);
        const auto want = triple_scan(queries, vocab, cloud, b.max_correspondences, ratio);
        ++instances;
        compared += want.size();
        ok = ok && got.size() == want.size();
        for (std::size_t i = 0; ok && i < got.size(); ++i) {
          ok = got[i].query == want[i].query && got[i].world_point == want[i].world_point &&
               rel_close(got[i].distance, want[i].distance);
        }
      }
    }
    report(ok, "oracle/correspondence-triple-scan", std::to_string(instances) + " instances of 200 descriptors, " + std::to_string(compared) + " correspondences compared");
  }
  {
    bool ok = true;
    std::size_t steps = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      Rng rng(seed);
      std::vector<DescriptorVector> v;
      for (int i = 0; i < 400; ++i) v.push_back(random_descriptor(rng).vector);
      const KMeansResult r = kmeans(v, KMeansConfig{20, seed, 50});
      for (std::size_t i = 1; i < r.objective_history.size(); ++i, ++steps) {
        ok = ok && r.objective_history[i] <= r.objective_history[i - 1];
      }
    }
    report(ok, "oracle/kmeans-monotone", std::to_string(steps) + " iterations checked over 10 seeds");
  }
  {
    bool ok = true;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      DemGrid dem = flat_dem(64, 64);
      Rng rng(seed);
      for (auto& e : dem.elevations) e = static_cast<float>(80.0 + 40.0 * uniform_unit(rng));
      for (double window : {3.0, 9.0, 21.0, 64.0}) {
        long side = std::lround(std::max(3.0, std::round(window / dem.pixel_size)));
        if (side % 2 == 0) ++side;
        const long r = side / 2;
        const auto got = height_above_ground(dem, window);
        for (long y = 0; y < 64 && ok; ++y)
          for (long x = 0; x < 64 && ok; ++x) {
            float m = dem.elevations[static_cast<std::size_t>(y * 64 + x)];
            for (long yy = std::max(0L, y - r); yy <= std::min(63L, y + r); ++yy)
              for (long xx = std::max(0L, x - r); xx <= std::min(63L, x + r); ++xx)
                m = std::min(m, dem.elevations[static_cast<std::size_t>(yy * 64 + xx)]);
            const float want = std::max(0.0f, dem.elevations[static_cast<std::size_t>(y * 64 + x)] - m);
            ok = got[static_cast<std::size_t>(y * 64 + x)] == want;
          }
      }
    }
    report(ok, "oracle/height-above-ground", "bitwise equal to brute-force window minimum on 64x64 grids");
  }
  {
    bool ok = true;
    Rng rng(2718);
    std::vector<double> wl;
    for (std::size_t i = 0; i < 260; ++i) wl.push_back(0.9 + 1.6 * static_cast<double>(i) / 259.0);
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<float> d(wl.size());
      for (auto& x : d) x = static_cast<float>(0.01 + uniform_unit(rng));
      double num = 0.0, den = 0.0;
      for (std::size_t j = 0; j < wl.size(); ++j) {
        if (wl[j] >= 1.55 && wl[j] <= 1.75) num += d[j];
        if (wl[j] >= 2.09 && wl[j] <= 2.35) den += d[j];
      }
      const auto got = wetness_index(d, wl);
      ok = ok && got && rel_close(*got, num / den);
    }
    report(ok, "oracle/wetness-direct-sum", "1000 random 260-band spectra within 1e-9 relative");
  }
}

// ---------------------------------------------------------------------------

void invariants() {
  {
    bool ok = true;
    Rng rng(31);
    std::vector<Descriptor> q, t;
    for (int i = 0; i < 150; ++i) q.push_back(random_descriptor(rng));
    for (int i = 0; i < 120; ++i) t.push_back(random_descriptor(rng));
    for (int i = 0; i < 40; ++i) q[static_cast<std::size_t>(i)] = t[static_cast<std::size_t>(3 * i)];
    const double ratio = 0.7;
    const auto matches = match_ratio_test(q, t, ratio);
    std::vector<int> emitted(q.size(), -1);
    for (const auto& m : matches) emitted[m.query] = static_cast<int>(m.target);
    for (std::size_t i = 0; i < q.size(); ++i) {
      double d1 = 1e300, d2 = 1e300;
      std::size_t best = 0;
      for (std::size_t j = 0; j < t.size(); ++j) {
        const double d = euclid(q[i].vector, t[j].vector);
        if (d < d1) {
          d2 = d1;
          d1 = d;
          best = j;
        } else if (d < d2) {
          d2 = d;
        }
      }
      const bool pass = d2 > 0.0 && d1 / d2 <= ratio;
      ok = ok && (pass == (emitted[i] >= 0)) && (!pass || emitted[i] == static_cast<int>(best));
    }
    report(ok, "invariant/ratio-test-reverified", std::to_string(matches.size()) + " emitted pairs, all queries rechecked");
  }
  {
    bool ok = true;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
      const Planted p = planted(seed, 4, 0.0);
      const HomographyModel h = fit_homography_dlt(p.pairs);
      for (const auto& pr : p.pairs) {
        const Point2 a = project(h, pr.source);
        ok = ok && std::hypot(a.x - pr.target.x, a.y - pr.target.y) <= kRelTol * std::max(1.0, std::hypot(pr.target.x, pr.target.y));
      }
    }
    report(ok, "invariant/dlt-four-points", "50 random homographies reproduced to 1e-9");
  }
  {
    boost::math::quadrature::tanh_sinh<double> integrator;
    double worst = 0.0;
    for (double a : {0.5, 1.0, 2.0, 5.0})
      for (double b : {0.5, 1.0, 2.0, 5.0})
        worst = std::max(worst, std::abs(integrator.integrate([&](double x) { return beta_pdf(x, {a, b}); }, 0.0, 1.0) - 1.0));
    report(worst <= kQuadratureTol, "invariant/beta-pdf-quadrature", fmt("worst |integral - 1| = %.2e", worst));
  }
  {
    bool ok = true;
    const RuleThresholds t;
    for (int ri = 0; ri <= 40; ++ri) {
      const double r = 0.5 + 0.025 * ri;
      int prev = -1;
      for (int hi = 0; hi <= 60; ++hi) {
        const double h = 0.25 * hi;
        const SegmentLabel l = classify_pixel(r, true, h, t);
        const bool wet = r >= t.wet_threshold;
        SegmentLabel want;
        if (wet) {
          want = h >= t.canopy ? SegmentLabel::kTree : SegmentLabel::kGrass;
        } else {
          want = h >= t.elev_high ? SegmentLabel::kBuilding : h >= t.elev_low ? SegmentLabel::kHouse : SegmentLabel::kRoadOther;
        }
        const int rank = (l == SegmentLabel::kTree || l == SegmentLabel::kBuilding) ? 2 : l == SegmentLabel::kHouse ? 1 : 0;
        ok = ok && l == want && rank >= prev;
        prev = rank;
      }
      ok = ok && classify_pixel(r, false, 10.0, t) == SegmentLabel::kBuilding;
    }
    report(ok, "invariant/classify-grid", "41 x 61 grid partitions and is monotone in height");
  }
  {
    bool ok = true;
    SceneConfig sc;
    sc.seed = 6;
    const SyntheticScene a = generate_scene(sc), b = generate_scene(sc);
    ok = ok && a.cube.values() == b.cube.values() && a.dem.elevations == b.dem.elevations &&
         a.truth.transform.m == b.truth.transform.m;
    Rng rng(4);
    std::vector<DescriptorVector> v;
    for (int i = 0; i < 200; ++i) v.push_back(random_descriptor(rng).vector);
    const KMeansResult k1 = kmeans(v, KMeansConfig{10, 3, 50}), k2 = kmeans(v, KMeansConfig{10, 3, 50});
    ok = ok && k1.centroids == k2.centroids && k1.assignments == k2.assignments;
    const Planted p = planted(8, 60, 0.4);
    RansacConfig rc;
    rc.seed = 12;
    const RansacResult r1 = ransac_sprt(p.pairs, rc), r2 = ransac_sprt(p.pairs, rc);
    ok = ok && r1.model.m == r2.model.m && r1.inlier_ids == r2.inlier_ids;
    const auto d1 = detect_and_describe(a.ortho), d2 = detect_and_describe(a.ortho);
    ok = ok && d1.size() == d2.size();
    for (std::size_t i = 0; ok && i < d1.size(); ++i) ok = d1[i].vector == d2[i].vector;
    PipelineConfig pc;
    pc.seed = 6;
    pc.scene.seed = 6;
    const PipelineResult x = run_pipeline(pc), y = run_pipeline(pc);
    ok = ok && x.report.dump() == y.report.dump() && x.segmentation.labels == y.segmentation.labels;
    const auto s1 = sample_library(x.segmentation, x.fused, 20, 77), s2 = sample_library(x.segmentation, x.fused, 20, 77);
    ok = ok && s1.size() == s2.size();
    for (std::size_t i = 0; ok && i < s1.size(); ++i) ok = s1[i].pixel == s2[i].pixel;
    report(ok, "invariant/determinism", "scene, features, k-means, RANSAC, sampling and full pipeline repeat exactly");
  }
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  try {
    table_regression();
    end_to_end();
    wetness_separation();
    sprt_property();
    oracles();
    invariants();
  } catch (const std::exception& e) {
    report(false, "acceptance/harness", std::string("unexpected exception: ") + e.what());
  }
  std::printf("%d failing criteria, %.1f s total\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
