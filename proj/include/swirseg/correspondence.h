#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "swirseg/features.h"
#include "swirseg/robust_estimation.h"
#include "swirseg/vocabulary.h"

namespace swirseg {

struct Correspondence {
  std::size_t query = 0;  // index into the query descriptor list
  Point2 image_pt;        // SWIR image pixel coordinates
  std::size_t world_point = 0;
  double world_x = 0.0;
  double world_y = 0.0;
  double world_z = 0.0;
  double distance = 0.0;  // query to the selected orthophoto descriptor
  // Distances to the two nearest visual words, kept for post-hoc checks.
  double word_distance1 = 0.0;
  double word_distance2 = 0.0;
};

struct SearchBudget {
  std::size_t max_correspondences = 100;
  double ratio = 0.7;
  // Neighborhood extent in orthophoto pixels; 0 means twice the extent of a
  // SWIR half.
  std::size_t neighborhood_width = 0;
  std::size_t neighborhood_height = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Sequential scan over the queries: two nearest words by Euclidean distance
// (ties to the lower word), accepted iff d1 / d2 <= ratio. The world point
// is the point of the nearest word owning the descriptor closest to the
// query. A later query claiming an already-used point replaces it only with
// a strictly smaller distance. Stops once max_correspondences are held.
std::vector<Correspondence> find_correspondences(std::span<const Descriptor> queries,
                                                 const Vocabulary& vocab, const PointCloud& cloud,
                                                 const SearchBudget& budget);

// Pairs ready for robust estimation: SWIR pixel -> DEM pixel (the world
// point's scene x, y converted through the DEM georeference).
std::vector<PointPair> to_point_pairs(std::span<const Correspondence> matches, const DemGrid& dem);

// Registration sanity check: the model must map the SWIR column band
// [col_begin, col_end) x [0, rows) to a convex, orientation-preserving
// quadrilateral whose area is within a factor 4 of the band's area.
bool plausible_footprint(const HomographyModel& model, std::size_t col_begin, std::size_t col_end,
                         std::size_t rows);

// True when all four mapped corners of the column band land inside `region`
// grown by `margin` pixels on every side.
bool footprint_within(const HomographyModel& model, std::size_t col_begin, std::size_t col_end,
                      std::size_t rows, const PixelRegion& region, double margin);

struct NeighborhoodAttempt {
  PixelRegion region;
  std::size_t correspondences = 0;
  std::size_t inliers = 0;
  bool accepted = false;
};

struct HalfMatch {
  std::size_t col_begin = 0;  // SWIR columns covered by this half
  std::size_t col_end = 0;
  bool accepted = false;
  PixelRegion region;  // winning (or best-scoring) neighborhood
  std::vector<Correspondence> correspondences;
  RansacResult ransac;
  std::vector<NeighborhoodAttempt> visits;  // in visit order
  std::size_t query_count = 0;
};

struct SplitSearchResult {
  std::array<HalfMatch, 2> halves;
  bool accepted() const { return halves[0].accepted && halves[1].accepted; }
};

struct SplitSearchOptions {
  SearchBudget budget;
  SiftConfig features;
  RansacConfig ransac;
  bool parallel = true;
  // A neighborhood only wins when the registered half footprint lies inside
  // it, up to this many pixels. Negative disables the check.
  double containment_margin_px = 2.0;
};

// Candidate neighborhoods on a half-overlapping grid covering the ortho.
std::vector<PixelRegion> neighborhood_grid(std::size_t ortho_width, std::size_t ortho_height,
                                           std::size_t width, std::size_t height);

// Searches one SWIR half: neighborhoods are visited in seeded random order
// without replacement until one yields an accepted registration.
HalfMatch search_half(const GrayImage& swir_band, std::size_t col_begin, std::size_t col_end,
                      const Vocabulary& vocab, const PointCloud& cloud, const DemGrid& dem,
                      const SplitSearchOptions& options, std::uint64_t seed);

// Splits the SWIR band vertically into two halves and searches each
// independently (concurrently when options.parallel), with per-half seeds
// derived from `seed`.
SplitSearchResult split_half_search(const GrayImage& swir_band, const Vocabulary& vocab,
                                    const PointCloud& cloud, const DemGrid& dem,
                                    const SplitSearchOptions& options, std::uint64_t seed);

// One line per correspondence:
// {"image_x":..,"image_y":..,"world_x":..,"world_y":..,"world_z":..,"distance":..}
void write_correspondences_jsonl(std::span<const Correspondence> matches,
                                 const std::filesystem::path& path);
std::vector<Correspondence> read_correspondences_jsonl(const std::filesystem::path& path);

}  // namespace swirseg
