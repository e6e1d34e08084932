#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "rdq/quant_bounds.hpp"
#include "rdq/space.hpp"

namespace rdq {

struct Codebook {
  std::vector<Point> points;
  int n() const { return static_cast<int>(points.size()); }
};

struct DistortionEstimate {
  double mean = 0.0;
  double ci_halfwidth = 0.0;  // one sigma
  long long samples = 0;
};

// Source law on the space; an empty function means the reference measure.
using SourceSampler = std::function<Point(RngStream&)>;

// Monte Carlo mean of min_i rho(X, y_i). Ties go to the lowest index. Sample
// batches run on streams (seed, stream_base + batch) and fold in batch order,
// so results are bit-identical for any worker count.
DistortionEstimate nearest_distortion(const Codebook& book,
                                      const SpaceModel& space,
                                      const SourceSampler& source,
                                      long long samples, std::uint64_t seed,
                                      int workers = 1,
                                      std::uint64_t stream_base = 0);

// Average nearest-codeword distortion over trials codebooks of n i.i.d.
// codewords drawn from codeword_measure. Expectation is bounded by U_n when
// the codeword law is superregular.
DistortionEstimate random_codebook_estimate(const SpaceModel& space,
                                            const SourceSampler& source,
                                            const SourceSampler& codeword_measure,
                                            int n, int trials,
                                            long long samples_per_trial,
                                            std::uint64_t seed, int workers = 1);

struct LloydResult {
  Codebook book;
  // Estimated distortion of the codebook entering each iteration.
  std::vector<double> trace;
  bool collapsed = false;  // an empty cell dropped the cardinality
};

// Batched Lloyd iterations: assign to nearest codeword, fold per-cell
// centroid statistics, re-project. Empty cells are dropped.
LloydResult lloyd_refine(const Codebook& init, const SpaceModel& space,
                         const SourceSampler& source, int iterations,
                         long long samples_per_iteration, std::uint64_t seed,
                         int workers = 1, std::uint64_t stream_base = 0);

// Achievable-distortion estimate of the n-th quantization error: screens
// random codebooks and the space's designed construction on a quarter of the
// budget, spends the rest refining the winner with Lloyd iterations and
// scoring the finalists on fresh streams. Upper-biased by construction.
DistortionEstimate vn_estimate(const SpaceModel& space,
                               const SourceSampler& source, int n,
                               long long budget, std::uint64_t seed,
                               int workers = 1);

struct BoundRow {
  std::string space_id;
  double n = 1.0;
  double ln = std::numeric_limits<double>::quiet_NaN();
  double un = std::numeric_limits<double>::quiet_NaN();
  double v_hat = std::numeric_limits<double>::quiet_NaN();
  double v_ci = 0.0;
  double scaled_l = std::numeric_limits<double>::quiet_NaN();
  double scaled_u = std::numeric_limits<double>::quiet_NaN();
  double scaled_v = std::numeric_limits<double>::quiet_NaN();
  bool pass = false;
};

struct BoundReport {
  std::vector<BoundRow> rows;
  bool all_pass = true;
};

// Analytic bound curves for spaces whose L_n / U_n do not come from a plain
// certificate pair: bounds(n) returns (L_n, U_n) with NaN for a missing side,
// and finite scale_exponent e > 0 enables the n^e scaled columns.
struct BoundCurves {
  std::function<std::pair<double, double>(double)> bounds;
  double scale_exponent = std::numeric_limits<double>::quiet_NaN();
};

// Per n in n_list: analytic L_n / U_n from the curves, an empirical V-hat
// (or vn_override(n) with zero CI when provided, e.g. an exact formula),
// scaled columns, and a pass flag requiring L_n <= V + 3 sigma and
// V - 3 sigma <= U_n on whichever sides are present. Rows with no bound at
// all fail. The MC budget is split evenly across rows; budget 0 without an
// override skips the empirical column and passes rows on L_n <= U_n alone.
BoundReport sandwich_report(const SpaceModel& space, const SourceSampler& source,
                            const BoundCurves& curves,
                            const std::vector<double>& n_list, long long budget,
                            std::uint64_t seed, int workers = 1,
                            const std::function<double(double)>& vn_override = {});

// Certificate-driven variant: L_n / U_n evaluate the certificates in base
// (its n field is overridden row by row) and the scale exponent is k/m of
// the sub certificate (super when no sub side exists).
BoundReport sandwich_report(const SpaceModel& space, const SourceSampler& source,
                            const QuantQuery& base,
                            const std::vector<double>& n_list, long long budget,
                            std::uint64_t seed, int workers = 1,
                            const std::function<double(double)>& vn_override = {});

// Fixed 10-column layout; all reals rendered with %.17g (missing values as
// nan). The JSON mirror carries the same fields with null for missing.
std::string report_to_csv(const BoundReport& report);
std::string report_to_json(const BoundReport& report);

}  // namespace rdq
