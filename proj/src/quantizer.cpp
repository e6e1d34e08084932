#include "rdq/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "rdq/parallel.hpp"
#include "rdq/stats.hpp"

namespace rdq {

namespace {

constexpr long long kBatch = 8192;

// Stream-id layout: phase tag in the high bits, a sub-index (trial, candidate
// or iteration) in bits 32..43, the batch index below. Every Monte Carlo draw
// in the engine runs on one of these streams, so a (seed, config) pair fixes
// the byte-exact output.
std::uint64_t stream_id(std::uint64_t phase, std::uint64_t sub,
                        std::uint64_t batch) {
  return (phase << 44) | (sub << 32) | batch;
}

Point draw(const SourceSampler& source, const SpaceModel& space,
           RngStream& rng) {
  return source ? source(rng) : space.sample_reference(rng);
}

std::size_t nearest_index(const std::vector<Point>& points,
                          const SpaceModel& space, const Point& x,
                          double* best_out) {
  std::size_t best = 0;
  double best_d = space.distortion(x, points[0]);
  for (std::size_t j = 1; j < points.size(); ++j) {
    double d = space.distortion(x, points[j]);
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  if (best_out) *best_out = best_d;
  return best;
}

RunningStat nearest_stat(const Codebook& book, const SpaceModel& space,
                         const SourceSampler& source, long long samples,
                         std::uint64_t seed, int workers,
                         std::uint64_t stream_base) {
  const std::size_t batches =
      static_cast<std::size_t>((samples + kBatch - 1) / kBatch);
  std::vector<RunningStat> stats(batches);
  parallel_for(batches, workers, [&](std::size_t b) {
    RngStream rng(seed, stream_base + b);
    long long lo = static_cast<long long>(b) * kBatch;
    long long hi = std::min(samples, lo + kBatch);
    RunningStat local;
    for (long long i = lo; i < hi; ++i) {
      Point x = draw(source, space, rng);
      double best = 0.0;
      nearest_index(book.points, space, x, &best);
      local.add(best);
    }
    stats[b] = local;
  });
  RunningStat total;
  for (const auto& s : stats) total.merge(s);
  return total;
}

std::string fmt_real(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json json_real(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

}  // namespace

DistortionEstimate nearest_distortion(const Codebook& book,
                                      const SpaceModel& space,
                                      const SourceSampler& source,
                                      long long samples, std::uint64_t seed,
                                      int workers, std::uint64_t stream_base) {
  if (book.points.empty())
    throw std::invalid_argument("nearest_distortion: empty codebook");
  if (samples < 1)
    throw std::domain_error("nearest_distortion: samples must be >= 1");
  RunningStat total =
      nearest_stat(book, space, source, samples, seed, workers, stream_base);
  return {total.mean(), total.se(), static_cast<long long>(total.count())};
}

DistortionEstimate random_codebook_estimate(const SpaceModel& space,
                                            const SourceSampler& source,
                                            const SourceSampler& codeword_measure,
                                            int n, int trials,
                                            long long samples_per_trial,
                                            std::uint64_t seed, int workers) {
  if (n < 1) throw std::domain_error("random_codebook_estimate: n must be >= 1");
  if (trials < 1)
    throw std::domain_error("random_codebook_estimate: trials must be >= 1");
  if (samples_per_trial < 1)
    throw std::domain_error("random_codebook_estimate: samples must be >= 1");
  // Pooling the raw per-sample statistics makes the variance reflect both the
  // sample noise and the codebook-to-codebook spread.
  RunningStat pooled;
  for (int t = 0; t < trials; ++t) {
    RngStream draw_rng(seed, stream_id(1, static_cast<std::uint64_t>(t), 0));
    Codebook book;
    book.points.reserve(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j)
      book.points.push_back(draw(codeword_measure, space, draw_rng));
    pooled.merge(nearest_stat(book, space, source, samples_per_trial, seed,
                              workers,
                              stream_id(2, static_cast<std::uint64_t>(t), 0)));
  }
  return {pooled.mean(), pooled.se(), static_cast<long long>(pooled.count())};
}

LloydResult lloyd_refine(const Codebook& init, const SpaceModel& space,
                         const SourceSampler& source, int iterations,
                         long long samples_per_iteration, std::uint64_t seed,
                         int workers, std::uint64_t stream_base) {
  if (init.points.empty())
    throw std::invalid_argument("lloyd_refine: empty codebook");
  if (iterations < 1)
    throw std::domain_error("lloyd_refine: iterations must be >= 1");
  if (samples_per_iteration < 1)
    throw std::domain_error("lloyd_refine: samples must be >= 1");

  const int acc_dim = space.centroid_accumulator_dim();
  LloydResult result;
  result.book = init;
  for (int iter = 0; iter < iterations; ++iter) {
    const std::size_t ncur = result.book.points.size();
    const std::size_t batches = static_cast<std::size_t>(
        (samples_per_iteration + kBatch - 1) / kBatch);
    struct BatchOut {
      Eigen::MatrixXd acc;
      Eigen::VectorXd counts;
      RunningStat stat;
    };
    std::vector<BatchOut> outs(batches);
    parallel_for(batches, workers, [&](std::size_t b) {
      RngStream rng(seed, stream_base +
                              stream_id(0, static_cast<std::uint64_t>(iter), b));
      BatchOut out;
      out.acc = Eigen::MatrixXd::Zero(acc_dim, static_cast<Eigen::Index>(ncur));
      out.counts = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ncur));
      long long lo = static_cast<long long>(b) * kBatch;
      long long hi = std::min(samples_per_iteration, lo + kBatch);
      for (long long i = lo; i < hi; ++i) {
        Point x = draw(source, space, rng);
        double best = 0.0;
        std::size_t j = nearest_index(result.book.points, space, x, &best);
        space.centroid_accumulate(x, 1.0,
                                  out.acc.col(static_cast<Eigen::Index>(j)));
        out.counts[static_cast<Eigen::Index>(j)] += 1.0;
        out.stat.add(best);
      }
      outs[b] = std::move(out);
    });
    Eigen::MatrixXd acc =
        Eigen::MatrixXd::Zero(acc_dim, static_cast<Eigen::Index>(ncur));
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ncur));
    RunningStat stat;
    for (const auto& out : outs) {
      acc += out.acc;
      counts += out.counts;
      stat.merge(out.stat);
    }
    result.trace.push_back(stat.mean());
    std::vector<Point> updated;
    updated.reserve(ncur);
    for (std::size_t j = 0; j < ncur; ++j) {
      double w = counts[static_cast<Eigen::Index>(j)];
      if (w > 0.0)
        updated.push_back(space.centroid_from_accumulator(
            acc.col(static_cast<Eigen::Index>(j)), w));
      else
        result.collapsed = true;
    }
    result.book.points = std::move(updated);
  }
  return result;
}

DistortionEstimate vn_estimate(const SpaceModel& space,
                               const SourceSampler& source, int n,
                               long long budget, std::uint64_t seed,
                               int workers) {
  if (n < 1) throw std::domain_error("vn_estimate: n must be >= 1");
  if (budget < 1) throw std::domain_error("vn_estimate: budget must be >= 1");

  std::vector<Codebook> candidates;
  {
    std::vector<Point> designed = space.designed_codebook(n);
    if (static_cast<int>(designed.size()) == n)
      candidates.push_back({std::move(designed)});
  }
  constexpr int kRandomBooks = 4;
  for (int j = 0; j < kRandomBooks; ++j) {
    RngStream rng(seed, stream_id(5, static_cast<std::uint64_t>(j), 0));
    Codebook book;
    book.points.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) book.points.push_back(draw(source, space, rng));
    candidates.push_back(std::move(book));
  }

  // Quarter of the budget screens the candidates, the rest refines the
  // winner: 8 Lloyd iterations on 4/5 of the remainder, final scoring of the
  // refined and unrefined winner on fresh streams with the last fifth.
  const long long screen_samples = std::max<long long>(
      2048, budget / 4 / static_cast<long long>(candidates.size()));
  std::size_t best = 0;
  double best_mean = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    auto est = nearest_distortion(candidates[j], space, source, screen_samples,
                                  seed, workers, stream_id(6, j, 0));
    if (est.mean < best_mean) {
      best_mean = est.mean;
      best = j;
    }
  }

  const long long refine_budget = budget - budget / 4;
  constexpr int kIterations = 8;
  const long long per_iter =
      std::max<long long>(2048, refine_budget * 4 / 5 / kIterations);
  auto refined = lloyd_refine(candidates[best], space, source, kIterations,
                              per_iter, seed, workers, stream_id(7, 0, 0));

  const long long eval_samples =
      std::max<long long>(2048, refine_budget / 5 / 2);
  auto refined_est = nearest_distortion(refined.book, space, source,
                                        eval_samples, seed, workers,
                                        stream_id(8, 0, 0));
  auto screened_est = nearest_distortion(candidates[best], space, source,
                                         eval_samples, seed, workers,
                                         stream_id(8, 1, 0));
  return refined_est.mean <= screened_est.mean ? refined_est : screened_est;
}

BoundReport sandwich_report(const SpaceModel& space, const SourceSampler& source,
                            const BoundCurves& curves,
                            const std::vector<double>& n_list, long long budget,
                            std::uint64_t seed, int workers,
                            const std::function<double(double)>& vn_override) {
  if (n_list.empty())
    throw std::invalid_argument("sandwich_report: empty n list");
  if (!curves.bounds)
    throw std::invalid_argument("sandwich_report: empty bounds function");
  if (budget < 0) throw std::domain_error("sandwich_report: negative budget");
  const bool analytic_only = !vn_override && budget == 0;
  BoundReport report;
  const long long per_row = std::max<long long>(
      8192, budget / static_cast<long long>(n_list.size()));
  for (std::size_t row = 0; row < n_list.size(); ++row) {
    double n = n_list[row];
    BoundRow r;
    r.space_id = space.id();
    r.n = n;
    auto lu = curves.bounds(n);
    r.ln = lu.first;
    r.un = lu.second;
    if (vn_override) {
      r.v_hat = vn_override(n);
      r.v_ci = 0.0;
    } else if (!analytic_only) {
      if (!(n >= 1.0 && n <= 1e7 && n == std::floor(n)))
        throw std::domain_error(
            "sandwich_report: Monte Carlo rows need integer n <= 1e7");
      std::uint64_t row_seed =
          seed + (static_cast<std::uint64_t>(row) + 1) * 0x9E3779B97F4A7C15ull;
      auto est = vn_estimate(space, source, static_cast<int>(n), per_row,
                             row_seed, workers);
      r.v_hat = est.mean;
      r.v_ci = est.ci_halfwidth;
    }
    if (std::isfinite(curves.scale_exponent) && curves.scale_exponent > 0.0) {
      double scale = std::pow(n, curves.scale_exponent);
      r.scaled_l = scale * r.ln;
      r.scaled_u = scale * r.un;
      r.scaled_v = scale * r.v_hat;
    }
    const bool has_l = !std::isnan(r.ln);
    const bool has_u = !std::isnan(r.un);
    bool ok = has_l || has_u;
    if (analytic_only) {
      if (ok && has_l && has_u) ok = r.ln <= r.un;
    } else {
      if (std::isnan(r.v_hat)) ok = false;
      if (ok && has_l) ok = r.ln <= r.v_hat + 3.0 * r.v_ci;
      if (ok && has_u) ok = r.v_hat - 3.0 * r.v_ci <= r.un;
    }
    r.pass = ok;
    report.all_pass = report.all_pass && ok;
    report.rows.push_back(std::move(r));
  }
  return report;
}

BoundReport sandwich_report(const SpaceModel& space, const SourceSampler& source,
                            const QuantQuery& base,
                            const std::vector<double>& n_list, long long budget,
                            std::uint64_t seed, int workers,
                            const std::function<double(double)>& vn_override) {
  BoundCurves curves;
  curves.bounds = [&base](double n) {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    QuantQuery q = base;
    q.n = n;
    double ln = base.cert_sub ? lower_bound_ln(q) : nan;
    double un = base.cert_super ? upper_bound_un(q) : nan;
    return std::make_pair(ln, un);
  };
  const RegularityCertificate* scale_cert =
      base.cert_sub ? &*base.cert_sub
                    : (base.cert_super ? &*base.cert_super : nullptr);
  if (scale_cert && scale_cert->m > 0.0)
    curves.scale_exponent = scale_cert->k / scale_cert->m;
  return sandwich_report(space, source, curves, n_list, budget, seed, workers,
                         vn_override);
}

std::string report_to_csv(const BoundReport& report) {
  std::ostringstream out;
  out << "space_id,n,L_n,U_n,v_hat,v_ci,scaled_L,scaled_U,scaled_v,pass\n";
  for (const auto& r : report.rows) {
    out << r.space_id << ',' << fmt_real(r.n) << ',' << fmt_real(r.ln) << ','
        << fmt_real(r.un) << ',' << fmt_real(r.v_hat) << ',' << fmt_real(r.v_ci)
        << ',' << fmt_real(r.scaled_l) << ',' << fmt_real(r.scaled_u) << ','
        << fmt_real(r.scaled_v) << ',' << (r.pass ? '1' : '0') << '\n';
  }
  return out.str();
}

std::string report_to_json(const BoundReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"space_id", r.space_id},
                    {"n", json_real(r.n)},
                    {"L_n", json_real(r.ln)},
                    {"U_n", json_real(r.un)},
                    {"v_hat", json_real(r.v_hat)},
                    {"v_ci", json_real(r.v_ci)},
                    {"scaled_L", json_real(r.scaled_l)},
                    {"scaled_U", json_real(r.scaled_u)},
                    {"scaled_v", json_real(r.scaled_v)},
                    {"pass", r.pass}});
  }
  nlohmann::json doc = {{"rows", rows}, {"all_pass", report.all_pass}};
  return doc.dump(2) + "\n";
}

}  // namespace rdq
