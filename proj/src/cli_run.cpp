#include "rdq/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rdq/config.hpp"
#include "rdq/parallel.hpp"
#include "rdq/quant_bounds.hpp"
#include "rdq/quantizer.hpp"
#include "rdq/rd_bounds.hpp"
#include "rdq/regularity.hpp"
#include "rdq/rng.hpp"
#include "rdq/spaces.hpp"
#include "rdq/specials.hpp"
#include "rdq/stats.hpp"

namespace rdq {
namespace {

using nlohmann::json;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------------------
// Config field access. Every failure names the offending field.
// ---------------------------------------------------------------------------

[[noreturn]] void bad_field(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

const json* find(const json& tbl, const std::string& key) {
  auto it = tbl.find(key);
  return it == tbl.end() ? nullptr : &*it;
}

const json& require(const json& tbl, const std::string& key,
                    const std::string& path) {
  const json* v = find(tbl, key);
  if (!v) bad_field(path, "missing required field");
  return *v;
}

double as_double(const json& v, const std::string& path) {
  if (!v.is_number()) bad_field(path, "expected a number");
  return v.get<double>();
}

double get_double(const json& tbl, const std::string& key,
                  const std::string& path, double fallback) {
  const json* v = find(tbl, key);
  return v ? as_double(*v, path) : fallback;
}

long long get_int(const json& tbl, const std::string& key,
                  const std::string& path, long long fallback) {
  const json* v = find(tbl, key);
  if (!v) return fallback;
  if (!v->is_number_integer() && !v->is_number_unsigned())
    bad_field(path, "expected an integer");
  return v->get<long long>();
}

bool get_bool(const json& tbl, const std::string& key, const std::string& path,
              bool fallback) {
  const json* v = find(tbl, key);
  if (!v) return fallback;
  if (!v->is_boolean()) bad_field(path, "expected a boolean");
  return v->get<bool>();
}

std::string get_string(const json& tbl, const std::string& key,
                       const std::string& path, const std::string& fallback) {
  const json* v = find(tbl, key);
  if (!v) return fallback;
  if (!v->is_string()) bad_field(path, "expected a string");
  return v->get<std::string>();
}

std::vector<double> as_double_list(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) bad_field(path, "expected a nonempty array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& item : v) out.push_back(as_double(item, path));
  return out;
}

void check_keys(const json& tbl, const std::set<std::string>& allowed,
                const std::string& prefix) {
  for (auto it = tbl.begin(); it != tbl.end(); ++it) {
    if (!allowed.count(it.key()))
      bad_field(prefix + it.key(), "unknown key");
  }
}

const json& table(const json& cfg, const std::string& name, json& empty) {
  const json* t = find(cfg, name);
  if (!t) return empty;
  if (!t->is_object()) bad_field(name, "expected a table");
  return *t;
}

// ---------------------------------------------------------------------------
// Rendering helpers shared by the report writers.
// ---------------------------------------------------------------------------

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

json json_real(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

void write_artifact(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) bad_field("out", "cannot open " + path + " for writing");
  out << content;
  out.flush();
  if (!out) bad_field("out", "failed while writing " + path);
}

std::string rows_to_json(std::vector<json> rows, bool all_pass) {
  json doc = {{"rows", std::move(rows)}, {"all_pass", all_pass}};
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Space and distribution blocks.
// ---------------------------------------------------------------------------

struct SpaceBundle {
  std::unique_ptr<SpaceModel> space;
  std::string type;

  // Certificate-based analytic data (interval, sphere, selfsimilar).
  std::optional<RegularityCertificate> sub;
  std::optional<RegularityCertificate> super;
  double beta = std::numeric_limits<double>::infinity();

  // Grassmann payload: bounds come from dedicated closed forms.
  std::optional<GrassmannParams> gparams;

  SelfSimilarSet ss_set;
  bool cantor = false;
};

GrassmannParams read_grassmann_params(const json& sp) {
  GrassmannParams g;
  std::string field = get_string(sp, "field", "space.field", "R");
  if (field == "R" || field == "real") {
    g.field = Field::real;
  } else if (field == "C" || field == "complex") {
    g.field = Field::complex;
  } else {
    bad_field("space.field", "expected \"R\" or \"C\", got \"" + field + "\"");
  }
  g.r = static_cast<int>(get_int(sp, "r", "space.r", 1));
  g.d = static_cast<int>(get_int(sp, "d", "space.d", 2));
  g.s = static_cast<int>(get_int(sp, "s", "space.s", g.r));
  return g;
}

// Builds the space plus its analytic bundle. `ambient` and `delta0` select
// the certificate flavor where the space offers a choice.
SpaceBundle make_space(const json& cfg, bool ambient, double delta0_opt,
                       double c_sub_opt) {
  json empty = json::object();
  const json& sp = table(cfg, "space", empty);
  if (sp.empty()) bad_field("space", "missing required table");
  check_keys(sp, {"type", "k", "d", "r", "s", "field", "preset", "maps",
                  "diam", "c_sub"},
             "space.");
  std::string type = get_string(sp, "type", "space.type", "");
  SpaceBundle b;
  b.type = type;

  if (type == "interval") {
    double k = get_double(sp, "k", "space.k", 2.0);
    auto space = std::make_unique<IntervalSpace>(k);
    b.sub = space->lebesgue_certificate();
    RegularityCertificate super;
    super.kind = CertKind::super;
    super.m = 1.0;
    super.constant = 1.0;  // endpoints make b = 1 tight
    super.delta0 = 1.0;
    super.k = k;
    b.super = super;
    b.beta = 1.0;
    b.space = std::move(space);
    return b;
  }

  if (type == "sphere") {
    int d = static_cast<int>(get_int(sp, "d", "space.d", 3));
    double r = get_double(sp, "r", "space.r", 1.0);
    double delta0 = delta0_opt > 0.0
                        ? delta0_opt
                        : (ambient ? r : std::sqrt(2.0) * r);
    auto certs = sphere_certificates(d, r, delta0, ambient);
    b.sub = certs.first;
    b.super = certs.second;
    b.beta = 2.0 * r;
    b.space = std::make_unique<SphereSpace>(d, r);
    return b;
  }

  if (type == "grassmann") {
    GrassmannParams g = read_grassmann_params(sp);
    b.gparams = g;
    b.space = std::make_unique<GrassmannSpace>(g.field, g.r, g.d);
    return b;
  }

  if (type == "selfsimilar") {
    double k = get_double(sp, "k", "space.k", 2.0);
    std::string preset = get_string(sp, "preset", "space.preset", "");
    SelfSimilarSet set;
    bool cantor = false;
    if (preset == "cantor") {
      set = cantor_preset();
      cantor = true;
    } else if (!preset.empty()) {
      bad_field("space.preset", "unknown preset \"" + preset + "\"");
    } else {
      const json* maps = find(sp, "maps");
      if (!maps || !maps->is_array() || maps->empty())
        bad_field("space.maps", "explicit sets need a nonempty map array");
      std::vector<Similarity> sims;
      int dim = -1;
      for (const auto& row : *maps) {
        auto vals = as_double_list(row, "space.maps");
        if (vals.size() < 2)
          bad_field("space.maps", "each map is [kappa, shift...]");
        int this_dim = static_cast<int>(vals.size()) - 1;
        if (dim < 0) dim = this_dim;
        if (dim != this_dim)
          bad_field("space.maps", "maps disagree on the ambient dimension");
        Similarity s;
        s.kappa = vals[0];
        s.ortho = Eigen::MatrixXd::Identity(dim, dim);
        s.shift = Eigen::VectorXd(dim);
        for (int i = 0; i < dim; ++i) s.shift[i] = vals[1 + i];
        sims.push_back(std::move(s));
      }
      double diam = get_double(sp, "diam", "space.diam", 0.0);
      if (!(diam > 0.0)) bad_field("space.diam", "explicit sets need diam > 0");
      set = selfsimilar_build(sims, diam);
    }
    double c_sub = c_sub_opt;
    if (const json* v = find(sp, "c_sub")) c_sub = as_double(*v, "space.c_sub");
    auto certs = selfsimilar_certs(set, c_sub, ambient);
    b.sub = certs.first;
    b.super = certs.second;
    b.beta = set.diam;
    b.ss_set = set;
    b.cantor = cantor;
    b.space = std::make_unique<SelfSimilarSpace>(set, cantor, k);
    return b;
  }

  bad_field("space.type", type.empty() ? "missing required field"
                                       : "unknown value \"" + type + "\"");
}

struct Distribution {
  bool uniform = true;
  VonMisesFisher vmf;
  SourceSampler sampler;  // empty for the reference measure
};

Distribution make_distribution(const json& cfg, const SpaceBundle& b) {
  json empty = json::object();
  const json& dist = table(cfg, "distribution", empty);
  Distribution out;
  if (dist.empty()) return out;
  check_keys(dist, {"type", "kappa", "mu"}, "distribution.");
  std::string type = get_string(dist, "type", "distribution.type", "uniform");
  if (type == "uniform") return out;
  if (type != "vmf")
    bad_field("distribution.type", "unknown value \"" + type + "\"");
  auto* sphere = dynamic_cast<const SphereSpace*>(b.space.get());
  if (!sphere)
    bad_field("distribution.type", "vmf needs a sphere space");
  int d = sphere->dim();
  double r = sphere->radius();
  VonMisesFisher v;
  v.kappa = get_double(dist, "kappa", "distribution.kappa", 1.0);
  if (const json* mu = find(dist, "mu")) {
    auto vals = as_double_list(*mu, "distribution.mu");
    if (static_cast<int>(vals.size()) != d)
      bad_field("distribution.mu", "expected " + std::to_string(d) +
                                       " components");
    v.mean_direction = Eigen::VectorXd(d);
    for (int i = 0; i < d; ++i) v.mean_direction[i] = vals[i];
  } else {
    v.mean_direction = Eigen::VectorXd::Unit(d, 0);
  }
  out.uniform = false;
  out.vmf = v;
  out.sampler = [v, r](RngStream& rng) -> Point {
    return r * vmf_sample(v, rng);
  };
  return out;
}

// ---------------------------------------------------------------------------
// Shared row machinery.
// ---------------------------------------------------------------------------

std::vector<double> read_n_list(const json& params) {
  const json* n_list = find(params, "n_list");
  const json* n_max = find(params, "n_max");
  const json* n_pow2 = find(params, "n_pow2_max");
  int given = (n_list != nullptr) + (n_max != nullptr) + (n_pow2 != nullptr);
  if (given != 1)
    bad_field("params.n_list",
              "provide exactly one of n_list, n_max, n_pow2_max");
  std::vector<double> out;
  if (n_list) {
    out = as_double_list(*n_list, "params.n_list");
  } else if (n_max) {
    long long top = get_int(params, "n_max", "params.n_max", 0);
    if (top < 1) bad_field("params.n_max", "expected an integer >= 1");
    for (long long n = 1; n <= top; ++n) out.push_back(static_cast<double>(n));
  } else {
    long long top = get_int(params, "n_pow2_max", "params.n_pow2_max", 0);
    if (top < 1) bad_field("params.n_pow2_max", "expected an integer >= 1");
    for (double n = 1.0; n <= static_cast<double>(top); n *= 2.0)
      out.push_back(n);
  }
  for (double n : out)
    if (!(n >= 1.0) || !std::isfinite(n))
      bad_field("params.n_list", "codebook sizes must be finite and >= 1");
  return out;
}

// Worker-invariant MC fraction: fixed batch streams, order-free fold.
IntervalEstimate mc_fraction(long long samples, std::uint64_t seed, int workers,
                             const std::function<bool(RngStream&)>& trial) {
  constexpr long long kBatch = 8192;
  const std::size_t batches =
      static_cast<std::size_t>((samples + kBatch - 1) / kBatch);
  std::vector<std::uint64_t> hits(batches, 0);
  parallel_for(batches, workers, [&](std::size_t bi) {
    const long long lo = static_cast<long long>(bi) * kBatch;
    const long long count = std::min(kBatch, samples - lo);
    RngStream rng(seed, static_cast<std::uint64_t>(bi));
    std::uint64_t h = 0;
    for (long long i = 0; i < count; ++i) h += trial(rng) ? 1u : 0u;
    hits[bi] = h;
  });
  std::uint64_t total = 0;
  for (std::uint64_t h : hits) total += h;
  return binomial_estimate(total, static_cast<std::uint64_t>(samples));
}

// Worker-invariant MC mean: per-batch moments folded in batch order.
DistortionEstimate mc_mean(long long samples, std::uint64_t seed, int workers,
                           const std::function<double(RngStream&)>& value) {
  constexpr long long kBatch = 8192;
  const std::size_t batches =
      static_cast<std::size_t>((samples + kBatch - 1) / kBatch);
  std::vector<RunningStat> stats(batches);
  parallel_for(batches, workers, [&](std::size_t bi) {
    const long long lo = static_cast<long long>(bi) * kBatch;
    const long long count = std::min(kBatch, samples - lo);
    RngStream rng(seed, static_cast<std::uint64_t>(bi));
    RunningStat s;
    for (long long i = 0; i < count; ++i) s.add(value(rng));
    stats[bi] = s;
  });
  RunningStat total;
  for (const auto& s : stats) total.merge(s);
  return {total.mean(), total.se(), static_cast<long long>(total.count())};
}

void summarize_outcome(std::ostream& lines, const std::string& out_path,
                       std::size_t rows, std::size_t failures) {
  lines << "wrote " << out_path << " (" << rows << " row"
        << (rows == 1 ? "" : "s") << "); ";
  if (failures == 0)
    lines << "all rows pass\n";
  else
    lines << failures << " row" << (failures == 1 ? "" : "s") << " FAILED\n";
}

// ---------------------------------------------------------------------------
// task: bounds
// ---------------------------------------------------------------------------

int task_bounds(const json& cfg, std::uint64_t seed, int workers,
                const std::string& out_path, const std::string& format,
                std::ostream& lines) {
  json empty = json::object();
  const json& params = table(cfg, "params", empty);
  check_keys(params,
             {"n_list", "n_max", "n_pow2_max", "budget", "p", "sigma_p",
              "alpha", "ambient", "delta0", "exact", "exact_inverse"},
             "params.");
  bool ambient = get_bool(params, "ambient", "params.ambient", false);
  double delta0 = get_double(params, "delta0", "params.delta0", 0.0);
  SpaceBundle b = make_space(cfg, ambient, delta0, 0.0);
  Distribution dist = make_distribution(cfg, b);
  if (!dist.uniform)
    bad_field("distribution.type", "task bounds supports only uniform");

  std::vector<double> n_list = read_n_list(params);
  long long budget = get_int(params, "budget", "params.budget", 200000);
  if (budget < 0) bad_field("params.budget", "expected an integer >= 0");
  double p = get_double(params, "p", "params.p", 1.0);
  double sigma_p = get_double(params, "sigma_p", "params.sigma_p", 1.0);
  double alpha = get_double(params, "alpha", "params.alpha", 0.5);
  bool exact = get_bool(params, "exact", "params.exact", false);
  bool exact_inverse =
      get_bool(params, "exact_inverse", "params.exact_inverse", false);

  std::function<double(double)> vn_override;
  if (exact) {
    if (!b.cantor)
      bad_field("params.exact",
                "exact quantization errors exist only for the cantor preset");
    vn_override = [](double n) {
      if (!(n == std::floor(n)) || n < 1.0 || n > 9e15)
        throw std::domain_error("exact errors need integer n");
      return cantor_exact_vn(static_cast<long long>(n));
    };
  }

  BoundReport report;
  if (b.gparams) {
    const GrassmannParams g = *b.gparams;
    if (g.s != g.r && budget > 0 && !vn_override)
      bad_field("space.s",
                "empirical rows need s = r; set budget = 0 for analytic rows");
    BoundCurves curves;
    curves.bounds = [g, p, sigma_p, alpha, exact_inverse](double n) {
      auto gb = grassmann_bounds(g, n, p, sigma_p, alpha, exact_inverse);
      return std::make_pair(gb.below_n0 ? kNan : gb.ln, gb.un);
    };
    curves.scale_exponent = 2.0 / g.m_g();
    report = sandwich_report(*b.space, dist.sampler, curves, n_list, budget,
                             seed, workers, vn_override);
  } else {
    QuantQuery base;
    base.cert_sub = b.sub;
    base.cert_super = b.super;
    base.p = p;
    base.sigma_p = sigma_p;
    base.beta = b.beta;
    report = sandwich_report(*b.space, dist.sampler, base, n_list, budget,
                             seed, workers, vn_override);
  }

  std::size_t failures = 0;
  for (const auto& r : report.rows) {
    if (!r.pass) ++failures;
    lines << "bounds " << r.space_id << " n=" << fmt6(r.n) << " L="
          << fmt6(r.ln) << " U=" << fmt6(r.un) << " v=" << fmt6(r.v_hat)
          << " ci=" << fmt6(r.v_ci) << (r.pass ? " PASS" : " FAIL") << "\n";
  }

  // Dimension brackets recovered from each analytic or empirical column.
  if (report.rows.size() >= 4) {
    double k = b.space->distortion_exponent();
    auto column = [&](const char* name, double BoundRow::*field) {
      ErrorSequence seq;
      for (const auto& r : report.rows) {
        double v = r.*field;
        if (!std::isfinite(v) || v <= 0.0 || v >= 1.0) return;
        seq.entries.emplace_back(r.n, v);
      }
      auto dim = dimension_from_sequence(seq, k);
      lines << "dimension from " << name << ": [" << fmt6(dim.first) << ", "
            << fmt6(dim.second) << "]\n";
    };
    column("L_n", &BoundRow::ln);
    column("U_n", &BoundRow::un);
    column("v_hat", &BoundRow::v_hat);
  }

  write_artifact(out_path, format == "json" ? report_to_json(report)
                                            : report_to_csv(report));
  summarize_outcome(lines, out_path, report.rows.size(), failures);
  return report.all_pass ? 0 : 2;
}

// ---------------------------------------------------------------------------
// task: quantize
// ---------------------------------------------------------------------------

int task_quantize(const json& cfg, std::uint64_t seed, int workers,
                  const std::string& out_path, const std::string& format,
                  std::ostream& lines) {
  json empty = json::object();
  const json& params = table(cfg, "params", empty);
  check_keys(params, {"n_list", "n_max", "n_pow2_max", "budget"}, "params.");
  SpaceBundle b = make_space(cfg, false, 0.0, 0.0);
  Distribution dist = make_distribution(cfg, b);
  std::vector<double> n_list = read_n_list(params);
  long long budget = get_int(params, "budget", "params.budget", 200000);
  if (budget < 1) bad_field("params.budget", "expected an integer >= 1");
  const long long per_row = std::max<long long>(
      8192, budget / static_cast<long long>(n_list.size()));

  std::string id = b.space->id();
  std::ostringstream csv;
  csv << "space_id,n,v_hat,v_ci,samples,pass\n";
  std::vector<json> jrows;
  std::size_t failures = 0;
  double prev = kNan, prev_ci = 0.0;
  bool all_pass = true;
  for (std::size_t row = 0; row < n_list.size(); ++row) {
    double n = n_list[row];
    if (!(n == std::floor(n)) || n > 1e7)
      bad_field("params.n_list", "codebook sizes must be integers <= 1e7");
    std::uint64_t row_seed =
        seed + (static_cast<std::uint64_t>(row) + 1) * 0x9E3779B97F4A7C15ull;
    auto est = vn_estimate(*b.space, dist.sampler, static_cast<int>(n),
                           per_row, row_seed, workers);
    // More codewords never hurt beyond MC noise.
    bool pass = std::isnan(prev) ||
                est.mean <= prev + 3.0 * std::hypot(est.ci_halfwidth, prev_ci);
    prev = est.mean;
    prev_ci = est.ci_halfwidth;
    if (!pass) {
      ++failures;
      all_pass = false;
    }
    csv << id << ',' << fmt17(n) << ',' << fmt17(est.mean) << ','
        << fmt17(est.ci_halfwidth) << ',' << est.samples << ','
        << (pass ? '1' : '0') << '\n';
    jrows.push_back({{"space_id", id},
                     {"n", json_real(n)},
                     {"v_hat", json_real(est.mean)},
                     {"v_ci", json_real(est.ci_halfwidth)},
                     {"samples", est.samples},
                     {"pass", pass}});
    lines << "quantize " << id << " n=" << fmt6(n) << " v=" << fmt6(est.mean)
          << " ci=" << fmt6(est.ci_halfwidth) << (pass ? " PASS" : " FAIL")
          << "\n";
  }
  write_artifact(out_path, format == "json" ? rows_to_json(jrows, all_pass)
                                            : csv.str());
  summarize_outcome(lines, out_path, n_list.size(), failures);
  return all_pass ? 0 : 2;
}

// ---------------------------------------------------------------------------
// task: rd-lower
// ---------------------------------------------------------------------------

int task_rd_lower(const json& cfg, std::uint64_t, int,
                  const std::string& out_path, const std::string& format,
                  std::ostream& lines) {
  json empty = json::object();
  const json& params = table(cfg, "params", empty);
  check_keys(params, {"d_list", "d_min", "d_max", "d_points", "ambient",
                      "delta0"},
             "params.");
  bool ambient = get_bool(params, "ambient", "params.ambient", false);
  double delta0 = get_double(params, "delta0", "params.delta0", 0.0);
  SpaceBundle b = make_space(cfg, ambient, delta0, 0.0);
  if (!b.sub)
    bad_field("space.type", "task rd-lower needs a certificate-backed space");
  Distribution dist = make_distribution(cfg, b);

  double entropy = 0.0;
  if (!dist.uniform) {
    auto* sphere = dynamic_cast<const SphereSpace*>(b.space.get());
    entropy = vmf_functionals(dist.vmf, sphere->dim(), false).entropy;
  }

  std::vector<double> grid;
  if (const json* dl = find(params, "d_list")) {
    grid = as_double_list(*dl, "params.d_list");
  } else {
    double lo = get_double(params, "d_min", "params.d_min", 0.0);
    double hi = get_double(params, "d_max", "params.d_max", 0.0);
    long long pts = get_int(params, "d_points", "params.d_points", 0);
    if (!(lo > 0.0) || !(hi > lo) || pts < 2)
      bad_field("params.d_list",
                "provide d_list or a log grid d_min < d_max with d_points >= 2");
    for (long long i = 0; i < pts; ++i) {
      double t = static_cast<double>(i) / static_cast<double>(pts - 1);
      grid.push_back(lo * std::pow(hi / lo, t));
    }
  }
  for (double d : grid)
    if (!(d > 0.0) || !std::isfinite(d))
      bad_field("params.d_list", "distortion levels must be finite and > 0");

  const RegularityCertificate& cert = *b.sub;
  std::string id = b.space->id();
  std::ostringstream csv;
  csv << "space_id,D,rate,offset\n";
  std::vector<json> jrows;
  for (double D : grid) {
    RDQuery q;
    q.entropy = entropy;
    q.cert = cert;
    q.k = cert.k;
    q.D = D;
    double rate = rd_lower_explicit(q);
    double offset =
        rate - (entropy + f_shannon(cert.m, cert.k, cert.constant, D));
    csv << id << ',' << fmt17(D) << ',' << fmt17(rate) << ',' << fmt17(offset)
        << '\n';
    jrows.push_back({{"space_id", id},
                     {"D", json_real(D)},
                     {"rate", json_real(rate)},
                     {"offset", json_real(offset)}});
    lines << "rd-lower " << id << " D=" << fmt6(D) << " rate=" << fmt6(rate)
          << " offset=" << fmt6(offset) << "\n";
  }
  write_artifact(out_path, format == "json" ? rows_to_json(jrows, true)
                                            : csv.str());
  summarize_outcome(lines, out_path, grid.size(), 0);
  return 0;
}

// ---------------------------------------------------------------------------
// task: multi-letter
// ---------------------------------------------------------------------------

int task_multi_letter(const json& cfg, std::uint64_t, int,
                      const std::string& out_path, const std::string& format,
                      std::ostream& lines) {
  json empty = json::object();
  const json& params = table(cfg, "params", empty);
  check_keys(params, {"D", "ell_list", "ell_max", "p", "sigma_p", "m", "c",
                      "delta0", "k", "ambient"},
             "params.");

  MultiLetterQuery q;
  q.D = get_double(params, "D", "params.D", -1.0);
  if (!(q.D > 0.0)) bad_field("params.D", "expected a number > 0");
  q.p = get_double(params, "p", "params.p", 1.0);
  q.sigma_p = get_double(params, "sigma_p", "params.sigma_p", 1.0);

  std::string id = "query";
  if (find(cfg, "space")) {
    for (const char* key : {"m", "c", "k"})
      if (find(params, key))
        bad_field(std::string("params.") + key,
                  "conflicts with the [space] table");
    bool ambient = get_bool(params, "ambient", "params.ambient", false);
    double delta0 = get_double(params, "delta0", "params.delta0", 0.0);
    SpaceBundle b = make_space(cfg, ambient, delta0, 0.0);
    if (!b.sub)
      bad_field("space.type",
                "task multi-letter needs a certificate-backed space");
    q.m = b.sub->m;
    q.c = b.sub->constant;
    q.delta0 = b.sub->delta0;
    q.k = b.sub->k;
    id = b.space->id();
  } else {
    q.m = get_double(params, "m", "params.m", -1.0);
    q.c = get_double(params, "c", "params.c", -1.0);
    if (!(q.m > 0.0)) bad_field("params.m", "expected a number > 0");
    if (!(q.c > 0.0)) bad_field("params.c", "expected a number > 0");
    q.delta0 = get_double(params, "delta0", "params.delta0",
                          std::numeric_limits<double>::infinity());
    q.k = get_double(params, "k", "params.k", 2.0);
  }

  std::vector<long long> ells;
  if (const json* el = find(params, "ell_list")) {
    for (double v : as_double_list(*el, "params.ell_list")) {
      if (!(v >= 1.0) || v != std::floor(v))
        bad_field("params.ell_list", "letters must be integers >= 1");
      ells.push_back(static_cast<long long>(v));
    }
  } else {
    long long top = get_int(params, "ell_max", "params.ell_max", 50);
    if (top < 1) bad_field("params.ell_max", "expected an integer >= 1");
    for (long long ell = 1; ell <= top; ++ell) ells.push_back(ell);
  }

  std::ostringstream csv;
  csv << "ell,rate,d_threshold,limit,valid\n";
  std::vector<json> jrows;
  std::size_t failures = 0;
  bool all_pass = true;
  for (long long ell : ells) {
    q.ell = static_cast<int>(ell);
    auto res = multi_letter_lower(q);
    if (!res.valid) {
      ++failures;
      all_pass = false;
    }
    csv << ell << ',' << fmt17(res.rate) << ',' << fmt17(res.d_threshold)
        << ',' << fmt17(res.limit) << ',' << (res.valid ? '1' : '0') << '\n';
    jrows.push_back({{"ell", ell},
                     {"rate", json_real(res.rate)},
                     {"d_threshold", json_real(res.d_threshold)},
                     {"limit", json_real(res.limit)},
                     {"valid", res.valid}});
    lines << "multi-letter " << id << " ell=" << ell << " rate="
          << fmt6(res.rate) << " limit=" << fmt6(res.limit)
          << (res.valid ? " PASS" : " FAIL") << "\n";
  }
  write_artifact(out_path, format == "json" ? rows_to_json(jrows, all_pass)
                                            : csv.str());
  summarize_outcome(lines, out_path, ells.size(), failures);
  return all_pass ? 0 : 2;
}

// ---------------------------------------------------------------------------
// task: volume-check
// ---------------------------------------------------------------------------

struct VolumeRow {
  double parameter = 0.0;
  double lo = kNan;
  double hi = kNan;
  double estimate = 0.0;
  double ci = 0.0;
  bool pass = false;
};

int task_volume_check(const json& cfg, std::uint64_t seed, int workers,
                      const std::string& out_path, const std::string& format,
                      std::ostream& lines) {
  json empty = json::object();
  const json& params = table(cfg, "params", empty);
  check_keys(params, {"delta_list", "kappa_list", "samples"}, "params.");
  SpaceBundle b = make_space(cfg, false, 0.0, 0.0);
  Distribution dist = make_distribution(cfg, b);
  long long samples = get_int(params, "samples", "params.samples", 1000000);
  if (samples < 1) bad_field("params.samples", "expected an integer >= 1");

  std::string id = b.space->id();
  std::vector<VolumeRow> rows;
  std::string parameter_name = "delta";

  if (b.type == "sphere" && !dist.uniform) {
    // Closed-form vMF entropy against -mean(log density).
    parameter_name = "kappa";
    const json* kl = find(params, "kappa_list");
    if (!kl) bad_field("params.kappa_list", "missing required field");
    auto* sphere = dynamic_cast<const SphereSpace*>(b.space.get());
    int d = sphere->dim();
    std::uint64_t offset = 0;
    for (double kappa : as_double_list(*kl, "params.kappa_list")) {
      VonMisesFisher v = dist.vmf;
      v.kappa = kappa;
      auto fn = vmf_functionals(v, d, false);
      auto est = mc_mean(samples, seed + offset, workers,
                         [&v, d](RngStream& rng) {
                           Point x = vmf_sample(v, rng);
                           return -vmf_log_density(v, d, x);
                         });
      VolumeRow row;
      row.parameter = kappa;
      row.lo = row.hi = fn.entropy;
      row.estimate = est.mean;
      row.ci = est.ci_halfwidth;
      row.pass = std::abs(est.mean - fn.entropy) <= 3.0 * est.ci_halfwidth;
      rows.push_back(row);
      offset += 0x9E3779B97F4A7C15ull;
    }
  } else if (b.type == "sphere") {
    // Exact cap mass around an on-sphere center against ball-probability MC.
    auto* sphere = dynamic_cast<const SphereSpace*>(b.space.get());
    int d = sphere->dim();
    double r = sphere->radius();
    const json* dl = find(params, "delta_list");
    if (!dl) bad_field("params.delta_list", "missing required field");
    Point center = r * Eigen::VectorXd::Unit(d, 0);
    std::uint64_t offset = 0;
    for (double delta : as_double_list(*dl, "params.delta_list")) {
      if (!(delta > 0.0) || !(delta <= std::sqrt(2.0) * r))
        bad_field("params.delta_list",
                  "cap radii must lie in (0, sqrt(2) r]");
      double predicted = sphere_cap_measure(d, r, delta, true);
      double thresh = delta * delta;
      auto est = mc_fraction(samples, seed + offset, workers,
                             [&](RngStream& rng) {
                               Point x = b.space->sample_reference(rng);
                               return b.space->distortion(x, center) <= thresh;
                             });
      VolumeRow row;
      row.parameter = delta;
      row.lo = row.hi = predicted;
      row.estimate = est.estimate;
      row.ci = est.ci_halfwidth;
      row.pass = std::abs(est.estimate - predicted) <= 3.0 * est.ci_halfwidth;
      rows.push_back(row);
      offset += 0x9E3779B97F4A7C15ull;
    }
  } else if (b.type == "grassmann") {
    // Volume law (exact or sandwich) against chordal-ball MC.
    const GrassmannParams g = *b.gparams;
    const json* dl = find(params, "delta_list");
    if (!dl) bad_field("params.delta_list", "missing required field");
    auto* gspace = dynamic_cast<const GrassmannSpace*>(b.space.get());
    Eigen::MatrixXcd center = Eigen::MatrixXcd::Identity(g.d, g.s);
    std::uint64_t offset = 0;
    for (double delta : as_double_list(*dl, "params.delta_list")) {
      if (!(delta > 0.0) || !(delta <= 1.0))
        bad_field("params.delta_list", "chordal radii must lie in (0, 1]");
      auto vol = grassmann_volume(g, delta);
      auto est = mc_fraction(samples, seed + offset, workers,
                             [&](RngStream& rng) {
                               Point x = b.space->sample_reference(rng);
                               Eigen::MatrixXcd xb = gspace->unpack(x);
                               return chordal_distance(xb, center) <= delta;
                             });
      VolumeRow row;
      row.parameter = delta;
      row.lo = vol.lower;
      row.hi = vol.upper;
      row.estimate = est.estimate;
      row.ci = est.ci_halfwidth;
      row.pass = est.estimate + 3.0 * est.ci_halfwidth >= vol.lower &&
                 est.estimate - 3.0 * est.ci_halfwidth <= vol.upper;
      rows.push_back(row);
      offset += 0x9E3779B97F4A7C15ull;
    }
  } else {
    bad_field("space.type", "task volume-check supports sphere and grassmann");
  }

  std::ostringstream csv;
  csv << "space_id,parameter,predicted_lo,predicted_hi,estimate,ci,pass\n";
  std::vector<json> jrows;
  std::size_t failures = 0;
  bool all_pass = true;
  for (const auto& r : rows) {
    if (!r.pass) {
      ++failures;
      all_pass = false;
    }
    csv << id << ',' << fmt17(r.parameter) << ',' << fmt17(r.lo) << ','
        << fmt17(r.hi) << ',' << fmt17(r.estimate) << ',' << fmt17(r.ci) << ','
        << (r.pass ? '1' : '0') << '\n';
    jrows.push_back({{"space_id", id},
                     {"parameter", json_real(r.parameter)},
                     {"predicted_lo", json_real(r.lo)},
                     {"predicted_hi", json_real(r.hi)},
                     {"estimate", json_real(r.estimate)},
                     {"ci", json_real(r.ci)},
                     {"pass", r.pass}});
    lines << "volume-check " << id << " " << parameter_name << "="
          << fmt6(r.parameter) << " predicted=[" << fmt6(r.lo) << ", "
          << fmt6(r.hi) << "] estimate=" << fmt6(r.estimate) << " ci="
          << fmt6(r.ci) << (r.pass ? " PASS" : " FAIL") << "\n";
  }
  write_artifact(out_path, format == "json" ? rows_to_json(jrows, all_pass)
                                            : csv.str());
  summarize_outcome(lines, out_path, rows.size(), failures);
  return all_pass ? 0 : 2;
}

// ---------------------------------------------------------------------------
// task: verify-cert
// ---------------------------------------------------------------------------

int task_verify_cert(const json& cfg, std::uint64_t seed, int workers,
                     const std::string& out_path, const std::string& format,
                     std::ostream& lines) {
  json empty = json::object();
  const json& params = table(cfg, "params", empty);
  check_keys(params, {"mode", "delta_list", "n_centers", "samples", "which",
                      "ambient", "delta0", "ell_list", "ell_max"},
             "params.");
  std::string mode = get_string(params, "mode", "params.mode", "ball-mass");

  if (mode == "product") {
    // Weighted-sum composition of the space's sub certificate; for the
    // interval's Lebesgue certificate the ell-fold constant is the volume of
    // the ell-dimensional unit ball.
    SpaceBundle b = make_space(cfg, false, 0.0, 0.0);
    if (b.type != "interval")
      bad_field("space.type", "product mode composes the interval certificate");
    std::vector<long long> ells;
    if (const json* el = find(params, "ell_list")) {
      for (double v : as_double_list(*el, "params.ell_list")) {
        if (!(v >= 1.0) || v != std::floor(v))
          bad_field("params.ell_list", "factors must be integers >= 1");
        ells.push_back(static_cast<long long>(v));
      }
    } else {
      long long top = get_int(params, "ell_max", "params.ell_max", 6);
      if (top < 1) bad_field("params.ell_max", "expected an integer >= 1");
      for (long long ell = 1; ell <= top; ++ell) ells.push_back(ell);
    }
    const RegularityCertificate factor = *b.sub;
    std::ostringstream csv;
    csv << "ell,constant,expected,pass\n";
    std::vector<json> jrows;
    std::size_t failures = 0;
    bool all_pass = true;
    for (long long ell : ells) {
      std::vector<RegularityCertificate> factors(
          static_cast<std::size_t>(ell), factor);
      std::vector<double> weights(static_cast<std::size_t>(ell), 1.0);
      auto prod = product_certificate(factors, weights, factor.k);
      double expected =
          sphere_geometry(static_cast<int>(ell), 1.0).volume;
      bool pass = std::abs(prod.constant - expected) <= 1e-12 * expected;
      if (!pass) {
        ++failures;
        all_pass = false;
      }
      csv << ell << ',' << fmt17(prod.constant) << ',' << fmt17(expected)
          << ',' << (pass ? '1' : '0') << '\n';
      jrows.push_back({{"ell", ell},
                       {"constant", json_real(prod.constant)},
                       {"expected", json_real(expected)},
                       {"pass", pass}});
      lines << "verify-cert product ell=" << ell << " constant="
            << fmt6(prod.constant) << " expected=" << fmt6(expected)
            << (pass ? " PASS" : " FAIL") << "\n";
    }
    write_artifact(out_path, format == "json" ? rows_to_json(jrows, all_pass)
                                              : csv.str());
    summarize_outcome(lines, out_path, ells.size(), failures);
    return all_pass ? 0 : 2;
  }

  if (mode != "ball-mass")
    bad_field("params.mode", "expected \"ball-mass\" or \"product\"");

  bool ambient = get_bool(params, "ambient", "params.ambient", false);
  double delta0 = get_double(params, "delta0", "params.delta0", 0.0);
  SpaceBundle b = make_space(cfg, ambient, delta0, 0.0);

  RegularityCertificate cert;
  if (const json* ct = find(cfg, "certificate")) {
    if (!ct->is_object()) bad_field("certificate", "expected a table");
    check_keys(*ct, {"kind", "m", "constant", "delta0", "k"}, "certificate.");
    std::string kind = get_string(*ct, "kind", "certificate.kind", "sub");
    if (kind == "sub") {
      cert.kind = CertKind::sub;
    } else if (kind == "super") {
      cert.kind = CertKind::super;
    } else {
      bad_field("certificate.kind", "expected \"sub\" or \"super\"");
    }
    cert.m = as_double(require(*ct, "m", "certificate.m"), "certificate.m");
    cert.constant = as_double(require(*ct, "constant", "certificate.constant"),
                              "certificate.constant");
    cert.delta0 = get_double(*ct, "delta0", "certificate.delta0",
                             std::numeric_limits<double>::infinity());
    cert.k = get_double(*ct, "k", "certificate.k", 2.0);
    validate_certificate(cert);
  } else {
    std::string which = get_string(params, "which", "params.which", "sub");
    if (which == "sub") {
      if (!b.sub) bad_field("params.which", "no sub certificate for this space");
      cert = *b.sub;
    } else if (which == "super") {
      if (!b.super)
        bad_field("params.which", "no super certificate for this space");
      cert = *b.super;
    } else {
      bad_field("params.which", "expected \"sub\" or \"super\"");
    }
  }

  const json* dl = find(params, "delta_list");
  if (!dl) bad_field("params.delta_list", "missing required field");
  std::vector<double> radii = as_double_list(*dl, "params.delta_list");
  for (double r : radii)
    if (!(r > 0.0)) bad_field("params.delta_list", "radii must be > 0");
  long long n_centers = get_int(params, "n_centers", "params.n_centers", 3);
  if (n_centers < 1) bad_field("params.n_centers", "expected an integer >= 1");
  long long samples = get_int(params, "samples", "params.samples", 200000);
  if (samples < 1) bad_field("params.samples", "expected an integer >= 1");

  // Center draws live far above the probe streams used by the verifier.
  std::vector<Point> centers;
  for (long long i = 0; i < n_centers; ++i) {
    RngStream rng(seed, 0x8000000000000000ull + static_cast<std::uint64_t>(i));
    centers.push_back(b.space->sample_reference(rng));
  }

  auto probes =
      verify_certificate(cert, *b.space, centers, radii, samples, seed, workers);

  std::string id = b.space->id();
  std::ostringstream csv;
  csv << "space_id,center,radius,bound,estimate,ci,pass\n";
  std::vector<json> jrows;
  std::size_t failures = 0;
  bool all_pass = true;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const auto& pr = probes[i];
    std::size_t center_index = i / radii.size();
    double bound = cert.constant * std::pow(pr.probe.radius, cert.m);
    if (!pr.pass) {
      ++failures;
      all_pass = false;
    }
    csv << id << ',' << center_index << ',' << fmt17(pr.probe.radius) << ','
        << fmt17(bound) << ',' << fmt17(pr.probe.estimate) << ','
        << fmt17(pr.probe.ci_halfwidth) << ',' << (pr.pass ? '1' : '0')
        << '\n';
    jrows.push_back({{"space_id", id},
                     {"center", center_index},
                     {"radius", json_real(pr.probe.radius)},
                     {"bound", json_real(bound)},
                     {"estimate", json_real(pr.probe.estimate)},
                     {"ci", json_real(pr.probe.ci_halfwidth)},
                     {"pass", pr.pass}});
    lines << "verify-cert " << id << " center=" << center_index << " radius="
          << fmt6(pr.probe.radius) << " bound=" << fmt6(bound) << " estimate="
          << fmt6(pr.probe.estimate) << (pr.pass ? " PASS" : " FAIL") << "\n";
  }
  write_artifact(out_path, format == "json" ? rows_to_json(jrows, all_pass)
                                            : csv.str());
  summarize_outcome(lines, out_path, probes.size(), failures);
  return all_pass ? 0 : 2;
}

}  // namespace

// ---------------------------------------------------------------------------
// Dispatcher.
// ---------------------------------------------------------------------------

int run_task(const std::string& task, const CliOverrides& flags,
             std::ostream& lines, std::ostream& errs) {
  try {
    if (!flags.config_path) throw ConfigError("config: --config is required");
    json cfg = load_config_file(*flags.config_path);
    if (!cfg.is_object()) throw ConfigError("config: top level must be a table");
    check_keys(cfg,
               {"task", "seed", "workers", "out", "format", "space",
                "distribution", "params", "certificate"},
               "");

    if (const json* t = find(cfg, "task")) {
      if (!t->is_string()) bad_field("task", "expected a string");
      std::string declared = t->get<std::string>();
      if (declared != task)
        bad_field("task", "config says \"" + declared +
                              "\" but the subcommand is \"" + task + "\"");
    }

    std::uint64_t seed = 0;
    if (flags.seed) {
      seed = *flags.seed;
    } else {
      const json* s = find(cfg, "seed");
      if (!s) bad_field("seed", "missing required field (no wall-clock default)");
      if (!s->is_number_integer() && !s->is_number_unsigned())
        bad_field("seed", "expected an integer");
      if (s->is_number_integer() && s->get<long long>() < 0)
        bad_field("seed", "expected a nonnegative integer");
      seed = s->get<std::uint64_t>();
    }

    int workers = flags.workers
                      ? *flags.workers
                      : static_cast<int>(get_int(cfg, "workers", "workers", 1));
    if (workers < 1 || workers > 256)
      bad_field("workers", "expected an integer in [1, 256]");

    std::string format =
        flags.format ? *flags.format : get_string(cfg, "format", "format", "csv");
    if (format != "csv" && format != "json")
      bad_field("format", "expected \"csv\" or \"json\"");

    std::string out_path = flags.out
                               ? *flags.out
                               : get_string(cfg, "out", "out",
                                            task + "_report." + format);

    if (task == "bounds")
      return task_bounds(cfg, seed, workers, out_path, format, lines);
    if (task == "quantize")
      return task_quantize(cfg, seed, workers, out_path, format, lines);
    if (task == "rd-lower")
      return task_rd_lower(cfg, seed, workers, out_path, format, lines);
    if (task == "multi-letter")
      return task_multi_letter(cfg, seed, workers, out_path, format, lines);
    if (task == "volume-check")
      return task_volume_check(cfg, seed, workers, out_path, format, lines);
    if (task == "verify-cert")
      return task_verify_cert(cfg, seed, workers, out_path, format, lines);
    bad_field("task", "unknown task \"" + task + "\"");
  } catch (const std::exception& e) {
    errs << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace rdq
