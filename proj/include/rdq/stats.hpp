#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>

namespace rdq {

// Welford accumulator.
class RunningStat {
 public:
  void add(double x) {
    ++n_;
    double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }

  void merge(const RunningStat& o) {
    if (o.n_ == 0) return;
    if (n_ == 0) {
      *this = o;
      return;
    }
    double nt = static_cast<double>(n_ + o.n_);
    double d = o.mean_ - mean_;
    m2_ += o.m2_ + d * d * static_cast<double>(n_) * static_cast<double>(o.n_) / nt;
    mean_ += d * static_cast<double>(o.n_) / nt;
    n_ += o.n_;
  }

  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double sd() const { return std::sqrt(variance()); }
  // Standard error of the mean (one sigma).
  double se() const { return n_ > 0 ? sd() / std::sqrt(static_cast<double>(n_)) : 0.0; }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct IntervalEstimate {
  double estimate = 0.0;
  double ci_halfwidth = 0.0;  // one sigma
};

// Proportion estimate with a one-sigma halfwidth: Wilson form, which matches
// the normal approximation away from 0/1 and stays positive at the edges.
inline IntervalEstimate binomial_estimate(std::uint64_t hits, std::uint64_t trials) {
  double n = static_cast<double>(trials);
  double p = trials > 0 ? static_cast<double>(hits) / n : 0.0;
  double hw = trials > 0
                  ? std::sqrt(p * (1.0 - p) / n + 1.0 / (4.0 * n * n)) / (1.0 + 1.0 / n)
                  : 0.0;
  return {p, hw};
}

}  // namespace rdq
