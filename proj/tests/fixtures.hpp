#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "hstop/model.hpp"
#include "hstop/serialize.hpp"

namespace fixtures {

inline hstop::ModelSpec hiring_spec() {
  hstop::ModelSpec s;
  s.mu0 = 0.0;
  s.mu1 = 2.0;
  s.sigma = std::sqrt(2.0);
  s.prior_pi = 0.5;
  s.payoff = hstop::HiringPayoff{1.0, 1.0, 1.0};
  return s;
}

inline hstop::ModelSpec short_spec() {
  hstop::ModelSpec s;
  s.drift_form = hstop::DriftForm::Geometric;
  s.mu0 = 0.0;
  s.mu1 = 0.1;
  s.sigma = 0.2;
  s.lambda0 = 0.1;
  s.prior_pi = 0.2;
  s.x0 = 1.0;
  s.payoff = hstop::ShortPositionPayoff{0.05};
  return s;
}

inline hstop::ModelSpec seq_spec(double c = 0.1) {
  hstop::ModelSpec s;
  s.mu0 = 0.0;
  s.mu1 = 1.0;
  s.sigma = 1.0;
  s.lambda0 = 1.0;
  s.prior_pi = 0.5;
  s.payoff = hstop::SeqTestingPayoff{c};
  return s;
}

inline hstop::ValidatedModel hiring() { return hstop::ValidatedModel::validate(hiring_spec()); }
inline hstop::ValidatedModel short_position() { return hstop::ValidatedModel::validate(short_spec()); }
inline hstop::ValidatedModel seq_testing(double c = 0.1) { return hstop::ValidatedModel::validate(seq_spec(c)); }

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline std::string fixture_path(const std::string& name) { return std::string(HSTOP_FIXTURES) + "/" + name; }

/// Mean and standard error of a sample.
struct Sample {
  double sum = 0.0, sum_sq = 0.0;
  std::size_t n = 0;
  void add(double v) {
    sum += v;
    sum_sq += v * v;
    ++n;
  }
  double mean() const { return sum / static_cast<double>(n); }
  double se() const {
    const double m = mean();
    const double var = (sum_sq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1);
    return std::sqrt(std::max(var, 0.0) / static_cast<double>(n));
  }
};

}  // namespace fixtures
