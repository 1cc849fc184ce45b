#include "panelbreak/breakci.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "panelbreak/estimator.hpp"
#include "panelbreak/parallel.hpp"
#include "panelbreak/rng.hpp"

namespace panelbreak {

ArgmaxBank ArgmaxBank::simulate(const ArgmaxBankSpec& spec) {
  if (spec.n_pairs < 100) fail_input("argmax bank needs at least 100 pairs");
  if (!(spec.step > 0.0) || !(spec.horizon > spec.step))
    fail_input("argmax bank needs a positive step smaller than the horizon");
  const int n_steps = static_cast<int>(spec.horizon / spec.step);
  const int n_paths = 2 * spec.n_pairs;
  const double sd = std::sqrt(spec.step);

  std::vector<double> max_val(n_paths), arg_max(n_paths);
  parallel_for(n_paths, spec.threads, [&](int p) {
    double w = 0.0, best = 0.0, best_u = 0.0;
    for (int t = 1; t <= n_steps; ++t) {
      w += sd * rng::keyed_normal(spec.seed, static_cast<std::uint64_t>(p),
                                  static_cast<std::uint64_t>(t));
      double s = w - 0.5 * spec.step * t;
      if (s > best) {
        best = s;
        best_u = spec.step * t;
      }
    }
    max_val[p] = best;
    arg_max[p] = best_u;
  });

  ArgmaxBank bank;
  bank.spec_ = spec;
  bank.ml_.resize(spec.n_pairs);
  bank.ul_.resize(spec.n_pairs);
  bank.mr_.resize(spec.n_pairs);
  bank.ur_.resize(spec.n_pairs);
  for (int i = 0; i < spec.n_pairs; ++i) {
    bank.ml_[i] = max_val[2 * i];
    bank.ul_[i] = arg_max[2 * i];
    bank.mr_[i] = max_val[2 * i + 1];
    bank.ur_[i] = arg_max[2 * i + 1];
  }
  return bank;
}

namespace {

double quantile_inplace(std::vector<double>& x, double prob) {
  const std::size_t n = x.size();
  double h = static_cast<double>(n - 1) * prob;
  std::size_t lo = static_cast<std::size_t>(h);
  if (lo >= n - 1) {
    std::nth_element(x.begin(), x.begin() + (n - 1), x.end());
    return x[n - 1];
  }
  std::nth_element(x.begin(), x.begin() + lo, x.end());
  double v0 = x[lo];
  // the element after the pivot lives in the upper partition
  double v1 = *std::min_element(x.begin() + lo + 1, x.end());
  return v0 + (h - static_cast<double>(lo)) * (v1 - v0);
}

}  // namespace

double ArgmaxBank::argmax_quantile(double h, double c, double prob) const {
  if (!(h > 0.0) || !(c > 0.0)) fail_numeric("argmax law needs positive scale ratios");
  if (!(prob > 0.0 && prob < 1.0)) fail_input("quantile probability must be in (0, 1)");
  std::vector<double> x(ml_.size());
  for (std::size_t i = 0; i < ml_.size(); ++i)
    x[i] = ml_[i] > h * mr_[i] ? -ul_[i] : c * ur_[i];
  return quantile_inplace(x, prob);
}

double ArgmaxBank::argmax_cdf(double h, double c, double x) const {
  if (!(h > 0.0) || !(c > 0.0)) fail_numeric("argmax law needs positive scale ratios");
  std::size_t count = 0;
  for (std::size_t i = 0; i < ml_.size(); ++i) {
    double v = ml_[i] > h * mr_[i] ? -ul_[i] : c * ur_[i];
    if (v <= x) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(ml_.size());
}

const ArgmaxBank& shared_argmax_bank(int threads_hint) {
  static std::once_flag flag;
  static ArgmaxBank bank;
  std::call_once(flag, [&] {
    ArgmaxBankSpec spec;
    spec.threads = threads_hint;
    bank = ArgmaxBank::simulate(spec);
  });
  return bank;
}

std::vector<BreakInterval> break_confidence(const PanelDataset& data, const BreakSet& breaks,
                                            const ConfidenceOptions& opts) {
  if (!(opts.alpha > 0.0 && opts.alpha < 1.0))
    fail_input("confidence level parameter must be in (0, 1)");
  if (breaks.empty()) fail_input("no break dates to build intervals for");
  validate_breaks(breaks, data.n_periods());

  FitResult fr = fit_at(data, breaks, opts.breaking_constant);
  CovarianceEstimate cov = hac_covariance(fr, opts.hac);
  const ArgmaxBank& bank = opts.bank ? *opts.bank : shared_argmax_bank(opts.threads);
  const double n_units = static_cast<double>(fr.n_units);

  std::vector<BreakInterval> out;
  for (std::size_t j = 0; j < breaks.size(); ++j) {
    arma::vec d = fr.delta_increments.row(j).t();
    const arma::mat& om1 = cov.omega_regime[j];
    const arma::mat& om2 = cov.omega_regime[j + 1];
    const arma::mat& ph1 = cov.phi_regime[j];
    const arma::mat& ph2 = cov.phi_regime[j + 1];
    double a1 = arma::as_scalar(d.t() * om1 * d);
    double a2 = arma::as_scalar(d.t() * om2 * d);
    double b1 = arma::as_scalar(d.t() * ph1 * d);
    double b2 = arma::as_scalar(d.t() * ph2 * d);
    if (!(a1 > 0.0) || !(a2 > 0.0))
      fail_numeric("break " + std::to_string(j + 1) +
                   ": shift direction has no variation in a neighboring regime");
    if (!(b1 > 0.0) || !(b2 > 0.0))
      fail_numeric("break " + std::to_string(j + 1) +
                   ": long-run variance of the shift direction is not positive");

    BreakInterval ci;
    ci.break_index = static_cast<int>(j) + 1;
    ci.date = breaks[j];
    ci.xi = a2 / a1;
    ci.phi1 = b1 / a1;
    ci.phi2 = b2 / a2;
    ci.scale = b1 / (n_units * a1 * a1);
    double h = ci.phi2 / ci.phi1;
    double c = ci.phi2 / (ci.phi1 * ci.xi);
    double q = bank.argmax_quantile(h, c, 1.0 - opts.alpha / 2.0);
    ci.c_alpha = q > 0.0 ? q : 0.0;  // degenerate one-sided mass; keep the interval proper
    ci.half_width = static_cast<int>(std::floor(ci.c_alpha * ci.scale));
    ci.lower = std::max(1, ci.date - ci.half_width - 1);
    ci.upper = std::min(data.n_periods(), ci.date + ci.half_width + 1);
    out.push_back(ci);
  }
  return out;
}

}  // namespace panelbreak
