#include "panelbreak/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "panelbreak/dp_search.hpp"
#include "panelbreak/parallel.hpp"
#include "panelbreak/rng.hpp"

namespace panelbreak {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Key packing: family tag in the high half, unit in the low half. Chains over
// t are generated sequentially per (unit, variable), everything else is a
// pure function of its key.
enum : std::uint64_t {
  kTagFactor = 1,
  kTagGamma = 2,
  kTagGx = 3,
  kTagGw = 4,
  kTagEps = 5,
  kTagUx = 6,
  kTagUw = 7,
  kTagHet = 8,
  kTagRepSeed = 9
};

std::uint64_t pack(std::uint64_t tag, std::uint64_t unit) { return (tag << 32) | unit; }

// Stationary AR(1) with marginal standard deviation sd regardless of rho.
class ArChain {
public:
  ArChain(double rho, double sd) : rho_(rho), innov_(sd * std::sqrt(1.0 - rho * rho)), sd_(sd) {}
  double next(double z) {
    if (first_) {
      first_ = false;
      state_ = sd_ * z;
    } else {
      state_ = rho_ * state_ + innov_ * z;
    }
    return state_;
  }

private:
  double rho_, innov_, sd_, state_ = 0.0;
  bool first_ = true;
};

void check_ar(double rho, const char* what) {
  if (!(rho > -1.0 && rho < 1.0)) fail_input(std::string(what) + " AR coefficient must be in (-1, 1)");
}

double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  std::size_t half = n / 2;
  return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

double mean_of(const std::vector<double>& x) {
  if (x.empty()) return kNaN;
  return pairwise_sum(x.data(), x.size()) / static_cast<double>(x.size());
}

}  // namespace

void DgpSpec::validate() const {
  if (n_units < 2) fail_input("DGP needs at least 2 units");
  if (n_periods < 2) fail_input("DGP needs at least 2 periods");
  if (p_w < 1) fail_input("DGP needs at least one breaking regressor");
  if (p_x < 0 || m < 0) fail_input("DGP dimensions must be nonnegative");
  validate_breaks(breaks, n_periods);
  if (static_cast<int>(beta.n_elem) != p_x) fail_input("beta length must equal p_x");
  if (static_cast<int>(delta.n_rows) != static_cast<int>(breaks.size()) + 1 ||
      static_cast<int>(delta.n_cols) != p_w)
    fail_input("delta must be (breaks+1) x p_w");
  if (m > 0) {
    if (static_cast<int>(gamma_mean.n_elem) != m) fail_input("gamma_mean length must equal m");
    if (static_cast<int>(gx_mean.n_rows) != m || static_cast<int>(gx_mean.n_cols) != p_x)
      fail_input("gx_mean must be m x p_x");
    if (static_cast<int>(gw_mean.n_rows) != m || static_cast<int>(gw_mean.n_cols) != p_w)
      fail_input("gw_mean must be m x p_w");
  }
  check_ar(factor_ar, "factor");
  check_ar(eps_ar, "error");
  check_ar(u_ar, "regressor noise");
  if (factor_sd < 0.0 || eps_sd < 0.0 || u_sd < 0.0 || gamma_sd < 0.0 || loading_sd < 0.0)
    fail_input("standard deviations must be nonnegative");
  if (hetero < 0.0 || hetero > 1.0) fail_input("hetero must be in [0, 1]");
}

DgpSpec DgpSpec::basic(int n_units, int n_periods, int p_x, int p_w, int m) {
  DgpSpec s;
  s.n_units = n_units;
  s.n_periods = n_periods;
  s.p_x = p_x;
  s.p_w = p_w;
  s.m = m;
  s.beta = arma::vec(p_x, arma::fill::ones);
  s.delta = arma::mat(1, p_w, arma::fill::ones);
  if (m > 0) {
    s.gamma_mean = arma::vec(m, arma::fill::ones);
    // cyclic identity plus a constant: full rank m for any p >= m, and the
    // stacked [gx gw] center keeps rank m, so the averages span the factors
    auto centers = [m](int p) {
      arma::mat g(m, p);
      for (int r = 0; r < m; ++r)
        for (int c = 0; c < p; ++c) g(r, c) = (c % m == r) ? 1.0 : 0.3;
      return g;
    };
    s.gx_mean = centers(p_x);
    s.gw_mean = centers(p_w);
  } else {
    s.gx_mean.set_size(0, p_x);
    s.gw_mean.set_size(0, p_w);
  }
  return s;
}

GeneratedPanel generate(const DgpSpec& spec) {
  spec.validate();
  const int n = spec.n_units, t_all = spec.n_periods, px = spec.p_x, pw = spec.p_w, m = spec.m;
  const std::uint64_t seed = spec.seed;

  arma::mat f(t_all, m);
  for (int r = 0; r < m; ++r) {
    ArChain chain(spec.factor_ar, spec.factor_sd);
    for (int t = 0; t < t_all; ++t)
      f(t, r) = spec.factor_mean +
                chain.next(rng::keyed_normal(seed, pack(kTagFactor, 0), t + 1, r));
  }

  PanelDataset data;
  data.y.set_size(t_all, n);
  data.x.set_size(t_all, px, n);
  data.w.set_size(t_all, pw, n);
  data.observed.set_size(t_all, 0);

  for (int i = 0; i < n; ++i) {
    arma::vec gamma_i(m);
    for (int r = 0; r < m; ++r)
      gamma_i(r) = spec.gamma_mean(r) +
                   spec.gamma_sd * rng::keyed_normal(seed, pack(kTagGamma, i), r);
    arma::mat gx_i(m, px), gw_i(m, pw);
    for (int r = 0; r < m; ++r) {
      for (int c = 0; c < px; ++c)
        gx_i(r, c) = spec.gx_mean(r, c) +
                     spec.loading_sd * rng::keyed_normal(seed, pack(kTagGx, i), r, c);
      for (int c = 0; c < pw; ++c)
        gw_i(r, c) = spec.gw_mean(r, c) +
                     spec.loading_sd * rng::keyed_normal(seed, pack(kTagGw, i), r, c);
    }
    const double scale_i = 1.0 + spec.hetero * (rng::keyed_uniform(seed, pack(kTagHet, i)) - 0.5);

    arma::mat xi(t_all, px), wi(t_all, pw);
    for (int c = 0; c < px; ++c) {
      ArChain chain(spec.u_ar, spec.u_sd);
      for (int t = 0; t < t_all; ++t)
        xi(t, c) = chain.next(rng::keyed_normal(seed, pack(kTagUx, i), t + 1, c));
    }
    for (int c = 0; c < pw; ++c) {
      ArChain chain(spec.u_ar, spec.u_sd);
      for (int t = 0; t < t_all; ++t)
        wi(t, c) = chain.next(rng::keyed_normal(seed, pack(kTagUw, i), t + 1, c));
    }
    if (m > 0) {
      xi += f * gx_i;
      wi += f * gw_i;
    }

    ArChain eps_chain(spec.eps_ar, spec.eps_sd * scale_i);
    for (int t = 0; t < t_all; ++t) {
      int regime = regime_of(spec.breaks, t + 1);
      double mean = 0.0;
      if (px > 0) mean += arma::dot(xi.row(t), spec.beta);
      mean += arma::dot(wi.row(t), spec.delta.row(regime));
      if (m > 0) mean += arma::dot(f.row(t), gamma_i);
      data.y(t, i) = mean + eps_chain.next(rng::keyed_normal(seed, pack(kTagEps, i), t + 1));
    }
    if (px > 0) data.x.slice(i) = xi;
    data.w.slice(i) = wi;
  }

  data.unit_labels.resize(n);
  for (int i = 0; i < n; ++i) data.unit_labels[i] = "u" + std::to_string(i + 1);
  data.period_labels.resize(t_all);
  for (int t = 0; t < t_all; ++t) data.period_labels[t] = std::to_string(t + 1);
  for (int c = 0; c < px; ++c) data.x_names.push_back("x" + std::to_string(c + 1));
  for (int c = 0; c < pw; ++c) data.w_names.push_back("w" + std::to_string(c + 1));
  data.validate();

  GeneratedPanel out;
  out.data = std::move(data);
  out.truth.breaks = spec.breaks;
  out.truth.beta = spec.beta;
  out.truth.delta = spec.delta;
  return out;
}

ExperimentKind experiment_kind_from(const std::string& name) {
  if (name == "size") return ExperimentKind::size;
  if (name == "power") return ExperimentKind::power;
  if (name == "hit_rate" || name == "hitrate") return ExperimentKind::hit_rate;
  if (name == "khat") return ExperimentKind::khat;
  if (name == "coverage") return ExperimentKind::coverage;
  fail_input("unknown experiment kind '" + name + "'");
}

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::size: return "size";
    case ExperimentKind::power: return "power";
    case ExperimentKind::hit_rate: return "hit_rate";
    case ExperimentKind::khat: return "khat";
    case ExperimentKind::coverage: return "coverage";
  }
  fail_internal("unhandled experiment kind");
}

McReport run_experiment(const ExperimentConfig& cfg) {
  cfg.dgp.validate();
  if (cfg.reps < 100) fail_input("experiments need at least 100 replications");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 0.5)) fail_input("alpha must be in (0, 0.5)");
  const int k0 = static_cast<int>(cfg.dgp.breaks.size());
  const bool is_test = cfg.kind == ExperimentKind::size || cfg.kind == ExperimentKind::power;
  const CriticalValueTable& table = cfg.test.table ? *cfg.test.table
                                                   : CriticalValueTable::embedded();
  const int pw = cfg.dgp.p_w;
  const double eps = cfg.test.trim.epsilon;

  if (is_test) {
    if (cfg.test_kind == "supf") {
      if (cfg.k_test < 1) fail_input("supf experiment needs k_test >= 1");
      table.supf_cv(pw, eps, cfg.k_test, cfg.alpha);
    } else if (cfg.test_kind == "wdmax") {
      if (cfg.k_test < 1) fail_input("wdmax experiment needs k_test >= 1");
      table.wdmax_cv(pw, eps, cfg.k_test, cfg.alpha, cfg.test.unit_weights);
    } else if (cfg.test_kind == "seqf") {
      table.seqf_cv(pw, eps, k0, cfg.alpha);
    } else {
      fail_input("size/power experiments support test kinds supf, wdmax, seqf");
    }
  }
  if (cfg.kind == ExperimentKind::hit_rate || cfg.kind == ExperimentKind::coverage) {
    if (k0 < 1) fail_input("hit rate and coverage experiments need true breaks in the DGP");
  }
  if (cfg.kind == ExperimentKind::khat) {
    if (cfg.k_cap < 1) fail_input("khat experiment needs k_cap >= 1");
    for (int k = 0; k < cfg.k_cap; ++k) table.seqf_cv(pw, eps, k, cfg.alpha);
  }
  if (cfg.kind == ExperimentKind::coverage && !cfg.test.table) {
    // build the shared bank before the replication loop starts timing threads
    shared_argmax_bank(cfg.threads);
  }

  const int reps = cfg.reps;
  std::vector<double> outcome(reps, kNaN);
  std::vector<double> aux1(reps, kNaN);  // statistic / abs err / half width / khat
  std::vector<std::string> errors(reps);
  std::vector<signed char> cover_flags;
  if (cfg.kind == ExperimentKind::coverage)
    cover_flags.assign(static_cast<std::size_t>(reps) * k0, -1);

  parallel_for(reps, cfg.threads, [&](int rep) {
    DgpSpec spec_r = cfg.dgp;
    spec_r.seed = rng::keyed_u64(cfg.dgp.seed, pack(kTagRepSeed, 0), rep);
    try {
      GeneratedPanel gen = generate(spec_r);
      TestOptions opts = cfg.test;
      opts.levels = {cfg.alpha};
      switch (cfg.kind) {
        case ExperimentKind::size:
        case ExperimentKind::power: {
          TestReport tr;
          if (cfg.test_kind == "supf") {
            tr = sup_f(gen.data, cfg.k_test, opts);
          } else if (cfg.test_kind == "wdmax") {
            tr = wdmax_f(gen.data, cfg.k_test, opts);
          } else {
            tr = seq_f(gen.data, gen.truth.breaks, opts);
          }
          double stat = tr.kind == "wdmax" ? tr.statistics_by_level[0] : tr.statistic;
          outcome[rep] = stat > tr.critical_values[0] ? 1.0 : 0.0;
          aux1[rep] = stat;
          break;
        }
        case ExperimentKind::hit_rate: {
          SearchOptions so;
          so.trim = opts.trim;
          so.breaking_constant = opts.breaking_constant;
          so.max_iter = opts.max_iter;
          so.multi_start = opts.multi_start;
          so.seed = spec_r.seed;
          SearchResult sr = estimate_breaks(gen.data, k0, so);
          outcome[rep] = sr.breaks == gen.truth.breaks ? 1.0 : 0.0;
          double err = 0.0;
          for (int j = 0; j < k0; ++j)
            err += std::abs(sr.breaks[j] - gen.truth.breaks[j]);
          aux1[rep] = err / k0;
          break;
        }
        case ExperimentKind::coverage: {
          SearchOptions so;
          so.trim = opts.trim;
          so.breaking_constant = opts.breaking_constant;
          so.max_iter = opts.max_iter;
          SearchResult sr = estimate_breaks(gen.data, k0, so);
          ConfidenceOptions copts;
          copts.alpha = cfg.alpha;
          copts.hac = opts.hac;
          copts.breaking_constant = opts.breaking_constant;
          copts.bank = nullptr;
          copts.threads = 1;
          std::vector<BreakInterval> cis = break_confidence(gen.data, sr.breaks, copts);
          bool all = true;
          double width = 0.0;
          for (int j = 0; j < k0; ++j) {
            bool c = gen.truth.breaks[j] >= cis[j].lower && gen.truth.breaks[j] <= cis[j].upper;
            cover_flags[static_cast<std::size_t>(rep) * k0 + j] = c ? 1 : 0;
            all = all && c;
            width += cis[j].upper - cis[j].lower;
          }
          outcome[rep] = all ? 1.0 : 0.0;
          aux1[rep] = width / (2.0 * k0);
          break;
        }
        case ExperimentKind::khat: {
          KhatReport kr = estimate_num_breaks(gen.data, cfg.k_cap, cfg.alpha, opts);
          outcome[rep] = kr.k_hat == k0 ? 1.0 : 0.0;
          aux1[rep] = kr.k_hat;
          break;
        }
      }
    } catch (const pb_error& e) {
      errors[rep] = e.what();
    }
  });

  McReport out;
  out.kind = to_string(cfg.kind);
  out.reps = reps;
  std::vector<double> ok_outcomes, ok_aux;
  for (int r = 0; r < reps; ++r) {
    if (std::isnan(outcome[r])) {
      ++out.failures;
      if (out.failure_samples.size() < 5 &&
          std::find(out.failure_samples.begin(), out.failure_samples.end(), errors[r]) ==
              out.failure_samples.end())
        out.failure_samples.push_back(errors[r]);
    } else {
      ok_outcomes.push_back(outcome[r]);
      if (!std::isnan(aux1[r])) ok_aux.push_back(aux1[r]);
    }
  }
  out.per_seed = outcome;
  const std::size_t n_ok = ok_outcomes.size();
  if (n_ok > 0) {
    long long hits = 0;
    for (double v : ok_outcomes) hits += v > 0.5 ? 1 : 0;
    out.rate = static_cast<double>(hits) / static_cast<double>(n_ok);
    out.rate_se = std::sqrt(out.rate * (1.0 - out.rate) / static_cast<double>(n_ok));
  } else {
    out.rate = kNaN;
    out.rate_se = kNaN;
  }
  out.extras["failure_rate"] = static_cast<double>(out.failures) / reps;
  switch (cfg.kind) {
    case ExperimentKind::size:
    case ExperimentKind::power:
      out.extras["mean_statistic"] = mean_of(ok_aux);
      break;
    case ExperimentKind::hit_rate:
      out.extras["mean_abs_error"] = mean_of(ok_aux);
      break;
    case ExperimentKind::coverage: {
      out.extras["mean_half_width"] = mean_of(ok_aux);
      for (int j = 0; j < k0; ++j) {
        long long c = 0, tot = 0;
        for (int r = 0; r < reps; ++r) {
          signed char fl = cover_flags[static_cast<std::size_t>(r) * k0 + j];
          if (fl >= 0) {
            ++tot;
            c += fl;
          }
        }
        out.extras["cover_break_" + std::to_string(j + 1)] =
            tot ? static_cast<double>(c) / tot : kNaN;
      }
      break;
    }
    case ExperimentKind::khat: {
      out.extras["mean_khat"] = mean_of(ok_aux);
      std::vector<long long> freq(cfg.k_cap + 1, 0);
      for (double v : ok_aux)
        if (v >= 0 && v <= cfg.k_cap) ++freq[static_cast<int>(v)];
      for (int k = 0; k <= cfg.k_cap; ++k)
        out.extras["freq_khat_" + std::to_string(k)] =
            n_ok ? static_cast<double>(freq[k]) / static_cast<double>(n_ok) : kNaN;
      break;
    }
  }
  return out;
}

}  // namespace panelbreak
