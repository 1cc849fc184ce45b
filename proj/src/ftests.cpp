#include "panelbreak/ftests.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/fisher_f.hpp>

namespace panelbreak {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_levels(const std::vector<double>& levels) {
  if (levels.empty()) fail_input("need at least one test level");
  for (double a : levels)
    if (!(a > 0.0 && a < 0.5)) fail_input("test levels must be in (0, 0.5)");
}

std::size_t primary_level(const std::vector<double>& levels) {
  std::size_t best = 0;
  double dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < levels.size(); ++i) {
    double d = std::fabs(levels[i] - 0.05);
    if (d < dist - 1e-15) {
      dist = d;
      best = i;
    }
  }
  return best;
}

const CriticalValueTable& resolve_table(const TestOptions& opts) {
  return opts.table ? *opts.table : CriticalValueTable::embedded();
}

SearchOptions search_options(const TestOptions& opts) {
  SearchOptions so;
  so.trim = opts.trim;
  so.breaking_constant = opts.breaking_constant;
  so.max_iter = opts.max_iter;
  so.multi_start = opts.multi_start;
  so.seed = opts.seed;
  return so;
}

// N(T - p_x - r p_w) - p_x - r p_w for r regimes; the fit already rejected
// designs where this is not positive.
long long design_dof(int n_units, int n_periods, int p_x, int p_w, int regimes) {
  long long inner = static_cast<long long>(n_periods) - p_x -
                    static_cast<long long>(regimes) * p_w;
  return static_cast<long long>(n_units) * inner - p_x -
         static_cast<long long>(regimes) * p_w;
}

double contrast_quadform(const arma::vec& d, const arma::mat& cov_d) {
  arma::vec sol;
  if (!arma::solve(sol, cov_d, d, arma::solve_opts::no_approx))
    fail_numeric("contrast covariance matrix is singular");
  double quad = arma::dot(d, sol);
  return quad < 0.0 ? 0.0 : quad;
}

}  // namespace

arma::mat difference_contrast(int k, int p_w) {
  arma::mat d(static_cast<arma::uword>(k) * p_w, static_cast<arma::uword>(k + 1) * p_w,
              arma::fill::zeros);
  for (int j = 0; j < k; ++j) {
    for (int c = 0; c < p_w; ++c) {
      d(j * p_w + c, j * p_w + c) = -1.0;
      d(j * p_w + c, (j + 1) * p_w + c) = 1.0;
    }
  }
  return d;
}

TestReport f_known(const PanelDataset& data, const BreakSet& breaks, const TestOptions& opts) {
  check_levels(opts.levels);
  if (breaks.empty()) fail_input("known-date test needs at least one break date");
  validate_breaks(breaks, data.n_periods());

  FitResult fr = fit_at(data, breaks, opts.breaking_constant);
  CovarianceEstimate cov = hac_covariance(fr, opts.hac);
  const int k = static_cast<int>(breaks.size());
  const int p_w = fr.p_w;

  arma::mat dmat = difference_contrast(k, p_w);
  arma::vec d = dmat * fr.delta_stacked();
  double quad = contrast_quadform(d, arma::mat(dmat * cov.vdelta * dmat.t()));
  const long long den = design_dof(fr.n_units, fr.n_periods, fr.p_x, p_w, k + 1);
  const int num = k * p_w;
  double stat = quad * static_cast<double>(den) / static_cast<double>(num);

  boost::math::fisher_f dist(static_cast<double>(num), static_cast<double>(den));
  TestReport rep;
  rep.kind = "fstat";
  rep.k = k;
  rep.statistic = stat;
  rep.levels = opts.levels;
  for (double a : opts.levels)
    rep.critical_values.push_back(boost::math::quantile(boost::math::complement(dist, a)));
  rep.p_value = boost::math::cdf(boost::math::complement(dist, stat));
  rep.breaks = breaks;
  rep.dof_num = num;
  rep.dof_den = static_cast<int>(den);
  rep.bandwidth = cov.bandwidth;
  rep.cv_source = "F distribution";
  return rep;
}

namespace {

// supF statistic at a fixed fit: full difference contrast across all regimes.
double sup_stat(const FitResult& fr, const CovarianceEstimate& cov, int* dof_num,
                long long* dof_den_out) {
  const int k = static_cast<int>(fr.breaks.size());
  arma::mat dmat = difference_contrast(k, fr.p_w);
  arma::vec d = dmat * fr.delta_stacked();
  double quad = contrast_quadform(d, arma::mat(dmat * cov.vdelta * dmat.t()));
  const long long den = design_dof(fr.n_units, fr.n_periods, fr.p_x, fr.p_w, k + 1);
  *dof_num = k * fr.p_w;
  *dof_den_out = den;
  return quad * static_cast<double>(den) / static_cast<double>(k * fr.p_w);
}

}  // namespace

TestReport sup_f(const PanelDataset& data, int k, const TestOptions& opts) {
  check_levels(opts.levels);
  if (k < 1) fail_input("supF needs at least one break under the alternative");
  const CriticalValueTable& table = resolve_table(opts);

  SearchResult sr = estimate_breaks(data, k, search_options(opts));
  CovarianceEstimate cov = hac_covariance(sr.fit, opts.hac);
  TestReport rep;
  long long den = 0;
  rep.statistic = sup_stat(sr.fit, cov, &rep.dof_num, &den);
  rep.dof_den = static_cast<int>(den);
  rep.kind = "supf";
  rep.k = k;
  rep.levels = opts.levels;
  const double eps = opts.trim.epsilon;
  for (double a : opts.levels)
    rep.critical_values.push_back(table.supf_cv(data.p_w(), eps, k, a));
  rep.p_value = 1.0 - table.sup_prob(data.p_w(), eps, k, rep.statistic);
  rep.breaks = sr.breaks;
  rep.bandwidth = cov.bandwidth;
  rep.cv_source = table.provenance.source;
  return rep;
}

TestReport wdmax_f(const PanelDataset& data, int k_max, const TestOptions& opts) {
  check_levels(opts.levels);
  if (k_max < 1) fail_input("max test needs k_max of at least 1");
  const CriticalValueTable& table = resolve_table(opts);
  const double eps = opts.trim.epsilon;

  TestReport rep;
  rep.kind = "wdmax";
  rep.k = k_max;
  rep.levels = opts.levels;
  rep.unit_weights = opts.unit_weights;

  // One dynamic program yields the optima for every k when nothing but the
  // breaking block enters the model; with stable regressors each k gets its
  // own iterated search.
  std::vector<BreakSet> per_k_breaks(k_max);
  if (data.p_x() == 0) {
    SearchResult sr = estimate_breaks(data, k_max, search_options(opts));
    for (int k = 1; k <= k_max; ++k) per_k_breaks[k - 1] = sr.per_k[k].breaks;
  } else {
    for (int k = 1; k <= k_max; ++k)
      per_k_breaks[k - 1] = estimate_breaks(data, k, search_options(opts)).breaks;
  }

  int bw = 0;
  for (int k = 1; k <= k_max; ++k) {
    FitResult fr = fit_at(data, per_k_breaks[k - 1], opts.breaking_constant);
    CovarianceEstimate cov = hac_covariance(fr, opts.hac);
    int num = 0;
    long long den = 0;
    rep.per_k_stats.push_back(sup_stat(fr, cov, &num, &den));
    bw = cov.bandwidth;
  }
  rep.per_k_breaks = per_k_breaks;
  rep.bandwidth = bw;

  for (double a : opts.levels) {
    std::vector<double> w(k_max, 1.0);
    if (!opts.unit_weights)
      for (int k = 1; k <= k_max; ++k) w[k - 1] = table.wdmax_weight(data.p_w(), eps, k, a);
    double stat = -std::numeric_limits<double>::infinity();
    for (int k = 1; k <= k_max; ++k) stat = std::max(stat, w[k - 1] * rep.per_k_stats[k - 1]);
    rep.weights.push_back(std::move(w));
    rep.statistics_by_level.push_back(stat);
    rep.critical_values.push_back(
        table.wdmax_cv(data.p_w(), eps, k_max, a, opts.unit_weights));
  }

  const std::size_t pl = primary_level(opts.levels);
  rep.statistic = rep.statistics_by_level[pl];
  int arg_k = 1;
  for (int k = 1; k <= k_max; ++k)
    if (rep.weights[pl][k - 1] * rep.per_k_stats[k - 1] >= rep.statistic - 1e-12) {
      arg_k = k;
      break;
    }
  rep.breaks = per_k_breaks[arg_k - 1];
  rep.p_value = kNaN;
  rep.cv_source = table.provenance.source;
  return rep;
}

TestReport seq_f(const PanelDataset& data, const BreakSet& null_breaks, const TestOptions& opts) {
  check_levels(opts.levels);
  opts.trim.validate();
  validate_breaks(null_breaks, data.n_periods());
  const CriticalValueTable& table = resolve_table(opts);
  const int t_all = data.n_periods();
  const int k = static_cast<int>(null_breaks.size());
  const int p_w = data.p_w();
  const double eps = opts.trim.epsilon;

  std::vector<int> edges;
  edges.push_back(0);
  for (int b : null_breaks) edges.push_back(b);
  edges.push_back(t_all);

  double best = -std::numeric_limits<double>::infinity();
  int best_date = 0, best_regime = 0, scanned = 0, bw = 0;
  long long den = 0;
  for (int j = 1; j <= k + 1; ++j) {
    const int prev = edges[j - 1], cur = edges[j];
    const int margin = opts.trim.min_regime_length(cur - prev);
    const int lo = prev + margin, hi = cur - margin;
    for (int date = lo; date <= hi; ++date) {
      ++scanned;
      BreakSet cand = null_breaks;
      cand.insert(cand.begin() + (j - 1), date);
      FitResult fr;
      CovarianceEstimate cov;
      try {
        fr = fit_at(data, cand, opts.breaking_constant);
        cov = hac_covariance(fr, opts.hac);
      } catch (const pb_error& e) {
        if (e.code() == error_code::internal) throw;
        continue;
      }
      const int rj = j - 1;  // 0-based row of the left half of the split
      arma::vec d = (fr.delta.row(rj + 1) - fr.delta.row(rj)).t();
      arma::mat vblock = cov.vdelta.submat(rj * p_w, rj * p_w, (rj + 1) * p_w - 1,
                                           (rj + 1) * p_w - 1) +
                         cov.vdelta.submat((rj + 1) * p_w, (rj + 1) * p_w,
                                           (rj + 2) * p_w - 1, (rj + 2) * p_w - 1) -
                         cov.vdelta.submat(rj * p_w, (rj + 1) * p_w, (rj + 1) * p_w - 1,
                                           (rj + 2) * p_w - 1) -
                         cov.vdelta.submat((rj + 1) * p_w, rj * p_w, (rj + 2) * p_w - 1,
                                           (rj + 1) * p_w - 1);
      double quad;
      try {
        quad = contrast_quadform(d, vblock);
      } catch (const pb_error&) {
        continue;
      }
      den = design_dof(fr.n_units, fr.n_periods, fr.p_x, p_w, k + 2);
      double stat = quad * static_cast<double>(den) / static_cast<double>(p_w);
      if (stat > best) {
        best = stat;
        best_date = date;
        best_regime = j;
        bw = cov.bandwidth;
      }
    }
  }
  if (scanned == 0)
    fail_infeasible("no regime admits an insertion date at trim " + std::to_string(eps) +
                    "; every window is empty");
  if (!std::isfinite(best))
    fail_numeric("every candidate insertion produced a singular fit");

  TestReport rep;
  rep.kind = "seqf";
  rep.k = k;
  rep.statistic = best;
  rep.levels = opts.levels;
  for (double a : opts.levels)
    rep.critical_values.push_back(table.seqf_cv(p_w, eps, k, a));
  rep.p_value =
      1.0 - std::pow(table.sup_prob(p_w, eps, 1, best), static_cast<double>(k + 1));
  rep.breaks = null_breaks;
  rep.dof_num = p_w;
  rep.dof_den = static_cast<int>(den);
  rep.bandwidth = bw;
  rep.cv_source = table.provenance.source;
  rep.insert_regime = best_regime;
  rep.insert_date = best_date;
  rep.candidates_scanned = scanned;
  return rep;
}

TestReport seq_f_at(const PanelDataset& data, int k_null, const TestOptions& opts) {
  if (k_null < 0) fail_input("null break count must be nonnegative");
  if (k_null == 0) return seq_f(data, BreakSet{}, opts);
  SearchResult sr = estimate_breaks(data, k_null, search_options(opts));
  return seq_f(data, sr.breaks, opts);
}

KhatReport estimate_num_breaks(const PanelDataset& data, int k_cap, double alpha,
                               const TestOptions& opts) {
  if (!(alpha > 0.0 && alpha < 0.5)) fail_input("selection level must be in (0, 0.5)");
  if (k_cap < 1) fail_input("break count cap must be at least 1");
  const CriticalValueTable& table = resolve_table(opts);

  KhatReport out;
  out.alpha = alpha;
  BreakSet current;
  for (;;) {
    const int k = static_cast<int>(current.size());
    KhatStage st;
    st.k_null = k;
    try {
      st.test = seq_f(data, current, opts);
    } catch (const pb_error& e) {
      if (e.code() != error_code::infeasible) throw;
      st.note = std::string("stopped: ") + e.what();
      st.breaks_after = current;
      out.stages.push_back(std::move(st));
      break;
    }
    st.alpha_cv = table.seqf_cv(data.p_w(), opts.trim.epsilon, k, alpha);
    st.rejected = st.test.statistic > st.alpha_cv;
    if (st.rejected) {
      current.insert(current.begin() + (st.test.insert_regime - 1), st.test.insert_date);
    }
    st.breaks_after = current;
    bool stop = !st.rejected;
    if (st.rejected && static_cast<int>(current.size()) >= k_cap) {
      out.truncated = true;
      st.note = "cap reached while still rejecting";
      stop = true;
    }
    out.stages.push_back(std::move(st));
    if (stop) break;
  }
  out.k_hat = static_cast<int>(current.size());
  out.breaks = current;
  return out;
}

}  // namespace panelbreak
