#include "panelbreak/dp_search.hpp"

#include "panelbreak/rng.hpp"

namespace panelbreak {

SegmentTable build_segment_table(const SegmentEngine& engine, int min_len) {
  const int T = engine.n_periods();
  SegmentTable table;
  table.n_periods = T;
  table.min_len = min_len;
  table.ssr.set_size(T + 1, T + 1);
  table.ssr.fill(SegmentEngine::infeasible);
  for (int a = 1; a <= T; ++a)
    for (int b = a + min_len - 1; b <= T; ++b) table.ssr(a, b) = engine.ssr(a, b);
  return table;
}

std::vector<PerKOptimum> dp_minimize(const SegmentTable& table, int k) {
  const int T = table.n_periods;
  const int h = table.min_len;
  if (k < 0) fail_input("number of breaks must be nonnegative");
  if (T < (k + 1) * h)
    fail_infeasible("cannot place " + std::to_string(k) + " breaks with regimes of at least " +
                    std::to_string(h) + " periods in " + std::to_string(T) + " periods");

  // sfx(j, s): best SSR splitting s..T into j segments, each >= h periods.
  arma::mat sfx(static_cast<arma::uword>(k + 2), T + 2);
  sfx.fill(SegmentEngine::infeasible);
  for (int s = 1; s <= T - h + 1; ++s) sfx(1, s) = table.ssr(s, T);
  for (int j = 2; j <= k + 1; ++j)
    for (int s = 1; s + j * h - 1 <= T; ++s) {
      double best = SegmentEngine::infeasible;
      // segment s..e, then j-1 segments on e+1..T
      for (int e = s + h - 1; e + (j - 1) * h <= T; ++e) {
        const double v = table.ssr(s, e) + sfx(j - 1, e + 1);
        if (v < best) best = v;
      }
      sfx(j, s) = best;
    }

  const auto tie_tol = [](double best) { return 1e-12 * std::max(1.0, std::fabs(best)); };

  std::vector<PerKOptimum> out(k + 1);
  for (int kk = 0; kk <= k; ++kk) {
    const double total = sfx(kk + 1, 1);
    if (!std::isfinite(total))
      fail_numeric("all candidate partitions with " + std::to_string(kk) +
                   " breaks are singular");
    out[kk].ssr = total;
    // Forward reconstruction, taking the smallest admissible date at every
    // step; this yields the lexicographically smallest optimal break vector.
    BreakSet breaks;
    int s = 1;
    double remaining = total;
    for (int j = kk + 1; j >= 2; --j) {
      bool found = false;
      for (int e = s + h - 1; e + (j - 1) * h <= T; ++e) {
        const double v = table.ssr(s, e) + sfx(j - 1, e + 1);
        if (v <= remaining + tie_tol(remaining)) {
          breaks.push_back(e);
          remaining = sfx(j - 1, e + 1);
          s = e + 1;
          found = true;
          break;
        }
      }
      if (!found) fail_internal("segment search backtrack lost the optimum");
    }
    out[kk].breaks = std::move(breaks);
  }
  return out;
}

arma::mat search_basis_series(const PanelDataset& data, bool include_x, bool constant) {
  arma::mat basis(data.n_periods(), 0);
  if (include_x && data.p_x() > 0) basis = arma::join_rows(basis, average_x(data));
  basis = arma::join_rows(basis, average_w(data));
  if (data.p_observed() > 0) basis = arma::join_rows(basis, data.observed);
  if (constant) basis = arma::join_rows(basis, arma::mat(data.n_periods(), 1, arma::fill::ones));
  return basis;
}

namespace {

arma::cube join_xw(const PanelDataset& data) {
  arma::cube out(data.n_periods(), data.p_x() + data.p_w(), data.n_units());
  for (int i = 0; i < data.n_units(); ++i)
    out.slice(i) = arma::join_rows(data.x.slice(i), data.w.slice(i));
  return out;
}

// Stable-coefficient update: regress y - w'delta(regime) on x, defactoring
// with the stable-regressor averages (observed factors and regime intercepts
// appended to the basis).
arma::vec update_beta(const PanelDataset& data, const BreakSet& breaks, const arma::mat& delta,
                      bool breaking_constant) {
  AverageLayout layout;
  layout.x = col_mode::pooled;
  layout.w = col_mode::none;
  layout.observed = data.p_observed() > 0 ? col_mode::pooled : col_mode::none;
  layout.constant = breaking_constant ? col_mode::partitioned : col_mode::none;
  AverageBlock avg = build_averages(data, breaks, layout);
  arma::mat basis = projection_basis(avg);

  const int T = data.n_periods();
  arma::mat gram(data.p_x(), data.p_x(), arma::fill::zeros);
  arma::vec rhs(data.p_x(), arma::fill::zeros);
  arma::vec regime_of_t(T);
  {
    int j = 0;
    for (int t = 0; t < T; ++t) {
      while (j < static_cast<int>(breaks.size()) && t + 1 > breaks[j]) ++j;
      regime_of_t(t) = j;
    }
  }
  for (int i = 0; i < data.n_units(); ++i) {
    arma::vec v = data.y.col(i);
    for (int t = 0; t < T; ++t)
      v(t) -= arma::dot(data.w.slice(i).row(t),
                        delta.row(static_cast<arma::uword>(regime_of_t(t))));
    arma::vec vt = annihilate(basis, v);
    arma::mat xt = annihilate(basis, data.x.slice(i));
    gram += xt.t() * xt;
    rhs += xt.t() * vt;
  }
  return arma::solve(gram, rhs, arma::solve_opts::likely_sympd);
}

arma::mat segment_deltas(const SegmentEngine& engine, const BreakSet& breaks, int T, int r,
                         int tail_cols) {
  const int R = static_cast<int>(breaks.size()) + 1;
  arma::mat delta(R, tail_cols);
  int a = 1;
  for (int j = 0; j < R; ++j) {
    const int b = j < static_cast<int>(breaks.size()) ? breaks[j] : T;
    arma::vec th;
    if (!engine.coefs(a, b, th))
      fail_numeric("singular regression on segment " + std::to_string(a) + ".." +
                   std::to_string(b));
    delta.row(j) = th.subvec(r - tail_cols, r - 1).t();
    a = b + 1;
  }
  return delta;
}

BreakSet random_admissible(int T, int k, int h, std::uint64_t seed, std::uint64_t stream) {
  // Draw segment lengths by splitting the slack uniformly at keyed points.
  const int slack = T - (k + 1) * h;
  std::vector<double> cuts(k);
  for (int j = 0; j < k; ++j) cuts[j] = rng::keyed_uniform(seed, 0x5eedU, stream, j);
  std::sort(cuts.begin(), cuts.end());
  BreakSet breaks(k);
  for (int j = 0; j < k; ++j)
    breaks[j] = (j + 1) * h + static_cast<int>(cuts[j] * slack);
  return breaks;
}

}  // namespace

SearchResult estimate_breaks(const PanelDataset& data, int k, const SearchOptions& opts) {
  data.validate();
  opts.trim.validate();
  const int T = data.n_periods();
  const int h = opts.trim.min_regime_length(T);
  if (k < 0) fail_input("number of breaks must be nonnegative");
  if (k > opts.trim.max_breaks())
    fail_infeasible("trimming " + std::to_string(opts.trim.epsilon) + " admits at most " +
                    std::to_string(opts.trim.max_breaks()) + " breaks, requested " +
                    std::to_string(k));
  if (T < (k + 1) * h)
    fail_infeasible("panel has " + std::to_string(T) + " periods; " + std::to_string(k + 1) +
                    " regimes of at least " + std::to_string(h) + " do not fit");

  SearchResult result;

  if (k == 0) {
    result.fit = fit_at(data, {}, opts.breaking_constant);
    result.breaks = {};
    result.ssr = result.fit.ssr;
    result.per_k = {PerKOptimum{{}, result.fit.ssr}};
    return result;
  }

  if (data.p_x() == 0) {
    // Pure breaking model: one segment-table pass is exact.
    SegmentEngine engine(data.y, data.w, search_basis_series(data, false, opts.breaking_constant));
    SegmentTable table = build_segment_table(engine, h);
    result.per_k = dp_minimize(table, k);
    result.breaks = result.per_k[k].breaks;
    result.fit = fit_at(data, result.breaks, opts.breaking_constant);
    result.ssr = result.fit.ssr;
    return result;
  }

  // Stable-x model: initial pass treats every coefficient as breaking, then
  // alternates between the stable-coefficient update and the segment search.
  const arma::mat basis_xw = search_basis_series(data, true, opts.breaking_constant);
  const arma::mat basis_w = search_basis_series(data, false, opts.breaking_constant);
  const arma::cube xw = join_xw(data);

  SegmentEngine first_engine(data.y, xw, basis_xw);
  SegmentTable first_table = build_segment_table(first_engine, h);
  std::vector<PerKOptimum> first_per_k = dp_minimize(first_table, k);

  struct Attempt {
    SearchResult res;
    bool ok = false;
  };
  const int n_starts = 1 + std::max(0, opts.multi_start);
  std::vector<Attempt> attempts(n_starts);

  for (int s = 0; s < n_starts; ++s) {
    Attempt& att = attempts[s];
    try {
      BreakSet start = s == 0 ? first_per_k[k].breaks
                              : random_admissible(T, k, h, opts.seed, s);
      arma::mat delta0;
      if (s == 0) {
        SegmentEngine* eng = &first_engine;
        delta0 = segment_deltas(*eng, start, T, data.p_x() + data.p_w(), data.p_w());
      } else {
        delta0 = fit_at(data, start, opts.breaking_constant).delta;
      }
      arma::vec beta = update_beta(data, start, delta0, opts.breaking_constant);

      SearchResult res;
      BreakSet prev = start;
      for (int iter = 1; iter <= opts.max_iter; ++iter) {
        arma::mat shifted = data.y;
        for (int i = 0; i < data.n_units(); ++i)
          shifted.col(i) -= data.x.slice(i) * beta;
        SegmentEngine engine(shifted, data.w, basis_w);
        SegmentTable table = build_segment_table(engine, h);
        res.per_k = dp_minimize(table, k);
        BreakSet bs = res.per_k[k].breaks;
        res.fit = fit_at(data, bs, opts.breaking_constant);
        beta = res.fit.beta;
        res.iterations = iter;
        res.breaks = bs;
        res.previous_breaks = prev;
        if (bs == prev) {
          res.converged = true;
          break;
        }
        res.converged = false;
        prev = bs;
      }
      res.ssr = res.fit.ssr;
      att.res = std::move(res);
      att.ok = true;
    } catch (const pb_error&) {
      if (s == 0) throw;  // the default start must succeed
      att.ok = false;
    }
  }

  int best = 0;
  for (int s = 1; s < n_starts; ++s)
    if (attempts[s].ok && attempts[s].res.ssr < attempts[best].res.ssr) best = s;
  return attempts[best].res;
}

}  // namespace panelbreak
