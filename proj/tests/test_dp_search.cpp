#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <armadillo>
#include <cmath>
#include <vector>

#include "panelbreak/dp_search.hpp"
#include "panelbreak/panel.hpp"
#include "panelbreak/rng.hpp"
#include "panelbreak/segments.hpp"
#include "panelbreak/types.hpp"

using namespace panelbreak;

namespace {

// Pooled segment regression the slow way: common slopes plus one basis
// coefficient vector per unit, solved as a single stacked least squares.
double stacked_ssr(const arma::mat& y, const arma::cube& w, const arma::mat& basis, int a, int b,
                   arma::vec* common = nullptr) {
  const int N = static_cast<int>(y.n_cols);
  const int r = static_cast<int>(w.n_cols);
  const int q = static_cast<int>(basis.n_cols);
  const int len = b - a + 1;
  arma::mat design(static_cast<arma::uword>(len) * N, r + static_cast<arma::uword>(N) * q,
                   arma::fill::zeros);
  arma::vec resp(static_cast<arma::uword>(len) * N);
  for (int i = 0; i < N; ++i) {
    const arma::span rows(i * len, (i + 1) * len - 1);
    resp(rows) = y.col(i).subvec(a - 1, b - 1);
    design(rows, arma::span(0, r - 1)) = w.slice(i).rows(a - 1, b - 1);
    if (q > 0)
      design(rows, arma::span(r + i * q, r + (i + 1) * q - 1)) = basis.rows(a - 1, b - 1);
  }
  arma::vec coef = arma::solve(design, resp);
  if (common) *common = coef.subvec(0, r - 1);
  arma::vec res = resp - design * coef;
  return arma::dot(res, res);
}

struct SearchFixture {
  arma::mat y;
  arma::cube w;
  arma::mat basis;
};

SearchFixture random_fixture(int T, int N, int r, int q, std::uint64_t seed) {
  SearchFixture f;
  f.y.set_size(T, N);
  f.w.set_size(T, r, N);
  f.basis.set_size(T, q);
  for (int t = 0; t < T; ++t) {
    for (int c = 0; c < q; ++c) f.basis(t, c) = rng::keyed_normal(seed, 500 + c, t);
    for (int i = 0; i < N; ++i) {
      f.y(t, i) = rng::keyed_normal(seed, 1, i, t);
      for (int c = 0; c < r; ++c) f.w(t, c, i) = rng::keyed_normal(seed, 2 + c, i, t);
    }
  }
  return f;
}

PanelDataset break_panel(int N, int T, int break_at, double jump, double beta, int p_x,
                         std::uint64_t seed) {
  PanelDataset d;
  d.y.set_size(T, N);
  d.x.set_size(T, p_x, N);
  d.w.set_size(T, 1, N);
  d.observed.set_size(T, 0);
  arma::vec f(T);
  for (int t = 0; t < T; ++t) f(t) = rng::keyed_normal(seed, 7, t);
  for (int i = 0; i < N; ++i) {
    double gy = 1.0 + 0.4 * rng::keyed_normal(seed, 8, i);
    double aw = 0.6 + 0.2 * rng::keyed_normal(seed, 9, i);
    for (int t = 0; t < T; ++t) {
      d.w(t, 0, i) = aw * f(t) + rng::keyed_normal(seed, 10, i, t);
      double delta = t + 1 <= break_at ? 1.0 : 1.0 + jump;
      double v = delta * d.w(t, 0, i) + gy * f(t) + 0.4 * rng::keyed_normal(seed, 11, i, t);
      if (p_x > 0) {
        d.x(t, 0, i) = 0.5 * f(t) + rng::keyed_normal(seed, 12, i, t);
        v += beta * d.x(t, 0, i);
      }
      d.y(t, i) = v;
    }
  }
  return d;
}

}  // namespace

TEST_CASE("segment regression matches a stacked solve") {
  SearchFixture f = random_fixture(14, 4, 2, 1, 321);
  SegmentEngine engine(f.y, f.w, f.basis);
  CHECK(engine.n_periods() == 14);
  CHECK(engine.n_units() == 4);
  CHECK(engine.n_regressors() == 2);
  for (auto [a, b] : std::vector<std::pair<int, int>>{{1, 14}, {1, 5}, {6, 14}, {3, 9}, {10, 13}}) {
    arma::vec common;
    double want = stacked_ssr(f.y, f.w, f.basis, a, b, &common);
    CHECK(engine.ssr(a, b) == doctest::Approx(want).epsilon(1e-9));
    arma::vec got;
    REQUIRE(engine.coefs(a, b, got));
    CHECK(arma::approx_equal(got, common, "absdiff", 1e-8));
  }
}

TEST_CASE("segments without room for the basis are infeasible") {
  SearchFixture f = random_fixture(10, 3, 1, 2, 17);
  SegmentEngine engine(f.y, f.w, f.basis);
  CHECK(engine.ssr(4, 4) == SegmentEngine::infeasible);   // len 1 < q+1
  CHECK(engine.ssr(4, 5) == SegmentEngine::infeasible);   // len 2 < q+1
  CHECK(std::isfinite(engine.ssr(4, 7)));
  CHECK(engine.ssr(0, 5) == SegmentEngine::infeasible);   // out of range
  CHECK(engine.ssr(5, 11) == SegmentEngine::infeasible);
  CHECK(engine.ssr(7, 5) == SegmentEngine::infeasible);
  arma::vec th;
  CHECK(!engine.coefs(4, 4, th));
}

TEST_CASE("segment table honors the trimming floor") {
  SearchFixture f = random_fixture(12, 3, 1, 0, 99);
  SegmentEngine engine(f.y, f.w, f.basis);
  SegmentTable table = build_segment_table(engine, 3);
  CHECK(table.n_periods == 12);
  CHECK(table.min_len == 3);
  CHECK(table.ssr(1, 2) == SegmentEngine::infeasible);
  CHECK(table.ssr(5, 6) == SegmentEngine::infeasible);
  CHECK(table.ssr(1, 3) == doctest::Approx(engine.ssr(1, 3)));
  CHECK(table.ssr(4, 12) == doctest::Approx(engine.ssr(4, 12)));
}

TEST_CASE("dynamic program equals exhaustive enumeration") {
  const int T = 20;
  SearchFixture f = random_fixture(T, 5, 1, 1, 777);
  SegmentEngine engine(f.y, f.w, f.basis);
  TrimmingSpec trim;
  trim.epsilon = 0.15;  // floor 3 at T=20
  const int h = trim.min_regime_length(T);
  SegmentTable table = build_segment_table(engine, h);
  std::vector<PerKOptimum> got = dp_minimize(table, 3);
  REQUIRE(got.size() == 4);

  for (int k = 0; k <= 3; ++k) {
    double best = SegmentEngine::infeasible;
    BreakSet best_breaks;
    enumerate_admissible(T, k, trim, [&](const BreakSet& bs) {
      double total = 0.0;
      int a = 1;
      for (int jb : bs) {
        total += table.ssr(a, jb);
        a = jb + 1;
      }
      total += table.ssr(a, T);
      if (total < best) {  // first strict improvement keeps the lex-smallest tie
        best = total;
        best_breaks = bs;
      }
    });
    CHECK(got[k].ssr == doctest::Approx(best).epsilon(1e-10));
    CHECK(got[k].breaks == best_breaks);
    CHECK(static_cast<int>(got[k].breaks.size()) == k);
    if (k > 0) CHECK(got[k].ssr <= got[k - 1].ssr + 1e-9);
  }
}

TEST_CASE("exact ties resolve to the lexicographically smallest dates") {
  const int T = 12, N = 2;
  SearchFixture f = random_fixture(T, N, 1, 0, 5);
  f.y.zeros();  // every partition fits perfectly, SSR identically 0
  SegmentEngine engine(f.y, f.w, f.basis);
  SegmentTable table = build_segment_table(engine, 3);
  std::vector<PerKOptimum> got = dp_minimize(table, 2);
  CHECK(got[1].breaks == BreakSet{3});
  CHECK(got[2].breaks == BreakSet{3, 6});
  CHECK(got[2].ssr == doctest::Approx(0.0));
}

TEST_CASE("dynamic program rejects impossible splits") {
  SearchFixture f = random_fixture(10, 3, 1, 0, 51);
  SegmentEngine engine(f.y, f.w, f.basis);
  SegmentTable table = build_segment_table(engine, 4);
  CHECK_THROWS_AS(dp_minimize(table, 2), pb_error);  // 3 regimes of 4 need 12 periods
  CHECK_THROWS_AS(dp_minimize(table, -1), pb_error);
}

TEST_CASE("break estimation finds a strong break without stable regressors") {
  PanelDataset d = break_panel(30, 30, 15, 2.5, 0.0, 0, 2026);
  SearchOptions opts;
  opts.trim.epsilon = 0.15;
  SearchResult res = estimate_breaks(d, 1, opts);
  CHECK(res.breaks == BreakSet{15});
  CHECK(res.converged);
  CHECK(res.ssr == doctest::Approx(res.fit.ssr));
  REQUIRE(res.per_k.size() == 2);
  CHECK(res.per_k[1].breaks == res.breaks);
  CHECK(res.per_k[0].breaks.empty());
}

TEST_CASE("break estimation iterates to a fixed point with stable regressors") {
  PanelDataset d = break_panel(30, 30, 18, 2.5, 1.2, 1, 31415);
  SearchOptions opts;
  opts.trim.epsilon = 0.15;
  SearchResult res = estimate_breaks(d, 1, opts);
  CHECK(res.breaks == BreakSet{18});
  CHECK(res.converged);
  CHECK(res.iterations >= 1);
  CHECK(res.previous_breaks == res.breaks);

  SearchOptions multi = opts;
  multi.multi_start = 3;
  multi.seed = 9;
  SearchResult res2 = estimate_breaks(d, 1, multi);
  CHECK(res2.breaks == res.breaks);
  CHECK(res2.ssr <= res.ssr + 1e-9);
}

TEST_CASE("zero requested breaks reduces to a single fit") {
  PanelDataset d = break_panel(12, 16, 8, 0.0, 0.0, 0, 5);
  SearchOptions opts;
  SearchResult res = estimate_breaks(d, 0, opts);
  CHECK(res.breaks.empty());
  REQUIRE(res.per_k.size() == 1);
  CHECK(res.per_k[0].ssr == doctest::Approx(res.fit.ssr));
  CHECK(res.ssr == doctest::Approx(res.fit.ssr));
}

TEST_CASE("estimation rejects more breaks than trimming admits") {
  PanelDataset d = break_panel(10, 20, 10, 1.0, 0.0, 0, 6);
  SearchOptions opts;
  opts.trim.epsilon = 0.15;
  try {
    estimate_breaks(d, 5, opts);
    CHECK(false);
  } catch (const pb_error& e) {
    CHECK(e.code() == error_code::infeasible);
  }
  CHECK_THROWS_AS(estimate_breaks(d, -1, opts), pb_error);
}

TEST_CASE("search basis stacks the requested series") {
  PanelDataset d = break_panel(8, 15, 7, 1.0, 0.5, 1, 44);
  d.observed = arma::mat(15, 1, arma::fill::randn);
  arma::mat full = search_basis_series(d, true, true);
  CHECK(full.n_cols == 4);  // x avg, w avg, observed, constant
  CHECK(arma::approx_equal(full.col(0), average_x(d).col(0), "absdiff", 1e-14));
  CHECK(arma::approx_equal(full.col(1), average_w(d).col(0), "absdiff", 1e-14));
  CHECK(arma::approx_equal(full.col(2), d.observed.col(0), "absdiff", 0.0));
  CHECK(full.col(3).min() == 1.0);
  arma::mat bare = search_basis_series(d, false, false);
  CHECK(bare.n_cols == 2);  // w avg, observed
}
