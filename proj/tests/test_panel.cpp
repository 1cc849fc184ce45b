#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <armadillo>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "panelbreak/panel.hpp"
#include "panelbreak/rng.hpp"
#include "panelbreak/types.hpp"

using namespace panelbreak;

namespace {

PanelSchema basic_schema() {
  PanelSchema s;
  s.unit_col = "unit";
  s.period_col = "period";
  s.y_col = "y";
  s.x_cols = {"x1"};
  s.w_cols = {"w1"};
  return s;
}

PanelDataset random_panel(int n_units, int n_periods, int p_x, int p_w, std::uint64_t seed) {
  PanelDataset d;
  d.y.set_size(n_periods, n_units);
  d.x.set_size(n_periods, p_x, n_units);
  d.w.set_size(n_periods, p_w, n_units);
  d.observed.set_size(n_periods, 0);
  for (int i = 0; i < n_units; ++i) {
    for (int t = 0; t < n_periods; ++t) {
      d.y(t, i) = rng::keyed_normal(seed, 1, i, t);
      for (int c = 0; c < p_x; ++c) d.x(t, c, i) = rng::keyed_normal(seed, 2 + c, i, t);
      for (int c = 0; c < p_w; ++c) d.w(t, c, i) = rng::keyed_normal(seed, 12 + c, i, t);
    }
    d.unit_labels.push_back("u" + std::to_string(i + 1));
  }
  for (int t = 0; t < n_periods; ++t) d.period_labels.push_back(std::to_string(t + 1));
  for (int c = 0; c < p_x; ++c) d.x_names.push_back("x" + std::to_string(c + 1));
  for (int c = 0; c < p_w; ++c) d.w_names.push_back("w" + std::to_string(c + 1));
  return d;
}

}  // namespace

TEST_CASE("csv loads into period-major matrices with sorted labels") {
  // rows deliberately shuffled; periods 2 and 10 force numeric ordering
  std::string csv =
      "unit,period,y,x1,w1\n"
      "b,10,4.0,0.4,1.4\n"
      "a,2,1.0,0.1,1.1\n"
      "b,2,3.0,0.3,1.3\n"
      "a,10,2.0,0.2,1.2\n";
  std::istringstream in(csv);
  PanelDataset d = load_panel(in, basic_schema());
  CHECK(d.n_units() == 2);
  CHECK(d.n_periods() == 2);
  CHECK(d.unit_labels == std::vector<std::string>{"a", "b"});
  CHECK(d.period_labels == std::vector<std::string>{"2", "10"});
  CHECK(d.y(0, 0) == 1.0);   // a, period 2
  CHECK(d.y(1, 0) == 2.0);   // a, period 10
  CHECK(d.y(0, 1) == 3.0);
  CHECK(d.y(1, 1) == 4.0);
  CHECK(d.x(1, 0, 0) == 0.2);
  CHECK(d.w(0, 0, 1) == 1.3);
}

TEST_CASE("write then load round-trips values exactly") {
  PanelDataset d = random_panel(5, 7, 2, 2, 99);
  PanelSchema s;
  s.unit_col = "unit";
  s.period_col = "period";
  s.y_col = "y";
  s.x_cols = d.x_names;
  s.w_cols = d.w_names;
  std::ostringstream out;
  write_panel(out, d, s);
  std::istringstream in(out.str());
  PanelDataset r = load_panel(in, s);
  CHECK(r.n_units() == d.n_units());
  CHECK(r.n_periods() == d.n_periods());
  CHECK(arma::approx_equal(r.y, d.y, "absdiff", 0.0));
  for (int i = 0; i < d.n_units(); ++i) {
    CHECK(arma::approx_equal(r.x.slice(i), d.x.slice(i), "absdiff", 0.0));
    CHECK(arma::approx_equal(r.w.slice(i), d.w.slice(i), "absdiff", 0.0));
  }
  CHECK(r.unit_labels == d.unit_labels);
  CHECK(r.period_labels == d.period_labels);
}

TEST_CASE("loader rejects malformed input") {
  PanelSchema s = basic_schema();

  SUBCASE("missing column") {
    std::istringstream in("unit,period,y,x1\na,1,1.0,0.1\n");
    CHECK_THROWS_AS(load_panel(in, s), pb_error);
  }
  SUBCASE("unbalanced panel") {
    std::istringstream in(
        "unit,period,y,x1,w1\n"
        "a,1,1.0,0.1,1.1\n"
        "a,2,2.0,0.2,1.2\n"
        "b,1,3.0,0.3,1.3\n");
    CHECK_THROWS_AS(load_panel(in, s), pb_error);
  }
  SUBCASE("duplicate cell") {
    std::istringstream in(
        "unit,period,y,x1,w1\n"
        "a,1,1.0,0.1,1.1\n"
        "a,1,2.0,0.2,1.2\n");
    CHECK_THROWS_AS(load_panel(in, s), pb_error);
  }
  SUBCASE("non-numeric value") {
    std::istringstream in("unit,period,y,x1,w1\na,1,zap,0.1,1.1\n");
    CHECK_THROWS_AS(load_panel(in, s), pb_error);
  }
  SUBCASE("empty input") {
    std::istringstream in("");
    CHECK_THROWS_AS(load_panel(in, s), pb_error);
  }
  SUBCASE("error carries the input code") {
    std::istringstream in("");
    try {
      load_panel(in, s);
      CHECK(false);
    } catch (const pb_error& e) {
      CHECK(e.code() == error_code::input);
    }
  }
}

TEST_CASE("row order does not change the loaded dataset") {
  PanelDataset d = random_panel(4, 6, 1, 1, 123);
  PanelSchema s = basic_schema();
  std::ostringstream out;
  write_panel(out, d, s);
  // reverse the data rows, keep the header
  std::istringstream lines(out.str());
  std::string header, line;
  std::getline(lines, header);
  std::vector<std::string> rows;
  while (std::getline(lines, line)) rows.push_back(line);
  std::string reversed = header + "\n";
  for (auto it = rows.rbegin(); it != rows.rend(); ++it) reversed += *it + "\n";

  std::istringstream in(reversed);
  PanelDataset r = load_panel(in, s);
  CHECK(arma::approx_equal(r.y, d.y, "absdiff", 0.0));
  CHECK(r.unit_labels == d.unit_labels);
  CHECK(r.period_labels == d.period_labels);
}

TEST_CASE("trimming arithmetic is exact at representation-noise boundaries") {
  TrimmingSpec t;
  t.epsilon = 0.05;
  CHECK(t.min_regime_length(2000) == 100);
  CHECK(t.max_breaks() == 18);
  t.epsilon = 0.15;
  CHECK(t.min_regime_length(50) == 8);  // ceil(7.5)
  CHECK(t.min_regime_length(20) == 3);
  CHECK(t.max_breaks() == 4);           // floor(6.67) - 2
  t.epsilon = 0.10;
  CHECK(t.min_regime_length(30) == 3);
  CHECK(t.max_breaks() == 8);
  t.epsilon = 0.0;
  CHECK_THROWS_AS(t.validate(), pb_error);
  t.epsilon = 0.5;
  CHECK_THROWS_AS(t.validate(), pb_error);
}

TEST_CASE("regime bookkeeping") {
  BreakSet b{10, 20};
  CHECK(regime_of(b, 1) == 0);
  CHECK(regime_of(b, 10) == 0);
  CHECK(regime_of(b, 11) == 1);
  CHECK(regime_of(b, 20) == 1);
  CHECK(regime_of(b, 21) == 2);
  CHECK(regime_lengths(b, 30) == std::vector<int>{10, 10, 10});
  CHECK(breaks_admissible(b, 30, 10));
  CHECK(!breaks_admissible(b, 30, 11));
  CHECK_THROWS_AS(validate_breaks(BreakSet{5, 5}, 30), pb_error);
  CHECK_THROWS_AS(validate_breaks(BreakSet{0}, 30), pb_error);
  CHECK_THROWS_AS(validate_breaks(BreakSet{30}, 30), pb_error);
}

TEST_CASE("admissible enumeration matches the stars-and-bars count") {
  // k breaks with every regime >= L: substituting c_j = b_j - jL turns the
  // constraints into nondecreasing sequences in [0, T-(k+1)L], so the count
  // is C(T-(k+1)L+k, k).
  auto binom = [](long long n, long long k) {
    if (k < 0 || k > n) return 0LL;
    long long r = 1;
    for (long long i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
  };
  for (int T : {12, 20, 31}) {
    for (int k : {1, 2, 3}) {
      for (double eps : {0.1, 0.15, 0.22}) {
        TrimmingSpec trim;
        trim.epsilon = eps;
        int L = trim.min_regime_length(T);
        if (k > trim.max_breaks() || T < (k + 1) * L) continue;
        long long expect = binom(T - (k + 1LL) * L + k, k);
        CHECK(static_cast<long long>(count_admissible(T, k, trim)) == expect);
      }
    }
  }
}

TEST_CASE("enumeration refuses infeasible requests") {
  TrimmingSpec trim;
  trim.epsilon = 0.22;  // admits at most 2 breaks
  CHECK_THROWS_AS(count_admissible(20, 3, trim), pb_error);
  trim.epsilon = 0.15;
  CHECK_THROWS_AS(count_admissible(7, 3, trim), pb_error);  // 4 regimes of 2 need 8 periods
  CHECK_THROWS_AS(count_admissible(20, -1, trim), pb_error);
}

TEST_CASE("enumeration is lexicographic and every set is admissible") {
  TrimmingSpec trim;
  trim.epsilon = 0.2;
  int T = 17;
  int L = trim.min_regime_length(T);
  std::vector<BreakSet> all = collect_admissible(T, 2, trim);
  CHECK(!all.empty());
  CHECK(all.size() == count_admissible(T, 2, trim));
  for (std::size_t i = 0; i < all.size(); ++i) {
    CHECK(breaks_admissible(all[i], T, L));
    if (i > 0) CHECK(all[i - 1] < all[i]);
  }
}

TEST_CASE("dataset validation catches shape mismatches") {
  PanelDataset d = random_panel(3, 5, 1, 1, 7);
  CHECK_NOTHROW(d.validate());
  PanelDataset bad = d;
  bad.y = arma::mat(4, 3, arma::fill::zeros);
  CHECK_THROWS_AS(bad.validate(), pb_error);
  bad = d;
  bad.unit_labels.pop_back();
  CHECK_THROWS_AS(bad.validate(), pb_error);
  bad = d;
  bad.unit_labels.clear();  // unlabeled is fine, partially labeled is not
  CHECK_NOTHROW(bad.validate());
  PanelSchema s = basic_schema();
  std::ostringstream sink;
  CHECK_THROWS_AS(write_panel(sink, bad, s), pb_error);
  bad = d;
  bad.y(2, 1) = arma::datum::nan;
  CHECK_THROWS_AS(bad.validate(), pb_error);
}
