#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <armadillo>
#include <cmath>

#include "panelbreak/critval.hpp"
#include "panelbreak/rng.hpp"
#include "panelbreak/simlab.hpp"
#include "panelbreak/types.hpp"

using namespace panelbreak;

namespace {

const CriticalValueTable& test_table() {
  static CriticalValueTable table = [] {
    CvSimRequest req;
    req.p_w = 1;
    req.epsilon = 0.15;
    req.k_max = 3;
    req.reps = 3000;
    req.grid = 200;
    req.seed = 42;
    req.threads = 8;
    return simulate_critical_values(req);
  }();
  return table;
}

TestOptions table_options() {
  TestOptions opts;
  opts.trim.epsilon = 0.15;
  opts.table = &test_table();
  return opts;
}

// Pooled first-order autocorrelation of a T x N matrix, columns independent.
double pooled_ar1(const arma::mat& z) {
  double num = 0.0, den = 0.0;
  arma::mat c = z.each_row() - arma::mean(z, 0);
  for (arma::uword i = 0; i < c.n_cols; ++i) {
    for (arma::uword t = 1; t < c.n_rows; ++t) num += c(t, i) * c(t - 1, i);
    den += arma::dot(c.col(i), c.col(i));
  }
  return num / den;
}

}  // namespace

TEST_CASE("spec validation rejects every malformed field") {
  DgpSpec good = DgpSpec::basic(50, 40, 2, 2, 2);
  good.validate();

  DgpSpec s = good;
  s.n_units = 1;
  CHECK_THROWS_AS(s.validate(), pb_error);
  s = good;
  s.p_w = 0;
  CHECK_THROWS_AS(s.validate(), pb_error);
  s = good;
  s.beta = arma::vec(3, arma::fill::ones);
  CHECK_THROWS_AS(s.validate(), pb_error);
  s = good;
  s.breaks = {20};  // delta still has one row
  CHECK_THROWS_AS(s.validate(), pb_error);
  s = good;
  s.breaks = {40};  // last period cannot end a regime early
  CHECK_THROWS_AS(s.validate(), pb_error);
  s = good;
  s.gamma_mean = arma::vec(1, arma::fill::ones);
  CHECK_THROWS_AS(s.validate(), pb_error);
  s = good;
  s.factor_ar = 1.0;
  CHECK_THROWS_AS(s.validate(), pb_error);
  s = good;
  s.eps_sd = -0.1;
  CHECK_THROWS_AS(s.validate(), pb_error);
  s = good;
  s.hetero = 1.5;
  CHECK_THROWS_AS(s.validate(), pb_error);
}

TEST_CASE("generation is a pure function of the spec") {
  DgpSpec spec = DgpSpec::basic(30, 25, 1, 2, 2);
  spec.breaks = {12};
  spec.delta = arma::mat{{1.0, 0.5}, {2.0, 0.5}};
  spec.seed = 77;
  GeneratedPanel a = generate(spec);
  GeneratedPanel b = generate(spec);
  CHECK(arma::approx_equal(a.data.y, b.data.y, "absdiff", 0.0));
  CHECK(arma::approx_equal(arma::mat(a.data.w.slice(7)), arma::mat(b.data.w.slice(7)), "absdiff",
                           0.0));
  spec.seed = 78;
  GeneratedPanel c = generate(spec);
  CHECK(!arma::approx_equal(a.data.y, c.data.y, "absdiff", 1e-12));

  CHECK(a.data.n_units() == 30);
  CHECK(a.data.n_periods() == 25);
  CHECK(a.data.unit_labels.front() == "u1");
  CHECK(a.data.unit_labels.back() == "u30");
  CHECK(a.data.period_labels[11] == "12");
  CHECK(a.data.x_names == std::vector<std::string>{"x1"});
  CHECK(a.data.w_names == std::vector<std::string>{"w1", "w2"});
  CHECK(a.truth.breaks == BreakSet{12});
  CHECK(a.truth.delta(1, 0) == 2.0);
  CHECK(a.truth.beta(0) == 1.0);
}

TEST_CASE("ar coefficients shape persistence but not the marginal spread") {
  DgpSpec spec = DgpSpec::basic(400, 80, 0, 1, 0);
  spec.seed = 5;
  spec.u_ar = 0.7;
  spec.eps_ar = 0.6;
  GeneratedPanel g = generate(spec);
  arma::mat w0(g.data.w.n_rows, g.data.w.n_slices);
  for (arma::uword i = 0; i < g.data.w.n_slices; ++i) w0.col(i) = g.data.w.slice(i).col(0);
  CHECK(pooled_ar1(w0) == doctest::Approx(0.7).epsilon(0.05));
  // m = 0 and p_x = 0, so y minus the regime effect is the error itself
  arma::mat eps = g.data.y - w0;  // delta is identically one
  CHECK(pooled_ar1(eps) == doctest::Approx(0.6).epsilon(0.06));
  CHECK(arma::stddev(arma::vectorise(w0)) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(arma::stddev(arma::vectorise(eps)) == doctest::Approx(1.0).epsilon(0.05));

  spec.u_ar = 0.0;
  spec.eps_ar = 0.0;
  GeneratedPanel h = generate(spec);
  arma::mat w1(h.data.w.n_rows, h.data.w.n_slices);
  for (arma::uword i = 0; i < h.data.w.n_slices; ++i) w1.col(i) = h.data.w.slice(i).col(0);
  CHECK(std::fabs(pooled_ar1(w1)) < 0.04);
  CHECK(arma::stddev(arma::vectorise(w1)) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("heteroskedasticity spreads the per-unit error scale") {
  DgpSpec spec = DgpSpec::basic(200, 80, 0, 1, 0);
  spec.delta.zeros();  // y is pure error
  spec.seed = 6;
  spec.hetero = 0.0;
  arma::mat y0 = generate(spec).data.y;
  spec.hetero = 1.0;
  arma::mat y1 = generate(spec).data.y;
  arma::rowvec v0 = arma::var(y0, 0, 0), v1 = arma::var(y1, 0, 0);
  CHECK(arma::var(v1.t()) > 4.0 * arma::var(v0.t()));
}

TEST_CASE("experiment kinds round trip and reject unknown names") {
  for (const char* name : {"size", "power", "hit_rate", "khat", "coverage"}) {
    CHECK(to_string(experiment_kind_from(name)) == name);
  }
  CHECK(experiment_kind_from("hitrate") == ExperimentKind::hit_rate);
  CHECK_THROWS_AS(experiment_kind_from("zap"), pb_error);
}

TEST_CASE("experiment configuration validation happens before any replication") {
  ExperimentConfig cfg;
  cfg.dgp = DgpSpec::basic(20, 30, 0, 1, 1);
  cfg.test = table_options();
  cfg.reps = 50;
  CHECK_THROWS_AS(run_experiment(cfg), pb_error);
  cfg.reps = 100;
  cfg.alpha = 0.6;
  CHECK_THROWS_AS(run_experiment(cfg), pb_error);
  cfg.alpha = 0.05;
  cfg.test_kind = "zap";
  CHECK_THROWS_AS(run_experiment(cfg), pb_error);
  cfg.test_kind = "supf";
  cfg.k_test = 0;
  CHECK_THROWS_AS(run_experiment(cfg), pb_error);
  cfg.k_test = 1;
  cfg.kind = ExperimentKind::hit_rate;  // no true breaks in the DGP
  CHECK_THROWS_AS(run_experiment(cfg), pb_error);
  cfg.kind = ExperimentKind::khat;
  cfg.k_cap = 0;
  CHECK_THROWS_AS(run_experiment(cfg), pb_error);
  // table has p_w = 1 entries only
  cfg.kind = ExperimentKind::size;
  cfg.dgp = DgpSpec::basic(20, 30, 0, 2, 1);
  CHECK_THROWS_AS(run_experiment(cfg), pb_error);
}

TEST_CASE("size stays near the level and the run is reproducible across threads") {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::size;
  cfg.dgp = DgpSpec::basic(20, 30, 0, 1, 1);
  cfg.dgp.seed = 100;
  cfg.reps = 200;
  cfg.test = table_options();
  cfg.test_kind = "supf";
  cfg.k_test = 1;
  cfg.alpha = 0.05;
  cfg.threads = 8;
  McReport r = run_experiment(cfg);
  CHECK(r.kind == "size");
  CHECK(r.reps == 200);
  CHECK(r.failures == 0);
  CHECK(r.per_seed.size() == 200);
  CHECK(r.rate >= 0.0);
  CHECK(r.rate < 0.2);
  CHECK(r.rate_se == doctest::Approx(std::sqrt(r.rate * (1.0 - r.rate) / 200.0)));
  CHECK(r.extras.at("failure_rate") == 0.0);
  CHECK(r.extras.at("mean_statistic") > 0.0);

  cfg.threads = 1;
  McReport r1 = run_experiment(cfg);
  CHECK(r1.rate == r.rate);
  CHECK(r1.per_seed == r.per_seed);

  // replication seeds depend on the index only, so a shorter run is a prefix
  cfg.reps = 100;
  cfg.threads = 8;
  McReport rp = run_experiment(cfg);
  for (int i = 0; i < 100; ++i) CHECK(rp.per_seed[i] == r.per_seed[i]);
}

TEST_CASE("a real shift moves power and sequential size stays honest") {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::power;
  cfg.dgp = DgpSpec::basic(20, 30, 0, 1, 1);
  cfg.dgp.breaks = {15};
  cfg.dgp.delta = arma::mat(arma::vec{0.0, 1.0});
  cfg.dgp.seed = 200;
  cfg.reps = 100;
  cfg.test = table_options();
  cfg.test_kind = "supf";
  cfg.k_test = 1;
  cfg.threads = 8;
  McReport power = run_experiment(cfg);
  CHECK(power.failures == 0);
  CHECK(power.rate > 0.8);

  cfg.test_kind = "wdmax";
  cfg.k_test = 3;
  McReport wd = run_experiment(cfg);
  CHECK(wd.failures == 0);
  CHECK(wd.rate > 0.8);

  // the null "exactly one break" is true here, so seqf rejects rarely
  cfg.kind = ExperimentKind::size;
  cfg.test_kind = "seqf";
  McReport seq = run_experiment(cfg);
  CHECK(seq.failures == 0);
  CHECK(seq.rate < 0.25);
}

TEST_CASE("strong breaks are found exactly and counted correctly") {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::hit_rate;
  cfg.dgp = DgpSpec::basic(100, 20, 1, 1, 1);
  cfg.dgp.breaks = {10};
  cfg.dgp.delta = arma::mat(arma::vec{0.5, 2.0});
  cfg.dgp.seed = 300;
  cfg.reps = 100;
  cfg.test = table_options();
  cfg.threads = 8;
  McReport hit = run_experiment(cfg);
  CHECK(hit.failures == 0);
  CHECK(hit.rate > 0.9);
  CHECK(hit.extras.at("mean_abs_error") < 0.2);

  cfg.kind = ExperimentKind::khat;
  cfg.dgp.n_periods = 30;
  cfg.dgp.breaks = {15};
  cfg.k_cap = 3;
  McReport kh = run_experiment(cfg);
  CHECK(kh.failures == 0);
  CHECK(kh.rate > 0.7);
  CHECK(kh.extras.at("mean_khat") == doctest::Approx(1.0).epsilon(0.35));
  double mass = 0.0;
  for (int k = 0; k <= 3; ++k) mass += kh.extras.at("freq_khat_" + std::to_string(k));
  CHECK(mass == doctest::Approx(1.0));
  CHECK(kh.extras.at("freq_khat_1") == kh.rate);
}

TEST_CASE("intervals from estimated dates cover the truth at roughly the nominal rate") {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::coverage;
  cfg.dgp = DgpSpec::basic(150, 40, 0, 1, 1);
  cfg.dgp.breaks = {20};
  cfg.dgp.delta = arma::mat(arma::vec{1.0, 1.8});
  cfg.dgp.seed = 400;
  cfg.reps = 100;
  cfg.test = table_options();
  cfg.alpha = 0.05;
  cfg.threads = 8;
  McReport cov = run_experiment(cfg);
  CHECK(cov.failures == 0);
  CHECK(cov.rate > 0.8);
  CHECK(cov.rate <= 1.0);
  CHECK(cov.extras.at("mean_half_width") > 0.0);
  CHECK(cov.extras.at("cover_break_1") == cov.rate);
}

TEST_CASE("replication failures are counted and sampled, not hidden") {
  // two units cannot support four breaking coefficients: every fit is
  // infeasible, every replication fails
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::hit_rate;
  cfg.dgp = DgpSpec::basic(2, 8, 2, 2, 2);
  cfg.dgp.breaks = {4};
  cfg.dgp.delta = arma::mat(2, 2, arma::fill::ones);
  cfg.reps = 100;
  cfg.test = table_options();
  cfg.threads = 4;
  McReport r = run_experiment(cfg);
  CHECK(r.failures == 100);
  CHECK(std::isnan(r.rate));
  CHECK(r.extras.at("failure_rate") == 1.0);
  REQUIRE(!r.failure_samples.empty());
  CHECK(r.failure_samples.size() <= 5);
  CHECK(!r.failure_samples[0].empty());
  for (double v : r.per_seed) CHECK(std::isnan(v));
}
