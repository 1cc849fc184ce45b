// C boundary. Options cross as JSON; results leave as pre-rendered JSON and
// text so callers never touch C++ types. Every entry point traps exceptions
// and maps them to status codes, with the message parked in a thread-local
// buffer for pb_last_error().

#include "panelbreak.h"

#include <algorithm>
#include <armadillo>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "panelbreak/breakci.hpp"
#include "panelbreak/critval.hpp"
#include "panelbreak/dp_search.hpp"
#include "panelbreak/estimator.hpp"
#include "panelbreak/ftests.hpp"
#include "panelbreak/hac.hpp"
#include "panelbreak/panel.hpp"
#include "panelbreak/report.hpp"
#include "panelbreak/simlab.hpp"
#include "panelbreak/types.hpp"

namespace pb = panelbreak;
using pb::json;

struct pb_panel {
  pb::PanelDataset data;
  pb::PanelSchema schema;
};

struct pb_result {
  std::string json_text;
  std::string text;
};

namespace {

constexpr const char* kVersion = "0.1.0";

thread_local std::string g_last_error;

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return 0;
  } catch (const pb::pb_error& e) {
    g_last_error = e.what();
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return static_cast<int>(pb::error_code::internal);
  } catch (...) {
    g_last_error = "unknown exception";
    return static_cast<int>(pb::error_code::internal);
  }
}

json parse_object(const char* s, const std::string& what) {
  if (s == nullptr || *s == '\0') return json::object();
  json j = json::parse(s, nullptr, false);
  if (j.is_discarded()) pb::fail_input(what + ": malformed JSON");
  if (!j.is_object()) pb::fail_input(what + ": expected a JSON object");
  return j;
}

void check_keys(const json& j, const std::string& what, std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed)
      if (it.key() == a) {
        ok = true;
        break;
      }
    if (!ok) pb::fail_input(what + ": unknown key '" + it.key() + "'");
  }
}

double get_num(const json& j, const char* key, double def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_number()) pb::fail_input(std::string("'") + key + "' must be a number");
  return v.get<double>();
}

int get_int(const json& j, const char* key, int def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_number_integer()) pb::fail_input(std::string("'") + key + "' must be an integer");
  return v.get<int>();
}

std::uint64_t get_u64(const json& j, const char* key, std::uint64_t def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_number_integer()) pb::fail_input(std::string("'") + key + "' must be an integer");
  if (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)
    pb::fail_input(std::string("'") + key + "' must be nonnegative");
  return v.get<std::uint64_t>();
}

bool get_bool(const json& j, const char* key, bool def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_boolean()) pb::fail_input(std::string("'") + key + "' must be true or false");
  return v.get<bool>();
}

std::string get_str(const json& j, const char* key, const std::string& def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_string()) pb::fail_input(std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

std::vector<int> get_int_vec(const json& j, const char* key) {
  std::vector<int> out;
  if (!j.contains(key)) return out;
  const json& v = j.at(key);
  if (!v.is_array()) pb::fail_input(std::string("'") + key + "' must be an array of integers");
  for (const json& e : v) {
    if (!e.is_number_integer()) pb::fail_input(std::string("'") + key + "' must be an array of integers");
    out.push_back(e.get<int>());
  }
  return out;
}

std::vector<double> get_dbl_vec(const json& j, const char* key, std::vector<double> def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_array()) pb::fail_input(std::string("'") + key + "' must be an array of numbers");
  std::vector<double> out;
  for (const json& e : v) {
    if (!e.is_number()) pb::fail_input(std::string("'") + key + "' must be an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<std::string> get_str_vec(const json& j, const char* key) {
  std::vector<std::string> out;
  if (!j.contains(key)) return out;
  const json& v = j.at(key);
  if (!v.is_array()) pb::fail_input(std::string("'") + key + "' must be an array of strings");
  for (const json& e : v) {
    if (!e.is_string()) pb::fail_input(std::string("'") + key + "' must be an array of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

arma::vec vec_from(const json& v, const std::string& what, int expect) {
  if (!v.is_array()) pb::fail_input(what + " must be an array of numbers");
  arma::vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) pb::fail_input(what + " must be an array of numbers");
    out(i) = v[i].get<double>();
  }
  if (expect >= 0 && static_cast<int>(out.n_elem) != expect)
    pb::fail_input(what + " must have length " + std::to_string(expect));
  return out;
}

arma::mat mat_from(const json& v, const std::string& what, int rows, int cols) {
  if (!v.is_array() || v.empty()) pb::fail_input(what + " must be a nonempty array of rows");
  arma::mat out(v.size(), v[0].is_array() ? v[0].size() : 0);
  for (std::size_t r = 0; r < v.size(); ++r) {
    const json& row = v[r];
    if (!row.is_array() || row.size() != out.n_cols)
      pb::fail_input(what + " rows must be equal-length arrays");
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (!row[c].is_number()) pb::fail_input(what + " entries must be numbers");
      out(r, c) = row[c].get<double>();
    }
  }
  if (rows >= 0 && static_cast<int>(out.n_rows) != rows)
    pb::fail_input(what + " must have " + std::to_string(rows) + " rows");
  if (cols >= 0 && static_cast<int>(out.n_cols) != cols)
    pb::fail_input(what + " must have " + std::to_string(cols) + " columns");
  return out;
}

json vec_json(const arma::vec& v) {
  json a = json::array();
  for (arma::uword i = 0; i < v.n_elem; ++i) a.push_back(v(i));
  return a;
}

json mat_json(const arma::mat& m) {
  json rows = json::array();
  for (arma::uword r = 0; r < m.n_rows; ++r) {
    json row = json::array();
    for (arma::uword c = 0; c < m.n_cols; ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

pb::PanelSchema schema_from_json(const char* schema_json) {
  json j = parse_object(schema_json, "schema");
  check_keys(j, "schema", {"unit", "period", "y", "x", "w", "observed"});
  pb::PanelSchema s;
  s.unit_col = get_str(j, "unit", "");
  s.period_col = get_str(j, "period", "");
  s.y_col = get_str(j, "y", "");
  s.x_cols = get_str_vec(j, "x");
  s.w_cols = get_str_vec(j, "w");
  s.observed_cols = get_str_vec(j, "observed");
  if (s.unit_col.empty() || s.period_col.empty() || s.y_col.empty())
    pb::fail_input("schema requires 'unit', 'period', and 'y' column names");
  if (s.w_cols.empty()) pb::fail_input("schema requires at least one 'w' column");
  return s;
}

// Generated panels keep their synthetic column names so they round-trip
// through CSV without a user-supplied schema.
pb::PanelSchema synthetic_schema(const pb::PanelDataset& data) {
  pb::PanelSchema s;
  s.unit_col = "unit";
  s.period_col = "period";
  s.y_col = "y";
  s.x_cols = data.x_names;
  s.w_cols = data.w_names;
  s.observed_cols = data.observed_names;
  return s;
}

struct TableRef {
  std::optional<pb::CriticalValueTable> owned;
  const pb::CriticalValueTable* ptr = nullptr;
};

// Three sources: the embedded table, a CSV file, or a fresh simulation sized
// to the request at hand.
struct CvChoice {
  std::string mode;  // "embedded", "file", "simulate"
  std::string path;
  int reps = 100000;
  int grid = 2000;
  std::uint64_t seed = 20260815;
};

CvChoice cv_choice_from(const json& j) {
  CvChoice c;
  c.path = get_str(j, "cv_table", "");
  c.mode = get_str(j, "cv", c.path.empty() ? "embedded" : "file");
  if (c.mode != "embedded" && c.mode != "simulate" && c.mode != "file")
    pb::fail_input("'cv' must be 'embedded' or 'simulate'");
  if (!c.path.empty() && c.mode != "file")
    pb::fail_input("'cv_table' already picks a file; drop the 'cv' mode");
  if (c.mode == "file" && c.path.empty()) pb::fail_input("'cv_table' path is empty");
  c.reps = get_int(j, "cv_reps", c.reps);
  c.grid = get_int(j, "cv_grid", c.grid);
  c.seed = get_u64(j, "cv_seed", c.seed);
  return c;
}

TableRef resolve_cv(const CvChoice& c, int p_w, double epsilon, int k_need, int threads) {
  TableRef ref;
  if (c.mode == "file") {
    ref.owned = pb::CriticalValueTable::read_csv_file(c.path);
    ref.ptr = &*ref.owned;
  } else if (c.mode == "simulate") {
    pb::CvSimRequest req;
    req.p_w = p_w;
    req.epsilon = epsilon;
    req.k_max = std::max(1, k_need);
    req.reps = c.reps;
    req.grid = c.grid;
    req.seed = c.seed;
    req.threads = threads;
    ref.owned = pb::simulate_critical_values(req);
    ref.ptr = &*ref.owned;
  } else {
    ref.ptr = &pb::CriticalValueTable::embedded();
  }
  return ref;
}

void echo_cv(json& cfg, const CvChoice& c) {
  cfg["cv"] = c.mode;
  if (c.mode == "file") cfg["cv_table"] = c.path;
  if (c.mode == "simulate") {
    cfg["cv_reps"] = c.reps;
    cfg["cv_grid"] = c.grid;
    cfg["cv_seed"] = c.seed;
  }
}

json envelope(const std::string& command, json config, const json* cv_provenance, json result) {
  json env;
  env["command"] = command;
  env["version"] = kVersion;
  env["config"] = std::move(config);
  if (cv_provenance != nullptr) env["cv_table"] = *cv_provenance;
  env["result"] = std::move(result);
  return env;
}

pb_result* make_result(const json& env, std::string text) {
  auto* r = new pb_result;
  r->json_text = pb::render_json(env);
  r->text = std::move(text);
  return r;
}

// Shared estimation settings; `what` scopes error messages.
pb::SearchOptions search_options_from(const json& j) {
  pb::SearchOptions opts;
  opts.trim.epsilon = get_num(j, "trim", opts.trim.epsilon);
  opts.trim.validate();
  opts.breaking_constant = get_bool(j, "breaking_constant", false);
  opts.max_iter = get_int(j, "max_iter", opts.max_iter);
  opts.multi_start = get_int(j, "multi_start", opts.multi_start);
  opts.seed = get_u64(j, "seed", opts.seed);
  if (opts.max_iter < 1) pb::fail_input("'max_iter' must be at least 1");
  if (opts.multi_start < 0) pb::fail_input("'multi_start' must be nonnegative");
  return opts;
}

pb::TestOptions test_options_from(const json& j, const TableRef& table) {
  pb::TestOptions opts;
  opts.trim.epsilon = get_num(j, "trim", opts.trim.epsilon);
  opts.trim.validate();
  opts.hac.bandwidth = get_int(j, "bandwidth", -1);
  opts.breaking_constant = get_bool(j, "breaking_constant", false);
  opts.levels = get_dbl_vec(j, "levels", opts.levels);
  opts.table = table.ptr;
  opts.unit_weights = get_bool(j, "unit_weights", false);
  opts.max_iter = get_int(j, "max_iter", opts.max_iter);
  opts.multi_start = get_int(j, "multi_start", opts.multi_start);
  opts.seed = get_u64(j, "seed", opts.seed);
  if (opts.max_iter < 1) pb::fail_input("'max_iter' must be at least 1");
  if (opts.multi_start < 0) pb::fail_input("'multi_start' must be nonnegative");
  return opts;
}

void append_common_echo(json& cfg, const json& j) {
  cfg["trim"] = get_num(j, "trim", 0.15);
  cfg["bandwidth"] = get_int(j, "bandwidth", -1);
  cfg["breaking_constant"] = get_bool(j, "breaking_constant", false);
  cfg["max_iter"] = get_int(j, "max_iter", 10);
  cfg["multi_start"] = get_int(j, "multi_start", 0);
  cfg["seed"] = get_u64(j, "seed", 0);
}

pb::DgpSpec dgp_from_json(const json& j) {
  check_keys(j, "dgp",
             {"n_units", "n_periods", "p_x", "p_w", "m", "breaks", "beta", "delta", "gamma_mean",
              "gamma_sd", "gx_mean", "gw_mean", "loading_sd", "factor_mean", "factor_sd",
              "factor_ar", "eps_sd", "eps_ar", "u_sd", "u_ar", "hetero", "seed"});
  int n_units = get_int(j, "n_units", 100);
  int n_periods = get_int(j, "n_periods", 50);
  int p_x = get_int(j, "p_x", 2);
  int p_w = get_int(j, "p_w", 2);
  int m = get_int(j, "m", 2);
  if (n_units < 1 || n_periods < 1) pb::fail_input("dgp dimensions must be positive");
  if (p_x < 0 || p_w < 1 || m < 0) pb::fail_input("dgp needs p_w >= 1, p_x >= 0, m >= 0");

  pb::DgpSpec spec = pb::DgpSpec::basic(n_units, n_periods, p_x, p_w, m);
  spec.breaks = get_int_vec(j, "breaks");
  int regimes = static_cast<int>(spec.breaks.size()) + 1;
  // Default coefficients stay flat across regimes; an explicit delta overrides.
  spec.delta = arma::repmat(spec.delta.row(0), regimes, 1);
  if (j.contains("beta")) spec.beta = vec_from(j.at("beta"), "dgp.beta", p_x);
  if (j.contains("delta")) spec.delta = mat_from(j.at("delta"), "dgp.delta", regimes, p_w);
  if (j.contains("gamma_mean")) spec.gamma_mean = vec_from(j.at("gamma_mean"), "dgp.gamma_mean", m);
  if (j.contains("gx_mean")) spec.gx_mean = mat_from(j.at("gx_mean"), "dgp.gx_mean", m, p_x);
  if (j.contains("gw_mean")) spec.gw_mean = mat_from(j.at("gw_mean"), "dgp.gw_mean", m, p_w);
  spec.gamma_sd = get_num(j, "gamma_sd", spec.gamma_sd);
  spec.loading_sd = get_num(j, "loading_sd", spec.loading_sd);
  spec.factor_mean = get_num(j, "factor_mean", spec.factor_mean);
  spec.factor_sd = get_num(j, "factor_sd", spec.factor_sd);
  spec.factor_ar = get_num(j, "factor_ar", spec.factor_ar);
  spec.eps_sd = get_num(j, "eps_sd", spec.eps_sd);
  spec.eps_ar = get_num(j, "eps_ar", spec.eps_ar);
  spec.u_sd = get_num(j, "u_sd", spec.u_sd);
  spec.u_ar = get_num(j, "u_ar", spec.u_ar);
  spec.hetero = get_num(j, "hetero", spec.hetero);
  spec.seed = get_u64(j, "seed", spec.seed);
  spec.validate();
  return spec;
}

json dgp_echo(const pb::DgpSpec& s) {
  json j;
  j["n_units"] = s.n_units;
  j["n_periods"] = s.n_periods;
  j["p_x"] = s.p_x;
  j["p_w"] = s.p_w;
  j["m"] = s.m;
  j["breaks"] = s.breaks;
  j["beta"] = vec_json(s.beta);
  j["delta"] = mat_json(s.delta);
  j["gamma_mean"] = vec_json(s.gamma_mean);
  j["gamma_sd"] = s.gamma_sd;
  j["gx_mean"] = mat_json(s.gx_mean);
  j["gw_mean"] = mat_json(s.gw_mean);
  j["loading_sd"] = s.loading_sd;
  j["factor_mean"] = s.factor_mean;
  j["factor_sd"] = s.factor_sd;
  j["factor_ar"] = s.factor_ar;
  j["eps_sd"] = s.eps_sd;
  j["eps_ar"] = s.eps_ar;
  j["u_sd"] = s.u_sd;
  j["u_ar"] = s.u_ar;
  j["hetero"] = s.hetero;
  j["seed"] = s.seed;
  return j;
}

void require_panel(const pb_panel* panel) {
  if (panel == nullptr) pb::fail_input("null panel handle");
}

void require_out(const void* out) {
  if (out == nullptr) pb::fail_input("null output pointer");
}

}  // namespace

extern "C" {

const char* pb_version(void) { return kVersion; }

const char* pb_last_error(void) { return g_last_error.c_str(); }

int pb_panel_load_csv(const char* path, const char* schema_json, pb_panel** out) {
  return guarded([&] {
    require_out(out);
    if (path == nullptr) pb::fail_input("null path");
    pb::PanelSchema schema = schema_from_json(schema_json);
    auto* p = new pb_panel{pb::load_panel_file(path, schema), schema};
    *out = p;
  });
}

int pb_panel_parse_csv(const char* text, const char* schema_json, pb_panel** out) {
  return guarded([&] {
    require_out(out);
    if (text == nullptr) pb::fail_input("null CSV text");
    pb::PanelSchema schema = schema_from_json(schema_json);
    std::istringstream in{std::string(text)};
    auto* p = new pb_panel{pb::load_panel(in, schema), schema};
    *out = p;
  });
}

int pb_panel_write_csv(const pb_panel* panel, const char* path) {
  return guarded([&] {
    require_panel(panel);
    if (path == nullptr) pb::fail_input("null path");
    std::ofstream out(path);
    if (!out) pb::fail_input(std::string("cannot open '") + path + "' for writing");
    pb::write_panel(out, panel->data, panel->schema);
    if (!out) pb::fail_input(std::string("write to '") + path + "' failed");
  });
}

int pb_panel_dims(const pb_panel* panel, int* n_units, int* n_periods, int* p_x, int* p_w,
                  int* p_observed) {
  return guarded([&] {
    require_panel(panel);
    if (n_units) *n_units = panel->data.n_units();
    if (n_periods) *n_periods = panel->data.n_periods();
    if (p_x) *p_x = panel->data.p_x();
    if (p_w) *p_w = panel->data.p_w();
    if (p_observed) *p_observed = panel->data.p_observed();
  });
}

void pb_panel_free(pb_panel* panel) { delete panel; }

int pb_generate(const char* dgp_json, pb_panel** out, pb_result** truth_out) {
  return guarded([&] {
    require_out(out);
    json j = parse_object(dgp_json, "dgp");
    pb::DgpSpec spec = dgp_from_json(j);
    pb::GeneratedPanel gen = pb::generate(spec);
    if (truth_out != nullptr) {
      json truth;
      truth["breaks"] = gen.truth.breaks;
      truth["beta"] = vec_json(gen.truth.beta);
      truth["delta"] = mat_json(gen.truth.delta);
      json env = envelope("generate", dgp_echo(spec), nullptr, truth);
      std::string text = "generated panel: " + std::to_string(spec.n_units) + " units x " +
                         std::to_string(spec.n_periods) + " periods, true breaks:";
      if (gen.truth.breaks.empty()) text += " none";
      for (int b : gen.truth.breaks) text += " " + std::to_string(b);
      text += "\n";
      *truth_out = make_result(env, text);
    }
    pb::PanelSchema schema = synthetic_schema(gen.data);
    *out = new pb_panel{std::move(gen.data), std::move(schema)};
  });
}

int pb_estimate(const pb_panel* panel, const char* options_json, pb_result** out) {
  return guarded([&] {
    require_panel(panel);
    require_out(out);
    json j = parse_object(options_json, "options");
    check_keys(j, "options",
               {"k", "dates", "trim", "breaking_constant", "max_iter", "multi_start", "seed",
                "bandwidth"});
    pb::BreakSet dates = get_int_vec(j, "dates");
    bool has_k = j.contains("k");
    if (has_k && !dates.empty()) pb::fail_input("give either 'k' or 'dates', not both");
    if (!has_k && dates.empty() && !j.contains("dates"))
      pb::fail_input("estimation needs 'k' (number of breaks) or 'dates'");

    pb::SearchOptions opts = search_options_from(j);
    pb::HacSpec hac;
    hac.bandwidth = get_int(j, "bandwidth", -1);

    json cfg = json::object();
    if (has_k)
      cfg["k"] = get_int(j, "k", 0);
    else
      cfg["dates"] = dates;
    append_common_echo(cfg, j);

    json result;
    std::string text;
    if (has_k) {
      int k = get_int(j, "k", 0);
      if (k < 0) pb::fail_input("'k' must be nonnegative");
      pb::SearchResult sr = pb::estimate_breaks(panel->data, k, opts);
      pb::CovarianceEstimate cov = pb::hac_covariance(sr.fit, hac);
      result = pb::to_json(sr);
      result["bandwidth"] = cov.bandwidth;
      text = pb::text_coef_table(sr.fit, cov, panel->data.w_names);
      if (!sr.breaks.empty())
        text += "\n" + pb::text_break_table(sr.breaks, nullptr, &panel->data.period_labels);
    } else {
      pb::validate_breaks(dates, panel->data.n_periods());
      pb::FitResult fit = pb::fit_at(panel->data, dates, opts.breaking_constant);
      pb::CovarianceEstimate cov = pb::hac_covariance(fit, hac);
      result = pb::to_json(fit);
      result["bandwidth"] = cov.bandwidth;
      text = pb::text_coef_table(fit, cov, panel->data.w_names);
      if (!dates.empty())
        text += "\n" + pb::text_break_table(dates, nullptr, &panel->data.period_labels);
    }
    *out = make_result(envelope("estimate", std::move(cfg), nullptr, std::move(result)), text);
  });
}

int pb_test(const pb_panel* panel, const char* test_kind, const char* options_json,
            pb_result** out) {
  return guarded([&] {
    require_panel(panel);
    require_out(out);
    if (test_kind == nullptr) pb::fail_input("null test kind");
    std::string kind(test_kind);
    json j = parse_object(options_json, "options");
    check_keys(j, "options",
               {"k", "dates", "trim", "bandwidth", "breaking_constant", "levels", "cv",
                "cv_table", "cv_reps", "cv_grid", "cv_seed", "unit_weights", "max_iter",
                "multi_start", "seed", "threads"});

    pb::BreakSet dates = get_int_vec(j, "dates");
    bool has_k = j.contains("k");
    int k = get_int(j, "k", 0);
    int threads = get_int(j, "threads", 1);
    if (threads < 1) pb::fail_input("'threads' must be at least 1");

    CvChoice choice = cv_choice_from(j);
    double eps = get_num(j, "trim", 0.15);
    int k_need = (kind == "supf" || kind == "wdmax") ? k : 1;
    TableRef table = resolve_cv(choice, panel->data.p_w(), eps, k_need, threads);
    pb::TestOptions opts = test_options_from(j, table);

    pb::TestReport rep;
    bool uses_table = true;
    if (kind == "supf") {
      if (!has_k || k < 1) pb::fail_input("supf needs 'k' >= 1");
      if (!dates.empty()) pb::fail_input("supf estimates its dates; 'dates' is not accepted");
      rep = pb::sup_f(panel->data, k, opts);
    } else if (kind == "wdmax") {
      if (!has_k || k < 1) pb::fail_input("wdmax needs 'k' >= 1 (the largest break count)");
      if (!dates.empty()) pb::fail_input("wdmax estimates its dates; 'dates' is not accepted");
      rep = pb::wdmax_f(panel->data, k, opts);
    } else if (kind == "seqf") {
      if (has_k && j.contains("dates")) pb::fail_input("give either 'k' or 'dates', not both");
      if (j.contains("dates"))
        rep = pb::seq_f(panel->data, dates, opts);
      else if (has_k)
        rep = pb::seq_f_at(panel->data, k, opts);
      else
        pb::fail_input("seqf needs the null break set: 'dates' or 'k'");
    } else if (kind == "fstat") {
      if (dates.empty()) pb::fail_input("fstat needs the break 'dates' under test");
      if (has_k) pb::fail_input("fstat takes 'dates', not 'k'");
      rep = pb::f_known(panel->data, dates, opts);
      uses_table = false;
    } else {
      pb::fail_input("unknown test kind '" + kind + "' (supf, wdmax, seqf, fstat)");
    }

    json cfg;
    cfg["kind"] = kind;
    if (has_k) cfg["k"] = k;
    if (j.contains("dates")) cfg["dates"] = dates;
    append_common_echo(cfg, j);
    cfg["levels"] = opts.levels;
    echo_cv(cfg, choice);
    cfg["unit_weights"] = opts.unit_weights;

    json prov;
    const json* prov_ptr = nullptr;
    if (uses_table) {
      prov = pb::to_json(table.ptr->provenance);
      prov_ptr = &prov;
    }
    *out = make_result(envelope("test", std::move(cfg), prov_ptr, pb::to_json(rep)),
                       pb::text_test(rep));
  });
}

int pb_confidence(const pb_panel* panel, const char* options_json, pb_result** out) {
  return guarded([&] {
    require_panel(panel);
    require_out(out);
    json j = parse_object(options_json, "options");
    check_keys(j, "options",
               {"alpha", "k", "dates", "trim", "bandwidth", "breaking_constant", "max_iter",
                "multi_start", "seed", "threads"});
    double alpha = get_num(j, "alpha", 0.05);
    if (!(alpha > 0.0) || !(alpha < 1.0)) pb::fail_input("'alpha' must lie in (0, 1)");
    int threads = get_int(j, "threads", 1);
    if (threads < 1) pb::fail_input("'threads' must be at least 1");

    pb::BreakSet dates = get_int_vec(j, "dates");
    bool has_k = j.contains("k");
    if (has_k && !dates.empty()) pb::fail_input("give either 'k' or 'dates', not both");
    if (!has_k && dates.empty())
      pb::fail_input("confidence intervals need 'dates' or 'k' (breaks to estimate first)");

    pb::SearchOptions sopts = search_options_from(j);
    if (has_k) {
      int k = get_int(j, "k", 0);
      if (k < 1) pb::fail_input("'k' must be at least 1; zero breaks have no dates to bound");
      dates = pb::estimate_breaks(panel->data, k, sopts).breaks;
    } else {
      pb::validate_breaks(dates, panel->data.n_periods());
    }

    pb::ConfidenceOptions copts;
    copts.alpha = alpha;
    copts.hac.bandwidth = get_int(j, "bandwidth", -1);
    copts.breaking_constant = sopts.breaking_constant;
    copts.threads = threads;
    std::vector<pb::BreakInterval> cis = pb::break_confidence(panel->data, dates, copts);

    json cfg;
    cfg["alpha"] = alpha;
    if (has_k)
      cfg["k"] = get_int(j, "k", 0);
    else
      cfg["dates"] = dates;
    append_common_echo(cfg, j);
    cfg["threads"] = threads;

    json result;
    result["breaks"] = dates;
    result["intervals"] = pb::to_json(cis);
    *out = make_result(envelope("ci", std::move(cfg), nullptr, std::move(result)),
                       pb::text_break_table(dates, &cis, &panel->data.period_labels));
  });
}

int pb_num_breaks(const pb_panel* panel, const char* options_json, pb_result** out) {
  return guarded([&] {
    require_panel(panel);
    require_out(out);
    json j = parse_object(options_json, "options");
    check_keys(j, "options",
               {"k_cap", "alpha", "trim", "bandwidth", "breaking_constant", "cv", "cv_table",
                "cv_reps", "cv_grid", "cv_seed", "max_iter", "multi_start", "seed", "threads"});
    int k_cap = get_int(j, "k_cap", 5);
    double alpha = get_num(j, "alpha", 0.05);
    if (k_cap < 1) pb::fail_input("'k_cap' must be at least 1");
    if (!(alpha > 0.0) || !(alpha < 0.5)) pb::fail_input("'alpha' must lie in (0, 0.5)");
    int threads = get_int(j, "threads", 1);
    if (threads < 1) pb::fail_input("'threads' must be at least 1");

    CvChoice choice = cv_choice_from(j);
    TableRef table = resolve_cv(choice, panel->data.p_w(), get_num(j, "trim", 0.15), 1, threads);
    pb::TestOptions opts = test_options_from(j, table);
    pb::KhatReport rep = pb::estimate_num_breaks(panel->data, k_cap, alpha, opts);

    json cfg;
    cfg["k_cap"] = k_cap;
    cfg["alpha"] = alpha;
    append_common_echo(cfg, j);
    echo_cv(cfg, choice);

    json prov = pb::to_json(table.ptr->provenance);
    *out = make_result(envelope("khat", std::move(cfg), &prov, pb::to_json(rep)),
                       pb::text_khat(rep, &panel->data.period_labels));
  });
}

int pb_cv_simulate(const char* options_json, pb_result** out) {
  return guarded([&] {
    require_out(out);
    json j = parse_object(options_json, "options");
    check_keys(j, "options",
               {"p_w", "trim", "k_max", "reps", "grid", "seed", "threads", "levels", "out",
                "merge_into"});
    pb::CvSimRequest req;
    req.p_w = get_int(j, "p_w", req.p_w);
    req.epsilon = get_num(j, "trim", req.epsilon);
    req.k_max = get_int(j, "k_max", req.k_max);
    req.reps = get_int(j, "reps", req.reps);
    req.grid = get_int(j, "grid", req.grid);
    req.seed = get_u64(j, "seed", req.seed);
    req.threads = get_int(j, "threads", req.threads);
    req.levels = get_dbl_vec(j, "levels", req.levels);
    std::string out_path = get_str(j, "out", "");
    std::string merge_into = get_str(j, "merge_into", "");

    pb::CriticalValueTable table = pb::simulate_critical_values(req);
    if (!merge_into.empty()) {
      pb::CriticalValueTable base = pb::CriticalValueTable::read_csv_file(merge_into);
      base.merge(table);
      table = std::move(base);
      if (out_path.empty()) out_path = merge_into;
    }
    if (!out_path.empty()) {
      std::ofstream os(out_path);
      if (!os) pb::fail_input("cannot open '" + out_path + "' for writing");
      table.write_csv(os);
      if (!os) pb::fail_input("write to '" + out_path + "' failed");
    }

    json cfg;
    cfg["p_w"] = req.p_w;
    cfg["trim"] = req.epsilon;
    cfg["k_max"] = req.k_max;
    cfg["reps"] = req.reps;
    cfg["grid"] = req.grid;
    cfg["seed"] = req.seed;
    cfg["threads"] = req.threads;
    cfg["levels"] = req.levels;
    if (!out_path.empty()) cfg["out"] = out_path;
    if (!merge_into.empty()) cfg["merge_into"] = merge_into;

    json result = pb::table_summary_json(table);
    if (!out_path.empty()) result["written"] = out_path;
    std::string text = "critical value table: " + std::to_string(table.sup_entries.size()) +
                       " sup entries, " + std::to_string(table.max_entries.size()) +
                       " max-test entries";
    if (!out_path.empty()) text += ", written to " + out_path;
    text += "\n";
    *out = make_result(envelope("cv simulate", std::move(cfg), nullptr, std::move(result)), text);
  });
}

int pb_mc_experiment(const char* config_json, pb_result** out) {
  return guarded([&] {
    require_out(out);
    json j = parse_object(config_json, "config");
    check_keys(j, "config",
               {"kind", "dgp", "reps", "test_kind", "k_test", "alpha", "k_cap", "threads", "trim",
                "bandwidth", "breaking_constant", "cv", "cv_table", "cv_reps", "cv_grid",
                "cv_seed", "unit_weights", "max_iter", "multi_start", "seed"});
    pb::ExperimentConfig cfg;
    cfg.kind = pb::experiment_kind_from(get_str(j, "kind", "size"));
    cfg.dgp = dgp_from_json(j.contains("dgp") ? j.at("dgp") : json::object());
    cfg.reps = get_int(j, "reps", cfg.reps);
    cfg.test_kind = get_str(j, "test_kind", cfg.test_kind);
    cfg.k_test = get_int(j, "k_test", cfg.k_test);
    cfg.alpha = get_num(j, "alpha", cfg.alpha);
    cfg.k_cap = get_int(j, "k_cap", cfg.k_cap);
    cfg.threads = get_int(j, "threads", cfg.threads);
    if (cfg.threads < 1) pb::fail_input("'threads' must be at least 1");

    CvChoice choice = cv_choice_from(j);
    int k_need = cfg.test_kind == "seqf" || cfg.kind == pb::ExperimentKind::khat ? 1 : cfg.k_test;
    TableRef table =
        resolve_cv(choice, cfg.dgp.p_w, get_num(j, "trim", 0.15), k_need, cfg.threads);
    cfg.test = test_options_from(j, table);
    pb::McReport rep = pb::run_experiment(cfg);

    json echo;
    echo["kind"] = pb::to_string(cfg.kind);
    echo["dgp"] = dgp_echo(cfg.dgp);
    echo["reps"] = cfg.reps;
    echo["test_kind"] = cfg.test_kind;
    echo["k_test"] = cfg.k_test;
    echo["alpha"] = cfg.alpha;
    echo["k_cap"] = cfg.k_cap;
    echo["threads"] = cfg.threads;
    append_common_echo(echo, j);
    echo_cv(echo, choice);
    echo["unit_weights"] = cfg.test.unit_weights;

    bool uses_table = cfg.kind == pb::ExperimentKind::size ||
                      cfg.kind == pb::ExperimentKind::power ||
                      cfg.kind == pb::ExperimentKind::khat;
    json prov;
    const json* prov_ptr = nullptr;
    if (uses_table) {
      prov = pb::to_json(table.ptr->provenance);
      prov_ptr = &prov;
    }
    *out = make_result(envelope("simulate", std::move(echo), prov_ptr, pb::to_json(rep)),
                       pb::text_mc(rep));
  });
}

const char* pb_result_json(const pb_result* result) {
  return result == nullptr ? nullptr : result->json_text.c_str();
}

const char* pb_result_text(const pb_result* result) {
  return result == nullptr ? nullptr : result->text.c_str();
}

void pb_result_free(pb_result* result) { delete result; }

}  // extern "C"
