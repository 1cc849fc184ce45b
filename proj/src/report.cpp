#include "panelbreak/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <boost/math/distributions/fisher_f.hpp>

namespace panelbreak {

namespace {

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

json breaks_json(const BreakSet& b) {
  json a = json::array();
  for (int d : b) a.push_back(d);
  return a;
}

std::string fmt(double v, int prec = 4) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string date_label(int date, const std::vector<std::string>* labels) {
  if (labels && date >= 1 && date <= static_cast<int>(labels->size()))
    return (*labels)[date - 1];
  return std::to_string(date);
}

// * 10%, ** 5%, *** 1%
std::string stars(double p_value) {
  if (p_value <= 0.01) return "***";
  if (p_value <= 0.05) return "**";
  if (p_value <= 0.10) return "*";
  return "";
}

}  // namespace

json to_json(const FitResult& fit) {
  json j;
  j["breaks"] = breaks_json(fit.breaks);
  j["ssr"] = fit.ssr;
  j["beta"] = vec_json(fit.beta);
  j["delta"] = mat_json(fit.delta);
  j["delta_increments"] = mat_json(fit.delta_increments);
  j["n_units"] = fit.n_units;
  j["n_periods"] = fit.n_periods;
  j["p_x"] = fit.p_x;
  j["p_w"] = fit.p_w;
  return j;
}

json to_json(const SearchResult& sr) {
  json j;
  j["breaks"] = breaks_json(sr.breaks);
  j["ssr"] = sr.ssr;
  j["converged"] = sr.converged;
  j["iterations"] = sr.iterations;
  json per_k = json::array();
  for (std::size_t k = 0; k < sr.per_k.size(); ++k) {
    json e;
    e["k"] = static_cast<int>(k);
    e["breaks"] = breaks_json(sr.per_k[k].breaks);
    e["ssr"] = sr.per_k[k].ssr;
    per_k.push_back(e);
  }
  j["per_k"] = per_k;
  j["fit"] = to_json(sr.fit);
  return j;
}

json to_json(const TestReport& rep) {
  json j;
  j["kind"] = rep.kind;
  j["k"] = rep.k;
  j["statistic"] = rep.statistic;
  j["levels"] = rep.levels;
  j["critical_values"] = rep.critical_values;
  j["p_value"] = rep.p_value;  // NaN serializes as null
  j["breaks"] = breaks_json(rep.breaks);
  j["dof"] = json::array({rep.dof_num, rep.dof_den});
  j["bandwidth"] = rep.bandwidth;
  j["cv_source"] = rep.cv_source;
  if (rep.kind == "wdmax") {
    j["per_k_statistics"] = rep.per_k_stats;
    json pkb = json::array();
    for (const auto& b : rep.per_k_breaks) pkb.push_back(breaks_json(b));
    j["per_k_breaks"] = pkb;
    j["weights"] = rep.weights;
    j["statistics_by_level"] = rep.statistics_by_level;
    j["unit_weights"] = rep.unit_weights;
  }
  if (rep.kind == "seqf") {
    j["insert_regime"] = rep.insert_regime;
    j["insert_date"] = rep.insert_date;
    j["candidates_scanned"] = rep.candidates_scanned;
  }
  return j;
}

json to_json(const KhatReport& rep) {
  json j;
  j["k_hat"] = rep.k_hat;
  j["alpha"] = rep.alpha;
  j["truncated"] = rep.truncated;
  j["breaks"] = breaks_json(rep.breaks);
  json stages = json::array();
  for (const auto& st : rep.stages) {
    json s;
    s["k_null"] = st.k_null;
    if (st.note.empty() || st.test.kind == "seqf") {
      s["statistic"] = st.test.statistic;
      s["critical_value"] = st.alpha_cv;
    }
    s["rejected"] = st.rejected;
    if (st.rejected) {
      s["inserted_date"] = st.test.insert_date;
      s["inserted_regime"] = st.test.insert_regime;
    }
    s["breaks_after"] = breaks_json(st.breaks_after);
    if (!st.note.empty()) s["note"] = st.note;
    stages.push_back(s);
  }
  j["stages"] = stages;
  return j;
}

json to_json(const std::vector<BreakInterval>& cis) {
  json a = json::array();
  for (const auto& ci : cis) {
    json j;
    j["break_index"] = ci.break_index;
    j["date"] = ci.date;
    j["lower"] = ci.lower;
    j["upper"] = ci.upper;
    j["half_width"] = ci.half_width;
    j["xi"] = ci.xi;
    j["phi1"] = ci.phi1;
    j["phi2"] = ci.phi2;
    j["scale"] = ci.scale;
    j["c_alpha"] = ci.c_alpha;
    a.push_back(j);
  }
  return a;
}

json to_json(const McReport& rep) {
  json j;
  j["kind"] = rep.kind;
  j["reps"] = rep.reps;
  j["failures"] = rep.failures;
  j["rate"] = rep.rate;
  j["rate_se"] = rep.rate_se;
  json extras;
  for (const auto& [k, v] : rep.extras) extras[k] = v;
  j["extras"] = extras;
  j["failure_samples"] = rep.failure_samples;
  j["per_seed"] = rep.per_seed;
  return j;
}

json to_json(const CvProvenance& prov) {
  json j;
  j["source"] = prov.source;
  j["seed"] = prov.seed;
  j["reps"] = prov.reps;
  j["grid"] = prov.grid;
  j["generated"] = prov.generated;
  return j;
}

json table_summary_json(const CriticalValueTable& table) {
  json j;
  j["provenance"] = to_json(table.provenance);
  json combos = json::array();
  for (const auto& e : table.sup_entries) {
    json c;
    c["p_w"] = e.p_w;
    c["epsilon"] = e.epsilon;
    c["k"] = e.k;
    c["probs"] = static_cast<int>(e.probs.size());
    combos.push_back(c);
  }
  j["sup_entries"] = combos;
  j["max_entries"] = static_cast<int>(table.max_entries.size());
  return j;
}

std::string render_json(const json& j) { return j.dump(2) + "\n"; }

std::string text_break_table(const BreakSet& breaks, const std::vector<BreakInterval>* cis,
                             const std::vector<std::string>* period_labels) {
  std::ostringstream out;
  out << pad("break", 7) << pad("date", 12);
  if (cis) out << pad("interval", 24);
  out << "\n";
  for (std::size_t j = 0; j < breaks.size(); ++j) {
    out << pad(std::to_string(j + 1), 7) << pad(date_label(breaks[j], period_labels), 12);
    if (cis) {
      const BreakInterval& ci = (*cis)[j];
      out << "[" << date_label(ci.lower, period_labels) << ", "
          << date_label(ci.upper, period_labels) << "]";
    }
    out << "\n";
  }
  if (breaks.empty()) out << "(no breaks)\n";
  return out.str();
}

std::string text_coef_table(const FitResult& fit, const CovarianceEstimate& cov,
                            const std::vector<std::string>& w_names) {
  // first-regime level, then one increment column per break; stars from the
  // one-degree contrast against the F reference
  const int k = static_cast<int>(fit.breaks.size());
  const int pw = fit.p_w;
  const long long den = static_cast<long long>(fit.n_units) *
                            (fit.n_periods - fit.p_x - (k + 1) * pw) -
                        fit.p_x - (k + 1) * pw;
  boost::math::fisher_f dist(1.0, static_cast<double>(den));
  auto cell = [&](double value, double var) {
    double f = var > 0.0 ? static_cast<double>(den) * value * value / var : 0.0;
    double p = var > 0.0 ? boost::math::cdf(boost::math::complement(dist, f)) : 1.0;
    return fmt(value) + stars(p);
  };
  std::ostringstream out;
  out << pad("regressor", 12) << pad("level_1", 14);
  for (int j = 1; j <= k; ++j) out << pad("shift_" + std::to_string(j), 14);
  out << "\n";
  for (int c = 0; c < pw; ++c) {
    std::string name = c < static_cast<int>(w_names.size()) ? w_names[c]
                                                            : "w" + std::to_string(c + 1);
    out << pad(name, 12);
    out << pad(cell(fit.delta(0, c), cov.vdelta(c, c)), 14);
    for (int j = 1; j <= k; ++j) {
      int a = (j - 1) * pw + c, b = j * pw + c;
      double var = cov.vdelta(a, a) + cov.vdelta(b, b) - 2.0 * cov.vdelta(a, b);
      out << pad(cell(fit.delta_increments(j - 1, c), var), 14);
    }
    out << "\n";
  }
  out << "stars: * 10%  ** 5%  *** 1%\n";
  return out.str();
}

std::string text_test(const TestReport& rep) {
  std::ostringstream out;
  out << rep.kind << " statistic: " << fmt(rep.statistic, 3) << "\n";
  for (std::size_t i = 0; i < rep.levels.size(); ++i) {
    double stat = rep.kind == "wdmax" && !rep.statistics_by_level.empty()
                      ? rep.statistics_by_level[i]
                      : rep.statistic;
    out << "  " << fmt(rep.levels[i] * 100.0, 0) << "% cv " << fmt(rep.critical_values[i], 3)
        << (stat > rep.critical_values[i] ? "  reject" : "  accept") << "\n";
  }
  if (!std::isnan(rep.p_value)) out << "  p-value " << fmt(rep.p_value, 4) << "\n";
  if (!rep.breaks.empty()) {
    out << "  dates:";
    for (int b : rep.breaks) out << ' ' << b;
    out << "\n";
  }
  return out.str();
}

std::string text_khat(const KhatReport& rep, const std::vector<std::string>* period_labels) {
  std::ostringstream out;
  out << "estimated breaks: " << rep.k_hat;
  if (rep.truncated) out << " (cap reached)";
  out << "\n";
  for (const auto& st : rep.stages) {
    out << "  " << st.k_null << " vs " << st.k_null + 1 << ": ";
    if (!st.note.empty() && st.test.kind.empty()) {
      out << st.note << "\n";
      continue;
    }
    out << fmt(st.test.statistic, 3) << (st.rejected ? " > " : " <= ") << fmt(st.alpha_cv, 3);
    if (st.rejected) out << ", insert " << date_label(st.test.insert_date, period_labels);
    if (!st.note.empty()) out << " (" << st.note << ")";
    out << "\n";
  }
  if (!rep.breaks.empty()) {
    out << "dates:";
    for (int b : rep.breaks) out << ' ' << date_label(b, period_labels);
    out << "\n";
  }
  return out.str();
}

std::string text_mc(const McReport& rep) {
  std::ostringstream out;
  out << rep.kind << " experiment: rate " << fmt(rep.rate, 4) << " (se " << fmt(rep.rate_se, 4)
      << ") over " << rep.reps << " replications";
  if (rep.failures > 0) out << ", " << rep.failures << " failed";
  out << "\n";
  for (const auto& [k, v] : rep.extras) out << "  " << k << " = " << fmt(v, 4) << "\n";
  return out.str();
}

}  // namespace panelbreak
