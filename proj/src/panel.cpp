#include "panelbreak/panel.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace panelbreak {

void PanelDataset::validate() const {
  const int N = n_units(), T = n_periods();
  if (N < 2) fail_input("panel needs at least 2 units, got " + std::to_string(N));
  if (T < 2) fail_input("panel needs at least 2 periods, got " + std::to_string(T));
  if (static_cast<int>(x.n_rows) != T || static_cast<int>(w.n_rows) != T ||
      static_cast<int>(observed.n_rows) != T)
    fail_internal("panel blocks disagree on the number of periods");
  if (static_cast<int>(x.n_slices) != N || static_cast<int>(w.n_slices) != N)
    fail_internal("panel blocks disagree on the number of units");
  if (p_w() < 1) fail_input("panel needs at least one breaking regressor column");
  // labels are optional for matrix-built panels; when present they must match
  if (!unit_labels.empty() && static_cast<int>(unit_labels.size()) != N)
    fail_internal("unit labels disagree with the panel dimensions");
  if (!period_labels.empty() && static_cast<int>(period_labels.size()) != T)
    fail_internal("period labels disagree with the panel dimensions");
  if (!y.is_finite() || !x.is_finite() || !w.is_finite() || !observed.is_finite())
    fail_input("panel contains non-finite values");
}

namespace {

// One logical CSV record; supports quoted fields with embedded commas/quotes.
bool read_record(std::istream& in, std::vector<std::string>& out) {
  out.clear();
  std::string field;
  bool in_quotes = false, any = false;
  int ch;
  while ((ch = in.get()) != EOF) {
    any = true;
    char c = static_cast<char>(ch);
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  if (!any) return false;
  out.push_back(field);
  return true;
}

bool parse_double(const std::string& s, double& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  while (e > b && (*(e - 1) == ' ' || *(e - 1) == '\t')) --e;
  if (b == e) return false;
  auto res = std::from_chars(b, e, out);
  return res.ec == std::errc() && res.ptr == e;
}

// Labels sort numerically when every label parses as a number, else bytewise.
std::vector<std::string> sorted_labels(const std::vector<std::string>& raw) {
  std::vector<std::string> labels = raw;
  std::vector<double> numeric(labels.size());
  bool all_numeric = true;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (!parse_double(labels[i], numeric[i])) {
      all_numeric = false;
      break;
    }
  if (all_numeric) {
    std::vector<std::size_t> idx(labels.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return numeric[a] < numeric[b]; });
    std::vector<std::string> out;
    out.reserve(labels.size());
    for (auto i : idx) out.push_back(labels[i]);
    return out;
  }
  std::sort(labels.begin(), labels.end());
  return labels;
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

}  // namespace

PanelDataset load_panel(std::istream& in, const PanelSchema& schema) {
  if (schema.unit_col.empty() || schema.period_col.empty() || schema.y_col.empty())
    fail_input("schema must name unit, period and outcome columns");
  if (schema.w_cols.empty()) fail_input("schema must name at least one breaking regressor column");

  std::vector<std::string> header;
  if (!read_record(in, header)) fail_input("empty input: no header row");

  std::unordered_map<std::string, int> col_of;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (col_of.count(header[i])) fail_input("duplicate column name in header: " + header[i]);
    col_of[header[i]] = static_cast<int>(i);
  }
  auto need = [&](const std::string& name) {
    auto it = col_of.find(name);
    if (it == col_of.end()) fail_input("column not found in header: " + name);
    return it->second;
  };

  const int unit_c = need(schema.unit_col);
  const int period_c = need(schema.period_col);
  const int y_c = need(schema.y_col);
  std::vector<int> x_c, w_c, d_c;
  for (auto& n : schema.x_cols) x_c.push_back(need(n));
  for (auto& n : schema.w_cols) w_c.push_back(need(n));
  for (auto& n : schema.observed_cols) d_c.push_back(need(n));

  struct Row {
    std::string unit, period;
    double y;
    std::vector<double> x, w, d;
  };
  std::vector<Row> rows;
  std::vector<std::string> rec;
  std::size_t line = 1;
  while (read_record(in, rec)) {
    ++line;
    if (rec.size() == 1 && rec[0].empty()) continue;  // blank line
    if (rec.size() != header.size())
      fail_input("line " + std::to_string(line) + ": expected " + std::to_string(header.size()) +
                 " fields, got " + std::to_string(rec.size()));
    Row r;
    r.unit = rec[unit_c];
    r.period = rec[period_c];
    auto cell = [&](int c) {
      double v;
      if (!parse_double(rec[c], v))
        fail_input("line " + std::to_string(line) + ", column '" + header[c] +
                   "': cannot parse '" + rec[c] + "' as a number");
      return v;
    };
    r.y = cell(y_c);
    for (int c : x_c) r.x.push_back(cell(c));
    for (int c : w_c) r.w.push_back(cell(c));
    for (int c : d_c) r.d.push_back(cell(c));
    rows.push_back(std::move(r));
  }
  if (rows.empty()) fail_input("no data rows");

  std::vector<std::string> unit_raw, period_raw;
  {
    std::map<std::string, int> seen_u, seen_p;
    for (auto& r : rows) {
      if (seen_u.emplace(r.unit, 0).second) unit_raw.push_back(r.unit);
      if (seen_p.emplace(r.period, 0).second) period_raw.push_back(r.period);
    }
  }
  std::vector<std::string> units = sorted_labels(unit_raw);
  std::vector<std::string> periods = sorted_labels(period_raw);
  std::unordered_map<std::string, int> unit_ix, period_ix;
  for (std::size_t i = 0; i < units.size(); ++i) unit_ix[units[i]] = static_cast<int>(i);
  for (std::size_t i = 0; i < periods.size(); ++i) period_ix[periods[i]] = static_cast<int>(i);

  const int N = static_cast<int>(units.size());
  const int T = static_cast<int>(periods.size());
  const int px = static_cast<int>(x_c.size());
  const int pw = static_cast<int>(w_c.size());
  const int pd = static_cast<int>(d_c.size());

  PanelDataset data;
  data.y.set_size(T, N);
  data.x.set_size(T, px, N);
  data.w.set_size(T, pw, N);
  data.observed.set_size(T, pd);
  data.unit_labels = units;
  data.period_labels = periods;
  data.x_names = schema.x_cols;
  data.w_names = schema.w_cols;
  data.observed_names = schema.observed_cols;

  std::vector<char> filled(static_cast<std::size_t>(N) * T, 0);
  std::vector<char> d_filled(T, 0);
  for (auto& r : rows) {
    const int i = unit_ix[r.unit];
    const int t = period_ix[r.period];
    auto& cellflag = filled[static_cast<std::size_t>(i) * T + t];
    if (cellflag)
      fail_input("duplicate observation for unit '" + r.unit + "', period '" + r.period + "'");
    cellflag = 1;
    data.y(t, i) = r.y;
    for (int c = 0; c < px; ++c) data.x(t, c, i) = r.x[c];
    for (int c = 0; c < pw; ++c) data.w(t, c, i) = r.w[c];
    if (pd > 0) {
      if (!d_filled[t]) {
        for (int c = 0; c < pd; ++c) data.observed(t, c) = r.d[c];
        d_filled[t] = 1;
      } else {
        for (int c = 0; c < pd; ++c)
          if (data.observed(t, c) != r.d[c])
            fail_input("observed factor '" + schema.observed_cols[c] +
                       "' varies within period '" + r.period + "'");
      }
    }
  }
  for (int i = 0; i < N; ++i)
    for (int t = 0; t < T; ++t)
      if (!filled[static_cast<std::size_t>(i) * T + t])
        fail_input("panel is unbalanced: missing unit '" + units[i] + "', period '" + periods[t] +
                   "'");

  data.validate();
  return data;
}

PanelDataset load_panel_file(const std::string& path, const PanelSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_input("cannot open input file: " + path);
  return load_panel(in, schema);
}

void write_panel(std::ostream& out, const PanelDataset& data, const PanelSchema& schema) {
  if (static_cast<int>(data.unit_labels.size()) != data.n_units() ||
      static_cast<int>(data.period_labels.size()) != data.n_periods())
    fail_input("cannot write a panel without unit and period labels");
  out << quote_if_needed(schema.unit_col) << ',' << quote_if_needed(schema.period_col) << ','
      << quote_if_needed(schema.y_col);
  for (auto& n : schema.x_cols) out << ',' << quote_if_needed(n);
  for (auto& n : schema.w_cols) out << ',' << quote_if_needed(n);
  for (auto& n : schema.observed_cols) out << ',' << quote_if_needed(n);
  out << '\n';
  out.precision(17);
  for (int i = 0; i < data.n_units(); ++i) {
    for (int t = 0; t < data.n_periods(); ++t) {
      out << quote_if_needed(data.unit_labels[i]) << ',' << quote_if_needed(data.period_labels[t])
          << ',' << data.y(t, i);
      for (int c = 0; c < data.p_x(); ++c) out << ',' << data.x(t, c, i);
      for (int c = 0; c < data.p_w(); ++c) out << ',' << data.w(t, c, i);
      for (int c = 0; c < data.p_observed(); ++c) out << ',' << data.observed(t, c);
      out << '\n';
    }
  }
}

void enumerate_admissible(int n_periods, int k, const TrimmingSpec& trim,
                          const std::function<void(const BreakSet&)>& fn) {
  trim.validate();
  if (k < 0) fail_input("number of breaks must be nonnegative");
  if (k > trim.max_breaks())
    fail_infeasible("requested " + std::to_string(k) + " breaks but trimming " +
                    std::to_string(trim.epsilon) + " admits at most " +
                    std::to_string(trim.max_breaks()));
  const int h = trim.min_regime_length(n_periods);
  if (n_periods < (k + 1) * h)
    fail_infeasible("panel too short: " + std::to_string(k + 1) + " regimes of at least " +
                    std::to_string(h) + " periods do not fit in " + std::to_string(n_periods));
  BreakSet breaks(k);
  std::function<void(int, int)> rec = [&](int j, int lo) {
    if (j == k) {
      fn(breaks);
      return;
    }
    const int hi = n_periods - (k - j) * h;
    for (int t = lo; t <= hi; ++t) {
      breaks[j] = t;
      rec(j + 1, t + h);
    }
  };
  if (k == 0) {
    fn(breaks);
    return;
  }
  rec(0, h);
}

std::vector<BreakSet> collect_admissible(int n_periods, int k, const TrimmingSpec& trim) {
  std::vector<BreakSet> out;
  enumerate_admissible(n_periods, k, trim, [&](const BreakSet& b) { out.push_back(b); });
  return out;
}

std::size_t count_admissible(int n_periods, int k, const TrimmingSpec& trim) {
  std::size_t n = 0;
  enumerate_admissible(n_periods, k, trim, [&](const BreakSet&) { ++n; });
  return n;
}

}  // namespace panelbreak
