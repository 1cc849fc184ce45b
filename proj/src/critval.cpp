#include "panelbreak/critval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <fstream>
#include <limits>
#include <sstream>

#include "panelbreak/parallel.hpp"
#include "panelbreak/rng.hpp"

namespace panelbreak {

namespace {

constexpr float kNegInf = -std::numeric_limits<float>::infinity();

// 0.005 steps through 0.995, then a fine tail so the order-statistic
// transform (1-alpha)^(1/(k+1)) stays inside the grid for small alpha.
std::vector<double> default_prob_grid() {
  std::vector<double> p;
  p.reserve(204);
  for (int i = 1; i <= 199; ++i) p.push_back(i * 0.005);
  p.push_back(0.996);
  p.push_back(0.997);
  p.push_back(0.998);
  p.push_back(0.999);
  p.push_back(0.9995);
  return p;
}

double quantile_sorted(const double* v, std::size_t n, double p) {
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  double h = static_cast<double>(n - 1) * p;
  std::size_t lo = static_cast<std::size_t>(h);
  if (lo >= n - 1) return v[n - 1];
  double frac = h - static_cast<double>(lo);
  return v[lo] + frac * (v[lo + 1] - v[lo]);
}

double mean_sd(const std::vector<double>& x, double* sd) {
  double m = 0.0;
  for (double v : x) m += v;
  m /= static_cast<double>(x.size());
  double s2 = 0.0;
  for (double v : x) s2 += (v - m) * (v - m);
  *sd = x.size() > 1 ? std::sqrt(s2 / static_cast<double>(x.size() - 1)) : 0.0;
  return m;
}

// Max over v in [u+L, vmax] of prev[v] + ||R[u]-R[v]||^2 * grid/(v-u).
// Arrays are indexed in reversed time (v = grid - t) so every stream in the
// hot loop advances with unit stride and the compiler can vectorize the max
// reduction. Floats keep four streams in vector registers; their rounding is
// orders of magnitude below Monte Carlo error.
template <int PW>
float transition_max(const float* const* rd, const float* __restrict prev,
                     const float* __restrict inv, int u, int vmax, int len_min,
                     float* __restrict acc, int p_w) {
  int v0 = u + len_min;
  int n = vmax - v0 + 1;
  if (n <= 0) return kNegInf;
  const float* __restrict pv = prev + v0;
  const float* __restrict iv = inv + len_min;
  float best = kNegInf;
  if constexpr (PW == 1) {
    const float* __restrict bx = rd[0] + v0;
    const float xt = rd[0][u];
    for (int m = 0; m < n; ++m) {
      float dx = xt - bx[m];
      float val = pv[m] + dx * dx * iv[m];
      best = best < val ? val : best;
    }
  } else if constexpr (PW == 2) {
    const float* __restrict bx = rd[0] + v0;
    const float* __restrict by = rd[1] + v0;
    const float xt = rd[0][u];
    const float yt = rd[1][u];
    for (int m = 0; m < n; ++m) {
      float dx = xt - bx[m];
      float dy = yt - by[m];
      float val = pv[m] + (dx * dx + dy * dy) * iv[m];
      best = best < val ? val : best;
    }
  } else {
    for (int m = 0; m < n; ++m) acc[m] = 0.0f;
    for (int d = 0; d < p_w; ++d) {
      const float* __restrict bd = rd[d] + v0;
      const float xt = rd[d][u];
      for (int m = 0; m < n; ++m) {
        float dx = xt - bd[m];
        acc[m] += dx * dx;
      }
    }
    for (int m = 0; m < n; ++m) {
      float val = pv[m] + acc[m] * iv[m];
      best = best < val ? val : best;
    }
  }
  return best;
}

struct RepScratch {
  std::vector<float> rbuf;
  std::vector<const float*> rd;
  std::vector<float> prev, cur, acc;
};

// One replication: p_w-dimensional Brownian motion on a grid, then a
// dynamic program over admissible partitions. Partitions are built left to
// right; level j holds the best j-segment value ending at each point, and
// closing the last segment at the origin of the reversed index gives the
// k = j statistic. The telescoped form sum ||dB_j||^2/dLambda_j - ||B(1)||^2
// makes the objective segment-separable, which is what the DP exploits.
template <int PW>
void sup_limit_rep_t(int p_w, int grid, int len_min, int k_max, std::uint64_t seed,
                     std::uint64_t rep, const float* inv, RepScratch& sc, double* out) {
  const int n1 = grid + 1;
  sc.rbuf.assign(static_cast<std::size_t>(p_w) * n1, 0.0f);
  sc.rd.resize(p_w);
  for (int d = 0; d < p_w; ++d) sc.rd[d] = sc.rbuf.data() + static_cast<std::size_t>(d) * n1;
  sc.prev.assign(n1, kNegInf);
  sc.cur.assign(n1, kNegInf);
  sc.acc.assign(n1, 0.0f);

  const double sd = std::sqrt(1.0 / static_cast<double>(grid));
  for (int d = 0; d < p_w; ++d) {
    float* r = sc.rbuf.data() + static_cast<std::size_t>(d) * n1;
    double sum = 0.0;
    r[grid] = 0.0f;
    for (int t = 1; t <= grid; ++t) {
      sum += sd * rng::keyed_normal(seed, rep, static_cast<std::uint64_t>(t),
                                    static_cast<std::uint64_t>(d));
      r[grid - t] = static_cast<float>(sum);
    }
  }

  double norm_b1 = 0.0;
  for (int d = 0; d < p_w; ++d) {
    double b = sc.rd[d][0];
    norm_b1 += b * b;
  }

  float* prev = sc.prev.data();
  float* cur = sc.cur.data();
  for (int u = len_min; u <= grid - len_min; ++u) {
    double s2 = 0.0;
    for (int d = 0; d < p_w; ++d) {
      double b = sc.rd[d][u];
      s2 += b * b;
    }
    prev[u] = static_cast<float>(s2 * inv[grid - u]);
  }

  for (int k = 1; k <= k_max; ++k) {
    float raw = transition_max<PW>(sc.rd.data(), prev, inv, 0, grid - k * len_min, len_min,
                                   sc.acc.data(), p_w);
    out[k - 1] = (static_cast<double>(raw) - norm_b1) / static_cast<double>(k * p_w);
    if (k == k_max) break;
    const int j = k + 1;
    std::fill(cur, cur + n1, kNegInf);
    for (int u = len_min; u <= grid - j * len_min; ++u) {
      cur[u] = transition_max<PW>(sc.rd.data(), prev, inv, u, grid - k * len_min, len_min,
                                  sc.acc.data(), p_w);
    }
    std::swap(prev, cur);
  }
}

void sup_limit_rep(int p_w, int grid, int len_min, int k_max, std::uint64_t seed,
                   std::uint64_t rep, const float* inv, RepScratch& sc, double* out) {
  if (p_w == 1) {
    sup_limit_rep_t<1>(p_w, grid, len_min, k_max, seed, rep, inv, sc, out);
  } else if (p_w == 2) {
    sup_limit_rep_t<2>(p_w, grid, len_min, k_max, seed, rep, inv, sc, out);
  } else {
    sup_limit_rep_t<0>(p_w, grid, len_min, k_max, seed, rep, inv, sc, out);
  }
}

std::vector<float> make_inv(int grid) {
  std::vector<float> inv(grid + 1, 0.0f);
  for (int d = 1; d <= grid; ++d)
    inv[d] = static_cast<float>(static_cast<double>(grid) / static_cast<double>(d));
  return inv;
}

int min_len_steps(double epsilon, int grid) {
  double raw = epsilon * static_cast<double>(grid);
  return static_cast<int>(std::ceil(raw - 1e-9 * std::max(1.0, std::fabs(raw))));
}

std::string today_utc() {
  std::time_t now = std::time(nullptr);
  std::tm tm_utc;
  gmtime_r(&now, &tm_utc);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", tm_utc.tm_year + 1900, tm_utc.tm_mon + 1,
                tm_utc.tm_mday);
  return buf;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct SectionStat {
  double value = 0.0;
  double se = 0.0;
};

// Quantile with a sectioning standard error: the replication stream is cut
// into 10 contiguous blocks by index, so the result is independent of the
// thread schedule.
SectionStat sectioned_quantile(const std::vector<double>& sorted_all,
                               const std::vector<std::vector<double>>& sorted_sections,
                               double prob) {
  SectionStat s;
  s.value = quantile_sorted(sorted_all.data(), sorted_all.size(), prob);
  std::vector<double> qs;
  qs.reserve(sorted_sections.size());
  for (const auto& sec : sorted_sections)
    qs.push_back(quantile_sorted(sec.data(), sec.size(), prob));
  if (qs.size() > 1) {
    double sd = 0.0;
    mean_sd(qs, &sd);
    s.se = sd / std::sqrt(static_cast<double>(qs.size()));
  }
  return s;
}

std::vector<std::vector<double>> section_copies(const std::vector<double>& x, int n_sections) {
  std::vector<std::vector<double>> out(n_sections);
  std::size_t n = x.size();
  for (int s = 0; s < n_sections; ++s) {
    std::size_t b = n * static_cast<std::size_t>(s) / n_sections;
    std::size_t e = n * static_cast<std::size_t>(s + 1) / n_sections;
    out[s].assign(x.begin() + b, x.begin() + e);
    std::sort(out[s].begin(), out[s].end());
  }
  return out;
}

}  // namespace

std::vector<double> simulate_sup_limit_once(int p_w, double epsilon, int k_max, int grid,
                                            std::uint64_t seed, std::uint64_t rep) {
  if (p_w < 1) fail_input("p_w must be at least 1");
  if (!(epsilon > 0.0 && epsilon <= 0.45)) fail_input("trim fraction must be in (0, 0.45]");
  if (grid < 20) fail_input("grid must be at least 20 steps");
  int len_min = min_len_steps(epsilon, grid);
  if ((k_max + 1) * len_min > grid)
    fail_infeasible("grid cannot host " + std::to_string(k_max + 1) +
                          " segments of at least " + std::to_string(len_min) + " steps");
  std::vector<float> inv = make_inv(grid);
  RepScratch sc;
  std::vector<double> out(k_max, 0.0);
  sup_limit_rep(p_w, grid, len_min, k_max, seed, rep, inv.data(), sc, out.data());
  return out;
}

CriticalValueTable simulate_critical_values(const CvSimRequest& req) {
  if (req.p_w < 1) fail_input("p_w must be at least 1");
  if (!(req.epsilon > 0.0 && req.epsilon <= 0.45))
    fail_input("trim fraction must be in (0, 0.45]");
  if (req.k_max < 1) fail_input("k_max must be at least 1");
  if (req.reps < 100) fail_input("need at least 100 replications");
  if (req.grid < 20) fail_input("grid must be at least 20 steps");
  for (double a : req.levels)
    if (!(a > 0.0 && a < 0.5)) fail_input("test levels must be in (0, 0.5)");
  const int len_min = min_len_steps(req.epsilon, req.grid);
  if ((req.k_max + 1) * len_min > req.grid)
    fail_infeasible("grid of " + std::to_string(req.grid) + " steps cannot host " +
                          std::to_string(req.k_max + 1) + " segments of at least " +
                          std::to_string(len_min) + " steps; lower k_max or refine the grid");

  const int reps = req.reps;
  const int k_max = req.k_max;
  const std::vector<float> inv = make_inv(req.grid);
  std::vector<double> stats(static_cast<std::size_t>(reps) * k_max);

  parallel_for(reps, req.threads, [&](int rep) {
    thread_local RepScratch sc;
    sup_limit_rep(req.p_w, req.grid, len_min, k_max, req.seed, static_cast<std::uint64_t>(rep),
                  inv.data(), sc, stats.data() + static_cast<std::size_t>(rep) * k_max);
  });

  const std::vector<double> probs = default_prob_grid();
  const int n_sections = 10;
  CriticalValueTable table;
  table.provenance.source = "simulated";
  table.provenance.seed = req.seed;
  table.provenance.reps = reps;
  table.provenance.grid = req.grid;
  table.provenance.generated = today_utc();

  // Per-k marginal quantiles; the exact (not grid-interpolated) upper
  // quantiles double as the weights for the level-matched max test.
  std::vector<std::vector<double>> upper_q(req.levels.size(), std::vector<double>(k_max));
  for (int k = 1; k <= k_max; ++k) {
    std::vector<double> vk(reps);
    for (int r = 0; r < reps; ++r) vk[r] = stats[static_cast<std::size_t>(r) * k_max + (k - 1)];
    auto sections = section_copies(vk, n_sections);
    std::sort(vk.begin(), vk.end());
    SupLimitEntry e;
    e.p_w = req.p_w;
    e.epsilon = req.epsilon;
    e.k = k;
    e.probs = probs;
    e.quantiles.reserve(probs.size());
    e.se.reserve(probs.size());
    for (double p : probs) {
      SectionStat s = sectioned_quantile(vk, sections, p);
      e.quantiles.push_back(s.value);
      e.se.push_back(s.se);
    }
    for (std::size_t a = 0; a < req.levels.size(); ++a)
      upper_q[a][k - 1] = quantile_sorted(vk.data(), vk.size(), 1.0 - req.levels[a]);
    table.sup_entries.push_back(std::move(e));
  }

  // Max tests over k <= K for every prefix K: one pass per replication with a
  // running weighted max.
  for (std::size_t a = 0; a < req.levels.size(); ++a) {
    const double alpha = req.levels[a];
    for (int unit = 0; unit <= 1; ++unit) {
      std::vector<double> running(reps, -std::numeric_limits<double>::infinity());
      for (int K = 1; K <= k_max; ++K) {
        const double w = unit ? 1.0 : upper_q[a][0] / upper_q[a][K - 1];
        for (int r = 0; r < reps; ++r) {
          double cand = w * stats[static_cast<std::size_t>(r) * k_max + (K - 1)];
          if (cand > running[r]) running[r] = cand;
        }
        std::vector<double> copy = running;
        auto sections = section_copies(copy, n_sections);
        std::sort(copy.begin(), copy.end());
        SectionStat s = sectioned_quantile(copy, sections, 1.0 - alpha);
        MaxTestEntry m;
        m.p_w = req.p_w;
        m.epsilon = req.epsilon;
        m.k_max = K;
        m.level = alpha;
        m.unit_weights = unit != 0;
        m.value = s.value;
        m.se = s.se;
        table.max_entries.push_back(m);
      }
    }
  }
  return table;
}

namespace {

const SupLimitEntry* find_sup(const CriticalValueTable& t, int p_w, double eps, int k) {
  for (const auto& e : t.sup_entries)
    if (e.p_w == p_w && e.k == k && std::fabs(e.epsilon - eps) < 1e-9) return &e;
  return nullptr;
}

[[noreturn]] void missing_sup(int p_w, double eps, int k) {
  std::ostringstream msg;
  msg << "no tabulated limit distribution for p_w=" << p_w << " trim=" << eps << " k=" << k
      << "; run 'panelbreak cv simulate --pw " << p_w << " --trim " << eps << " --kmax " << k
      << "' and pass the result with --cv-table";
  fail_input(msg.str());
}

}  // namespace

bool CriticalValueTable::has_sup(int p_w, double eps, int k) const {
  return find_sup(*this, p_w, eps, k) != nullptr;
}

double CriticalValueTable::sup_quantile(int p_w, double eps, int k, double prob) const {
  const SupLimitEntry* e = find_sup(*this, p_w, eps, k);
  if (!e) missing_sup(p_w, eps, k);
  const auto& ps = e->probs;
  if (ps.empty()) missing_sup(p_w, eps, k);
  if (prob < ps.front() - 1e-12 || prob > ps.back() + 1e-12) {
    std::ostringstream msg;
    msg << "probability " << prob << " outside tabulated range [" << ps.front() << ", "
        << ps.back() << "] for p_w=" << p_w << " trim=" << eps << " k=" << k;
    fail_input(msg.str());
  }
  auto it = std::lower_bound(ps.begin(), ps.end(), prob);
  std::size_t hi = static_cast<std::size_t>(it - ps.begin());
  if (hi >= ps.size()) hi = ps.size() - 1;
  if (std::fabs(ps[hi] - prob) < 1e-12) return e->quantiles[hi];
  if (hi == 0) return e->quantiles[0];
  double p0 = ps[hi - 1], p1 = ps[hi];
  double f = (prob - p0) / (p1 - p0);
  return e->quantiles[hi - 1] + f * (e->quantiles[hi] - e->quantiles[hi - 1]);
}

double CriticalValueTable::sup_prob(int p_w, double eps, int k, double x) const {
  const SupLimitEntry* e = find_sup(*this, p_w, eps, k);
  if (!e) missing_sup(p_w, eps, k);
  const auto& qs = e->quantiles;
  if (x <= qs.front()) return e->probs.front();
  if (x >= qs.back()) return e->probs.back();
  auto it = std::lower_bound(qs.begin(), qs.end(), x);
  std::size_t hi = static_cast<std::size_t>(it - qs.begin());
  if (hi == 0) return e->probs.front();
  double q0 = qs[hi - 1], q1 = qs[hi];
  if (q1 <= q0) return e->probs[hi];
  double f = (x - q0) / (q1 - q0);
  return e->probs[hi - 1] + f * (e->probs[hi] - e->probs[hi - 1]);
}

double CriticalValueTable::supf_cv(int p_w, double eps, int k, double alpha) const {
  return sup_quantile(p_w, eps, k, 1.0 - alpha);
}

double CriticalValueTable::seqf_cv(int p_w, double eps, int k_null, double alpha) const {
  if (k_null < 0) fail_input("null break count must be nonnegative");
  double prob = std::pow(1.0 - alpha, 1.0 / static_cast<double>(k_null + 1));
  return sup_quantile(p_w, eps, 1, prob);
}

double CriticalValueTable::wdmax_weight(int p_w, double eps, int k, double alpha) const {
  double q1 = sup_quantile(p_w, eps, 1, 1.0 - alpha);
  double qk = sup_quantile(p_w, eps, k, 1.0 - alpha);
  if (!(qk > 0.0)) fail_numeric("nonpositive tabulated quantile in weight construction");
  return q1 / qk;
}

double CriticalValueTable::wdmax_cv(int p_w, double eps, int k_max, double alpha,
                                    bool unit_weights) const {
  for (const auto& m : max_entries) {
    if (m.p_w == p_w && m.k_max == k_max && m.unit_weights == unit_weights &&
        std::fabs(m.epsilon - eps) < 1e-9 && std::fabs(m.level - alpha) < 1e-9)
      return m.value;
  }
  std::ostringstream msg;
  msg << "no tabulated max-test critical value for p_w=" << p_w << " trim=" << eps
      << " k_max=" << k_max << " level=" << alpha
      << (unit_weights ? " (unit weights)" : " (level-matched weights)")
      << "; run 'panelbreak cv simulate' with matching settings";
  fail_input(msg.str());
}

void CriticalValueTable::merge(const CriticalValueTable& other) {
  for (const auto& e : other.sup_entries) {
    bool replaced = false;
    for (auto& mine : sup_entries) {
      if (mine.p_w == e.p_w && mine.k == e.k && std::fabs(mine.epsilon - e.epsilon) < 1e-9) {
        mine = e;
        replaced = true;
        break;
      }
    }
    if (!replaced) sup_entries.push_back(e);
  }
  for (const auto& m : other.max_entries) {
    bool replaced = false;
    for (auto& mine : max_entries) {
      if (mine.p_w == m.p_w && mine.k_max == m.k_max && mine.unit_weights == m.unit_weights &&
          std::fabs(mine.epsilon - m.epsilon) < 1e-9 && std::fabs(mine.level - m.level) < 1e-9) {
        mine = m;
        replaced = true;
        break;
      }
    }
    if (!replaced) max_entries.push_back(m);
  }
}

void CriticalValueTable::write_csv(std::ostream& out) const {
  out << "# panel break critical values\n";
  out << "# source=" << provenance.source << " seed=" << provenance.seed
      << " reps=" << provenance.reps << " grid=" << provenance.grid
      << " generated=" << provenance.generated << "\n";
  out << "kind,p_w,epsilon,k,param,value,se\n";
  for (const auto& e : sup_entries) {
    for (std::size_t i = 0; i < e.probs.size(); ++i) {
      out << "sup," << e.p_w << ',' << fmt_double(e.epsilon) << ',' << e.k << ','
          << fmt_double(e.probs[i]) << ',' << fmt_double(e.quantiles[i]) << ','
          << (i < e.se.size() ? fmt_double(e.se[i]) : std::string()) << "\n";
    }
  }
  for (const auto& m : max_entries) {
    out << (m.unit_weights ? "wdmax_unit," : "wdmax_level,") << m.p_w << ','
        << fmt_double(m.epsilon) << ',' << m.k_max << ',' << fmt_double(m.level) << ','
        << fmt_double(m.value) << ',' << fmt_double(m.se) << "\n";
  }
}

CriticalValueTable CriticalValueTable::read_csv(std::istream& in, const std::string& origin) {
  CriticalValueTable t;
  t.provenance.source = origin;
  std::string line;
  int lineno = 0;
  // (p_w, eps_key, k) -> index into sup_entries; eps matched textually via a
  // rounded key so repeated rows land in one entry.
  auto eps_key = [](double e) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9f", e);
    return std::string(buf);
  };
  std::vector<std::string> sup_keys;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line.substr(1));
      std::string tok;
      while (ls >> tok) {
        auto pos = tok.find('=');
        if (pos == std::string::npos) continue;
        std::string key = tok.substr(0, pos), val = tok.substr(pos + 1);
        try {
          if (key == "seed")
            t.provenance.seed = std::stoull(val);
          else if (key == "reps")
            t.provenance.reps = std::stoi(val);
          else if (key == "grid")
            t.provenance.grid = std::stoi(val);
          else if (key == "generated")
            t.provenance.generated = val;
        } catch (const std::exception&) {
          fail_input("critical value table: bad provenance token '" + tok + "' on line " +
                           std::to_string(lineno));
        }
      }
      continue;
    }
    if (line.rfind("kind,", 0) == 0) continue;
    std::vector<std::string> f;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    while (f.size() < 7) f.push_back("");
    if (f.size() != 7)
      fail_input("critical value table: expected 7 fields on line " +
                       std::to_string(lineno));
    int p_w, k;
    double eps, param, value, se;
    try {
      p_w = std::stoi(f[1]);
      eps = std::stod(f[2]);
      k = std::stoi(f[3]);
      param = std::stod(f[4]);
      value = std::stod(f[5]);
      se = f[6].empty() ? 0.0 : std::stod(f[6]);
    } catch (const std::exception&) {
      fail_input("critical value table: unparseable number on line " +
                       std::to_string(lineno));
    }
    if (f[0] == "sup") {
      std::string key = std::to_string(p_w) + '|' + eps_key(eps) + '|' + std::to_string(k);
      std::size_t idx = sup_keys.size();
      for (std::size_t i = 0; i < sup_keys.size(); ++i)
        if (sup_keys[i] == key) {
          idx = i;
          break;
        }
      if (idx == sup_keys.size()) {
        sup_keys.push_back(key);
        SupLimitEntry e;
        e.p_w = p_w;
        e.epsilon = eps;
        e.k = k;
        t.sup_entries.push_back(e);
      }
      auto& e = t.sup_entries[idx];
      e.probs.push_back(param);
      e.quantiles.push_back(value);
      e.se.push_back(se);
    } else if (f[0] == "wdmax_level" || f[0] == "wdmax_unit") {
      MaxTestEntry m;
      m.p_w = p_w;
      m.epsilon = eps;
      m.k_max = k;
      m.level = param;
      m.unit_weights = f[0] == "wdmax_unit";
      m.value = value;
      m.se = se;
      t.max_entries.push_back(m);
    } else {
      fail_input("critical value table: unknown row kind '" + f[0] + "' on line " +
                       std::to_string(lineno));
    }
  }
  for (auto& e : t.sup_entries) {
    // rows may arrive unordered; the lookup code assumes ascending probs
    std::vector<std::size_t> order(e.probs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return e.probs[a] < e.probs[b]; });
    SupLimitEntry s = e;
    for (std::size_t i = 0; i < order.size(); ++i) {
      s.probs[i] = e.probs[order[i]];
      s.quantiles[i] = e.quantiles[order[i]];
      s.se[i] = e.se[order[i]];
    }
    e = std::move(s);
  }
  return t;
}

CriticalValueTable CriticalValueTable::read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_input("cannot open critical value table '" + path + "'");
  return read_csv(in, path);
}

namespace detail {
extern const char* const embedded_cv_csv;
}

const CriticalValueTable& CriticalValueTable::embedded() {
  static const CriticalValueTable table = [] {
    if (const char* env = std::getenv("PANELBREAK_CV_TABLE"); env && *env)
      return read_csv_file(env);
    std::istringstream in(detail::embedded_cv_csv);
    return read_csv(in, "embedded");
  }();
  return table;
}

}  // namespace panelbreak
