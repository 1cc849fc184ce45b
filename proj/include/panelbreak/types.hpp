#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace panelbreak {

// Error taxonomy; values match the C API status codes and CLI exit codes.
enum class error_code : int {
  input = 1,       // malformed data, bad schema, bad options
  infeasible = 2,  // request is statistically impossible for this panel
  numeric = 3,     // rank/conditioning/convergence failure
  internal = 4     // invariant violated; indicates a bug
};

class pb_error : public std::runtime_error {
public:
  pb_error(error_code c, const std::string& msg) : std::runtime_error(msg), code_(c) {}
  error_code code() const noexcept { return code_; }

private:
  error_code code_;
};

[[noreturn]] inline void fail_input(const std::string& m) { throw pb_error(error_code::input, m); }
[[noreturn]] inline void fail_infeasible(const std::string& m) { throw pb_error(error_code::infeasible, m); }
[[noreturn]] inline void fail_numeric(const std::string& m) { throw pb_error(error_code::numeric, m); }
[[noreturn]] inline void fail_internal(const std::string& m) { throw pb_error(error_code::internal, m); }

// Break dates are 1-based last-period-of-regime indices: breaks {T_1,...,T_k}
// partition 1..T into regimes (T_{j-1}+1 .. T_j] with T_0 = 0, T_{k+1} = T.
using BreakSet = std::vector<int>;

inline int regime_of(const BreakSet& breaks, int t) {
  int j = 0;
  while (j < static_cast<int>(breaks.size()) && t > breaks[j]) ++j;
  return j;  // 0-based regime index
}

inline std::vector<int> regime_lengths(const BreakSet& breaks, int n_periods) {
  std::vector<int> len;
  int prev = 0;
  for (int b : breaks) {
    len.push_back(b - prev);
    prev = b;
  }
  len.push_back(n_periods - prev);
  return len;
}

struct TrimmingSpec {
  double epsilon = 0.15;

  // ceil(eps*T) with a guard against representation noise (0.05*2000 must give 100).
  int min_regime_length(int n_periods) const {
    double x = epsilon * static_cast<double>(n_periods);
    return static_cast<int>(std::ceil(x - 1e-9 * std::max(1.0, std::fabs(x))));
  }

  int max_breaks() const {
    double inv = 1.0 / epsilon;
    return static_cast<int>(std::floor(inv + 1e-9 * std::max(1.0, inv))) - 2;
  }

  void validate() const {
    if (!(epsilon > 0.0) || !(epsilon < 0.5))
      fail_input("trimming fraction must lie in (0, 0.5), got " + std::to_string(epsilon));
  }
};

inline void validate_breaks(const BreakSet& breaks, int n_periods) {
  int prev = 0;
  for (int b : breaks) {
    if (b <= prev || b >= n_periods)
      fail_input("break dates must be strictly increasing and inside 1.." +
                 std::to_string(n_periods - 1));
    prev = b;
  }
}

// True when every regime implied by `breaks` has at least `min_len` periods.
inline bool breaks_admissible(const BreakSet& breaks, int n_periods, int min_len) {
  int prev = 0;
  for (int b : breaks) {
    if (b - prev < min_len) return false;
    prev = b;
  }
  return n_periods - prev >= min_len;
}

}  // namespace panelbreak
