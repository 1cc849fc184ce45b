#pragma once

#include <armadillo>
#include <limits>

#include "panelbreak/types.hpp"

namespace panelbreak {

// Pooled least squares on a time segment, with a segment-local projection on
// common basis rows first (each unit gets its own basis coefficients). Prefix
// cross-moments make each query cheap, so scanning all O(T^2) segments costs
// O(T^2 * N * dims) arithmetic overall rather than one regression per segment.
class SegmentEngine {
public:
  SegmentEngine(const arma::mat& response,      // T x N
                const arma::cube& regressors,   // T x r x N
                const arma::mat& basis_series); // T x q, q may be 0

  // 1-based inclusive segment bounds. Infeasible/singular segments give +inf.
  double ssr(int a, int b) const;
  bool coefs(int a, int b, arma::vec& out) const;  // false when infeasible

  int n_periods() const { return T_; }
  int n_units() const { return N_; }
  int n_regressors() const { return r_; }

  static constexpr double infeasible = std::numeric_limits<double>::infinity();

private:
  bool segment_moments(int a, int b, arma::mat& gram, arma::vec& rhs, double& yy) const;

  int T_ = 0, N_ = 0, r_ = 0, q_ = 0;
  arma::vec syy_;    // T+1
  arma::mat swy_;    // r x (T+1)
  arma::cube sww_;   // r x r x (T+1)
  arma::cube sgg_;   // q x q x (T+1)
  arma::cube sgy_;   // q x N x (T+1)
  arma::cube swg_;   // (r*q) x N x (T+1), unit-wise W'G accumulations
};

}  // namespace panelbreak
