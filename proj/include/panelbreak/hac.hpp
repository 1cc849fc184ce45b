#pragma once

#include <armadillo>
#include <vector>

#include "panelbreak/estimator.hpp"
#include "panelbreak/types.hpp"

namespace panelbreak {

struct HacSpec {
  int bandwidth = -1;  // -1: floor(4 (T/100)^{2/9})

  int resolve(int n_periods) const {
    if (bandwidth >= 0) return bandwidth;
    return static_cast<int>(std::floor(4.0 * std::pow(n_periods / 100.0, 2.0 / 9.0)));
  }
};

struct CovarianceEstimate {
  arma::mat omega;   // (k+1)p_w square: scaled Gram of the netted breaking block
  arma::mat phi;     // Bartlett long-run counterpart
  arma::mat vdelta;  // omega^{-1} phi omega^{-1}
  std::vector<arma::mat> omega_regime;  // p_w square, one per regime
  std::vector<arma::mat> phi_regime;
  int bandwidth = 0;
  double min_eig_phi = 0.0;
};

CovarianceEstimate hac_covariance(const FitResult& fit, const HacSpec& spec);

}  // namespace panelbreak
