#include "panelbreak/segments.hpp"

namespace panelbreak {

SegmentEngine::SegmentEngine(const arma::mat& response, const arma::cube& regressors,
                             const arma::mat& basis_series) {
  T_ = static_cast<int>(response.n_rows);
  N_ = static_cast<int>(response.n_cols);
  r_ = static_cast<int>(regressors.n_cols);
  q_ = static_cast<int>(basis_series.n_cols);
  if (static_cast<int>(regressors.n_rows) != T_ ||
      static_cast<int>(regressors.n_slices) != N_ ||
      static_cast<int>(basis_series.n_rows) != T_)
    fail_internal("segment engine inputs disagree on dimensions");
  if (r_ == 0) fail_internal("segment engine needs at least one regressor");

  syy_.zeros(T_ + 1);
  swy_.zeros(r_, T_ + 1);
  sww_.zeros(r_, r_, T_ + 1);
  sgg_.zeros(std::max(q_, 1), std::max(q_, 1), T_ + 1);
  sgy_.zeros(std::max(q_, 1), N_, T_ + 1);
  swg_.zeros(std::max(r_ * q_, 1), N_, T_ + 1);

  for (int t = 1; t <= T_; ++t) {
    syy_(t) = syy_(t - 1);
    swy_.col(t) = swy_.col(t - 1);
    sww_.slice(t) = sww_.slice(t - 1);
    if (q_ > 0) {
      sgg_.slice(t) = sgg_.slice(t - 1);
      sgy_.slice(t) = sgy_.slice(t - 1);
      swg_.slice(t) = swg_.slice(t - 1);
    }
    arma::rowvec g;
    if (q_ > 0) {
      g = basis_series.row(t - 1);
      sgg_.slice(t) += g.t() * g;
    }
    for (int i = 0; i < N_; ++i) {
      const double yv = response(t - 1, i);
      arma::vec wv = regressors.slice(i).row(t - 1).t();
      syy_(t) += yv * yv;
      swy_.col(t) += wv * yv;
      sww_.slice(t) += wv * wv.t();
      if (q_ > 0) {
        sgy_.slice(t).col(i) += g.t() * yv;
        // unit's running W'G, stored flattened column-major (r x q)
        arma::mat wg(swg_.slice(t).colptr(i), r_, q_, false, true);
        wg += wv * g;
      }
    }
  }
}

bool SegmentEngine::segment_moments(int a, int b, arma::mat& gram, arma::vec& rhs,
                                    double& yy) const {
  if (a < 1 || b > T_ || a > b) return false;
  const int len = b - a + 1;
  if (len < q_ + 1) return false;  // basis would absorb everything

  yy = syy_(b) - syy_(a - 1);
  rhs = swy_.col(b) - swy_.col(a - 1);
  gram = sww_.slice(b) - sww_.slice(a - 1);

  if (q_ > 0) {
    arma::mat gg = sgg_.slice(b) - sgg_.slice(a - 1);
    arma::mat gg_chol;
    if (!arma::chol(gg_chol, gg)) return false;
    arma::mat gy = sgy_.slice(b) - sgy_.slice(a - 1);   // q x N
    arma::mat wg = swg_.slice(b) - swg_.slice(a - 1);   // (r*q) x N
    // Per unit: subtract A K A', A K b, b' K b with K = gg^{-1}.
    for (int i = 0; i < N_; ++i) {
      arma::mat A(wg.colptr(i), r_, q_, false, true);
      arma::vec bi = gy.col(i);
      arma::mat half = arma::solve(arma::trimatl(gg_chol.t()), A.t());  // q x r
      arma::vec halfb = arma::solve(arma::trimatl(gg_chol.t()), bi);
      gram -= half.t() * half;
      rhs -= half.t() * halfb;
      yy -= arma::dot(halfb, halfb);
    }
  }
  return true;
}

double SegmentEngine::ssr(int a, int b) const {
  arma::mat gram;
  arma::vec rhs;
  double yy;
  if (!segment_moments(a, b, gram, rhs, yy)) return infeasible;
  arma::mat chol_g;
  if (!arma::chol(chol_g, gram)) return infeasible;
  arma::vec half = arma::solve(arma::trimatl(chol_g.t()), rhs);
  double out = yy - arma::dot(half, half);
  return out > 0.0 ? out : 0.0;
}

bool SegmentEngine::coefs(int a, int b, arma::vec& out) const {
  arma::mat gram;
  arma::vec rhs;
  double yy;
  if (!segment_moments(a, b, gram, rhs, yy)) return false;
  return arma::solve(out, gram, rhs, arma::solve_opts::likely_sympd + arma::solve_opts::no_approx);
}

}  // namespace panelbreak
