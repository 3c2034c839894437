#ifndef HEALTHSIM_EXPM_HPP
#define HEALTHSIM_EXPM_HPP

// Matrix exponential by scaling and squaring with diagonal Pade approximants
// of degree 3, 5, 7, 9 or 13 (Higham's 2005 degree selection).

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "healthsim/error.hpp"

namespace healthsim {

namespace detail {

inline Eigen::MatrixXd pade_low(const Eigen::MatrixXd& a, int m) {
  static constexpr std::array<double, 4> b3{120., 60., 12., 1.};
  static constexpr std::array<double, 6> b5{30240., 15120., 3360., 420., 30., 1.};
  static constexpr std::array<double, 8> b7{17297280., 8648640., 1995840., 277200., 25200., 1512., 56., 1.};
  static constexpr std::array<double, 10> b9{17643225600., 8821612800., 2075673600., 302702400., 30270240.,
                                             2162160.,     110880.,     3960.,       90.,        1.};
  const double* b = m == 3 ? b3.data() : m == 5 ? b5.data() : m == 7 ? b7.data() : b9.data();
  const Eigen::Index n = a.rows();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd a2 = a * a;
  Eigen::MatrixXd pow = id;  // A^(2j)
  Eigen::MatrixXd u_inner = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; 2 * j <= m; ++j) {
    v += b[2 * j] * pow;
    if (2 * j + 1 <= m) u_inner += b[2 * j + 1] * pow;
    pow = pow * a2;
  }
  const Eigen::MatrixXd u = a * u_inner;
  return (v - u).partialPivLu().solve(v + u);
}

inline Eigen::MatrixXd pade13(const Eigen::MatrixXd& a) {
  static constexpr std::array<double, 14> b{64764752532480000., 32382376266240000., 7771770303897600.,
                                            1187353796428800.,  129060195264000.,   10559470521600.,
                                            670442572800.,      33522128640.,       1323241920.,
                                            40840800.,          960960.,            16380.,
                                            182.,               1.};
  const Eigen::Index n = a.rows();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd a2 = a * a;
  const Eigen::MatrixXd a4 = a2 * a2;
  const Eigen::MatrixXd a6 = a4 * a2;
  const Eigen::MatrixXd u =
      a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
  const Eigen::MatrixXd v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
  return (v - u).partialPivLu().solve(v + u);
}

}  // namespace detail

/// exp(A) for a square matrix.
inline Eigen::MatrixXd expm(const Eigen::MatrixXd& a) {
  detail::require(a.rows() == a.cols(), "expm: matrix must be square");
  detail::require(a.allFinite(), "expm: matrix has non-finite entries");
  if (a.rows() == 0) return a;
  static constexpr std::array<double, 4> theta{1.495585217958292e-2, 2.539398330063230e-1, 9.504178996162932e-1,
                                               2.097847961257068e0};
  static constexpr std::array<int, 4> degree{3, 5, 7, 9};
  static constexpr double theta13 = 5.371920351148152e0;
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  for (size_t i = 0; i < theta.size(); ++i)
    if (norm1 <= theta[i]) return detail::pade_low(a, degree[i]);
  int s = 0;
  if (norm1 > theta13) s = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
  Eigen::MatrixXd r = detail::pade13(a / std::ldexp(1.0, s));
  for (int k = 0; k < s; ++k) r = r * r;
  return r;
}

/// Row-sum tolerance accepted for an intensity matrix, relative to the
/// largest rate in the row (floor 1). Published intensity matrices are often
/// printed to seven significant digits.
inline constexpr double kIntensityRowTol = 1e-6;

/// Transition probability matrix P = Exp(t Q) for an intensity matrix Q.
/// The diagonal is rebuilt as minus the off-diagonal row sum, and entries are
/// clamped to [0, 1] after a tolerance check.
inline Eigen::MatrixXd expmat(const Eigen::MatrixXd& q, double t) {
  detail::require(q.rows() == q.cols(), "expmat: intensity matrix must be square");
  detail::require(t >= 0 && std::isfinite(t), "expmat: t must be nonnegative and finite");
  const Eigen::Index n = q.rows();
  Eigen::MatrixXd qq = q;
  for (Eigen::Index r = 0; r < n; ++r) {
    double off = 0, scale = 1;
    for (Eigen::Index c = 0; c < n; ++c) {
      if (c == r) continue;
      if (!(q(r, c) >= 0) || !std::isfinite(q(r, c)))
        throw ValidationError("expmat: off-diagonal entry (" + std::to_string(r + 1) + "," + std::to_string(c + 1) +
                              ") must be a nonnegative rate");
      off += q(r, c);
      scale = std::max(scale, q(r, c));
    }
    if (std::abs(off + q(r, r)) > kIntensityRowTol * scale)
      throw ValidationError("expmat: row " + std::to_string(r + 1) + " of the intensity matrix does not sum to 0");
    qq(r, r) = -off;
  }
  Eigen::MatrixXd p = expm(t * qq);
  for (Eigen::Index r = 0; r < n; ++r) {
    if (qq.row(r).isZero(0)) {  // absorbing: exact unit row
      p.row(r).setZero();
      p(r, r) = 1.0;
      continue;
    }
    for (Eigen::Index c = 0; c < n; ++c) {
      double& v = p(r, c);
      if (v < -1e-9 || v > 1 + 1e-9) throw ComputationError("expmat: probability outside [0, 1]");
      v = std::clamp(v, 0.0, 1.0);
    }
  }
  return p;
}

}  // namespace healthsim

#endif  // HEALTHSIM_EXPM_HPP
