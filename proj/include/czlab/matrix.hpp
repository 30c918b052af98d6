#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "czlab/errors.hpp"

namespace czlab {

enum class Frame { mu, weighted };

inline std::string frame_tag(Frame f) { return f == Frame::mu ? "L2(mu)" : "L2(w)"; }

// Dense operator in the frame e_i = delta_i / sqrt(mu_i). The imaginary part is empty for real operators.
struct OperatorMatrix {
  Eigen::MatrixXd re;
  Eigen::MatrixXd im;
  Frame frame = Frame::mu;

  OperatorMatrix() = default;
  explicit OperatorMatrix(Eigen::MatrixXd r, Frame f = Frame::mu) : re(std::move(r)), frame(f) {}
  OperatorMatrix(Eigen::MatrixXd r, Eigen::MatrixXd i, Frame f) : re(std::move(r)), im(std::move(i)), frame(f) {}

  bool is_complex() const { return im.size() > 0; }
  int n() const { return static_cast<int>(re.rows()); }
  double frobenius() const { return std::sqrt(re.squaredNorm() + (is_complex() ? im.squaredNorm() : 0.0)); }
  bool finite() const { return re.allFinite() && (!is_complex() || im.allFinite()); }
};

namespace detail {

// Hestenes one-sided Jacobi: orthogonalizes the columns of W in place; returns false on sweep cap.
inline bool one_sided_jacobi(Eigen::MatrixXd& W, int max_sweeps = 80) {
  const Eigen::Index n = W.cols();
  const double eps = std::numeric_limits<double>::epsilon();
  const double tol = 4.0 * eps * std::max<double>(1.0, std::sqrt(double(W.rows())));
  // Columns below rounding level of the whole matrix count as zero; rotating them never settles.
  const double negligible = std::pow(eps * W.norm(), 2);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double a = W.col(i).squaredNorm(), b = W.col(j).squaredNorm();
        const double c = W.col(i).dot(W.col(j));
        if (c == 0.0 || a <= negligible || b <= negligible || std::abs(c) <= tol * std::sqrt(a * b)) continue;
        rotated = true;
        const double zeta = (b - a) / (2.0 * c);
        const double t = (zeta >= 0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double cs = 1.0 / std::sqrt(1.0 + t * t), sn = cs * t;
        for (Eigen::Index r = 0; r < W.rows(); ++r) {
          const double wi = W(r, i), wj = W(r, j);
          W(r, i) = cs * wi - sn * wj;
          W(r, j) = sn * wi + cs * wj;
        }
      }
    if (!rotated) return true;
  }
  return false;
}

}  // namespace detail

inline constexpr int kJacobiLimit = 512;

// Nonincreasing singular values of a real matrix. One-sided Jacobi (after a pivoted QR that
// speeds up convergence) up to kJacobiLimit columns; divide-and-conquer bidiagonal SVD above.
inline std::vector<double> singular_values(const Eigen::MatrixXd& A) {
  if (!A.allFinite()) throw ValidationError("svd: non-finite entries");
  std::vector<double> s;
  if (A.size() == 0) return s;
  const Eigen::MatrixXd M = A.rows() >= A.cols() ? A : Eigen::MatrixXd(A.transpose());
  auto bidiagonal = [&] {
    Eigen::VectorXd v = Eigen::BDCSVD<Eigen::MatrixXd>(M).singularValues();
    if (!v.allFinite()) v = Eigen::JacobiSVD<Eigen::MatrixXd>(M).singularValues();
    s.assign(v.data(), v.data() + v.size());
  };
  if (M.cols() > kJacobiLimit) {
    bidiagonal();
  } else {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(M);
    Eigen::MatrixXd W = qr.matrixR().topRows(M.cols()).triangularView<Eigen::Upper>();
    W.transposeInPlace();
    if (!detail::one_sided_jacobi(W)) {
      bidiagonal();
    } else {
      for (Eigen::Index c = 0; c < W.cols(); ++c) s.push_back(W.col(c).norm());
    }
  }
  std::sort(s.begin(), s.end(), std::greater<>());
  return s;
}

// Complex operators go through the real embedding [[Re, -Im], [Im, Re]], whose spectrum
// is the complex one with every value doubled.
inline std::vector<double> singular_values(const OperatorMatrix& T) {
  if (!T.finite()) throw ValidationError("svd: non-finite entries");
  if (!T.is_complex()) return singular_values(T.re);
  const Eigen::Index r = T.re.rows(), c = T.re.cols();
  Eigen::MatrixXd E(2 * r, 2 * c);
  E << T.re, -T.im, T.im, T.re;
  const std::vector<double> all = singular_values(E);
  std::vector<double> s;
  for (std::size_t i = 0; i < all.size(); i += 2) s.push_back(all[i]);
  return s;
}

}  // namespace czlab
