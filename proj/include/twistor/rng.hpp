#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace twistor {

/// Deterministic random source.  mt19937_64 plus an explicit Box-Muller
/// transform, so streams are bit-identical across platforms and standard
/// library implementations (std::normal_distribution is not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  /// Uniform in [0,1) with 53-bit resolution.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double gaussian() {
    const double u1 = 1.0 - uniform();  // (0,1], keeps the log finite
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Uniform integer in [0, bound).  Modulo bias is irrelevant here; only
  /// determinism matters.
  std::uint64_t integer(std::uint64_t bound) { return eng_() % bound; }

  Eigen::MatrixXd gaussian_matrix(int rows, int cols) {
    Eigen::MatrixXd M(rows, cols);
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < rows; ++i) M(i, j) = gaussian();
    return M;
  }

  Eigen::MatrixXd gaussian_skew(int d) {
    const Eigen::MatrixXd G = gaussian_matrix(d, d);
    return 0.5 * (G - G.transpose());
  }

  /// QR of a Gaussian matrix with the R-diagonal sign fix, so the result is
  /// a deterministic, approximately Haar orthogonal matrix.
  Eigen::MatrixXd random_orthogonal(int d) {
    const Eigen::MatrixXd G = gaussian_matrix(d, d);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
    Eigen::MatrixXd Q = qr.householderQ();
    const Eigen::MatrixXd R = qr.matrixQR();
    for (int i = 0; i < d; ++i)
      if (R(i, i) < 0.0) Q.col(i) = -Q.col(i);
    return Q;
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace twistor
