// Copyright 2026 The qedafqmc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace qedafqmc {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;

inline constexpr cplx kI{0.0, 1.0};

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. `line()` is 1-based, 0 when the error is not tied to a line.
class ParseError : public Error {
 public:
  ParseError(int line, const std::string& what)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Dense real two-electron tensor in chemists' notation, element (pq|rs).
///
/// Storage is column-major over the compound indices (pq) = p*M+q and
/// (rs) = r*M+s, so `as_matrix()` exposes the M^2 x M^2 supermatrix
/// V[(pq),(rs)] without copying.
class Eri {
 public:
  Eri() = default;
  explicit Eri(int n_orb)
      : n_(n_orb), data_(static_cast<std::size_t>(n_orb) * n_orb * n_orb * n_orb, 0.0) {}

  int n_orb() const noexcept { return n_; }

  double& operator()(int p, int q, int r, int s) { return data_[index(p, q, r, s)]; }
  double operator()(int p, int q, int r, int s) const { return data_[index(p, q, r, s)]; }

  /// Writes `value` into all eight index permutations of a real (pq|rs).
  void set_symmetric(int p, int q, int r, int s, double value) {
    (*this)(p, q, r, s) = value;
    (*this)(q, p, r, s) = value;
    (*this)(p, q, s, r) = value;
    (*this)(q, p, s, r) = value;
    (*this)(r, s, p, q) = value;
    (*this)(s, r, p, q) = value;
    (*this)(r, s, q, p) = value;
    (*this)(s, r, q, p) = value;
  }

  Eigen::Map<const Mat> as_matrix() const { return {data_.data(), n_ * n_, n_ * n_}; }
  Eigen::Map<Mat> as_matrix() { return {data_.data(), n_ * n_, n_ * n_}; }

  /// Largest deviation from 8-fold permutational symmetry.
  double max_symmetry_violation() const {
    double worst = 0.0;
    for (int p = 0; p < n_; ++p)
      for (int q = 0; q < n_; ++q)
        for (int r = 0; r < n_; ++r)
          for (int s = 0; s < n_; ++s) {
            const double v = (*this)(p, q, r, s);
            for (double w : {(*this)(q, p, r, s), (*this)(p, q, s, r), (*this)(r, s, p, q)})
              worst = std::max(worst, std::abs(v - w));
          }
    return worst;
  }

 private:
  std::size_t index(int p, int q, int r, int s) const {
    const std::size_t m = static_cast<std::size_t>(n_);
    return (static_cast<std::size_t>(p) * m + q) + (static_cast<std::size_t>(r) * m + s) * m * m;
  }

  int n_ = 0;
  std::vector<double> data_;
};

}  // namespace qedafqmc
