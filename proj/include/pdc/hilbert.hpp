// Copyright 2026 The pdclab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "pdc/errors.hpp"

namespace pdc {

using cplx = std::complex<double>;
using SparseMatrix = Eigen::SparseMatrix<cplx>;
using DenseMatrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Triplet = Eigen::Triplet<cplx>;
// Fock cutoffs of the modes, in tensor order (pump first, signal second).
using Dims = std::vector<std::size_t>;

inline constexpr cplx I{0.0, 1.0};

// Below this Hilbert-space size dense kernels are used.
inline constexpr std::size_t kDenseThreshold = 64;

inline std::size_t total_dim(const Dims& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                         std::multiplies<>());
}

inline std::string dims_to_string(const Dims& dims) {
  std::string s = "(";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(dims[i]);
  }
  return s + ")";
}

struct FockSpace {
  std::size_t dim;

  explicit FockSpace(std::size_t d) : dim(d) {
    if (d < 1) throw InvalidArgument("FockSpace: dim must be >= 1");
  }
};

class Operator {
 public:
  Operator(SparseMatrix m, Dims dims) : m_(std::move(m)), dims_(std::move(dims)) {
    const auto n = static_cast<Eigen::Index>(total_dim(dims_));
    if (dims_.empty() || m_.rows() != n || m_.cols() != n)
      throw DimensionMismatch("Operator: matrix side " + std::to_string(m_.rows()) +
                              " does not match space " + dims_to_string(dims_));
    m_.makeCompressed();
  }
  Operator(const DenseMatrix& m, Dims dims) : Operator(SparseMatrix(m.sparseView()), std::move(dims)) {}

  const SparseMatrix& matrix() const { return m_; }
  const Dims& dims() const { return dims_; }
  std::size_t size() const { return static_cast<std::size_t>(m_.rows()); }
  DenseMatrix dense() const { return DenseMatrix(m_); }

  Operator adjoint() const { return Operator(SparseMatrix(m_.adjoint()), dims_); }

  bool is_hermitian(double tol) const {
    const SparseMatrix d = m_ - SparseMatrix(m_.adjoint());
    double worst = 0.0;
    for (int k = 0; k < d.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(d, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
    return worst <= tol;
  }

  friend Operator operator+(const Operator& a, const Operator& b) {
    check_same(a, b);
    return Operator(SparseMatrix(a.m_ + b.m_), a.dims_);
  }
  friend Operator operator-(const Operator& a, const Operator& b) {
    check_same(a, b);
    return Operator(SparseMatrix(a.m_ - b.m_), a.dims_);
  }
  friend Operator operator*(const Operator& a, const Operator& b) {
    check_same(a, b);
    return Operator(SparseMatrix(a.m_ * b.m_), a.dims_);
  }
  friend Operator operator*(cplx s, const Operator& a) { return Operator(SparseMatrix(s * a.m_), a.dims_); }
  friend Operator operator*(const Operator& a, cplx s) { return s * a; }

 private:
  static void check_same(const Operator& a, const Operator& b) {
    if (a.dims_ != b.dims_)
      throw DimensionMismatch("Operator: spaces " + dims_to_string(a.dims_) + " and " +
                              dims_to_string(b.dims_) + " differ");
  }

  SparseMatrix m_;
  Dims dims_;
};

class StateVector {
 public:
  StateVector(Vector amplitudes, Dims dims, double tol = 1e-8)
      : v_(std::move(amplitudes)), dims_(std::move(dims)) {
    if (static_cast<std::size_t>(v_.size()) != total_dim(dims_))
      throw DimensionMismatch("StateVector: length does not match space " + dims_to_string(dims_));
    if (std::abs(v_.norm() - 1.0) > tol)
      throw InvalidState("StateVector: norm " + std::to_string(v_.norm()) + " differs from 1");
  }

  static StateVector normalized(Vector amplitudes, Dims dims) {
    const double n = amplitudes.norm();
    if (n == 0.0) throw InvalidState("StateVector: zero vector");
    return StateVector(amplitudes / n, std::move(dims));
  }

  const Vector& amplitudes() const { return v_; }
  const Dims& dims() const { return dims_; }
  std::size_t size() const { return static_cast<std::size_t>(v_.size()); }

 private:
  Vector v_;
  Dims dims_;
};

struct DensityTolerance {
  double hermitian = 1e-8;
  double trace = 1e-8;
  double positivity = 1e-8;
  // Skip the eigenvalue check above this size.
  std::size_t positivity_max_dim = 2048;
};

class DensityMatrix {
 public:
  DensityMatrix(DenseMatrix m, Dims dims, double tol = 1e-8)
      : DensityMatrix(std::move(m), std::move(dims), DensityTolerance{tol, tol, tol}) {}

  DensityMatrix(DenseMatrix m, Dims dims, const DensityTolerance& tol)
      : m_(std::move(m)), dims_(std::move(dims)) {
    const auto n = static_cast<Eigen::Index>(total_dim(dims_));
    if (dims_.empty() || m_.rows() != n || m_.cols() != n)
      throw DimensionMismatch("DensityMatrix: matrix does not match space " + dims_to_string(dims_));
    const double herm = (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
    if (herm > tol.hermitian)
      throw InvalidState("DensityMatrix: not Hermitian (deviation " + std::to_string(herm) + ")");
    const double tr = std::abs(m_.trace() - 1.0);
    if (tr > tol.trace) throw InvalidState("DensityMatrix: trace deviates from 1 by " + std::to_string(tr));
    if (static_cast<std::size_t>(n) <= tol.positivity_max_dim) {
      const double lo = min_eigenvalue();
      if (lo < -tol.positivity)
        throw InvalidState("DensityMatrix: negative eigenvalue " + std::to_string(lo));
    }
  }

  static DensityMatrix from_pure(const StateVector& psi) {
    const Vector& v = psi.amplitudes();
    return DensityMatrix(v * v.adjoint(), psi.dims());
  }

  const DenseMatrix& matrix() const { return m_; }
  const Dims& dims() const { return dims_; }
  std::size_t size() const { return static_cast<std::size_t>(m_.rows()); }

  double min_eigenvalue() const {
    const DenseMatrix h = 0.5 * (m_ + m_.adjoint());
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

 private:
  DenseMatrix m_;
  Dims dims_;
};

inline Operator identity(const Dims& dims) {
  const auto n = static_cast<Eigen::Index>(total_dim(dims));
  SparseMatrix id(n, n);
  id.setIdentity();
  return Operator(id, dims);
}

inline Operator annihilation(const FockSpace& space) {
  const auto d = static_cast<Eigen::Index>(space.dim);
  std::vector<Triplet> t;
  for (Eigen::Index n = 1; n < d; ++n) t.emplace_back(n - 1, n, std::sqrt(static_cast<double>(n)));
  SparseMatrix a(d, d);
  a.setFromTriplets(t.begin(), t.end());
  return Operator(a, {space.dim});
}

inline Operator creation(const FockSpace& space) { return annihilation(space).adjoint(); }

inline Operator number(const FockSpace& space) {
  const auto d = static_cast<Eigen::Index>(space.dim);
  std::vector<Triplet> t;
  for (Eigen::Index n = 1; n < d; ++n) t.emplace_back(n, n, static_cast<double>(n));
  SparseMatrix num(d, d);
  num.setFromTriplets(t.begin(), t.end());
  return Operator(num, {space.dim});
}

inline SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b) {
  SparseMatrix out = Eigen::kroneckerProduct(a, b).eval();
  return out;
}

// identity ⊗ ... ⊗ op ⊗ ... ⊗ identity with op in position `slot`.
inline Operator embed(const Operator& op, std::size_t slot, const std::vector<FockSpace>& spaces) {
  if (slot >= spaces.size())
    throw DimensionMismatch("embed: slot " + std::to_string(slot) + " out of range");
  if (op.dims().size() != 1 || op.dims()[0] != spaces[slot].dim)
    throw DimensionMismatch("embed: operator on " + dims_to_string(op.dims()) +
                            " does not act on a mode of dim " + std::to_string(spaces[slot].dim));
  Dims dims;
  for (const auto& s : spaces) dims.push_back(s.dim);
  SparseMatrix out(1, 1);
  out.insert(0, 0) = 1.0;
  for (std::size_t i = 0; i < spaces.size(); ++i) {
    if (i == slot) {
      out = kron(out, op.matrix());
    } else {
      SparseMatrix id(static_cast<Eigen::Index>(spaces[i].dim), static_cast<Eigen::Index>(spaces[i].dim));
      id.setIdentity();
      out = kron(out, id);
    }
  }
  return Operator(out, dims);
}

inline StateVector fock_state(std::size_t n, const FockSpace& space) {
  if (n >= space.dim) throw InsufficientTruncation("fock_state: level exceeds cutoff");
  Vector v = Vector::Zero(static_cast<Eigen::Index>(space.dim));
  v(static_cast<Eigen::Index>(n)) = 1.0;
  return StateVector(v, {space.dim});
}

// Weight of a coherent state beyond the cutoff, summed from the tail directly.
inline double coherent_norm_deficit(cplx alpha, std::size_t dim) {
  const double x = std::norm(alpha);
  if (x == 0.0) return 0.0;
  // log of the Poisson weight at n = dim
  double logw = -x + static_cast<double>(dim) * std::log(x) - std::lgamma(static_cast<double>(dim) + 1.0);
  double w = std::exp(logw);
  double sum = 0.0;
  for (std::size_t n = dim; n < dim + 100000; ++n) {
    sum += w;
    w *= x / static_cast<double>(n + 1);
    if (static_cast<double>(n) > x && w < 1e-18 * sum) break;
  }
  return sum;
}

inline StateVector coherent_state(cplx alpha, const FockSpace& space) {
  const double deficit = coherent_norm_deficit(alpha, space.dim);
  if (deficit > 1e-10)
    throw InsufficientTruncation("coherent_state: |alpha|^2=" + std::to_string(std::norm(alpha)) +
                                 " needs more than " + std::to_string(space.dim) + " levels");
  const auto d = static_cast<Eigen::Index>(space.dim);
  Vector v(d);
  v(0) = std::exp(-0.5 * std::norm(alpha));
  for (Eigen::Index n = 1; n < d; ++n) v(n) = v(n - 1) * alpha / std::sqrt(static_cast<double>(n));
  return StateVector::normalized(v, {space.dim});
}

inline StateVector tensor(const StateVector& a, const StateVector& b) {
  const Vector& x = a.amplitudes();
  const Vector& y = b.amplitudes();
  Vector v(x.size() * y.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) v.segment(i * y.size(), y.size()) = x(i) * y;
  Dims dims = a.dims();
  dims.insert(dims.end(), b.dims().begin(), b.dims().end());
  return StateVector(v, dims);
}

inline cplx expectation(const Operator& op, const StateVector& psi) {
  if (op.dims() != psi.dims())
    throw DimensionMismatch("expectation: operator on " + dims_to_string(op.dims()) + ", state on " +
                            dims_to_string(psi.dims()));
  const Vector& v = psi.amplitudes();
  return v.dot(op.matrix() * v);
}

inline cplx expectation(const Operator& op, const DensityMatrix& rho) {
  if (op.dims() != rho.dims())
    throw DimensionMismatch("expectation: operator on " + dims_to_string(op.dims()) + ", state on " +
                            dims_to_string(rho.dims()));
  // Tr(rho O) = sum_ij rho_ji O_ij
  cplx s = 0.0;
  const SparseMatrix& o = op.matrix();
  const DenseMatrix& r = rho.matrix();
  for (int k = 0; k < o.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(o, k); it; ++it) s += it.value() * r(it.col(), it.row());
  return s;
}

}  // namespace pdc
