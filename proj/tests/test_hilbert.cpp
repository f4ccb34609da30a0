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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pdc/hilbert.hpp"

using namespace pdc;

namespace {

DenseMatrix random_density(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  DenseMatrix a(n, n);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = cplx(nd(rng), nd(rng));
  DenseMatrix r = a * a.adjoint();
  return r / r.trace();
}

}  // namespace

TEST(Annihilation, LowersFockOne) {
  const FockSpace s(2);
  const Vector out = annihilation(s).matrix() * fock_state(1, s).amplitudes();
  EXPECT_NEAR(std::abs(out(0) - 1.0), 0.0, 1e-15);
  EXPECT_EQ(out(1), cplx(0.0));
}

TEST(Annihilation, MatrixElement) {
  const DenseMatrix a = annihilation(FockSpace(3)).dense();
  EXPECT_NEAR(a(1, 2).real(), 1.41421356, 1e-8);
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 3; ++j)
      if (j != i + 1) EXPECT_EQ(a(i, j), cplx(0.0));
}

TEST(Annihilation, CommutatorExceptTopLevel) {
  const FockSpace s(8);
  const Operator a = annihilation(s);
  const DenseMatrix c = (a * a.adjoint() - a.adjoint() * a).dense();
  const DenseMatrix low = c.topLeftCorner(7, 7) - DenseMatrix::Identity(7, 7);
  EXPECT_LT(low.cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_NEAR(c(7, 7).real(), -7.0, 1e-12);
}

TEST(Annihilation, RejectsEmptySpace) { EXPECT_THROW(FockSpace(0), InvalidArgument); }

TEST(Number, DiagonalEntries) {
  for (std::size_t d : {1u, 2u, 5u, 17u}) {
    const FockSpace s(d);
    const Operator a = annihilation(s);
    const DenseMatrix n = (a.adjoint() * a).dense();
    for (std::size_t k = 0; k < d; ++k) EXPECT_NEAR(std::abs(n(k, k) - cplx(static_cast<double>(k))), 0.0, 1e-13);
    EXPECT_EQ((n - DenseMatrix(n.diagonal().asDiagonal())).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(Embed, SlotOrdering) {
  const std::vector<FockSpace> sp{FockSpace(2), FockSpace(2)};
  const StateVector s10 = tensor(fock_state(1, sp[0]), fock_state(0, sp[1]));
  EXPECT_NEAR(expectation(embed(number(sp[0]), 0, sp), s10).real(), 1.0, 1e-15);
  EXPECT_NEAR(expectation(embed(number(sp[1]), 1, sp), s10).real(), 0.0, 1e-15);
}

TEST(Embed, DisjointModesCommute) {
  const std::vector<FockSpace> sp{FockSpace(3), FockSpace(4)};
  const Operator a = embed(annihilation(sp[0]), 0, sp);
  const Operator b = embed(annihilation(sp[1]), 1, sp);
  EXPECT_EQ(((a * b) - (b * a)).dense().cwiseAbs().maxCoeff(), 0.0);
}

TEST(Embed, RejectsWrongSpace) {
  const std::vector<FockSpace> sp{FockSpace(3), FockSpace(4)};
  EXPECT_THROW(embed(annihilation(FockSpace(3)), 1, sp), DimensionMismatch);
  EXPECT_THROW(embed(annihilation(FockSpace(3)), 2, sp), DimensionMismatch);
}

TEST(Embed, ProductStateExpectation) {
  const std::vector<FockSpace> sp{FockSpace(12), FockSpace(9)};
  const StateVector pa = coherent_state(cplx(0.7, -0.3), sp[0]);
  const StateVector pb = StateVector::normalized(Vector::LinSpaced(9, 1.0, 2.0), {9});
  const StateVector prod = tensor(pa, pb);
  for (const Operator& o : {annihilation(sp[0]), number(sp[0])})
    EXPECT_NEAR(std::abs(expectation(embed(o, 0, sp), prod) - expectation(o, pa)), 0.0, 1e-14);
  for (const Operator& o : {annihilation(sp[1]), number(sp[1])})
    EXPECT_NEAR(std::abs(expectation(embed(o, 1, sp), prod) - expectation(o, pb)), 0.0, 1e-14);
}

TEST(Coherent, ZeroIsVacuum) {
  const StateVector s = coherent_state(0.0, FockSpace(5));
  EXPECT_EQ(s.amplitudes()(0), cplx(1.0));
  EXPECT_EQ(s.amplitudes().tail(4).norm(), 0.0);
}

TEST(Coherent, MeanPhotonNumber) {
  const FockSpace s(30);
  EXPECT_NEAR(expectation(number(s), coherent_state(1.0, s)).real(), 1.0, 1e-8);
}

TEST(Coherent, Normalized) {
  const StateVector s = coherent_state(std::sqrt(2.0), FockSpace(40));
  EXPECT_NEAR(s.amplitudes().norm(), 1.0, 1e-10);
}

TEST(Coherent, SecondMoment) {
  const FockSpace s(40);
  const cplx alpha(1.1, 0.4);
  const Operator b = annihilation(s);
  EXPECT_NEAR(std::abs(expectation(b * b, coherent_state(alpha, s)) - alpha * alpha), 0.0, 1e-10);
}

TEST(Coherent, InsufficientTruncation) { EXPECT_THROW(coherent_state(3.0, FockSpace(8)), InsufficientTruncation); }

TEST(Coherent, DeficitDecreasesWithDimension) {
  for (cplx alpha : {cplx(0.5), cplx(1.0, 1.0), cplx(2.0)}) {
    double prev = coherent_norm_deficit(alpha, 1);
    for (std::size_t d = 2; d < 14; ++d) {
      const double cur = coherent_norm_deficit(alpha, d);
      EXPECT_LT(cur, prev) << "d=" << d;
      prev = cur;
    }
  }
}

TEST(Expectation, FockNumber) {
  const FockSpace s(4);
  EXPECT_EQ(expectation(number(s), fock_state(2, s)), cplx(2.0));
}

TEST(Expectation, IdentityOnDensity) {
  const DensityMatrix rho(random_density(6, 3), {6});
  EXPECT_NEAR(std::abs(expectation(identity({6}), rho) - 1.0), 0.0, 1e-14);
}

TEST(Expectation, HermitianIsReal) {
  const std::vector<FockSpace> sp{FockSpace(3), FockSpace(4)};
  const Operator a = embed(annihilation(sp[0]), 0, sp);
  const Operator b = embed(annihilation(sp[1]), 1, sp);
  const Operator h = a * b.adjoint() * b.adjoint() + a.adjoint() * b * b;
  for (unsigned seed = 0; seed < 20; ++seed) {
    const DensityMatrix rho(random_density(12, seed), {3, 4});
    EXPECT_LT(std::abs(expectation(h, rho).imag()), 1e-10);
  }
}

TEST(Expectation, DimensionMismatch) {
  EXPECT_THROW(expectation(number(FockSpace(3)), fock_state(0, FockSpace(4))), DimensionMismatch);
}

TEST(DensityMatrixChecks, RejectsInvalid) {
  DenseMatrix m = DenseMatrix::Zero(2, 2);
  m(0, 0) = 0.7;
  EXPECT_THROW(DensityMatrix(m, {2}), InvalidState);
  m(1, 1) = 0.3;
  m(0, 1) = 0.1;
  EXPECT_THROW(DensityMatrix(m, {2}), InvalidState);
  m(0, 1) = 0.0;
  m(0, 0) = 1.2;
  m(1, 1) = -0.2;
  EXPECT_THROW(DensityMatrix(m, {2}), InvalidState);
  EXPECT_THROW(DensityMatrix(DenseMatrix::Identity(2, 2) / 2.0, {3}), DimensionMismatch);
}

TEST(StateVectorChecks, RejectsUnnormalized) {
  EXPECT_THROW(StateVector(Vector::Ones(3), {3}), InvalidState);
}

TEST(OperatorAlgebra, MismatchedDims) {
  EXPECT_THROW(annihilation(FockSpace(3)) + annihilation(FockSpace(4)), DimensionMismatch);
}
