#include "eaqec/tensor.hpp"

#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "test_helpers.hpp"

using namespace eaqec;
using namespace eaqec::testing;

TEST_CASE("SystemLayout derived dimensions and validation") {
  SystemLayout lay(2, 2, 2);
  CHECK(lay.d_anc() == 4);
  CHECK(lay.d_code() == 4);
  CHECK(lay.dim() == 8);
  CHECK(lay.factor_dims() == std::vector<int>({2, 2, 2}));

  SystemLayout bare(2, 1, 1);
  CHECK(bare.dim() == 2);
  CHECK(bare.d_anc() == 1);

  CHECK_THROWS_AS(SystemLayout(1, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(SystemLayout(2, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(SystemLayout(2, 1, 0), std::invalid_argument);
  CHECK_THROWS_AS(SystemLayout(4096, 2, 1), std::invalid_argument);
}

TEST_CASE("kron identity and diagonal cases") {
  CHECK(max_abs_diff(kron(identity(2), identity(2)), identity(4)) == 0.0);

  CMatrix d1(2, 2), d2(2, 2);
  d1 << 1, 0, 0, 2;
  d2 << 3, 0, 0, 4;
  CMatrix expect = CMatrix::Zero(4, 4);
  expect(0, 0) = 3;
  expect(1, 1) = 4;
  expect(2, 2) = 6;
  expect(3, 3) = 8;
  CHECK(max_abs_diff(kron(d1, d2), expect) == 0.0);
}

TEST_CASE("kron(sigma_x, I) is anti-block-diagonal") {
  CMatrix got = kron(sigma_x(), identity(2));
  CMatrix expect = CMatrix::Zero(4, 4);
  expect.block(0, 2, 2, 2) = identity(2);
  expect.block(2, 0, 2, 2) = identity(2);
  CHECK(max_abs_diff(got, expect) == 0.0);
}

TEST_CASE("kron mixed-product property on random instances") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    CMatrix a = random_cmatrix(3, 3, rng);
    CMatrix b = random_cmatrix(2, 2, rng);
    CMatrix c = random_cmatrix(3, 3, rng);
    CMatrix d = random_cmatrix(2, 2, rng);
    CHECK(max_abs_diff(kron(a, b) * kron(c, d), kron(a * c, b * d)) < 1e-10);
  }
}

TEST_CASE("kron rejects dimension overflow") {
  CMatrix big = CMatrix::Identity(100, 100);
  CHECK_THROWS_AS(kron(big, big), std::invalid_argument);
}

TEST_CASE("partial trace of a Bell pair is maximally mixed") {
  CVector bell = CVector::Zero(4);
  bell[0] = 1.0 / std::sqrt(2.0);
  bell[3] = 1.0 / std::sqrt(2.0);
  CMatrix rho = bell * bell.adjoint();
  CMatrix reduced = partial_trace(rho, {2, 2}, {0});
  CHECK(max_abs_diff(reduced, 0.5 * identity(2)) < 1e-12);
}

TEST_CASE("partial trace factorizes product operators") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    CMatrix a = random_cmatrix(3, 3, rng);
    CMatrix b = random_cmatrix(4, 4, rng);
    CMatrix got = partial_trace(kron(a, b), {3, 4}, {0});
    CHECK(max_abs_diff(got, a * b.trace()) < 1e-12);
    CMatrix got_b = partial_trace(kron(a, b), {3, 4}, {1});
    CHECK(max_abs_diff(got_b, b * a.trace()) < 1e-12);
  }
}

TEST_CASE("partial trace of identity over one factor scales identity") {
  CMatrix got = partial_trace(identity(8), {2, 2, 2}, {0, 1});
  CHECK(max_abs_diff(got, 2.0 * identity(4)) == 0.0);
}

TEST_CASE("partial trace preserves trace and keeps middle factors") {
  std::mt19937_64 rng(13);
  CMatrix a = random_cmatrix(24, 24, rng);
  for (auto& keep : std::vector<std::vector<int>>{{0}, {1}, {2}, {0, 2}, {1, 2}, {0, 1, 2}}) {
    CMatrix r = partial_trace(a, {2, 3, 4}, keep);
    CHECK(std::abs(r.trace() - a.trace()) < 1e-12);
  }
  // Middle-factor keep agrees with the product-state factorization.
  CMatrix x = random_cmatrix(2, 2, rng);
  CMatrix y = random_cmatrix(3, 3, rng);
  CMatrix z = random_cmatrix(4, 4, rng);
  CMatrix full = kron(x, kron(y, z));
  CHECK(max_abs_diff(partial_trace(full, {2, 3, 4}, {1}), y * x.trace() * z.trace()) < 1e-10);
}

TEST_CASE("partial trace input validation") {
  CHECK_THROWS_AS(partial_trace(identity(6), {2, 2}, {0}), std::invalid_argument);
  CHECK_THROWS_AS(partial_trace(identity(4), {2, 2}, {2}), std::invalid_argument);
}

TEST_CASE("embed_operator places gates on chosen factors") {
  CHECK(max_abs_diff(embed_operator(sigma_x(), {0}, {2, 2}), kron(sigma_x(), identity(2))) == 0.0);
  CHECK(max_abs_diff(embed_operator(sigma_x(), {1}, {2, 2}), kron(identity(2), sigma_x())) == 0.0);

  // Two-qubit gate on the outer factors of a three-qubit register: compare
  // against the explicit sum over the middle factor.
  CMatrix cnot(4, 4);
  cnot << 1, 0, 0, 0,
          0, 1, 0, 0,
          0, 0, 0, 1,
          0, 0, 1, 0;
  CMatrix got = embed_operator(cnot, {0, 2}, {2, 2, 2});
  CMatrix p0 = CMatrix::Zero(2, 2), p1 = CMatrix::Zero(2, 2);
  p0(0, 0) = 1;
  p1(1, 1) = 1;
  CMatrix expect = kron(p0, kron(identity(2), identity(2))) +
                   kron(p1, kron(identity(2), sigma_x()));
  CHECK(max_abs_diff(got, expect) < 1e-15);

  // Reversed target order transposes the gate's slot assignment.
  CMatrix got_rev = embed_operator(cnot, {2, 0}, {2, 2, 2});
  CMatrix expect_rev = kron(identity(2), kron(identity(2), p0)) +
                       kron(sigma_x(), kron(identity(2), p1));
  CHECK(max_abs_diff(got_rev, expect_rev) < 1e-15);
}

TEST_CASE("svd_descending basic spectra") {
  SvdResult r1 = svd_descending(identity(3));
  CHECK(r1.s.size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(r1.s[i] == doctest::Approx(1.0).epsilon(1e-12));

  CMatrix d(2, 2);
  d << 2, 0, 0, -3;
  SvdResult r2 = svd_descending(d);
  CHECK(r2.s[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(r2.s[1] == doctest::Approx(2.0).epsilon(1e-12));

  std::mt19937_64 rng(14);
  CVector u = random_cmatrix(4, 1, rng);
  CVector v = random_cmatrix(4, 1, rng);
  u.normalize();
  v.normalize();
  SvdResult r3 = svd_descending(u * v.adjoint());
  CHECK(r3.s[0] == doctest::Approx(1.0).epsilon(1e-10));
  for (int i = 1; i < r3.s.size(); ++i) CHECK(std::abs(r3.s[i]) < 1e-12);
}

TEST_CASE("svd_descending reconstruction, ordering, orthonormality") {
  std::mt19937_64 rng(15);
  for (auto [m, n] : std::vector<std::pair<int, int>>{{4, 4}, {3, 5}, {5, 3}}) {
    CMatrix a = random_cmatrix(m, n, rng);
    SvdResult r = svd_descending(a);
    CMatrix rebuilt = r.u * r.s.asDiagonal() * r.v.adjoint();
    CHECK(max_abs_diff(rebuilt, a) < 1e-10 * a.norm());
    for (int i = 0; i + 1 < r.s.size(); ++i) CHECK(r.s[i] >= r.s[i + 1]);
    CHECK(max_abs_diff(r.u.adjoint() * r.u, identity(r.s.size())) < 1e-12);
    CHECK(max_abs_diff(r.v.adjoint() * r.v, identity(r.s.size())) < 1e-12);
    // Frobenius norm identity against the singular values.
    double frob_sq = 0;
    for (int i = 0; i < r.s.size(); ++i) frob_sq += r.s[i] * r.s[i];
    CHECK(std::abs(frob_sq - a.squaredNorm()) < 1e-12 * a.squaredNorm());
  }
}

TEST_CASE("eigh Pauli spectra") {
  EighResult rz = eigh(sigma_z());
  CHECK(rz.values[0] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(rz.values[1] == doctest::Approx(1.0).epsilon(1e-12));
  // Ascending order puts |1> first for sigma_z.
  CHECK(std::abs(rz.vectors(1, 0)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(rz.vectors(0, 1)) == doctest::Approx(1.0).epsilon(1e-12));

  EighResult rx = eigh(sigma_x());
  CHECK(rx.values[0] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(rx.values[1] == doctest::Approx(1.0).epsilon(1e-12));
  CVector minus(2), plus(2);
  minus << 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0);
  plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  CHECK(std::abs((minus.adjoint() * rx.vectors.col(0))(0, 0)) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs((plus.adjoint() * rx.vectors.col(1))(0, 0)) == doctest::Approx(1.0).epsilon(1e-10));

  EighResult rs = eigh(0.5 * identity(2));
  CHECK(rs.values[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rs.values[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("eigh reconstruction and Hermiticity check") {
  std::mt19937_64 rng(16);
  CMatrix h = random_psd(5, rng);
  h = 0.5 * (h + h.adjoint());
  EighResult r = eigh(h);
  CHECK(max_abs_diff(r.vectors * r.values.asDiagonal() * r.vectors.adjoint(), h) < 1e-10 * h.norm());
  for (int i = 0; i + 1 < r.values.size(); ++i) CHECK(r.values[i] <= r.values[i + 1]);
  CHECK(is_unitary(r.vectors, 1e-10));

  CMatrix not_herm = random_cmatrix(3, 3, rng);
  not_herm(0, 1) += Complex(0.5, 0.5);
  CHECK_THROWS_AS(eigh(not_herm), std::invalid_argument);
}

TEST_CASE("psd_sqrt diagonal and identity cases") {
  CMatrix d(2, 2);
  d << 4, 0, 0, 9;
  CMatrix expect(2, 2);
  expect << 2, 0, 0, 3;
  CHECK(max_abs_diff(psd_sqrt(d), expect) < 1e-12);
  CHECK(max_abs_diff(psd_sqrt(identity(5)), identity(5)) < 1e-12);
}

TEST_CASE("psd_sqrt squares back to the input") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    CMatrix a = random_psd(6, rng);
    CMatrix root = psd_sqrt(a);
    CHECK(max_abs_diff(root * root, a) < 1e-8 * a.norm());
  }
}

TEST_CASE("psd functions clamp round-off but reject real negativity") {
  CMatrix slightly(2, 2);
  slightly << -5e-11, 0, 0, 1;
  CMatrix root = psd_sqrt(slightly);
  CHECK(std::abs(root(0, 0)) < 1e-5);
  CHECK(root(1, 1).real() == doctest::Approx(1.0).epsilon(1e-12));

  CMatrix negative(2, 2);
  negative << -1e-3, 0, 0, 1;
  CHECK_THROWS_AS(psd_sqrt(negative), std::domain_error);
  CHECK_THROWS_AS(psd_inv_sqrt(negative, 1e-12), std::domain_error);
}

TEST_CASE("psd_inv_sqrt pseudo-inverts") {
  CMatrix d(2, 2);
  d << 4, 0, 0, 0;
  CMatrix expect(2, 2);
  expect << 0.5, 0, 0, 0;
  CHECK(max_abs_diff(psd_inv_sqrt(d, 1e-12), expect) < 1e-12);

  std::mt19937_64 rng(18);
  CMatrix a = random_psd(4, rng);
  CMatrix w = psd_inv_sqrt(a, 1e-12);
  // a^{-1/2} a a^{-1/2} = I on the support (full rank here with prob. 1).
  CHECK(max_abs_diff(w * a * w, identity(4)) < 1e-8);
}

TEST_CASE("polar_unitary strips positive factors") {
  CHECK(max_abs_diff(polar_unitary(2.0 * identity(4)), identity(4)) < 1e-12);

  std::mt19937_64 rng(19);
  CMatrix v = haar_random_unitary(4, rng);
  CHECK(max_abs_diff(polar_unitary(v), v) < 1e-10);

  // polar(V * P) = V for invertible positive P.
  CMatrix p = random_psd(4, rng) + 0.1 * identity(4);
  CHECK(max_abs_diff(polar_unitary(v * p), v) < 1e-9);
}

TEST_CASE("polar_unitary is unitary even for rank-deficient input") {
  CMatrix d(2, 2);
  d << 3, 0, 0, 0;
  CMatrix w = polar_unitary(d);
  CHECK(is_unitary(w, 1e-10));
  CHECK(max_abs_diff(w, identity(2)) < 1e-12);

  std::mt19937_64 rng(20);
  CMatrix lowrank = random_cmatrix(5, 2, rng) * random_cmatrix(2, 5, rng);
  CHECK(is_unitary(polar_unitary(lowrank), 1e-10));
  CHECK(is_unitary(polar_unitary(CMatrix::Zero(3, 3)), 1e-10));
}

TEST_CASE("haar_random_unitary properties") {
  std::mt19937_64 rng(21);
  CMatrix u1 = haar_random_unitary(1, rng);
  CHECK(std::abs(std::abs(u1(0, 0)) - 1.0) < 1e-12);

  for (int n : {2, 4, 8}) {
    for (int trial = 0; trial < 100; ++trial) {
      CHECK(is_unitary(haar_random_unitary(n, rng), 1e-10));
    }
  }

  std::mt19937_64 ra(42), rb(42), rc(43);
  CMatrix a = haar_random_unitary(4, ra);
  CMatrix b = haar_random_unitary(4, rb);
  CMatrix c = haar_random_unitary(4, rc);
  CHECK(max_abs_diff(a, b) == 0.0);
  CHECK(max_abs_diff(a, c) > 1e-3);

  // For Haar measure E|Tr U|^2 = 1; a 200-sample mean should sit near it.
  std::mt19937_64 rs(7);
  double acc = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    acc += std::norm(haar_random_unitary(4, rs).trace());
  }
  CHECK(acc / 200.0 > 0.6);
  CHECK(acc / 200.0 < 1.6);
}

TEST_CASE("frobenius_norm agrees with entrywise definition") {
  std::mt19937_64 rng(22);
  CMatrix a = random_cmatrix(4, 6, rng);
  double entrywise = 0.0;
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < a.cols(); ++j) entrywise += std::norm(a(i, j));
  }
  CHECK(std::abs(frobenius_norm(a) * frobenius_norm(a) - entrywise) < 1e-12 * entrywise);
  CHECK(std::abs(frobenius_norm(a) * frobenius_norm(a) -
                 (a.adjoint() * a).trace().real()) < 1e-12 * entrywise);
}
