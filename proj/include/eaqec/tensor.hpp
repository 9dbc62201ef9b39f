#pragma once

// Dense complex linear algebra shared by every other part of the library:
// tensor products, partial traces over a factorized Hilbert space, and the
// matrix decompositions (SVD, Hermitian eigendecomposition, polar form,
// PSD square roots) the optimizer is built from. Everything operates on
// column-vector convention: |psi> is a column, operators act from the left.

#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace eaqec {

using Complex = std::complex<double>;
using CMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;
using CVector = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;
using RVector = Eigen::VectorXd;

// Hard cap on any dimension a tensor product may produce.
inline constexpr int kMaxDim = 4096;

// Nominally-PSD matrices may pick up tiny negative eigenvalues from round-off.
// Anything in [-kPsdClamp, 0) is clamped to zero silently; anything below
// -kPsdHardFloor means the input was not PSD and is a hard error. The band in
// between is clamped as well (it is still round-off, just unusually large).
inline constexpr double kPsdClamp = 1e-10;
inline constexpr double kPsdHardFloor = 1e-6;

// Factorization of the total space as data (x) encoding (x) recovery, in that
// fixed order. The recovery factor is last so that an operator acting on
// (data, encoding) extends to the full space as a plain kron with I_rec.
struct SystemLayout {
  int d_dat;
  int d_enc;
  int d_rec;

  SystemLayout(int dat, int enc, int rec);

  int d_anc() const { return d_enc * d_rec; }
  int d_code() const { return d_dat * d_enc; }
  int dim() const { return d_dat * d_enc * d_rec; }
  std::vector<int> factor_dims() const { return {d_dat, d_enc, d_rec}; }
};

struct SvdResult {
  CMatrix u;   // m x k, orthonormal columns
  RVector s;   // length k = min(m, n), descending
  CMatrix v;   // n x k, orthonormal columns; a = u * diag(s) * v^dag
};

struct EighResult {
  RVector values;   // ascending
  CMatrix vectors;  // unitary; a = vectors * diag(values) * vectors^dag
};

// Kronecker product, block order a(i,j) * b.
CMatrix kron(const CMatrix& a, const CMatrix& b);

// Trace out every factor not listed in `keep` (ascending indices into `dims`).
// The kept factors stay in their original relative order.
CMatrix partial_trace(const CMatrix& a, const std::vector<int>& dims,
                      const std::vector<int>& keep);

// Operator acting as `op` on the listed factors (tensor slots of `op` follow
// the order of `targets`) and as identity on every other factor.
CMatrix embed_operator(const CMatrix& op, const std::vector<int>& targets,
                       const std::vector<int>& dims);

SvdResult svd_descending(const CMatrix& a);

// Hermitian eigendecomposition; rejects inputs farther than 1e-10 from
// Hermitian in max-abs entry.
EighResult eigh(const CMatrix& a);

CMatrix psd_sqrt(const CMatrix& a);

// Moore-Penrose style inverse square root: eigenvalues <= eps contribute 0.
CMatrix psd_inv_sqrt(const CMatrix& a, double eps);

// Unitary factor of the polar decomposition a = W * P, W = u * v^dag from the
// full SVD. Well defined (exactly unitary) even when a is singular, because
// the full SVD supplies deterministic null-direction completions.
CMatrix polar_unitary(const CMatrix& a);

// Haar-distributed unitary: complex Ginibre draw, QR, then the R-diagonal
// phase correction that makes the distribution exactly Haar.
CMatrix haar_random_unitary(int dim, std::mt19937_64& rng);

double frobenius_norm(const CMatrix& a);
bool is_hermitian(const CMatrix& a, double tol);
bool is_unitary(const CMatrix& a, double tol);

}  // namespace eaqec
