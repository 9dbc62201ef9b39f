#include "eaqec/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace eaqec {

namespace {

void require_finite(const CMatrix& a, const char* op) {
  if (!a.allFinite()) {
    throw std::invalid_argument(std::string(op) + ": non-finite entry in input");
  }
}

void require_square(const CMatrix& a, const char* op) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument(std::string(op) + ": matrix must be square, got " +
                                std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()));
  }
}

// Mixed-radix helpers over a factor list. Factor 0 is the most significant
// digit, matching the kron block order.
std::vector<long> factor_strides(const std::vector<int>& dims) {
  std::vector<long> strides(dims.size());
  long s = 1;
  for (int f = static_cast<int>(dims.size()) - 1; f >= 0; --f) {
    strides[f] = s;
    s *= dims[f];
  }
  return strides;
}

long total_dim(const std::vector<int>& dims, const char* op) {
  long d = 1;
  for (int x : dims) {
    if (x < 1) throw std::invalid_argument(std::string(op) + ": factor dimension must be >= 1");
    d *= x;
    if (d > kMaxDim) {
      throw std::invalid_argument(std::string(op) + ": total dimension exceeds cap " +
                                  std::to_string(kMaxDim));
    }
  }
  return d;
}

}  // namespace

SystemLayout::SystemLayout(int dat, int enc, int rec)
    : d_dat(dat), d_enc(enc), d_rec(rec) {
  if (dat < 2) throw std::invalid_argument("SystemLayout: d_dat must be >= 2");
  if (enc < 1) throw std::invalid_argument("SystemLayout: d_enc must be >= 1");
  if (rec < 1) throw std::invalid_argument("SystemLayout: d_rec must be >= 1");
  long d = static_cast<long>(dat) * enc * rec;
  if (d > kMaxDim) {
    throw std::invalid_argument("SystemLayout: total dimension exceeds cap " +
                                std::to_string(kMaxDim));
  }
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  require_finite(a, "kron");
  require_finite(b, "kron");
  long rows = a.rows() * b.rows();
  long cols = a.cols() * b.cols();
  if (rows > kMaxDim || cols > kMaxDim) {
    throw std::invalid_argument("kron: product dimension " + std::to_string(rows) +
                                "x" + std::to_string(cols) + " exceeds cap " +
                                std::to_string(kMaxDim));
  }
  CMatrix out(rows, cols);
  for (long i = 0; i < a.rows(); ++i) {
    for (long j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

CMatrix partial_trace(const CMatrix& a, const std::vector<int>& dims,
                      const std::vector<int>& keep) {
  require_finite(a, "partial_trace");
  require_square(a, "partial_trace");
  long d = total_dim(dims, "partial_trace");
  if (d != a.rows()) {
    throw std::invalid_argument("partial_trace: factor dims multiply to " +
                                std::to_string(d) + " but matrix is " +
                                std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()));
  }
  const int n = static_cast<int>(dims.size());
  std::vector<bool> kept(n, false);
  for (int k : keep) {
    if (k < 0 || k >= n) throw std::invalid_argument("partial_trace: keep index out of range");
    if (kept[k]) throw std::invalid_argument("partial_trace: duplicate keep index");
    kept[k] = true;
  }

  auto strides = factor_strides(dims);
  long d_keep = 1, d_tr = 1;
  for (int f = 0; f < n; ++f) (kept[f] ? d_keep : d_tr) *= dims[f];

  // Offset tables: every combined index over the kept (resp. traced) factors,
  // expanded to its contribution to the full row index. Factors occupy
  // disjoint digit positions, so offsets just add.
  std::vector<long> keep_off(d_keep, 0), tr_off(d_tr, 0);
  for (int pass = 0; pass < 2; ++pass) {
    bool want = (pass == 0);
    std::vector<long>& off = want ? keep_off : tr_off;
    long count = want ? d_keep : d_tr;
    for (long idx = 0; idx < count; ++idx) {
      long rem = idx, o = 0;
      for (int f = n - 1; f >= 0; --f) {
        if (kept[f] == want) {
          o += (rem % dims[f]) * strides[f];
          rem /= dims[f];
        }
      }
      off[idx] = o;
    }
  }

  CMatrix out = CMatrix::Zero(d_keep, d_keep);
  for (long i = 0; i < d_keep; ++i) {
    for (long j = 0; j < d_keep; ++j) {
      Complex sum = 0.0;
      for (long t = 0; t < d_tr; ++t) {
        sum += a(keep_off[i] + tr_off[t], keep_off[j] + tr_off[t]);
      }
      out(i, j) = sum;
    }
  }
  return out;
}

CMatrix embed_operator(const CMatrix& op, const std::vector<int>& targets,
                       const std::vector<int>& dims) {
  require_finite(op, "embed_operator");
  require_square(op, "embed_operator");
  long d = total_dim(dims, "embed_operator");
  const int n = static_cast<int>(dims.size());
  std::vector<bool> is_target(n, false);
  long d_t = 1;
  for (int t : targets) {
    if (t < 0 || t >= n) throw std::invalid_argument("embed_operator: target index out of range");
    if (is_target[t]) throw std::invalid_argument("embed_operator: duplicate target index");
    is_target[t] = true;
    d_t *= dims[t];
  }
  if (op.rows() != d_t) {
    throw std::invalid_argument("embed_operator: operator dim " +
                                std::to_string(op.rows()) +
                                " does not match target factors (" +
                                std::to_string(d_t) + ")");
  }

  auto strides = factor_strides(dims);
  // Offsets of every target-factor combined index, digit order given by
  // `targets` (leftmost target = most significant digit of the op index).
  std::vector<long> t_off(d_t, 0);
  for (long idx = 0; idx < d_t; ++idx) {
    long rem = idx, o = 0;
    for (int k = static_cast<int>(targets.size()) - 1; k >= 0; --k) {
      int f = targets[k];
      o += (rem % dims[f]) * strides[f];
      rem /= dims[f];
    }
    t_off[idx] = o;
  }
  long d_rest = d / d_t;
  std::vector<long> rest_off(d_rest, 0);
  for (long idx = 0; idx < d_rest; ++idx) {
    long rem = idx, o = 0;
    for (int f = n - 1; f >= 0; --f) {
      if (!is_target[f]) {
        o += (rem % dims[f]) * strides[f];
        rem /= dims[f];
      }
    }
    rest_off[idx] = o;
  }

  CMatrix out = CMatrix::Zero(d, d);
  for (long r = 0; r < d_t; ++r) {
    for (long c = 0; c < d_t; ++c) {
      if (op(r, c) == Complex(0.0)) continue;
      for (long o = 0; o < d_rest; ++o) {
        out(t_off[r] + rest_off[o], t_off[c] + rest_off[o]) = op(r, c);
      }
    }
  }
  return out;
}

SvdResult svd_descending(const CMatrix& a) {
  require_finite(a, "svd_descending");
  Eigen::JacobiSVD<CMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

EighResult eigh(const CMatrix& a) {
  require_finite(a, "eigh");
  require_square(a, "eigh");
  if (!is_hermitian(a, 1e-10)) {
    throw std::invalid_argument("eigh: input is not Hermitian within 1e-10");
  }
  // Work on the exactly-Hermitian average so round-off in the input cannot
  // leak into complex eigenvalues.
  CMatrix h = 0.5 * (a + a.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("eigh: eigensolver failed to converge");
  }
  return {es.eigenvalues(), es.eigenvectors()};
}

namespace {

// Shared eigenvalue filter for the PSD functions.
RVector clamped_psd_eigenvalues(const RVector& values, const char* op) {
  RVector out = values;
  for (int i = 0; i < out.size(); ++i) {
    if (out[i] < -kPsdHardFloor) {
      throw std::domain_error(std::string(op) + ": eigenvalue " +
                              std::to_string(out[i]) + " below -" +
                              std::to_string(kPsdHardFloor) +
                              ", input is not PSD");
    }
    if (out[i] < 0.0) out[i] = 0.0;
  }
  return out;
}

}  // namespace

CMatrix psd_sqrt(const CMatrix& a) {
  EighResult ed = eigh(a);
  RVector lam = clamped_psd_eigenvalues(ed.values, "psd_sqrt");
  RVector root = lam.array().sqrt();
  return ed.vectors * root.asDiagonal() * ed.vectors.adjoint();
}

CMatrix psd_inv_sqrt(const CMatrix& a, double eps) {
  EighResult ed = eigh(a);
  RVector lam = clamped_psd_eigenvalues(ed.values, "psd_inv_sqrt");
  RVector inv_root(lam.size());
  for (int i = 0; i < lam.size(); ++i) {
    inv_root[i] = (lam[i] <= eps) ? 0.0 : 1.0 / std::sqrt(lam[i]);
  }
  return ed.vectors * inv_root.asDiagonal() * ed.vectors.adjoint();
}

CMatrix polar_unitary(const CMatrix& a) {
  require_finite(a, "polar_unitary");
  require_square(a, "polar_unitary");
  Eigen::JacobiSVD<CMatrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

CMatrix haar_random_unitary(int dim, std::mt19937_64& rng) {
  if (dim < 1 || dim > kMaxDim) {
    throw std::invalid_argument("haar_random_unitary: dim out of range");
  }
  std::normal_distribution<double> gauss(0.0, 1.0);
  CMatrix z(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) {
      double re = gauss(rng);
      double im = gauss(rng);
      z(i, j) = Complex(re, im) / std::sqrt(2.0);
    }
  }
  Eigen::HouseholderQR<CMatrix> qr(z);
  CMatrix q = qr.householderQ() * CMatrix::Identity(dim, dim);
  CMatrix r = qr.matrixQR().template triangularView<Eigen::Upper>();
  for (int j = 0; j < dim; ++j) {
    Complex rjj = r(j, j);
    Complex phase = (std::abs(rjj) == 0.0) ? Complex(1.0) : rjj / std::abs(rjj);
    q.col(j) *= phase;
  }
  return q;
}

double frobenius_norm(const CMatrix& a) { return a.norm(); }

bool is_hermitian(const CMatrix& a, double tol) {
  if (a.rows() != a.cols()) return false;
  return (a - a.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

bool is_unitary(const CMatrix& a, double tol) {
  if (a.rows() != a.cols()) return false;
  CMatrix gram = a.adjoint() * a;
  return (gram - CMatrix::Identity(a.rows(), a.cols())).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace eaqec
