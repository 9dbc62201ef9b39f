#include "eaqec/teleport.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "eaqec/optimizer.hpp"

namespace eaqec {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) {
    throw std::invalid_argument(message);
  }
}

// Pauli correction for Bell outcome k in the fixed basis order:
// sigma_k |i> = sqrt(2) * sum_m <B_k|i,m> |m>. These do not depend on the
// channel, only on the Bell convention.
CMatrix bell_correction(const CVector& bell) {
  CMatrix sigma(2, 2);
  const double root2 = std::sqrt(2.0);
  for (int m = 0; m < 2; ++m) {
    for (int i = 0; i < 2; ++i) {
      sigma(m, i) = root2 * std::conj(bell(2 * i + m));
    }
  }
  return sigma;
}

// The four product states the encoding maps the Bell basis onto, in outcome
// order.
std::vector<CVector> outcome_basis(const TwoUnitaryChannel& channel) {
  const EigenbasisResult eig = eigenbasis(channel);
  std::vector<CVector> basis4;
  basis4.reserve(4);
  if (channel.dim == 2) {
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        basis4.push_back(kron(eig.vectors[i], eig.vectors[j]));
      }
    }
  } else {
    basis4 = eig.vectors;
  }
  return basis4;
}

void append_matrix(std::ostringstream& out, const CMatrix& a) {
  char buf[64];
  for (int i = 0; i < a.rows(); ++i) {
    out << "  ";
    for (int j = 0; j < a.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "(%.6g,%.6g)", a(i, j).real(),
                    a(i, j).imag());
      out << buf << (j + 1 < a.cols() ? " " : "");
    }
    out << "\n";
  }
}

}  // namespace

TwoUnitaryChannel::TwoUnitaryChannel(CMatrix v1_in, CMatrix v2_in, double p_in)
    : v1(std::move(v1_in)), v2(std::move(v2_in)), p(p_in) {
  require(v1.rows() > 0 && v1.rows() == v1.cols(),
          "two-unitary channel: v1 must be square and non-empty");
  require(v2.rows() == v1.rows() && v2.cols() == v1.cols(),
          "two-unitary channel: v1 and v2 must have the same dimension");
  require(is_unitary(v1, 1e-10), "two-unitary channel: v1 is not unitary");
  require(is_unitary(v2, 1e-10), "two-unitary channel: v2 is not unitary");
  require(std::isfinite(p) && p >= 0.0 && p <= 1.0,
          "two-unitary channel: p must lie in [0, 1]");
  dim = static_cast<int>(v1.rows());
}

KrausChannel TwoUnitaryChannel::to_kraus() const {
  std::vector<CMatrix> ops;
  if (p < 1.0) {
    ops.push_back(std::sqrt(1.0 - p) * v1);
  }
  if (p > 0.0) {
    ops.push_back(std::sqrt(p) * v2);
  }
  return KrausChannel(dim, std::move(ops));
}

CMatrix TeleportProtocol::recovery_stack() const {
  const int d = layout.dim();
  CMatrix stacked(static_cast<int>(recovery_kraus.size()) * d, d);
  for (std::size_t k = 0; k < recovery_kraus.size(); ++k) {
    stacked.block(static_cast<int>(k) * d, 0, d, d) = recovery_kraus[k];
  }
  return stacked;
}

EigenbasisResult eigenbasis(const TwoUnitaryChannel& channel) {
  require(channel.dim == 2 || channel.dim == 4,
          "eigenbasis expects a channel on dimension 2 or 4");
  const CMatrix w = channel.v2 * channel.v1.adjoint();
  Eigen::ComplexSchur<CMatrix> schur(w);
  require(schur.info() == Eigen::Success, "Schur decomposition failed");
  // w is normal, so the Schur form is diagonal and the unitary Q columns are
  // an orthonormal eigenbasis.
  const CMatrix q = schur.matrixU();
  const CMatrix t = schur.matrixT();

  const int n = channel.dim;
  std::vector<double> args(n);
  for (int i = 0; i < n; ++i) {
    double a = std::arg(t(i, i));
    // Fold the neighborhood of -pi onto +pi so an eigenvalue of -1 sorts
    // consistently regardless of rounding in its imaginary part.
    if (a < -M_PI + 1e-9) {
      a += 2.0 * M_PI;
    }
    args[i] = a;
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&args](int a, int b) { return args[a] < args[b]; });

  EigenbasisResult out;
  out.vectors.reserve(n);
  out.phases.reserve(n);
  for (int idx : order) {
    CVector v = q.col(idx);
    int anchor = 0;
    double best = std::abs(v(0));
    for (int j = 1; j < n; ++j) {
      if (std::abs(v(j)) > best + 1e-9) {
        anchor = j;
        best = std::abs(v(j));
      }
    }
    v *= std::conj(v(anchor)) / std::abs(v(anchor));
    out.vectors.push_back(std::move(v));
    const Complex lambda = t(idx, idx);
    out.phases.push_back(lambda / std::abs(lambda));
  }
  return out;
}

TeleportProtocol build_protocol(const TwoUnitaryChannel& channel,
                                const SystemLayout& layout) {
  require(layout.d_dat == 2 && layout.d_enc == 2 && layout.d_rec == 2,
          "build_protocol: layout must be one data, one encoding, and one "
          "recovery qubit");
  require(channel.dim == 2 || channel.dim == 4,
          "build_protocol: channel must act on one or both transmitted qubits");

  const std::vector<CVector> basis4 = outcome_basis(channel);
  const std::vector<CVector> bells = bell_basis();

  CMatrix encoding = CMatrix::Zero(4, 4);
  for (int k = 0; k < 4; ++k) {
    encoding += basis4[k] * bells[k].adjoint();
  }

  CMatrix pre;
  if (channel.dim == 2) {
    const CMatrix v1d = channel.v1.adjoint();
    pre = kron(v1d, v1d);
  } else {
    pre = channel.v1.adjoint();
  }

  CVector reset = CVector::Zero(4);
  reset(0) = 1.0;
  std::vector<CMatrix> recovery;
  recovery.reserve(4);
  for (int k = 0; k < 4; ++k) {
    const CMatrix project = reset * basis4[k].adjoint();
    const CMatrix correction = bell_correction(bells[k]).adjoint();
    recovery.push_back(kron(project, correction));
  }

  TeleportProtocol protocol{std::move(pre), std::move(encoding),
                            std::move(recovery), layout};
  return protocol;
}

CMatrix coherent_recovery(const TeleportProtocol& protocol) {
  const std::vector<CVector> bells = bell_basis();
  CMatrix total = CMatrix::Zero(8, 8);
  for (int k = 0; k < 4; ++k) {
    const CVector basis_k = protocol.encoding * bells[k];
    const CMatrix project = basis_k * basis_k.adjoint();
    total += kron(project, bell_correction(bells[k]).adjoint());
  }
  return total;
}

double verify_protocol(const TeleportProtocol& protocol,
                       const KrausChannel& noise) {
  require(noise.dim == protocol.layout.dim(),
          "verify_protocol: noise must act on the full space");
  const CMatrix c_full =
      kron(protocol.pair_operation(), CMatrix::Identity(2, 2));
  return fidelity_data(protocol.recovery_stack(), noise, c_full,
                       entangler(protocol.layout), protocol.layout,
                       OutputFactor::recovery, CMatrix::Identity(2, 2));
}

std::optional<TwoUnitaryChannel> two_unitary_from_kraus(const KrausChannel& e) {
  std::vector<std::pair<double, CMatrix>> branches;
  for (const CMatrix& op : e.kraus) {
    const double weight = (op.adjoint() * op).trace().real() / e.dim;
    if (weight < 1e-14) {
      continue;  // numerically absent branch
    }
    const CMatrix gram = op.adjoint() * op - weight * CMatrix::Identity(e.dim, e.dim);
    if (gram.cwiseAbs().maxCoeff() > 1e-10) {
      return std::nullopt;  // not proportional to a unitary
    }
    branches.emplace_back(weight, op / std::sqrt(weight));
  }
  if (branches.empty() || branches.size() > 2) {
    return std::nullopt;
  }
  for (const auto& branch : branches) {
    if (!is_unitary(branch.second, 1e-8)) {
      return std::nullopt;
    }
  }
  if (branches.size() == 1) {
    return TwoUnitaryChannel(branches[0].second, branches[0].second, 0.0);
  }
  const double p = std::clamp(branches[1].first, 0.0, 1.0);
  return TwoUnitaryChannel(branches[0].second, branches[1].second, p);
}

KrausChannel noise_on_full_space(const TwoUnitaryChannel& channel,
                                 const SystemLayout& layout) {
  require(layout.d_dat == 2 && layout.d_enc == 2 && layout.d_rec == 2,
          "noise_on_full_space: layout must be three qubits");
  if (channel.dim == 2) {
    return lift_iid(channel.to_kraus(), layout);
  }
  require(channel.dim == 4,
          "noise_on_full_space: channel must act on one or both transmitted "
          "qubits");
  const KrausChannel pair = channel.to_kraus();
  std::vector<CMatrix> ops;
  ops.reserve(pair.kraus.size());
  for (const CMatrix& op : pair.kraus) {
    ops.push_back(kron(op, CMatrix::Identity(2, 2)));
  }
  KrausChannel lifted(layout.dim(), std::move(ops));
  lifted.name = pair.name;
  lifted.params = pair.params;
  return lifted;
}

std::string circuit_text(const TeleportProtocol& protocol) {
  std::ostringstream out;
  out << "# q0 = data, q1 = encoding, q2 = recovery\n";
  out << "h q1\n";
  out << "cnot q1 q2\n";
  out << "unitary q0 q1  # encoding: Bell basis -> measurement basis\n";
  append_matrix(out, protocol.encoding);
  out << "unitary q0 q1  # pre-rotation\n";
  append_matrix(out, protocol.pre_rotation);
  out << "# noisy transmission of q0 q1\n";
  out << "measure q0 q1  # projective, outcome k = column k\n";
  const std::vector<CVector> bells = bell_basis();
  CMatrix basis(4, 4);
  for (int k = 0; k < 4; ++k) {
    basis.col(k) = protocol.encoding * bells[k];
  }
  append_matrix(out, basis);
  out << "cond 0:\n";
  out << "cond 1: z q2\n";
  out << "cond 2: x q2\n";
  out << "cond 3: z q2 ; x q2\n";
  out << "reset q0 q1\n";
  return out.str();
}

}  // namespace eaqec
