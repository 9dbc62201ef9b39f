#include "eaqec/channels.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace eaqec {

namespace {

bool is_power_of_two(int x) { return x >= 1 && (x & (x - 1)) == 0; }

int log2_exact(int x) {
  int k = 0;
  while ((1 << k) < x) ++k;
  return k;
}

void require_probability(double p, const char* op) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument(std::string(op) + ": probability " +
                                std::to_string(p) + " outside [0,1]");
  }
}

}  // namespace

KrausChannel::KrausChannel(int dim_in, std::vector<CMatrix> ops, double tp_tol)
    : dim(dim_in), kraus(std::move(ops)) {
  if (dim < 1) throw std::invalid_argument("KrausChannel: dim must be >= 1");
  if (kraus.empty()) throw std::invalid_argument("KrausChannel: empty Kraus list");
  if (static_cast<long>(kraus.size()) > static_cast<long>(dim) * dim) {
    throw std::invalid_argument("KrausChannel: " + std::to_string(kraus.size()) +
                                " Kraus operators exceed dim^2 = " +
                                std::to_string(static_cast<long>(dim) * dim));
  }
  for (size_t e = 0; e < kraus.size(); ++e) {
    if (kraus[e].rows() != dim || kraus[e].cols() != dim) {
      throw std::invalid_argument("KrausChannel: operator " + std::to_string(e) +
                                  " is not " + std::to_string(dim) + "x" +
                                  std::to_string(dim));
    }
    if (!kraus[e].allFinite()) {
      throw std::invalid_argument("KrausChannel: operator " + std::to_string(e) +
                                  " has non-finite entries");
    }
  }
  double defect = tp_defect();
  if (defect > tp_tol) {
    std::ostringstream msg;
    msg << "KrausChannel: trace preservation violated, max deviation " << defect
        << " exceeds " << tp_tol;
    throw std::invalid_argument(msg.str());
  }
}

CMatrix KrausChannel::apply(const CMatrix& rho) const {
  CMatrix out = CMatrix::Zero(dim, dim);
  for (const CMatrix& e : kraus) out += e * rho * e.adjoint();
  return out;
}

double KrausChannel::tp_defect() const {
  CMatrix acc = CMatrix::Zero(dim, dim);
  for (const CMatrix& e : kraus) acc += e.adjoint() * e;
  return (acc - CMatrix::Identity(dim, dim)).cwiseAbs().maxCoeff();
}

TargetSpec TargetSpec::identity(const SystemLayout& layout) {
  return {TargetKind::identity, CMatrix::Identity(layout.dim(), layout.dim())};
}

TargetSpec TargetSpec::swap_data_to_recovery(const SystemLayout& layout) {
  if (layout.d_dat != layout.d_rec) {
    throw std::invalid_argument(
        "TargetSpec: swap target needs d_dat = d_rec, got " +
        std::to_string(layout.d_dat) + " vs " + std::to_string(layout.d_rec));
  }
  int d = layout.dim();
  CMatrix l = CMatrix::Zero(d, d);
  // |i,j,k> -> |k,j,i> over the (data, encoding, recovery) factors.
  for (int i = 0; i < layout.d_dat; ++i) {
    for (int j = 0; j < layout.d_enc; ++j) {
      for (int k = 0; k < layout.d_rec; ++k) {
        int src = (i * layout.d_enc + j) * layout.d_rec + k;
        int dst = (k * layout.d_enc + j) * layout.d_rec + i;
        l(dst, src) = 1.0;
      }
    }
  }
  return {TargetKind::swap_data_to_recovery, l};
}

TargetSpec TargetSpec::custom(const CMatrix& l) {
  if (!is_unitary(l, 1e-10)) {
    throw std::invalid_argument("TargetSpec: custom target is not unitary within 1e-10");
  }
  return {TargetKind::custom, l};
}

KrausChannel make_identity_channel(int dim) {
  KrausChannel c(dim, {CMatrix::Identity(dim, dim)});
  c.name = "identity";
  return c;
}

KrausChannel make_bit_flip(double p) {
  require_probability(p, "make_bit_flip");
  std::vector<CMatrix> ops = {std::sqrt(1.0 - p) * CMatrix::Identity(2, 2),
                              std::sqrt(p) * pauli('x')};
  KrausChannel c(2, std::move(ops));
  c.name = "bit-flip";
  c.params["p"] = p;
  return c;
}

KrausChannel make_bit_phase_flip(double p) {
  require_probability(p, "make_bit_phase_flip");
  std::vector<CMatrix> ops = {std::sqrt(1.0 - p) * CMatrix::Identity(2, 2),
                              std::sqrt(p / 2.0) * pauli('x'),
                              std::sqrt(p / 2.0) * pauli('z')};
  KrausChannel c(2, std::move(ops));
  c.name = "bit-phase-flip";
  c.params["p"] = p;
  return c;
}

KrausChannel make_depolarizing(double p) {
  require_probability(p, "make_depolarizing");
  std::vector<CMatrix> ops = {std::sqrt(1.0 - p) * CMatrix::Identity(2, 2),
                              std::sqrt(p / 3.0) * pauli('x'),
                              std::sqrt(p / 3.0) * pauli('y'),
                              std::sqrt(p / 3.0) * pauli('z')};
  KrausChannel c(2, std::move(ops));
  c.name = "depolarizing";
  c.params["p"] = p;
  return c;
}

KrausChannel make_random_unitary_channel(
    const std::vector<std::pair<double, CMatrix>>& terms) {
  if (terms.empty()) {
    throw std::invalid_argument("make_random_unitary_channel: no terms");
  }
  double total = 0.0;
  int dim = static_cast<int>(terms.front().second.rows());
  std::vector<CMatrix> ops;
  for (size_t i = 0; i < terms.size(); ++i) {
    const auto& [prob, v] = terms[i];
    if (prob < 0.0) {
      throw std::invalid_argument("make_random_unitary_channel: negative probability");
    }
    if (v.rows() != dim || v.cols() != dim) {
      throw std::invalid_argument("make_random_unitary_channel: term " +
                                  std::to_string(i) + " dimension mismatch");
    }
    if (!is_unitary(v, 1e-10)) {
      throw std::invalid_argument("make_random_unitary_channel: term " +
                                  std::to_string(i) + " is not unitary within 1e-10");
    }
    total += prob;
    ops.push_back(std::sqrt(prob) * v);
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument(
        "make_random_unitary_channel: probabilities sum to " +
        std::to_string(total) + ", expected 1");
  }
  return KrausChannel(dim, std::move(ops));
}

KrausChannel lift_iid(const KrausChannel& base, const SystemLayout& layout) {
  if (base.dim != 2) {
    throw std::invalid_argument("lift_iid: base channel must act on one qubit");
  }
  if (!is_power_of_two(layout.d_dat) || !is_power_of_two(layout.d_enc)) {
    throw std::invalid_argument("lift_iid: d_dat and d_enc must be powers of 2");
  }
  int n_qubits = log2_exact(layout.d_dat) + log2_exact(layout.d_enc);
  int m = base.m();
  long count = 1;
  for (int q = 0; q < n_qubits; ++q) count *= m;

  CMatrix i_rec = CMatrix::Identity(layout.d_rec, layout.d_rec);
  std::vector<CMatrix> ops;
  ops.reserve(count);
  for (long idx = 0; idx < count; ++idx) {
    // Qubit 0 is the least significant digit of idx and the leftmost tensor
    // factor of the operator.
    CMatrix op = CMatrix::Identity(1, 1);
    long rem = idx;
    for (int q = 0; q < n_qubits; ++q) {
      op = kron(op, base.kraus[rem % m]);
      rem /= m;
    }
    ops.push_back(kron(op, i_rec));
  }
  KrausChannel lifted(layout.dim(), std::move(ops));
  lifted.name = base.name;
  lifted.params = base.params;
  return lifted;
}

CMatrix entangler(const SystemLayout& layout) {
  if (layout.d_enc != layout.d_rec) {
    throw std::invalid_argument("entangler: d_enc must equal d_rec, got " +
                                std::to_string(layout.d_enc) + " vs " +
                                std::to_string(layout.d_rec));
  }
  if (!is_power_of_two(layout.d_enc)) {
    throw std::invalid_argument("entangler: ancilla factors must be powers of 2");
  }
  int k = log2_exact(layout.d_enc);
  int d_anc = layout.d_anc();
  CMatrix u_anc = CMatrix::Identity(d_anc, d_anc);
  if (k > 0) {
    std::vector<int> qubit_dims(2 * k, 2);  // encoding qubits, then recovery qubits
    for (int pair = 0; pair < k; ++pair) {
      CMatrix h = embed_operator(hadamard(), {pair}, qubit_dims);
      CMatrix cx = embed_operator(cnot(), {pair, k + pair}, qubit_dims);
      u_anc = cx * h * u_anc;
    }
  }
  return kron(CMatrix::Identity(layout.d_dat, layout.d_dat), u_anc);
}

std::vector<CVector> bell_basis() {
  const double s = 1.0 / std::sqrt(2.0);
  std::vector<CVector> basis(4, CVector::Zero(4));
  basis[0][0] = s;
  basis[0][3] = s;
  basis[1][0] = s;
  basis[1][3] = -s;
  basis[2][2] = s;
  basis[2][1] = s;
  basis[3][2] = s;
  basis[3][1] = -s;
  return basis;
}

CMatrix twirl(const CMatrix& rho) {
  if (rho.rows() != 2 || rho.cols() != 2) {
    throw std::invalid_argument("twirl: expected a 2x2 density matrix");
  }
  if (!is_hermitian(rho, 1e-10)) {
    throw std::invalid_argument("twirl: density matrix is not Hermitian within 1e-10");
  }
  if (std::abs(rho.trace() - Complex(1.0)) > 1e-10) {
    throw std::invalid_argument("twirl: density matrix trace differs from 1");
  }
  EighResult ed = eigh(rho);
  if (ed.values.minCoeff() < -1e-10) {
    throw std::invalid_argument("twirl: density matrix has negative eigenvalue " +
                                std::to_string(ed.values.minCoeff()));
  }
  CMatrix out = rho;
  for (char which : {'x', 'y', 'z'}) {
    CMatrix s = pauli(which);
    out += s * rho * s;
  }
  return 0.25 * out;
}

KrausChannel channel_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& err) {
    throw std::runtime_error(std::string("channel JSON: parse failure: ") + err.what());
  }
  if (!j.is_object() || !j.contains("dim") || !j.contains("kraus")) {
    throw std::runtime_error("channel JSON: expected object with 'dim' and 'kraus'");
  }
  if (!j["dim"].is_number_integer() || j["dim"].get<int>() < 1) {
    throw std::runtime_error("channel JSON: 'dim' must be a positive integer");
  }
  int dim = j["dim"].get<int>();
  if (!j["kraus"].is_array() || j["kraus"].empty()) {
    throw std::runtime_error("channel JSON: 'kraus' must be a non-empty array");
  }
  std::vector<CMatrix> ops;
  for (size_t e = 0; e < j["kraus"].size(); ++e) {
    const auto& op = j["kraus"][e];
    if (!op.is_array() || static_cast<long>(op.size()) != static_cast<long>(dim) * dim) {
      throw std::runtime_error("channel JSON: kraus[" + std::to_string(e) + "] has " +
                               std::to_string(op.size()) + " entries, expected " +
                               std::to_string(static_cast<long>(dim) * dim));
    }
    CMatrix mat(dim, dim);
    for (long k = 0; k < static_cast<long>(op.size()); ++k) {
      const auto& entry = op[k];
      if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number() ||
          !entry[1].is_number()) {
        throw std::runtime_error("channel JSON: kraus[" + std::to_string(e) +
                                 "] entry " + std::to_string(k) +
                                 " is not an [re, im] pair");
      }
      mat(k / dim, k % dim) = Complex(entry[0].get<double>(), entry[1].get<double>());
    }
    ops.push_back(std::move(mat));
  }
  KrausChannel channel(dim, std::move(ops), 1e-8);
  if (j.contains("name") && j["name"].is_string()) channel.name = j["name"].get<std::string>();
  if (j.contains("params") && j["params"].is_object()) {
    for (auto it = j["params"].begin(); it != j["params"].end(); ++it) {
      if (it.value().is_number()) channel.params[it.key()] = it.value().get<double>();
    }
  }
  return channel;
}

std::string channel_to_json(const KrausChannel& channel) {
  nlohmann::json j;
  j["dim"] = channel.dim;
  nlohmann::json kraus = nlohmann::json::array();
  for (const CMatrix& op : channel.kraus) {
    nlohmann::json flat = nlohmann::json::array();
    for (int r = 0; r < channel.dim; ++r) {
      for (int c = 0; c < channel.dim; ++c) {
        flat.push_back({op(r, c).real(), op(r, c).imag()});
      }
    }
    kraus.push_back(std::move(flat));
  }
  j["kraus"] = std::move(kraus);
  if (!channel.name.empty()) j["name"] = channel.name;
  if (!channel.params.empty()) {
    nlohmann::json params;
    for (const auto& [key, value] : channel.params) params[key] = value;
    j["params"] = std::move(params);
  }
  return j.dump(2);
}

CMatrix hadamard() {
  CMatrix h(2, 2);
  const double s = 1.0 / std::sqrt(2.0);
  h << s, s, s, -s;
  return h;
}

CMatrix cnot() {
  CMatrix c = CMatrix::Zero(4, 4);
  c(0, 0) = 1;
  c(1, 1) = 1;
  c(2, 3) = 1;
  c(3, 2) = 1;
  return c;
}

CMatrix pauli(char which) {
  CMatrix m(2, 2);
  switch (which) {
    case 'i': m << 1, 0, 0, 1; break;
    case 'x': m << 0, 1, 1, 0; break;
    case 'y': m << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0); break;
    case 'z': m << 1, 0, 0, -1; break;
    default: throw std::invalid_argument("pauli: unknown label");
  }
  return m;
}

}  // namespace eaqec
