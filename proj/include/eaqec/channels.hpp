#pragma once

// Kraus-form CPTP channel model plus the fixed circuit pieces the experiments
// are assembled from: standard single-qubit noise constructors, the i.i.d.
// lift onto the transmitted (data + encoding) qubits, the Hadamard/CNOT
// entangler that prepares ebit pairs with the recovery ancillas, Bell states,
// and the Pauli twirl.

#include <map>
#include <string>
#include <vector>

#include "eaqec/tensor.hpp"

namespace eaqec {

struct KrausChannel {
  int dim = 0;
  std::vector<CMatrix> kraus;
  std::string name;                      // optional label, serialized if set
  std::map<std::string, double> params;  // optional parameters, serialized if set

  // Validates shape, m <= dim^2, and trace preservation at construction.
  KrausChannel(int dim_in, std::vector<CMatrix> ops, double tp_tol = 1e-10);

  int m() const { return static_cast<int>(kraus.size()); }

  // Sum_e E_e rho E_e^dag.
  CMatrix apply(const CMatrix& rho) const;

  // Max-abs deviation of Sum_e E_e^dag E_e from identity.
  double tp_defect() const;
};

enum class TargetKind { identity, swap_data_to_recovery, custom };

// The goal unitary L on the full space. Materialized eagerly so every module
// works with a concrete matrix.
struct TargetSpec {
  TargetKind kind = TargetKind::identity;
  CMatrix matrix;

  static TargetSpec identity(const SystemLayout& layout);
  static TargetSpec swap_data_to_recovery(const SystemLayout& layout);
  static TargetSpec custom(const CMatrix& l);
};

KrausChannel make_identity_channel(int dim);
KrausChannel make_bit_flip(double p);
KrausChannel make_bit_phase_flip(double p);
KrausChannel make_depolarizing(double p);
KrausChannel make_random_unitary_channel(
    const std::vector<std::pair<double, CMatrix>>& terms);

// Independent copies of a single-qubit channel on every data and encoding
// qubit, identity on the recovery factor. Kraus index order: the multi-index
// over transmitted qubits with qubit 0 (leftmost data qubit) as the least
// significant digit.
KrausChannel lift_iid(const KrausChannel& base, const SystemLayout& layout);

// U = I_dat (x) U_anc. U_anc pairs encoding qubit k with recovery qubit k:
// Hadamard on the encoding qubit, then CNOT onto the recovery qubit, so the
// all-zero ancilla state becomes a product of Bell pairs.
CMatrix entangler(const SystemLayout& layout);

// B1 = (|00>+|11>)/sqrt2, B2 = (|00>-|11>)/sqrt2,
// B3 = (|10>+|01>)/sqrt2, B4 = (|10>-|01>)/sqrt2.
std::vector<CVector> bell_basis();

// (1/4)(rho + x rho x + y rho y + z rho z); the identity-times-half map.
CMatrix twirl(const CMatrix& rho);

KrausChannel channel_from_json(const std::string& text);
std::string channel_to_json(const KrausChannel& channel);

// Single-qubit gates used by the entangler and the teleport circuits.
CMatrix hadamard();
CMatrix cnot();
CMatrix pauli(char which);  // 'i', 'x', 'y', 'z'

}  // namespace eaqec
