#ifndef EAQEC_TELEPORT_HPP
#define EAQEC_TELEPORT_HPP

// Analytic protocol for channels that mix exactly two unitaries: rotate so one
// branch becomes the identity, encode the Bell basis of the transmitted pair
// into the eigenbasis of the remaining unitary, and key a Pauli correction on
// the recovery qubit off a projective measurement of that basis. The
// construction reaches fidelity 1 for every mixing probability.

#include <optional>
#include <string>
#include <vector>

#include "eaqec/channels.hpp"
#include "eaqec/tensor.hpp"

namespace eaqec {

// Noise of the form rho -> (1-p) V1 rho V1^dag + p V2 rho V2^dag.
// dim 2 models i.i.d. per-qubit noise on the transmitted pair; dim 4 models a
// joint two-qubit decomposition.
struct TwoUnitaryChannel {
  CMatrix v1;
  CMatrix v2;
  double p = 0.0;
  int dim = 0;

  TwoUnitaryChannel(CMatrix v1_in, CMatrix v2_in, double p_in);

  // The channel as an explicit Kraus pair {sqrt(1-p) V1, sqrt(p) V2} on its
  // native dimension. Zero-weight branches are dropped.
  KrausChannel to_kraus() const;
};

struct TeleportProtocol {
  // V1^dag on the transmitted (data, encoding) pair, applied after the
  // encoding and before transmission. 4x4.
  CMatrix pre_rotation;
  // Maps Bell state k of the pair to the k-th eigenbasis product state. 4x4
  // unitary.
  CMatrix encoding;
  // One operator per measurement outcome on the full 8-dimensional space:
  // project the pair onto eigenbasis state k, reset it to |00>, and apply the
  // matching Pauli correction to the recovery qubit.
  std::vector<CMatrix> recovery_kraus;
  SystemLayout layout;

  // Combined operation Alice applies to the pair before sending it.
  CMatrix pair_operation() const { return pre_rotation * encoding; }
  // The recovery Kraus operators stacked vertically for the optimizer-facing
  // evaluation helpers.
  CMatrix recovery_stack() const;
};

struct EigenbasisResult {
  std::vector<CVector> vectors;
  std::vector<Complex> phases;
};

// Unitary eigendecomposition of W = V2 V1^dag, ordered by the principal
// argument of the eigenphase (values near -pi are treated as +pi so a -1
// eigenvalue always sorts after +1). Each vector's largest-magnitude component
// is made real positive, which pins the basis deterministically whenever the
// eigenvalues are simple.
EigenbasisResult eigenbasis(const TwoUnitaryChannel& channel);

// Builds the full protocol for the one-data/one-encoding/one-recovery-qubit
// layout. A dim-2 channel is treated as acting independently on both
// transmitted qubits; a dim-4 channel acts jointly.
TeleportProtocol build_protocol(const TwoUnitaryChannel& channel,
                                const SystemLayout& layout);

// Single-unitary deferred-measurement variant of the recovery: a controlled
// correction diagonal in the measurement basis, without the reset. Reaches the
// same data fidelity as the measured form.
CMatrix coherent_recovery(const TeleportProtocol& protocol);

// Composes entangler, pair operation, the given noise, and the recovery, and
// returns the data fidelity read off the recovery qubit against an identity
// target. noise must act on the full 8-dimensional space and leave the
// recovery factor untouched.
double verify_protocol(const TeleportProtocol& protocol,
                       const KrausChannel& noise);

// Recognizes a Kraus set of at most two operators that are scalar multiples of
// unitaries and returns the matching mixture, or nullopt. Used to decide when
// the analytic protocol applies to a given channel.
std::optional<TwoUnitaryChannel> two_unitary_from_kraus(const KrausChannel& e);

// The channel as noise on the full space of `layout`: a dim-2 channel is
// lifted i.i.d. over the transmitted qubits, a dim-4 channel acts jointly on
// the pair; the recovery factor is untouched either way.
KrausChannel noise_on_full_space(const TwoUnitaryChannel& channel,
                                 const SystemLayout& layout);

// Human-readable gate list for the protocol (preparation, encoding,
// transmission, measurement, conditional corrections). Informational only; the
// format is documented in the README and not stable across versions.
std::string circuit_text(const TeleportProtocol& protocol);

}  // namespace eaqec

#endif  // EAQEC_TELEPORT_HPP
