#pragma once

// Alternating bi-convex optimization of encoding and recovery operations
// against a fixed noisy channel. One unknown block is the encoding isometry
// C' on (data, encoding); the other is the recovery Kraus stack R together
// with the proportionality weights Delta. Each half-step is solved exactly:
// the recovery step reduces to a concave maximization over a small density
// matrix Gamma followed by an SVD, the encoding step to a polar projection.

#include <cstdint>
#include <string>
#include <vector>

#include "eaqec/channels.hpp"
#include "eaqec/tensor.hpp"

namespace eaqec {

// Weight matrix [mu_re], m_R x m_E, normalized to unit Frobenius norm.
struct DeltaMatrix {
  CMatrix entries;

  DeltaMatrix() = default;
  explicit DeltaMatrix(CMatrix entries_in, double norm_tol = 1e-10);

  int m_r() const { return static_cast<int>(entries.rows()); }
  int m_e() const { return static_cast<int>(entries.cols()); }
};

// Hermitian PSD matrix with unit trace, m_E x m_E.
struct GammaMatrix {
  CMatrix entries;

  GammaMatrix() = default;
  explicit GammaMatrix(CMatrix entries_in, double tol = 1e-10);

  int m() const { return static_cast<int>(entries.rows()); }
};

struct OptimizerConfig {
  int max_outer_iters = 500;
  double tol_outer = 1e-9;       // stop when the distance decrease drops below
  int gamma_max_iters = 2000;
  double gamma_tol = 1e-10;      // stop when the objective increase drops below
  int restarts = 10;
  std::uint64_t seed = 0;
  double psd_eps = 1e-12;        // pseudo-inverse cutoff inside the Gamma solver

  void validate() const;
  static OptimizerConfig from_json(const std::string& text);
  std::string to_json() const;
};

struct OptState {
  CMatrix c_prime;                     // unitary on data (x) encoding
  CMatrix r_stack;                     // m_R blocks of d x d, stacked; R^dag R = I_d
  DeltaMatrix delta;
  std::vector<double> delta_history;     // one entry per outer iteration
  std::vector<double> fidelity_history;  // normalized full-space fidelity
  int iteration = 0;
  bool converged = false;
  int restart_index = 0;

  std::string to_json() const;
};

// delta(R, C, Delta) = sum_{r,e} || R_r E_e C U - mu_re L ||_F^2.
double distance_delta(const CMatrix& r_stack, const KrausChannel& e,
                      const CMatrix& c_full, const CMatrix& u,
                      const DeltaMatrix& delta, const CMatrix& l);

// Tr sqrt( sum_{ij} Gamma_ij E_i E_j^dag ). Concave on the feasible set.
double gamma_objective(const GammaMatrix& gamma, const KrausChannel& e);

struct GammaSolution {
  GammaMatrix gamma;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Frank-Wolfe ascent of gamma_objective over {Gamma PSD, Tr Gamma = 1},
// started from Gamma = I/m_E. Iterates stay feasible by construction.
GammaSolution solve_gamma(const KrausChannel& e, const OptimizerConfig& config);

// Delta = Gamma^{1/2}, so Delta^dag Delta = Gamma and m_R = m_E.
DeltaMatrix delta_from_gamma(const GammaMatrix& gamma);

// Exact recovery half-step: SVD of M = E (Delta^dag kron C U L^dag) gives the
// isometry stack R = V U^dag maximizing Re Tr[R M] over R^dag R = I.
CMatrix recovery_from_delta(const KrausChannel& e, const DeltaMatrix& delta,
                            const CMatrix& c_full, const CMatrix& u,
                            const CMatrix& l);

// Unconstrained encoding stationary point
// (1/d_rec) Tr_rec[ sum_{r,e} mu_re (R_r E_e)^dag L U^dag ].
CMatrix encoding_unconstrained(const CMatrix& r_stack, const KrausChannel& e,
                               const DeltaMatrix& delta, const CMatrix& l,
                               const CMatrix& u, const SystemLayout& layout);

// Nearest-unitary projection of the unconstrained solution.
CMatrix encoding_project(const CMatrix& c_bar);

struct RefitResult {
  DeltaMatrix delta;
  // Set when every overlap trace vanished and the returned Delta is the
  // arbitrary uniform fallback.
  bool degenerate = false;
};

// Optimal weights for fixed (R, C): mu_re proportional to Tr[L^dag R_r E_e C U].
RefitResult refit_delta(const CMatrix& r_stack, const KrausChannel& e,
                        const CMatrix& c_full, const CMatrix& u,
                        const CMatrix& l);

enum class FidelityNormalization {
  paper,       // divide by d_dat^2
  normalized,  // divide by d^2; equals 1 exactly at a perfect solution
};

// Full-space channel fidelity sum_{r,e} |Tr L^dag R_r E_e C U|^2 over the
// chosen normalizer. Paper mode divides by d_dat^2 and can exceed 1 when L
// acts on the whole space; pass the data dimension explicitly (0 means use
// the full dimension, which makes the two modes coincide).
double fidelity_full(const CMatrix& r_stack, const KrausChannel& e,
                     const CMatrix& c_full, const CMatrix& u, const CMatrix& l,
                     FidelityNormalization normalization, int d_dat = 0);

enum class OutputFactor { data, recovery };

// Entanglement fidelity of the induced map on the data subsystem: ancillas
// start in |0...0>, the composed channel R o E o C o U is applied, every
// factor except `output_factor` is traced out, and the resulting map's Kraus
// operators (from its Choi matrix) are compared against the target l_dat.
double fidelity_data(const CMatrix& r_stack, const KrausChannel& e,
                     const CMatrix& c_full, const CMatrix& u,
                     const SystemLayout& layout, OutputFactor output_factor,
                     const CMatrix& l_dat);

struct AlternateOutcome {
  OptState best;                  // min-distance merge, ties to lowest restart
  std::vector<OptState> restarts; // every restart's final state, by index
};

// Full alternating loop with restarts. Restart 0 starts from C' = I, later
// restarts from Haar-random C' drawn off config.seed. The Gamma subproblem
// depends only on the channel, so it is solved once and shared.
AlternateOutcome alternate_full(const KrausChannel& e,
                                const SystemLayout& layout,
                                const TargetSpec& target, const CMatrix& u,
                                const OptimizerConfig& config);

OptState alternate(const KrausChannel& e, const SystemLayout& layout,
                   const TargetSpec& target, const CMatrix& u,
                   const OptimizerConfig& config);

}  // namespace eaqec
