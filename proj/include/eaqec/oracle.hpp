#ifndef EAQEC_ORACLE_HPP
#define EAQEC_ORACLE_HPP

// Independent verification tools: finite-difference checks of the matrix
// calculus identities the optimizer's update rules rest on, an exhaustive grid
// oracle for the small Gamma problem, and a random-search lower bound for the
// alternating optimizer. None of these share code with the routines they
// check.

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "eaqec/channels.hpp"
#include "eaqec/optimizer.hpp"
#include "eaqec/tensor.hpp"

namespace eaqec {

struct GradCheckReport {
  // One of d2a, d2b, d4a, d4b, d5; see check_trace_gradients.
  std::string identity_name;
  // {rows of Z, rows of A} for the instance family checked.
  std::vector<int> matrix_dims;
  double max_rel_error = 0.0;
  bool passed = false;  // max_rel_error <= 1e-5
};

// Differentiates five trace functionals entrywise with central differences
// (step 1e-5) in the Wirtinger convention d/dz = (d/dx - i d/dy)/2, treating
// conj(z) as constant, and compares against the closed forms:
//   d2a: Tr[A Z]        -> A^t
//   d2b: Tr[A Z^dag]    -> 0
//   d4a: Tr[Z Z^dag]    -> conj(Z)
//   d4b: Tr[A Z^dag Z]  -> conj(Z) A^t
//   d5:  Tr[A (Z (x) I)] -> (partial trace of A over the I factor)^t
// Each identity is checked for Z sizes 3 and 4 over `trials` random draws;
// one report per (identity, size), worst error across trials.
std::vector<GradCheckReport> check_trace_gradients(std::mt19937_64& rng,
                                                   int trials);

struct GammaGridResult {
  GammaMatrix gamma;
  double objective = 0.0;
};

// Exhaustive scan of the feasible set for channels with at most two Kraus
// operators, parameterizing 2x2 density matrices by the Bloch ball at the
// given grid resolution. Single-operator channels have a unique feasible
// point. For dimension-2 channels the objective uses the closed-form
// trace-sqrt of a 2x2 PSD matrix; larger dimensions fall back to a per-point
// eigendecomposition and should use coarse resolutions.
GammaGridResult gamma_grid_search(const KrausChannel& e, double resolution);

// Optional extras for random_search_fidelity: the frame change applied before
// the noise (identity when empty), which factor carries the output, and
// caller-supplied (C', R stack) candidates evaluated before the random draws.
struct RandomSearchSetup {
  CMatrix u;
  OutputFactor output_factor = OutputFactor::data;
  std::vector<std::pair<CMatrix, CMatrix>> injected;
};

// Max data fidelity over `samples` candidate pairs: the identity pair first,
// then any injected candidates, then Haar-random (C', R) draws. The result is
// a lower bound on the achievable fidelity, monotone in `samples` for a fixed
// generator sequence.
double random_search_fidelity(const KrausChannel& e, const SystemLayout& layout,
                              const CMatrix& l_dat, int samples,
                              std::mt19937_64& rng,
                              const RandomSearchSetup& setup = {});

std::string reports_to_json(const std::vector<GradCheckReport>& reports);

}  // namespace eaqec

#endif  // EAQEC_ORACLE_HPP
