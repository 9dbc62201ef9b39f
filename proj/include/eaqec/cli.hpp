#ifndef EAQEC_CLI_HPP
#define EAQEC_CLI_HPP

// Command-line harness plus the sweep engine behind it. The engine is exposed
// so test binaries can run the same computations in-process and inspect the
// full optimizer states, not just the emitted rows.

#include <cstdint>
#include <string>
#include <vector>

#include "eaqec/channels.hpp"
#include "eaqec/optimizer.hpp"
#include "eaqec/tensor.hpp"

namespace eaqec {

// The three experiment arms a sweep can run:
//   unprotected - one bare qubit through the channel, no optimization;
//   standard    - one encoding and one recovery qubit, recovery ancilla in a
//                 product state (no entangler), full-space identity target;
//   ea          - same layout with the entangler, so the recovery qubit is
//                 entangled with the encoding qubit; target swaps data into
//                 the recovery slot.
enum class Scenario { unprotected, standard, ea };

const char* scenario_name(Scenario scenario);

struct SweepSpec {
  // Preset channel family name; sweeps vary p, so a fixed JSON channel is not
  // accepted here.
  std::string channel = "bit-flip";
  std::vector<double> p_values;
  std::vector<Scenario> scenarios = {Scenario::unprotected, Scenario::standard,
                                     Scenario::ea};
  // Layout for the optimized scenarios; the unprotected arm always runs on a
  // single bare qubit.
  SystemLayout layout{2, 2, 2};
  OptimizerConfig config;
  int jobs = 0;  // worker threads; 0 means hardware concurrency
  // When true (the default) the ea arm appends a candidate state built from
  // the analytic protocol for the channel's best two-unitary reading (exact
  // when the channel mixes at most two unitaries, else the two heaviest
  // unitary branches). The candidate is scored against the true channel and
  // only wins the row when it beats the optimized restarts. Turn off to study
  // what the optimizer finds on its own.
  bool protocol_seed = true;

  void validate() const;
};

struct SweepRow {
  double p = 0.0;
  Scenario scenario = Scenario::unprotected;
  double fidelity_data = 0.0;
  double fidelity_norm = 0.0;
  double delta = 0.0;
  int iterations = 0;
  int restart = 0;
  bool converged = false;
  std::uint64_t seed = 0;
};

// One sweep grid point with everything the row was derived from. `states`
// holds every optimizer restart plus, when the channel admits the analytic
// protocol in the ea arm, a protocol-derived candidate appended after them;
// `selected` indexes the state the row reports (-1 for unprotected rows,
// which run no optimizer).
struct SweepPoint {
  double p = 0.0;
  Scenario scenario = Scenario::unprotected;
  SweepRow row;
  std::vector<OptState> states;
  int selected = -1;
};

// Deterministic per-row seed derived from the global seed, the index of p in
// the grid, and the scenario.
std::uint64_t row_seed(std::uint64_t base_seed, std::size_t p_index,
                       Scenario scenario);

// Runs the whole sweep (parallel over grid points) and returns the points
// sorted by (p, scenario name).
std::vector<SweepPoint> run_sweep_points(const SweepSpec& spec);

std::vector<SweepRow> run_sweep(const SweepSpec& spec);

std::string rows_to_csv(const std::vector<SweepRow>& rows);
std::string rows_to_json(const std::vector<SweepRow>& rows);

// Entry point used by the eaqec binary; returns the process exit code
// (0 success, 1 usage or input error, 2 non-convergence, 3 verification
// failure).
int run_cli(const std::vector<std::string>& args);

}  // namespace eaqec

#endif  // EAQEC_CLI_HPP
