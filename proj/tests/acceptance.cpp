// Acceptance harness: one pass/fail line per criterion, exit 0 only if every
// criterion passes. Library-level checks run in-process; command-level checks
// drive the installed binary.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "eaqec/channels.hpp"
#include "eaqec/cli.hpp"
#include "eaqec/optimizer.hpp"
#include "eaqec/oracle.hpp"
#include "eaqec/teleport.hpp"
#include "eaqec/tensor.hpp"
#include "test_helpers.hpp"

using namespace eaqec;
using eaqec::testing::random_density;

namespace {

int failures = 0;

void report(int number, bool pass, const std::string& text) {
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", number,
              text.c_str());
  std::fflush(stdout);
  if (!pass) {
    ++failures;
  }
}

struct CommandResult {
  int exit_code = -1;
  std::string output;
};

CommandResult run_binary(const std::string& args) {
  const std::string command =
      std::string(EAQEC_CLI_PATH) + " " + args + " 2>&1";
  CommandResult result;
  FILE* pipe = popen(command.c_str(), "r");
  if (pipe == nullptr) {
    return result;
  }
  char buffer[4096];
  std::size_t n = 0;
  while ((n = fread(buffer, 1, sizeof(buffer), pipe)) > 0) {
    result.output.append(buffer, n);
  }
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

bool parse_field(const std::string& output, const std::string& key,
                 double* value) {
  const std::string tag = key + ": ";
  const auto pos = output.find(tag);
  if (pos == std::string::npos) {
    return false;
  }
  *value = std::stod(output.substr(pos + tag.size()));
  return true;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

KrausChannel preset_channel(const std::string& family, double p) {
  if (family == "bit-flip") {
    return make_bit_flip(p);
  }
  if (family == "bit-phase-flip") {
    return make_bit_phase_flip(p);
  }
  if (family == "depolarizing") {
    return make_depolarizing(p);
  }
  return make_identity_channel(2);
}

// One optimized sweep whose states feed the soundness criterion.
struct SweepBundle {
  std::string family;
  SweepSpec spec;
  std::vector<SweepPoint> points;
};

SweepBundle run_bundle(const std::string& family,
                       const std::vector<double>& p_values,
                       const std::vector<Scenario>& scenarios, int restarts,
                       std::uint64_t seed, bool protocol_seed) {
  SweepBundle bundle;
  bundle.family = family;
  bundle.spec.channel = family;
  bundle.spec.p_values = p_values;
  bundle.spec.scenarios = scenarios;
  bundle.spec.config.restarts = restarts;
  bundle.spec.config.seed = seed;
  bundle.spec.protocol_seed = protocol_seed;
  bundle.points = run_sweep_points(bundle.spec);
  return bundle;
}

double fidelity_at(const SweepBundle& bundle, double p, Scenario scenario) {
  for (const SweepPoint& point : bundle.points) {
    if (point.scenario == scenario && std::abs(point.p - p) < 1e-12) {
      return point.row.fidelity_data;
    }
  }
  return -1.0;
}

}  // namespace

int main() {
  const SystemLayout layout(2, 2, 2);

  // Optimized sweeps shared between the curve criteria and the soundness
  // criterion. All run with the protocol candidate enabled, matching the
  // default sweep configuration.
  std::vector<double> p15;
  for (int i = 0; i <= 15; ++i) {
    p15.push_back(i / 15.0);
  }
  std::vector<double> p10;
  for (int i = 0; i <= 10; ++i) {
    p10.push_back(i / 10.0);
  }
  const std::vector<Scenario> optimized = {Scenario::standard, Scenario::ea};

  const SweepBundle bit_flip =
      run_bundle("bit-flip", p10, {Scenario::unprotected, Scenario::standard,
                                   Scenario::ea},
                 6, 101, true);
  const SweepBundle bit_phase =
      run_bundle("bit-phase-flip", p15, optimized, 10, 202, true);
  const SweepBundle depolarizing =
      run_bundle("depolarizing", p10, optimized, 10, 303, true);
  const std::vector<const SweepBundle*> bundles = {&bit_flip, &bit_phase,
                                                   &depolarizing};

  // Criterion 1: the analytic protocol is exact on two-unitary channels.
  {
    bool pass = true;
    std::string detail;
    for (int i = 0; i <= 10 && pass; ++i) {
      char args[128];
      std::snprintf(args, sizeof(args), "teleport --channel bit-flip --p %.2f",
                    i * 0.1);
      const CommandResult result = run_binary(args);
      double fidelity = 0.0;
      if (result.exit_code != 0 ||
          !parse_field(result.output, "fidelity", &fidelity) ||
          std::abs(fidelity - 1.0) > 1e-9) {
        pass = false;
        detail = std::string("; first failure at ") + args + " (exit " +
                 std::to_string(result.exit_code) + ", fidelity " +
                 fmt(fidelity) + ")";
      }
    }
    std::mt19937_64 rng(12062);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 20 && pass; ++trial) {
      const int dim = trial < 12 ? 2 : 4;
      const TwoUnitaryChannel channel(haar_random_unitary(dim, rng),
                                      haar_random_unitary(dim, rng),
                                      unit(rng));
      const TeleportProtocol protocol = build_protocol(channel, layout);
      const double fidelity =
          verify_protocol(protocol, noise_on_full_space(channel, layout));
      if (std::abs(fidelity - 1.0) > 1e-9) {
        pass = false;
        detail = "; random channel trial " + std::to_string(trial) +
                 " gave fidelity " + fmt(fidelity);
      }
    }
    report(1, pass,
           "teleportation exactness: 11 bit-flip runs through the binary and "
           "20 random two-unitary channels reach fidelity 1 within 1e-9" +
               detail);
  }

  // Criterion 2: unprotected rows equal 1 - p to 1e-10 on 21-point grids.
  {
    std::vector<double> p21;
    for (int i = 0; i <= 20; ++i) {
      p21.push_back(i * 0.05);
    }
    bool pass = true;
    std::string detail;
    for (const std::string family :
         {"bit-flip", "bit-phase-flip", "depolarizing"}) {
      SweepSpec spec;
      spec.channel = family;
      spec.p_values = p21;
      spec.scenarios = {Scenario::unprotected};
      const std::vector<SweepRow> rows = run_sweep(spec);
      for (const SweepRow& row : rows) {
        if (std::abs(row.fidelity_data - (1.0 - row.p)) > 1e-10) {
          pass = false;
          detail = "; " + family + " at p = " + fmt(row.p) + " gave " +
                   fmt(row.fidelity_data);
        }
      }
    }
    report(2, pass,
           "unprotected baseline equals 1 - p within 1e-10 on 21-point grids "
           "for bit-flip, bit-phase-flip, and depolarizing" +
               detail);
  }

  // Criterion 3: soundness of every optimizer state behind the sweeps above.
  {
    bool pass = true;
    std::string detail;
    int states_checked = 0;
    const auto fail = [&](const std::string& why) {
      if (pass) {
        pass = false;
        detail = "; first failure: " + why;
      }
    };
    for (const SweepBundle* bundle : bundles) {
      // Shared Gamma subproblem feasibility per grid point.
      for (double p : bundle->spec.p_values) {
        const KrausChannel lifted =
            lift_iid(preset_channel(bundle->family, p), bundle->spec.layout);
        const GammaSolution gamma = solve_gamma(lifted, bundle->spec.config);
        if (std::abs(gamma.gamma.entries.trace().real() - 1.0) > 1e-8) {
          fail(bundle->family + " Gamma trace off at p = " + fmt(p));
        }
        const EighResult eig = eigh(gamma.gamma.entries);
        if (eig.values(0) < -1e-8) {
          fail(bundle->family + " Gamma not PSD at p = " + fmt(p));
        }
      }
      for (const SweepPoint& point : bundle->points) {
        for (const OptState& state : point.states) {
          ++states_checked;
          for (std::size_t i = 1; i < state.delta_history.size(); ++i) {
            if (state.delta_history[i] >
                state.delta_history[i - 1] + 1e-10) {
              fail(bundle->family + " non-monotone history at p = " +
                   fmt(point.p));
            }
          }
          const int d_code = state.c_prime.rows();
          const double c_residual =
              (state.c_prime.adjoint() * state.c_prime -
               CMatrix::Identity(d_code, d_code))
                  .cwiseAbs()
                  .maxCoeff();
          const double r_residual =
              (state.r_stack.adjoint() * state.r_stack -
               CMatrix::Identity(state.r_stack.cols(), state.r_stack.cols()))
                  .cwiseAbs()
                  .maxCoeff();
          const double norm_residual =
              std::abs(state.delta.entries.squaredNorm() - 1.0);
          if (c_residual > 1e-8 || r_residual > 1e-8 || norm_residual > 1e-8) {
            fail(bundle->family + " feasibility residual at p = " +
                 fmt(point.p));
          }
          const double two_d = 2.0 * bundle->spec.layout.dim();
          if (point.scenario == Scenario::unprotected) {
            continue;
          }
          const double delta_val = state.delta_history.back();
          const double implied = ((two_d - delta_val) / two_d) *
                                 ((two_d - delta_val) / two_d);
          if (std::abs(state.fidelity_history.back() - implied) > 1e-8) {
            fail(bundle->family + " refit consistency at p = " + fmt(point.p));
          }
        }
        if (point.row.fidelity_data < -1e-12 ||
            point.row.fidelity_data > 1.0 + 1e-9 ||
            point.row.fidelity_norm < -1e-12 ||
            point.row.fidelity_norm > 1.0 + 1e-9) {
          fail(bundle->family + " fidelity outside [0, 1] at p = " +
               fmt(point.p));
        }
      }
    }
    report(3, pass,
           "optimizer soundness: non-increasing distance histories (1e-10 "
           "slack), feasibility residuals within 1e-8, and the refit "
           "distance-fidelity identity within 1e-8 across " +
               std::to_string(states_checked) + " states" + detail);
  }

  // Criterion 4: the distance-bound solver against closed form and grid.
  {
    bool pass = true;
    std::string detail;
    const OptimizerConfig config;
    for (double p : {0.1, 0.19, 0.3}) {
      const GammaSolution solution = solve_gamma(make_bit_flip(p), config);
      const double exact = 2.0 * std::sqrt(1.0 - p);
      if (std::abs(solution.objective - exact) > 1e-6) {
        pass = false;
        detail = "; bit-flip p = " + fmt(p) + " solved to " +
                 fmt(solution.objective) + " vs " + fmt(exact);
      }
    }
    const double p_dep = 0.3;
    const double q = (p_dep / 3.0) / (1.0 - p_dep + p_dep / 3.0);
    for (char axis : {'x', 'y', 'z'}) {
      CMatrix k0 = std::sqrt(1.0 - q) * CMatrix::Identity(2, 2);
      CMatrix k1 = std::sqrt(q) * pauli(axis);
      const KrausChannel restricted(2, {k0, k1});
      const GammaSolution solution = solve_gamma(restricted, config);
      const GammaGridResult grid = gamma_grid_search(restricted, 0.005);
      if (std::abs(solution.objective - grid.objective) > 1e-3) {
        pass = false;
        detail = std::string("; depolarizing restriction axis ") + axis +
                 " solver " + fmt(solution.objective) + " vs grid " +
                 fmt(grid.objective);
      }
    }
    report(4, pass,
           "distance-bound solver matches 2*sqrt(1-p) within 1e-6 on bit-flip "
           "and the 0.005-resolution grid oracle within 1e-3 on two-branch "
           "depolarizing restrictions" +
               detail);
  }

  // Criterion 5: bit-phase-flip ordering, minimum location, and separation.
  {
    std::vector<double> std_curve, ea_curve;
    for (double p : p15) {
      std_curve.push_back(fidelity_at(bit_phase, p, Scenario::standard));
      ea_curve.push_back(fidelity_at(bit_phase, p, Scenario::ea));
    }
    bool pass = true;
    std::string detail;
    for (std::size_t i = 0; i < p15.size(); ++i) {
      if (ea_curve[i] < std_curve[i] - 1e-6) {
        pass = false;
        detail = "; ea below standard at p = " + fmt(p15[i]);
      }
    }
    const auto argmin = [](const std::vector<double>& v) {
      return static_cast<int>(std::min_element(v.begin(), v.end()) -
                              v.begin());
    };
    const int target_index = 10;  // p = 2/3 lies on the grid
    if (argmin(std_curve) != target_index) {
      pass = false;
      detail += "; standard minimum at p = " + fmt(p15[argmin(std_curve)]);
    }
    if (argmin(ea_curve) != target_index) {
      pass = false;
      detail += "; ea minimum at p = " + fmt(p15[argmin(ea_curve)]);
    }
    const double separation = ea_curve[target_index] - std_curve[target_index];
    std::string flag;
    if (separation <= 0.0) {
      pass = false;
      detail += "; separation at p = 2/3 is " + fmt(separation);
    } else if (separation < 0.01) {
      flag = " (flagged: separation " + fmt(separation) +
             " is below the 0.01 reading but positive)";
    }
    report(5, pass,
           "bit-phase-flip: ea >= standard - 1e-6 everywhere, both optimized "
           "curves dip at the grid point nearest 2/3, separation " +
               fmt(separation) + " at 2/3" + flag + detail);
  }

  // Criterion 6: depolarizing curves agree up to 0.7 and stay ordered after.
  {
    bool pass = true;
    std::string detail;
    for (double p : p10) {
      const double std_fid = fidelity_at(depolarizing, p, Scenario::standard);
      const double ea_fid = fidelity_at(depolarizing, p, Scenario::ea);
      if (p <= 0.7 + 1e-12) {
        if (std::abs(ea_fid - std_fid) > 1e-4) {
          pass = false;
          detail += "; |ea - standard| = " + fmt(std::abs(ea_fid - std_fid)) +
                    " at p = " + fmt(p);
        }
      } else if (ea_fid < std_fid - 1e-6) {
        pass = false;
        detail += "; ea below standard at p = " + fmt(p);
      }
    }
    report(6, pass,
           "depolarizing: |ea - standard| <= 1e-4 for p <= 0.7 and ea >= "
           "standard - 1e-6 at p in {0.8, 0.9, 1.0}" +
               detail);
  }

  // Criterion 7: the five trace-gradient identities.
  {
    std::mt19937_64 rng(0);
    const std::vector<GradCheckReport> reports =
        check_trace_gradients(rng, 100);
    bool pass = true;
    std::string detail;
    double worst = 0.0;
    for (const GradCheckReport& r : reports) {
      worst = std::max(worst, r.max_rel_error);
      if (!r.passed) {
        pass = false;
        detail += "; " + r.identity_name + " at " + fmt(r.max_rel_error);
      }
    }
    report(7, pass,
           "all five trace-gradient identities verified by central "
           "differences within 1e-5 over 100 trials (worst " +
               fmt(worst) + ")" + detail);
  }

  // Criterion 8: twirling sends every state to the maximally mixed state.
  {
    std::mt19937_64 rng(88);
    bool pass = true;
    std::string detail;
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const CMatrix rho = random_density(2, rng);
      const double err =
          (twirl(rho) - 0.5 * CMatrix::Identity(2, 2)).cwiseAbs().maxCoeff();
      worst = std::max(worst, err);
      if (err > 1e-12) {
        pass = false;
        detail = "; trial " + std::to_string(trial) + " off by " + fmt(err);
      }
    }
    report(8, pass,
           "twirl maps 100 random density matrices to I/2 within 1e-12 "
           "(worst " +
               fmt(worst) + ")" + detail);
  }

  // Criterion 9: byte-identical CSV for identical seeds.
  {
    const std::string args =
        "sweep --channel bit-flip --p-grid 0:0.4:0.2 --restarts 3 --seed 12 "
        "--jobs 2";
    const CommandResult first = run_binary(args);
    const CommandResult second = run_binary(args);
    const bool pass = first.exit_code == 0 && second.exit_code == 0 &&
                      !first.output.empty() && first.output == second.output;
    report(9, pass,
           "two sweep runs with the same seed produce byte-identical CSV "
           "bodies");
  }

  return failures == 0 ? 0 : 1;
}
