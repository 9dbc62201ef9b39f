#include "eaqec/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <utility>

#include "CLI11.hpp"
#include "json.hpp"

#include "eaqec/oracle.hpp"
#include "eaqec/teleport.hpp"

namespace eaqec {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNoConverge = 2;
constexpr int kExitVerifyFail = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

bool is_preset(const std::string& name) {
  return name == "identity" || name == "bit-flip" ||
         name == "bit-phase-flip" || name == "depolarizing";
}

KrausChannel make_preset(const std::string& name, double p) {
  if (name == "identity") {
    return make_identity_channel(2);
  }
  if (name == "bit-flip") {
    return make_bit_flip(p);
  }
  if (name == "bit-phase-flip") {
    return make_bit_phase_flip(p);
  }
  if (name == "depolarizing") {
    return make_depolarizing(p);
  }
  throw UsageError("channel: unknown preset '" + name + "'");
}

std::string read_file(const std::string& path, const char* field) {
  std::ifstream in(path);
  if (!in) {
    throw UsageError(std::string(field) + ": cannot open file '" + path + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

SystemLayout parse_layout(const std::string& text) {
  std::vector<int> parts;
  std::stringstream stream(text);
  std::string token;
  while (std::getline(stream, token, ',')) {
    try {
      std::size_t used = 0;
      const int value = std::stoi(token, &used);
      if (used != token.size()) {
        throw std::invalid_argument(token);
      }
      parts.push_back(value);
    } catch (const std::exception&) {
      throw UsageError("layout: expected three comma-separated integers, got '" +
                       text + "'");
    }
  }
  if (parts.size() != 3) {
    throw UsageError("layout: expected three comma-separated integers, got '" +
                     text + "'");
  }
  try {
    return SystemLayout(parts[0], parts[1], parts[2]);
  } catch (const std::exception& e) {
    throw UsageError(std::string("layout: ") + e.what());
  }
}

CMatrix parse_matrix_json(const nlohmann::json& j, const char* field) {
  try {
    const int rows = j.at("rows").get<int>();
    const int cols = j.at("cols").get<int>();
    const auto& entries = j.at("entries");
    if (rows <= 0 || cols <= 0 ||
        entries.size() != static_cast<std::size_t>(rows * cols)) {
      throw std::runtime_error("matrix shape mismatch");
    }
    CMatrix m(rows, cols);
    for (int i = 0; i < rows; ++i) {
      for (int k = 0; k < cols; ++k) {
        const auto& pair = entries.at(i * cols + k);
        m(i, k) = Complex(pair.at(0).get<double>(), pair.at(1).get<double>());
      }
    }
    return m;
  } catch (const std::exception& e) {
    throw UsageError(std::string(field) + ": bad matrix JSON (" + e.what() +
                     ")");
  }
}

TargetSpec parse_target(const std::string& text, const SystemLayout& layout) {
  try {
    if (text == "identity") {
      return TargetSpec::identity(layout);
    }
    if (text == "swap") {
      return TargetSpec::swap_data_to_recovery(layout);
    }
  } catch (const std::exception& e) {
    throw UsageError(std::string("target: ") + e.what());
  }
  const nlohmann::json j = [&] {
    try {
      return nlohmann::json::parse(read_file(text, "target"));
    } catch (const UsageError&) {
      throw;
    } catch (const std::exception& e) {
      throw UsageError(std::string("target: ") + e.what());
    }
  }();
  const CMatrix l = parse_matrix_json(j, "target");
  if (l.rows() != layout.dim() || l.cols() != layout.dim()) {
    throw UsageError("target: matrix dimension does not match the layout");
  }
  if (!is_unitary(l, 1e-8)) {
    throw UsageError("target: matrix is not unitary");
  }
  return TargetSpec::custom(l);
}

// Preset names become lifted channels on the layout; anything else is read as
// a channel JSON file that must already act on the full space.
KrausChannel resolve_channel(const std::string& text, double p,
                             const SystemLayout& layout) {
  if (is_preset(text)) {
    try {
      return lift_iid(make_preset(text, p), layout);
    } catch (const UsageError&) {
      throw;
    } catch (const std::exception& e) {
      throw UsageError(std::string("channel: ") + e.what());
    }
  }
  KrausChannel channel = [&] {
    try {
      return channel_from_json(read_file(text, "channel"));
    } catch (const UsageError&) {
      throw;
    } catch (const std::exception& e) {
      throw UsageError(std::string("channel: ") + e.what());
    }
  }();
  if (channel.dim != layout.dim()) {
    throw UsageError("channel: dimension " + std::to_string(channel.dim) +
                     " does not match the layout dimension " +
                     std::to_string(layout.dim()));
  }
  return channel;
}

std::vector<double> parse_p_grid(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream stream(text);
  std::string token;
  while (std::getline(stream, token, ':')) {
    parts.push_back(token);
  }
  if (parts.size() != 3) {
    throw UsageError("p-grid: expected start:stop:step, got '" + text + "'");
  }
  double start = 0.0, stop = 0.0, step = 0.0;
  try {
    std::size_t used = 0;
    start = std::stod(parts[0], &used);
    if (used != parts[0].size()) throw std::invalid_argument(parts[0]);
    stop = std::stod(parts[1], &used);
    if (used != parts[1].size()) throw std::invalid_argument(parts[1]);
    step = std::stod(parts[2], &used);
    if (used != parts[2].size()) throw std::invalid_argument(parts[2]);
  } catch (const std::exception&) {
    throw UsageError("p-grid: expected start:stop:step, got '" + text + "'");
  }
  if (!(step > 0.0) || stop < start) {
    throw UsageError("p-grid: step must be positive and stop >= start");
  }
  std::vector<double> values;
  for (int i = 0;; ++i) {
    const double v = start + i * step;
    if (v > stop + step * 1e-9) {
      break;
    }
    values.push_back(std::clamp(v, 0.0, 1.0));
  }
  if (values.empty()) {
    throw UsageError("p-grid: produced no values");
  }
  return values;
}

std::vector<Scenario> parse_scenarios(const std::string& text) {
  std::vector<Scenario> scenarios;
  std::stringstream stream(text);
  std::string token;
  while (std::getline(stream, token, ',')) {
    if (token == "unprotected") {
      scenarios.push_back(Scenario::unprotected);
    } else if (token == "standard") {
      scenarios.push_back(Scenario::standard);
    } else if (token == "ea") {
      scenarios.push_back(Scenario::ea);
    } else {
      throw UsageError("scenarios: unknown scenario '" + token + "'");
    }
  }
  if (scenarios.empty()) {
    throw UsageError("scenarios: at least one scenario required");
  }
  return scenarios;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Everything an optimized scenario needs to run and be scored.
struct ScenarioSetup {
  SystemLayout layout;
  KrausChannel channel;
  CMatrix u;
  TargetSpec target;
  OutputFactor output_factor;
  CMatrix l_dat;
};

ScenarioSetup scenario_setup(const SweepSpec& spec, double p,
                             Scenario scenario) {
  const KrausChannel base = make_preset(spec.channel, p);
  if (scenario == Scenario::unprotected) {
    const SystemLayout bare(2, 1, 1);
    return ScenarioSetup{bare,
                         lift_iid(base, bare),
                         CMatrix::Identity(2, 2),
                         TargetSpec::identity(bare),
                         OutputFactor::data,
                         CMatrix::Identity(2, 2)};
  }
  const SystemLayout& layout = spec.layout;
  const int d = layout.dim();
  const CMatrix i_dat = CMatrix::Identity(layout.d_dat, layout.d_dat);
  if (scenario == Scenario::standard) {
    return ScenarioSetup{layout,
                         lift_iid(base, layout),
                         CMatrix::Identity(d, d),
                         TargetSpec::identity(layout),
                         OutputFactor::data,
                         i_dat};
  }
  return ScenarioSetup{layout,
                       lift_iid(base, layout),
                       entangler(layout),
                       TargetSpec::swap_data_to_recovery(layout),
                       OutputFactor::recovery,
                       i_dat};
}

double state_fidelity_data(const OptState& state, const ScenarioSetup& setup) {
  const CMatrix i_rec =
      CMatrix::Identity(setup.layout.d_rec, setup.layout.d_rec);
  return fidelity_data(state.r_stack, setup.channel,
                       kron(state.c_prime, i_rec), setup.u, setup.layout,
                       setup.output_factor, setup.l_dat);
}

// The best two-unitary reading of a Kraus channel: the two heaviest branches
// that are scalar multiples of unitaries, renormalized. Exact when the
// channel already mixes at most two unitaries.
std::optional<TwoUnitaryChannel> best_two_unitary(const KrausChannel& base) {
  const auto exact = two_unitary_from_kraus(base);
  if (exact.has_value()) {
    return exact;
  }
  std::vector<std::pair<double, CMatrix>> branches;
  for (const CMatrix& op : base.kraus) {
    const double weight = (op.adjoint() * op).trace().real() / base.dim;
    if (weight < 1e-14) {
      continue;
    }
    const CMatrix candidate = op / std::sqrt(weight);
    if (is_unitary(candidate, 1e-8)) {
      branches.emplace_back(weight, candidate);
    }
  }
  if (branches.empty()) {
    return std::nullopt;
  }
  std::stable_sort(branches.begin(), branches.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  if (branches.size() == 1) {
    return TwoUnitaryChannel(branches[0].second, branches[0].second, 0.0);
  }
  const double w1 = branches[0].first;
  const double w2 = branches[1].first;
  return TwoUnitaryChannel(branches[0].second, branches[1].second,
                           w2 / (w1 + w2));
}

// Zero-iteration candidate state built from the analytic protocol, appended
// after the optimizer restarts in the ea arm. The protocol is built from the
// channel's best two-unitary reading and scored against the true channel, so
// the candidate only wins the row when that reading actually pays off.
std::optional<OptState> teleport_candidate(const SweepSpec& spec, double p,
                                           const ScenarioSetup& setup) {
  if (spec.layout.d_dat != 2 || spec.layout.d_enc != 2 ||
      spec.layout.d_rec != 2) {
    return std::nullopt;
  }
  const KrausChannel base = make_preset(spec.channel, p);
  const std::optional<TwoUnitaryChannel> two = best_two_unitary(base);
  if (!two.has_value()) {
    return std::nullopt;
  }
  const TeleportProtocol protocol = build_protocol(*two, setup.layout);
  OptState state;
  state.c_prime = protocol.pair_operation();
  state.r_stack = protocol.recovery_stack();
  const CMatrix i_rec =
      CMatrix::Identity(setup.layout.d_rec, setup.layout.d_rec);
  const CMatrix c_full = kron(state.c_prime, i_rec);
  const RefitResult refit = refit_delta(state.r_stack, setup.channel, c_full,
                                        setup.u, setup.target.matrix);
  state.delta = refit.delta;
  const double dist =
      distance_delta(state.r_stack, setup.channel, c_full, setup.u,
                     state.delta, setup.target.matrix);
  state.delta_history = {dist};
  state.fidelity_history = {fidelity_full(state.r_stack, setup.channel, c_full,
                                          setup.u, setup.target.matrix,
                                          FidelityNormalization::normalized)};
  state.iteration = 0;
  state.converged = true;
  state.restart_index = spec.config.restarts;
  return state;
}

SweepPoint compute_point(const SweepSpec& spec, std::size_t p_index,
                         Scenario scenario) {
  const double p = spec.p_values[p_index];
  SweepPoint point;
  point.p = p;
  point.scenario = scenario;
  SweepRow row;
  row.p = p;
  row.scenario = scenario;
  row.seed = row_seed(spec.config.seed, p_index, scenario);

  const ScenarioSetup setup = scenario_setup(spec, p, scenario);

  if (scenario == Scenario::unprotected) {
    // Bare transmission: identity encoding and recovery, no optimization.
    const CMatrix i2 = CMatrix::Identity(2, 2);
    row.fidelity_data = fidelity_data(i2, setup.channel, i2, i2, setup.layout,
                                      OutputFactor::data, i2);
    row.fidelity_norm = fidelity_full(i2, setup.channel, i2, i2, i2,
                                      FidelityNormalization::normalized);
    const RefitResult refit = refit_delta(i2, setup.channel, i2, i2, i2);
    row.delta = distance_delta(i2, setup.channel, i2, i2, refit.delta, i2);
    row.iterations = 0;
    row.restart = 0;
    row.converged = true;
    point.row = row;
    return point;
  }

  OptimizerConfig config = spec.config;
  config.seed = row.seed;
  AlternateOutcome outcome = alternate_full(setup.channel, setup.layout,
                                            setup.target, setup.u, config);
  point.states = std::move(outcome.restarts);
  if (scenario == Scenario::ea && spec.protocol_seed) {
    if (auto candidate = teleport_candidate(spec, p, setup)) {
      point.states.push_back(std::move(*candidate));
    }
  }

  int best = 0;
  double best_fid = -1.0;
  std::vector<double> fids(point.states.size());
  for (std::size_t i = 0; i < point.states.size(); ++i) {
    fids[i] = state_fidelity_data(point.states[i], setup);
    if (fids[i] > best_fid + 1e-12) {
      best = static_cast<int>(i);
      best_fid = fids[i];
    }
  }
  point.selected = best;
  const OptState& chosen = point.states[best];
  row.fidelity_data = best_fid;
  row.fidelity_norm = chosen.fidelity_history.back();
  row.delta = chosen.delta_history.back();
  row.iterations = chosen.iteration;
  row.restart = chosen.restart_index;
  row.converged = chosen.converged;
  point.row = row;
  return point;
}

void write_output(const std::string& path, const std::string& body) {
  if (path.empty()) {
    std::cout << body;
    return;
  }
  std::ofstream out(path);
  if (!out) {
    throw UsageError("out: cannot write file '" + path + "'");
  }
  out << body;
  if (!out) {
    throw UsageError("out: failed while writing '" + path + "'");
  }
}

}  // namespace

const char* scenario_name(Scenario scenario) {
  switch (scenario) {
    case Scenario::unprotected:
      return "unprotected";
    case Scenario::standard:
      return "standard";
    case Scenario::ea:
      return "ea";
  }
  return "unknown";
}

void SweepSpec::validate() const {
  if (!is_preset(channel)) {
    throw UsageError(
        "channel: sweeps require a preset channel family (identity, bit-flip, "
        "bit-phase-flip, depolarizing), got '" +
        channel + "'");
  }
  if (p_values.empty()) {
    throw UsageError("p: provide at least one probability (--p or --p-grid)");
  }
  for (double p : p_values) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      throw UsageError("p: probabilities must lie in [0, 1]");
    }
  }
  if (scenarios.empty()) {
    throw UsageError("scenarios: at least one scenario required");
  }
  if (jobs < 0) {
    throw UsageError("jobs: must be non-negative");
  }
  config.validate();
}

std::uint64_t row_seed(std::uint64_t base_seed, std::size_t p_index,
                       Scenario scenario) {
  std::uint64_t h = splitmix64(base_seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(p_index));
  h = splitmix64(h ^ (static_cast<std::uint64_t>(scenario) + 0x51ULL));
  return h;
}

std::vector<SweepPoint> run_sweep_points(const SweepSpec& spec) {
  spec.validate();
  struct Task {
    std::size_t p_index;
    Scenario scenario;
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < spec.p_values.size(); ++i) {
    for (Scenario scenario : spec.scenarios) {
      tasks.push_back(Task{i, scenario});
    }
  }
  std::vector<SweepPoint> points(tasks.size());

  int jobs = spec.jobs > 0
                 ? spec.jobs
                 : static_cast<int>(std::thread::hardware_concurrency());
  jobs = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));

  std::atomic<std::size_t> cursor{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  const auto worker = [&]() {
    for (;;) {
      const std::size_t index = cursor.fetch_add(1);
      if (index >= tasks.size()) {
        return;
      }
      try {
        points[index] =
            compute_point(spec, tasks[index].p_index, tasks[index].scenario);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) {
          error = std::current_exception();
        }
      }
    }
  };

  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(jobs);
    for (int t = 0; t < jobs; ++t) {
      threads.emplace_back(worker);
    }
    for (std::thread& t : threads) {
      t.join();
    }
  }
  if (error) {
    std::rethrow_exception(error);
  }

  std::stable_sort(points.begin(), points.end(),
                   [](const SweepPoint& a, const SweepPoint& b) {
                     if (a.p != b.p) {
                       return a.p < b.p;
                     }
                     return std::string(scenario_name(a.scenario)) <
                            std::string(scenario_name(b.scenario));
                   });
  return points;
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
  const std::vector<SweepPoint> points = run_sweep_points(spec);
  std::vector<SweepRow> rows;
  rows.reserve(points.size());
  for (const SweepPoint& point : points) {
    rows.push_back(point.row);
  }
  return rows;
}

std::string rows_to_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "p,scenario,fidelity_data,fidelity_norm,delta,iterations,restart,"
         "converged,seed\n";
  for (const SweepRow& row : rows) {
    out << format_double(row.p) << ',' << scenario_name(row.scenario) << ','
        << format_double(row.fidelity_data) << ','
        << format_double(row.fidelity_norm) << ',' << format_double(row.delta)
        << ',' << row.iterations << ',' << row.restart << ','
        << (row.converged ? "true" : "false") << ',' << row.seed << '\n';
  }
  return out.str();
}

std::string rows_to_json(const std::vector<SweepRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const SweepRow& row : rows) {
    out.push_back({{"p", row.p},
                   {"scenario", scenario_name(row.scenario)},
                   {"fidelity_data", row.fidelity_data},
                   {"fidelity_norm", row.fidelity_norm},
                   {"delta", row.delta},
                   {"iterations", row.iterations},
                   {"restart", row.restart},
                   {"converged", row.converged},
                   {"seed", row.seed}});
  }
  return out.dump(2) + "\n";
}

namespace {

struct OptimizeArgs {
  std::string channel = "bit-flip";
  double p = 0.0;
  std::string layout = "2,2,2";
  std::string target = "identity";
  std::string entangle = "on";
  int restarts = 10;
  std::uint64_t seed = 0;
  double tol = 1e-9;
  int max_iters = 500;
  std::string out;
};

int cmd_optimize(const OptimizeArgs& args) {
  const SystemLayout layout = parse_layout(args.layout);
  if (args.entangle != "on" && args.entangle != "off") {
    throw UsageError("entangle: expected on or off, got '" + args.entangle +
                     "'");
  }
  OptimizerConfig config;
  config.restarts = args.restarts;
  config.seed = args.seed;
  config.tol_outer = args.tol;
  config.max_outer_iters = args.max_iters;
  config.validate();

  const KrausChannel channel = resolve_channel(args.channel, args.p, layout);
  const CMatrix u = args.entangle == "on"
                        ? entangler(layout)
                        : CMatrix(CMatrix::Identity(layout.dim(), layout.dim()));
  const TargetSpec target = parse_target(args.target, layout);

  const AlternateOutcome outcome =
      alternate_full(channel, layout, target, u, config);
  const OptState& best = outcome.best;
  const CMatrix i_rec = CMatrix::Identity(layout.d_rec, layout.d_rec);
  const CMatrix c_full = kron(best.c_prime, i_rec);

  std::cout << "channel: " << (channel.name.empty() ? args.channel : channel.name)
            << "\nlayout: " << layout.d_dat << "," << layout.d_enc << ","
            << layout.d_rec << "\ndelta history:";
  for (double d : best.delta_history) {
    std::cout << ' ' << format_double(d);
  }
  std::cout << "\ndelta: " << format_double(best.delta_history.back())
            << "\nfidelity_norm: "
            << format_double(fidelity_full(best.r_stack, channel, c_full, u,
                                           target.matrix,
                                           FidelityNormalization::normalized));
  if (target.kind != TargetKind::custom) {
    const OutputFactor factor = target.kind == TargetKind::identity
                                    ? OutputFactor::data
                                    : OutputFactor::recovery;
    const CMatrix i_dat = CMatrix::Identity(layout.d_dat, layout.d_dat);
    std::cout << "\nfidelity_data: "
              << format_double(fidelity_data(best.r_stack, channel, c_full, u,
                                             layout, factor, i_dat));
  }
  const double c_residual =
      (best.c_prime.adjoint() * best.c_prime -
       CMatrix::Identity(layout.d_code(), layout.d_code()))
          .cwiseAbs()
          .maxCoeff();
  const double r_residual =
      (best.r_stack.adjoint() * best.r_stack -
       CMatrix::Identity(layout.dim(), layout.dim()))
          .cwiseAbs()
          .maxCoeff();
  const double delta_residual =
      std::abs(best.delta.entries.squaredNorm() - 1.0);
  std::cout << "\nresidual encoding: " << format_double(c_residual)
            << "\nresidual recovery: " << format_double(r_residual)
            << "\nresidual delta norm: " << format_double(delta_residual)
            << "\niterations: " << best.iteration
            << "\nrestart: " << best.restart_index << "\nconverged: "
            << (best.converged ? "true" : "false") << "\n";

  if (!args.out.empty()) {
    write_output(args.out, best.to_json() + "\n");
  }
  return best.converged ? kExitOk : kExitNoConverge;
}

struct SweepArgs {
  std::string channel = "bit-flip";
  double p = -1.0;
  std::string p_grid;
  std::string scenarios = "unprotected,standard,ea";
  std::string layout = "2,2,2";
  int restarts = 10;
  std::uint64_t seed = 0;
  double tol = 1e-9;
  int max_iters = 500;
  int jobs = 0;
  std::string protocol_seed = "on";
  std::string out;
  std::string format = "csv";
};

int cmd_sweep(const SweepArgs& args) {
  SweepSpec spec;
  spec.channel = args.channel;
  if (!args.p_grid.empty()) {
    spec.p_values = parse_p_grid(args.p_grid);
  } else if (args.p >= 0.0) {
    spec.p_values = {args.p};
  } else {
    throw UsageError("p: provide --p or --p-grid");
  }
  spec.scenarios = parse_scenarios(args.scenarios);
  spec.layout = parse_layout(args.layout);
  spec.config.restarts = args.restarts;
  spec.config.seed = args.seed;
  spec.config.tol_outer = args.tol;
  spec.config.max_outer_iters = args.max_iters;
  spec.jobs = args.jobs;
  if (args.protocol_seed != "on" && args.protocol_seed != "off") {
    throw UsageError("protocol-seed: expected on or off, got '" +
                     args.protocol_seed + "'");
  }
  spec.protocol_seed = args.protocol_seed == "on";
  if (args.format != "csv" && args.format != "json") {
    throw UsageError("format: expected csv or json, got '" + args.format + "'");
  }

  const std::vector<SweepRow> rows = run_sweep(spec);
  write_output(args.out,
               args.format == "csv" ? rows_to_csv(rows) : rows_to_json(rows));
  const bool all_converged =
      std::all_of(rows.begin(), rows.end(),
                  [](const SweepRow& row) { return row.converged; });
  return all_converged ? kExitOk : kExitNoConverge;
}

struct TeleportArgs {
  std::string channel = "bit-flip";
  double p = 0.0;
  bool circuit = false;
};

int cmd_teleport(const TeleportArgs& args) {
  const SystemLayout layout(2, 2, 2);
  std::optional<TwoUnitaryChannel> two;
  std::optional<KrausChannel> noise;
  std::string label = args.channel;

  if (is_preset(args.channel)) {
    const KrausChannel base = make_preset(args.channel, args.p);
    label = base.name.empty() ? args.channel : base.name;
    two = best_two_unitary(base);
    noise = lift_iid(base, layout);
  } else {
    const nlohmann::json j = [&] {
      try {
        return nlohmann::json::parse(read_file(args.channel, "channel"));
      } catch (const UsageError&) {
        throw;
      } catch (const std::exception& e) {
        throw UsageError(std::string("channel: ") + e.what());
      }
    }();
    if (j.contains("v1")) {
      try {
        const CMatrix v1 = parse_matrix_json(
            nlohmann::json{{"rows", j.at("dim")},
                           {"cols", j.at("dim")},
                           {"entries", j.at("v1")}},
            "channel");
        const CMatrix v2 = parse_matrix_json(
            nlohmann::json{{"rows", j.at("dim")},
                           {"cols", j.at("dim")},
                           {"entries", j.at("v2")}},
            "channel");
        two = TwoUnitaryChannel(v1, v2, j.at("p").get<double>());
      } catch (const UsageError&) {
        throw;
      } catch (const std::exception& e) {
        throw UsageError(std::string("channel: ") + e.what());
      }
      noise = noise_on_full_space(*two, layout);
    } else {
      const KrausChannel base = [&] {
        try {
          return channel_from_json(j.dump());
        } catch (const std::exception& e) {
          throw UsageError(std::string("channel: ") + e.what());
        }
      }();
      label = base.name.empty() ? label : base.name;
      if (base.dim == 2) {
        noise = lift_iid(base, layout);
      } else if (base.dim == 4) {
        std::vector<CMatrix> ops;
        for (const CMatrix& op : base.kraus) {
          ops.push_back(kron(op, CMatrix::Identity(2, 2)));
        }
        noise = KrausChannel(layout.dim(), std::move(ops));
      } else {
        throw UsageError(
            "channel: teleport needs a channel on one or both transmitted "
            "qubits (dimension 2 or 4)");
      }
      two = best_two_unitary(base);
    }
  }

  if (!two.has_value()) {
    std::cout << "channel: " << label
              << "\nno unitary branches found; protocol not built\nfidelity: 0\n";
    std::cerr << "verification failed: channel is not a mixture of two "
                 "unitaries\n";
    return kExitVerifyFail;
  }

  const TeleportProtocol protocol = build_protocol(*two, layout);
  const double fidelity = verify_protocol(protocol, *noise);
  std::cout << "channel: " << label << "\nfidelity: " << format_double(fidelity)
            << "\n";
  if (args.circuit) {
    std::cout << circuit_text(protocol);
  }
  if (fidelity >= 1.0 - 1e-9) {
    return kExitOk;
  }
  std::cerr << "verification failed: best fidelity "
            << format_double(fidelity) << "\n";
  return kExitVerifyFail;
}

struct OracleArgs {
  int trials = 100;
  std::uint64_t seed = 0;
  double grid_resolution = 0.005;
  std::string channel = "bit-flip";
  double p = 0.19;
  std::string out;
};

int cmd_oracle(const OracleArgs& args) {
  if (!is_preset(args.channel)) {
    throw UsageError("channel: oracle cross-check needs a preset, got '" +
                     args.channel + "'");
  }
  std::mt19937_64 rng(args.seed);
  const std::vector<GradCheckReport> reports =
      check_trace_gradients(rng, args.trials);
  bool all_passed = std::all_of(
      reports.begin(), reports.end(),
      [](const GradCheckReport& report) { return report.passed; });

  const KrausChannel base = make_preset(args.channel, args.p);
  const OptimizerConfig config;
  const GammaSolution solver = solve_gamma(base, config);
  const GammaGridResult grid = gamma_grid_search(base, args.grid_resolution);
  const double gap = std::abs(solver.objective - grid.objective);
  const bool grid_passed = gap <= 1e-3;
  all_passed = all_passed && grid_passed;

  nlohmann::json out;
  out["gradient_checks"] = nlohmann::json::parse(reports_to_json(reports));
  out["gamma_cross_check"] = {{"channel", args.channel},
                              {"p", args.p},
                              {"resolution", args.grid_resolution},
                              {"solver_objective", solver.objective},
                              {"grid_objective", grid.objective},
                              {"gap", gap},
                              {"passed", grid_passed}};
  out["passed"] = all_passed;
  write_output(args.out, out.dump(2) + "\n");
  return all_passed ? kExitOk : kExitVerifyFail;
}

struct ValidateArgs {
  std::string channel;
  double p = 0.0;
};

int cmd_validate(const ValidateArgs& args) {
  if (args.channel.empty()) {
    throw UsageError("channel: provide a preset name or a JSON file path");
  }
  const KrausChannel channel = [&] {
    if (is_preset(args.channel)) {
      return make_preset(args.channel, args.p);
    }
    try {
      return channel_from_json(read_file(args.channel, "channel"));
    } catch (const UsageError&) {
      throw;
    } catch (const std::exception& e) {
      throw UsageError(std::string("channel: ") + e.what());
    }
  }();
  std::cout << "name: " << (channel.name.empty() ? "(unnamed)" : channel.name)
            << "\ndim: " << channel.dim << "\nkraus operators: " << channel.m()
            << "\ntrace preservation defect: "
            << format_double(channel.tp_defect()) << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Entanglement-assisted error correction toolkit"};
  app.require_subcommand(1);

  OptimizeArgs optimize_args;
  CLI::App* optimize =
      app.add_subcommand("optimize", "Run the alternating optimizer once");
  optimize->add_option("--channel", optimize_args.channel,
                       "Channel preset or JSON path");
  optimize->add_option("--p", optimize_args.p, "Channel parameter");
  optimize->add_option("--layout", optimize_args.layout,
                       "d_dat,d_enc,d_rec dimensions");
  optimize->add_option("--target", optimize_args.target,
                       "identity, swap, or a matrix JSON path");
  optimize->add_option("--entangle", optimize_args.entangle,
                       "Apply the entangler (on|off)");
  optimize->add_option("--restarts", optimize_args.restarts, "Restart count");
  optimize->add_option("--seed", optimize_args.seed, "Random seed");
  optimize->add_option("--tol", optimize_args.tol, "Convergence tolerance");
  optimize->add_option("--max-iters", optimize_args.max_iters,
                       "Outer iteration cap");
  optimize->add_option("--out", optimize_args.out,
                       "Write the final state as JSON");

  SweepArgs sweep_args;
  CLI::App* sweep =
      app.add_subcommand("sweep", "Sweep a channel family over p");
  sweep->add_option("--channel", sweep_args.channel, "Channel preset");
  sweep->add_option("--p", sweep_args.p, "Single probability");
  sweep->add_option("--p-grid", sweep_args.p_grid, "start:stop:step");
  sweep->add_option("--scenarios", sweep_args.scenarios,
                    "Comma list of unprotected,standard,ea");
  sweep->add_option("--layout", sweep_args.layout,
                    "d_dat,d_enc,d_rec dimensions");
  sweep->add_option("--restarts", sweep_args.restarts, "Restart count");
  sweep->add_option("--seed", sweep_args.seed, "Random seed");
  sweep->add_option("--tol", sweep_args.tol, "Convergence tolerance");
  sweep->add_option("--max-iters", sweep_args.max_iters, "Outer iteration cap");
  sweep->add_option("--jobs", sweep_args.jobs,
                    "Worker threads (0 = hardware)");
  sweep->add_option("--protocol-seed", sweep_args.protocol_seed,
                    "Append the analytic-protocol candidate in the ea arm "
                    "(on|off)");
  sweep->add_option("--out", sweep_args.out, "Output path (default stdout)");
  sweep->add_option("--format", sweep_args.format, "csv or json");

  TeleportArgs teleport_args;
  CLI::App* teleport =
      app.add_subcommand("teleport", "Build and verify the analytic protocol");
  teleport->add_option("--channel", teleport_args.channel,
                       "Channel preset or JSON path");
  teleport->add_option("--p", teleport_args.p, "Channel parameter");
  teleport->add_flag("--circuit", teleport_args.circuit,
                     "Print the gate list");

  OracleArgs oracle_args;
  CLI::App* oracle =
      app.add_subcommand("oracle", "Run the verification oracles");
  oracle->add_option("--trials", oracle_args.trials,
                     "Gradient check trials per identity");
  oracle->add_option("--seed", oracle_args.seed, "Random seed");
  oracle->add_option("--grid-resolution", oracle_args.grid_resolution,
                     "Bloch grid step for the cross-check");
  oracle->add_option("--channel", oracle_args.channel,
                     "Preset for the cross-check");
  oracle->add_option("--p", oracle_args.p, "Channel parameter");
  oracle->add_option("--out", oracle_args.out, "Output path (default stdout)");

  ValidateArgs validate_args;
  CLI::App* validate =
      app.add_subcommand("validate", "Lint a channel JSON file or preset");
  validate->add_option("--channel", validate_args.channel,
                       "Channel preset or JSON path");
  validate->add_option("--p", validate_args.p, "Channel parameter");

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("eaqec");
  for (const std::string& arg : args) {
    argv.push_back(arg.c_str());
  }

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (app.got_subcommand(optimize)) {
      return cmd_optimize(optimize_args);
    }
    if (app.got_subcommand(sweep)) {
      return cmd_sweep(sweep_args);
    }
    if (app.got_subcommand(teleport)) {
      return cmd_teleport(teleport_args);
    }
    if (app.got_subcommand(oracle)) {
      return cmd_oracle(oracle_args);
    }
    if (app.got_subcommand(validate)) {
      return cmd_validate(validate_args);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  std::cerr << "error: no subcommand given\n";
  return kExitUsage;
}

}  // namespace eaqec
