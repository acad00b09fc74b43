#include "bvsmp/sde_engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "bvsmp/csv.hpp"
#include "bvsmp/parallel.hpp"

namespace bvsmp {

TimeGrid::TimeGrid(double horizon, int n_steps) : T(horizon), steps(n_steps) {
  if (!(horizon > 0)) throw ConfigError("time horizon T must be positive");
  if (n_steps < 1) throw ConfigError("grid needs at least one step");
}

TimeGrid TimeGrid::from_dt(double horizon, double dt) {
  if (!(dt > 0)) throw ConfigError("dt must be positive");
  if (!(dt < horizon)) throw ConfigError("dt must be smaller than T");
  return TimeGrid(horizon, std::max(1, static_cast<int>(std::lround(horizon / dt))));
}

int TimeGrid::node_of(double time) const {
  const long k = std::lround(time / dt());
  return static_cast<int>(std::clamp<long>(k, 0, steps));
}

double ControlPolicy::eval(double t, double x, const AuxState& aux) const {
  switch (kind) {
    case PolicyKind::constant:
      return value;
    case PolicyKind::corridor:
      return std::abs(x) > rho ? 1.0 : 0.0;
    case PolicyKind::neg_corridor:
      return std::abs(x) > rho ? -1.0 : 0.0;
    case PolicyKind::rational_x:
      return x / (1.0 + x * x);
    case PolicyKind::rational_1:
      return 1.0 / (1.0 + x * x);
    case PolicyKind::sign_pos:
      return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0);
    case PolicyKind::sign_neg:
      return x > 0 ? -1.0 : (x < 0 ? 1.0 : 0.0);
    case PolicyKind::bm_functional:
      return aux.integral;
    case PolicyKind::feedback:
      return std::clamp(law(t, x), -1.0, 1.0);
  }
  return 0.0;
}

void ControlPolicy::advance(AuxState& aux, double t, double dB, double dt) const {
  if (kind != PolicyKind::bm_functional) return;
  const double density = std::exp(-t) / (1.0 + aux.brownian * aux.brownian);
  aux.integral = aux.integral + density * dt;
  aux.brownian = aux.brownian + dB;
}

std::optional<KernelPolicy> ControlPolicy::kernel_policy() const {
  switch (kind) {
    case PolicyKind::constant:
      return KernelPolicy::constant;
    case PolicyKind::corridor:
      return KernelPolicy::corridor;
    case PolicyKind::neg_corridor:
      return KernelPolicy::neg_corridor;
    case PolicyKind::rational_x:
      return KernelPolicy::rational_x;
    case PolicyKind::rational_1:
      return KernelPolicy::rational_1;
    case PolicyKind::sign_pos:
      return KernelPolicy::sign_pos;
    case PolicyKind::sign_neg:
      return KernelPolicy::sign_neg;
    case PolicyKind::bm_functional:
      return KernelPolicy::bm_functional;
    case PolicyKind::feedback:
      return std::nullopt;
  }
  return std::nullopt;
}

ControlPolicy ControlPolicy::constant(double a, std::string id) {
  if (!(a >= -1.0 && a <= 1.0)) throw ConfigError("constant control must lie in [-1, 1]");
  ControlPolicy p;
  p.kind = PolicyKind::constant;
  p.value = a;
  p.id = id.empty() ? "constant_" + format_double(a) : std::move(id);
  return p;
}

ControlPolicy ControlPolicy::corridor(double rho, std::string id) {
  ControlPolicy p;
  p.kind = PolicyKind::corridor;
  p.rho = rho;
  p.id = std::move(id);
  return p;
}

ControlPolicy ControlPolicy::neg_corridor(double rho, std::string id) {
  ControlPolicy p;
  p.kind = PolicyKind::neg_corridor;
  p.rho = rho;
  p.id = std::move(id);
  return p;
}

namespace {
ControlPolicy simple(PolicyKind kind, const char* id) {
  ControlPolicy p;
  p.kind = kind;
  p.id = id;
  return p;
}
}  // namespace

ControlPolicy ControlPolicy::rational_x() { return simple(PolicyKind::rational_x, "rational_x"); }
ControlPolicy ControlPolicy::rational_1() { return simple(PolicyKind::rational_1, "rational_1"); }
ControlPolicy ControlPolicy::sign_pos() { return simple(PolicyKind::sign_pos, "sign_pos"); }
ControlPolicy ControlPolicy::sign_neg() { return simple(PolicyKind::sign_neg, "sign_neg"); }
ControlPolicy ControlPolicy::bm_functional() {
  return simple(PolicyKind::bm_functional, "bm_functional");
}

ControlPolicy ControlPolicy::feedback(std::function<double(double, double)> law, std::string id) {
  ControlPolicy p;
  p.kind = PolicyKind::feedback;
  p.law = std::move(law);
  p.id = std::move(id);
  return p;
}

void simulate_path(const DriftSpec& spec, const ControlPolicy& policy, const TimeGrid& grid,
                   NoiseKey key, std::uint64_t path_id, int start_step, double x_start,
                   AuxState aux, double noise_sign, std::span<double> states,
                   std::span<double> increments, std::span<double> controls) {
  const int n_steps = grid.steps - start_step;
  if (n_steps < 0) throw std::invalid_argument("start step beyond the grid");
  if (states.size() < static_cast<std::size_t>(n_steps + 1) ||
      increments.size() < static_cast<std::size_t>(n_steps) ||
      controls.size() < static_cast<std::size_t>(n_steps + 1)) {
    throw std::invalid_argument("simulate_path: buffers too small");
  }
  const double dt = grid.dt();
  const double sqrt_dt = std::sqrt(dt);
  fill_standard_normals(key, path_id, static_cast<std::uint64_t>(start_step),
                        increments.first(static_cast<std::size_t>(n_steps)));

  double x = x_start;
  states[0] = x;
  for (int j = 0; j < n_steps; ++j) {
    const int k = start_step + j;
    const double t = grid.t(k);
    const double a = policy.eval(t, x, aux);
    const double db = sqrt_dt * increments[j] * noise_sign;
    increments[j] = db;
    controls[j] = a;
    const double drift = spec.b1.eval(t, x) + spec.b2.eval(x) * spec.b3.eval(t, a);
    policy.advance(aux, t, db, dt);
    x = x + drift * dt + spec.sigma * db;
    if (!std::isfinite(x)) {
      throw std::runtime_error("non-finite state on path " + std::to_string(path_id) +
                               " at step " + std::to_string(k));
    }
    states[j + 1] = x;
  }
  controls[n_steps] = policy.eval(grid.T, x, aux);
}

namespace {
constexpr std::size_t kPathBlock = 64;
}

PathEnsemble simulate(const DriftSpec& spec, const ControlPolicy& policy, const TimeGrid& grid,
                      std::size_t n_paths, std::uint64_t seed, const SimulationOptions& opts) {
  if (n_paths < 1) throw ConfigError("n_paths must be >= 1");
  PathEnsemble e;
  e.grid = grid;
  e.n_paths = n_paths;
  e.seed = seed;
  e.options = opts;
  e.policy_id = policy.id;
  const std::size_t nodes = grid.nodes();
  const std::size_t steps = grid.steps;
  e.states.assign(n_paths * nodes, 0.0);
  e.increments.assign(n_paths * steps, 0.0);
  e.controls.assign(n_paths * nodes, 0.0);
  const NoiseKey key{seed, opts.stream};
  parallel_for_blocks(n_paths, kPathBlock, opts.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      simulate_path(spec, policy, grid, key, opts.first_path + p, 0, opts.x0, AuxState{},
                    opts.noise_sign, {e.states.data() + p * nodes, nodes},
                    {e.increments.data() + p * steps, steps},
                    {e.controls.data() + p * nodes, nodes});
    }
  });
  return e;
}

std::vector<double> reconstruct_states(const DriftSpec& spec, const PathEnsemble& e) {
  const int steps = e.grid.steps;
  const double dt = e.grid.dt();
  std::vector<double> out(e.states.size());
  for (std::size_t p = 0; p < e.n_paths; ++p) {
    double x = e.x0();
    out[p * e.grid.nodes()] = x;
    for (int k = 0; k < steps; ++k) {
      const double t = e.grid.t(k);
      const double a = e.control(p, k);
      const double drift = spec.b1.eval(t, x) + spec.b2.eval(x) * spec.b3.eval(t, a);
      x = x + drift * dt + spec.sigma * e.increment(p, k);
      out[p * e.grid.nodes() + k + 1] = x;
    }
  }
  return out;
}

std::vector<PathEnsemble> simulate_paired(const DriftSpec& spec,
                                          const std::vector<ControlPolicy>& policies,
                                          const TimeGrid& grid, std::size_t n_paths,
                                          std::uint64_t seed, const SimulationOptions& opts) {
  if (policies.size() < 2) throw ConfigError("paired simulation needs at least two policies");
  std::vector<PathEnsemble> out;
  out.reserve(policies.size());
  for (const auto& pol : policies) out.push_back(simulate(spec, pol, grid, n_paths, seed, opts));
  return out;
}

SampleStats sample_stats(std::span<const double> v) {
  SampleStats s;
  s.n = v.size();
  if (v.empty()) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std_dev = std::sqrt(ss / static_cast<double>(v.size() - 1));
    s.std_error = s.std_dev / std::sqrt(static_cast<double>(v.size()));
  }
  return s;
}

SampleStats paired_difference(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("paired samples differ in size");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return sample_stats(d);
}

CostReport evaluate_cost(const PathEnsemble& e, const RunningCost& f, const TerminalCost& g) {
  CostReport r;
  r.n_paths = e.n_paths;
  r.policy_id = e.policy_id;
  r.seed = e.seed;
  r.per_path.resize(e.n_paths);
  const double dt = e.grid.dt();
  for (std::size_t p = 0; p < e.n_paths; ++p) {
    double running = 0.0;
    if (f) {
      for (int k = 0; k < e.grid.steps; ++k) {
        const double a = e.control(p, k);
        running += 0.5 * dt *
                   (f(e.grid.t(k), e.state(p, k), a) + f(e.grid.t(k + 1), e.state(p, k + 1), a));
      }
    }
    r.per_path[p] = running + (g ? g(e.state(p, e.grid.steps)) : 0.0);
  }
  const auto s = sample_stats(r.per_path);
  r.mean = s.mean;
  r.std_error = s.std_error;
  return r;
}

FlowDifference flow_difference(const DriftSpec& spec, const ControlPolicy& policy,
                               const TimeGrid& grid, double x1, double x2, std::size_t n_paths,
                               std::uint64_t seed, int threads) {
  if (n_paths < 1) throw ConfigError("n_paths must be >= 1");
  std::vector<double> sup(n_paths, 0.0);
  const std::size_t nodes = grid.nodes();
  const NoiseKey key{seed, 0};
  parallel_for_blocks(n_paths, kPathBlock, threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> s1(nodes), s2(nodes), inc(grid.steps), ctl(nodes);
    for (std::size_t p = begin; p < end; ++p) {
      simulate_path(spec, policy, grid, key, p, 0, x1, AuxState{}, 1.0, s1, inc, ctl);
      simulate_path(spec, policy, grid, key, p, 0, x2, AuxState{}, 1.0, s2, inc, ctl);
      double m = 0.0;
      for (std::size_t k = 0; k < nodes; ++k) m = std::max(m, std::abs(s1[k] - s2[k]));
      sup[p] = m;
    }
  });
  FlowDifference fd;
  fd.n_paths = n_paths;
  for (int i = 0; i < 3; ++i) {
    std::vector<double> v(n_paths);
    for (std::size_t p = 0; p < n_paths; ++p) v[p] = std::pow(sup[p], fd.powers[i]);
    const auto s = sample_stats(v);
    fd.mean[i] = s.mean;
    fd.std_error[i] = s.std_error;
  }
  return fd;
}

void write_ensemble_csv(const PathEnsemble& e, std::ostream& os) {
  CsvWriter w(os, {"path_id", "t", "X", "alpha"});
  for (std::size_t p = 0; p < e.n_paths; ++p) {
    for (int k = 0; k <= e.grid.steps; ++k) {
      w.field(static_cast<unsigned long long>(e.options.first_path + p))
          .field(e.grid.t(k))
          .field(e.state(p, k))
          .field(e.control(p, k));
      w.end_row();
    }
  }
}

namespace {

constexpr char kMagic[8] = {'B', 'V', 'S', 'M', 'P', 'E', 'N', 'S'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw std::runtime_error("truncated ensemble cache");
  return v;
}

void put_array(std::ostream& os, const std::vector<double>& v) {
  put<std::uint64_t>(os, v.size());
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> get_array(std::istream& is) {
  const auto n = get<std::uint64_t>(is);
  std::vector<double> v(n);
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) throw std::runtime_error("truncated ensemble cache");
  return v;
}

}  // namespace

// Little-endian host layout; caches are not meant to move between machines.
void write_ensemble_binary(const PathEnsemble& e, std::ostream& os) {
  os.write(kMagic, sizeof kMagic);
  put(os, kVersion);
  put(os, e.grid.T);
  put<std::int32_t>(os, e.grid.steps);
  put<std::uint64_t>(os, e.n_paths);
  put(os, e.seed);
  put(os, e.options.x0);
  put(os, e.options.stream);
  put(os, e.options.first_path);
  put(os, e.options.noise_sign);
  put<std::uint64_t>(os, e.policy_id.size());
  os.write(e.policy_id.data(), static_cast<std::streamsize>(e.policy_id.size()));
  put_array(os, e.states);
  put_array(os, e.increments);
  put_array(os, e.controls);
}

PathEnsemble read_ensemble_binary(std::istream& is) {
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw std::runtime_error("not an ensemble cache");
  }
  if (get<std::uint32_t>(is) != kVersion) throw std::runtime_error("unsupported cache version");
  PathEnsemble e;
  const double T = get<double>(is);
  const int steps = get<std::int32_t>(is);
  e.grid = TimeGrid(T, steps);
  e.n_paths = get<std::uint64_t>(is);
  e.seed = get<std::uint64_t>(is);
  e.options.x0 = get<double>(is);
  e.options.stream = get<std::uint32_t>(is);
  e.options.first_path = get<std::uint64_t>(is);
  e.options.noise_sign = get<double>(is);
  e.policy_id.resize(get<std::uint64_t>(is));
  is.read(e.policy_id.data(), static_cast<std::streamsize>(e.policy_id.size()));
  e.states = get_array(is);
  e.increments = get_array(is);
  e.controls = get_array(is);
  const std::size_t nodes = e.grid.nodes();
  if (e.states.size() != e.n_paths * nodes || e.controls.size() != e.n_paths * nodes ||
      e.increments.size() != e.n_paths * static_cast<std::size_t>(steps)) {
    throw std::runtime_error("ensemble cache has inconsistent sizes");
  }
  return e;
}

}  // namespace bvsmp
