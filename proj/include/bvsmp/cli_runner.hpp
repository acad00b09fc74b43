#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bvsmp/corridor_app.hpp"

namespace bvsmp {

/// Config text that cannot be turned into an ExperimentConfig. `field` names
/// the offending key as section.key.
class ConfigParseError : public std::runtime_error {
 public:
  ConfigParseError(std::string field, const std::string& message)
      : std::runtime_error(message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct LocalTimeConfig {
  std::size_t n_paths = 10000;
  double T = 5.0;
  double dt = 0.005;
  double bandwidth_c = 0.5;
  double kappa = 1.0;
};

struct VariationConfig {
  std::size_t n_paths = 4000;
  double T = 5.0;
  double dt = 0.005;
  double fd_h = 1e-3;
  double smooth_control = 0.7;
  double linear_rate = 0.2;  // b1(x) = c x for the exp(ct) check
};

struct MollifyConfig {
  std::vector<int> levels{10, 30, 100, 300};
  std::size_t n_paths = 10000;
  bool drop_b2 = false;
};

/// Drift family and policy for the `simulate` kind.
struct SpecConfig {
  std::string family = "corridor";  // corridor | zero | polynomial
  std::vector<double> b1_coeffs{0.0, 0.5};
  double b1_scale = 2.0;
  std::vector<double> b2_coeffs{0.0, -0.4};
  double b2_scale = 1.5;
  std::string policy = "opt_corridor";
  std::size_t n_paths = 16;
};

struct ExperimentConfig {
  std::string kind = "figure1";
  std::uint64_t seed = 20240601;
  int threads = 1;
  std::string output_dir = "out";

  CorridorParams corridor;
  std::vector<std::string> figure1_policies;  // empty: whole catalog
  std::vector<double> rho_grid = default_rho_grid();
  SmpOptions smp;
  LocalTimeConfig localtime;
  VariationConfig variation;
  MollifyConfig mollify;
  SpecConfig spec;

  std::string source;  // config text as read
};

/// Experiment kinds understood by run_experiment.
const std::vector<std::string>& experiment_kinds();

/// INI text: sections [experiment], [corridor], [figure1], [figure2], [smp],
/// [localtime], [variation], [mollify], [spec]. Unknown sections, keys or
/// kinds and malformed values throw ConfigParseError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Every violated constraint, without running anything.
std::vector<std::string> validate(const ExperimentConfig& config);

struct RunResult {
  int exit_code = 0;
  std::vector<std::string> files;
  std::string error;
};

/// Runs the experiment into config.output_dir and writes manifest.json there,
/// also when the run fails.
RunResult run_experiment(const ExperimentConfig& config);

struct LocalTimeCheckRow {
  std::string test_id;
  double lhs = 0.0;
  double rhs = 0.0;
  double rel_err = 0.0;
};

/// Local-time integral identity (grid and integration by parts) for psi = 1 and psi = s,
/// E Lhat(T, 0) against sqrt(2T/pi) and the Tanaka residual.
std::vector<LocalTimeCheckRow> run_localtime_check(const LocalTimeConfig& cfg, std::uint64_t seed,
                                                   int threads);
void write_localtime_csv(const std::vector<LocalTimeCheckRow>& rows, std::ostream& os);

struct VariationCheckRow {
  std::string method_a;
  std::string method_b;
  double rel_err = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Ensemble-mean first variations compared pairwise at ten nodes (max
/// relative error): smooth polynomial spec (ODE, local time, FD; 5%),
/// corridor spec under alpha = 1 (local time, closed form, FD; 10%), and the
/// linear drift b1 = c x against exp(ct) (0.1%).
std::vector<VariationCheckRow> run_variation_check(const VariationConfig& cfg,
                                                   const CorridorParams& corridor,
                                                   std::uint64_t seed, int threads);
void write_variation_check_csv(const std::vector<VariationCheckRow>& rows, std::ostream& os);

/// `bvsmp run|validate ...`; returns the process exit code.
int cli_main(int argc, char** argv);

}  // namespace bvsmp
