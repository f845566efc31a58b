#pragma once

// End-to-end experiments shared by the command-line driver and the acceptance
// suite. Each run is a pure function of its configuration: it returns the
// files to write, a JSON summary and pass/fail verdicts.

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mfu/gsa.hpp"
#include "mfu/sampling.hpp"
#include "mfu/transport.hpp"

namespace mfu::experiments {

using Json = nlohmann::ordered_json;

enum class Kind {
  PolyInadequate,
  PolyHierarchical,
  TransportForward,
  TransportCalibrate,
  TransportRobustness,
  GsaGeneric,
  Dci,
};

std::string to_string(Kind k);
/// Throws ConfigError("experiment", ...) for unknown names.
Kind parse_kind(const std::string& s);

/// sum_t coef_t prod_j x_j^power_tj over named parameters.
struct PolynomialTerm {
  double coef = 1.0;
  std::vector<std::pair<std::string, double>> powers;
};

struct GroupSpec {
  std::string name;
  std::vector<std::string> members;
};

/// Typed access to configuration fields, used for parsing and for writing the
/// resolved configuration back out.
struct FieldVisitor {
  virtual ~FieldVisitor() = default;
  virtual void field(const char* name, double& v) = 0;
  virtual void field(const char* name, std::size_t& v) = 0;
  virtual void field(const char* name, bool& v) = 0;
  virtual void field(const char* name, std::vector<double>& v) = 0;
  virtual void field(const char* name, sampling::Density& v) = 0;
  virtual void field(const char* name, transport::DispersionOperator& v) = 0;
  virtual void field(const char* name, transport::TransportConfig& v) = 0;
  virtual void field(const char* name, transport::PhysicalParams& v) = 0;
  virtual void field(const char* name, std::vector<gsa::ParameterBlock>& v) = 0;
  virtual void field(const char* name, std::vector<GroupSpec>& v) = 0;
  virtual void field(const char* name, std::vector<PolynomialTerm>& v) = 0;
};

struct PolyInadequateConfig {
  std::size_t n_data = 100;
  double noise_sd = 0.05;
  std::size_t steps = 20000;
  sampling::Density c0 = sampling::Uniform{0.0, 2.0};
  sampling::Density c1 = sampling::Uniform{0.0, 5.0};
  std::size_t prior_draws = 10000;
  double check_x = 2.0;
  double lower_q = 0.025;
  double upper_q = 0.975;
  double max_coverage = 0.5;

  void visit(FieldVisitor& v);
  void validate() const;
};

struct PolyHierarchicalConfig {
  std::size_t n_data = 100;
  double noise_sd = 0.05;
  std::size_t steps = 100000;
  sampling::Density c0 = sampling::Uniform{0.0, 2.0};
  sampling::Density c1 = sampling::Uniform{0.0, 5.0};
  sampling::Density mu_c2 = sampling::Normal{-1.0, 0.5};
  sampling::Density sigma_c2 = sampling::Uniform{0.0, 0.1};
  sampling::Density mu_alpha = sampling::Normal{0.0, 0.5};
  sampling::Density sigma_alpha = sampling::Uniform{0.0, 0.1};
  std::size_t prior_draws = 10000;
  std::size_t prior_gsa_n = 10000;
  std::size_t x_points = 20;
  double check_x = 2.0;
  double lower_q = 0.025;
  double upper_q = 0.975;
  double min_coverage = 0.9;

  void visit(FieldVisitor& v);
  void validate() const;
};

/// Shared inputs X_v and fractional MFU inputs of the transport examples.
struct TransportInputs {
  sampling::Density u = sampling::Uniform{0.9, 1.1};
  sampling::Density nu_p = sampling::Uniform{0.008, 0.012};
  sampling::Density s = sampling::Uniform{0.2, 1.5};
  sampling::Density nu_m = sampling::Uniform{0.05, 0.15};
  sampling::Density alpha = sampling::TriangularUnitRange{1.0, 2.0, 1.5};

  void visit(FieldVisitor& v);
  void validate() const;
  std::vector<gsa::ParameterBlock> shared_blocks() const;
  std::vector<gsa::ParameterBlock> mfu_blocks() const;
  transport::PhysicalParams means() const;
};

struct TransportForwardConfig {
  transport::TransportConfig transport;
  TransportInputs inputs;
  std::size_t n_samples = 1000;
  std::size_t bins = 40;
  std::size_t gsa_n = 5000;
  std::size_t snapshots = 10;
  double snapshot_time = 1.0;

  void visit(FieldVisitor& v);
  void validate() const;
};

struct TransportCalibrateConfig {
  transport::TransportConfig transport;
  transport::PhysicalParams truth{1.05, 0.0095, 0.9};
  transport::DispersionOperator truth_operator = transport::ComplexFractional{0.2, 1.5, 0.15, 1.4};
  double truth_amplitude = 0.1;
  double truth_period = 32.0;
  double obs_x = 1.4;
  std::vector<double> obs_times;  // default 0.01, 0.02, ..., 0.2
  double noise_sd = 0.01;
  std::size_t steps = 50000;
  transport::PhysicalParams nominal{1.0, 0.01, 1.0};
  double nominal_upper_ratio = 1.2;
  double nominal_upper_p = 0.95;
  double scaling_lo = 0.1;
  double scaling_lo_p = 0.1;
  double scaling_hi = 0.5;
  double scaling_hi_p = 0.99;
  double mu_sd_factor = 0.5;
  double sigma_upper_ratio = 1.5;
  double sigma_upper_p = 0.99;
  std::size_t pushforward_n = 2000;
  std::size_t prior_gsa_n = 2000;
  double max_variance_ratio = 0.5;

  TransportCalibrateConfig();
  void visit(FieldVisitor& v);
  void validate() const;
};

struct DciSettings {
  std::size_t target_n = 1000;
  std::size_t fit_n = 2000;
  std::size_t proposals_n = 10000;
  std::size_t predict_n = 10000;
  double safety = 1.1;
  // 0 selects the sampling module's rule.
  double target_bandwidth = 0.0;
  double predict_bandwidth = 0.0;
  /// Predict KDE reuses the target bandwidth unless predict_bandwidth is set.
  bool shared_bandwidth = true;

  void visit(FieldVisitor& v);
  void validate(std::size_t nk) const;
};

struct DciConfig {
  transport::TransportConfig transport;
  TransportInputs inputs;
  DciSettings dci;
  std::size_t heldout_n = 1000;
  std::size_t identity_n = 10000;
  double max_ks = 0.05;
  std::size_t bins = 40;
  bool write_accepted = false;

  void visit(FieldVisitor& v);
  void validate() const;
};

struct TransportRobustnessConfig {
  transport::TransportConfig transport;
  TransportInputs inputs;
  DciSettings dci;
  std::size_t gsa_n = 5000;
  std::size_t replicates = 20;
  std::size_t outer_n = 1000;
  std::size_t inner_n = 1000;
  std::size_t order = 32;
  double sd_multiplier = 3.0;
  double variance_tolerance = 0.05;
  double max_mean_difference = 0.05;

  void visit(FieldVisitor& v);
  void validate() const;
};

struct GsaGenericConfig {
  std::vector<gsa::ParameterBlock> blocks;
  std::vector<GroupSpec> groups;
  std::vector<PolynomialTerm> model;
  std::size_t n = 10000;
  std::size_t replicates = 10;

  void visit(FieldVisitor& v);
  void validate() const;
};

using Settings = std::variant<PolyInadequateConfig, PolyHierarchicalConfig, TransportForwardConfig,
                              TransportCalibrateConfig, TransportRobustnessConfig, GsaGenericConfig, DciConfig>;

constexpr int kSchemaVersion = 1;

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  Kind kind = Kind::GsaGeneric;
  std::uint64_t seed = 0;
  std::string output;
  Settings settings;
};

/// Default settings for a kind.
Settings default_settings(Kind k);

/// Strict parse: unknown fields, wrong types and invalid values raise
/// ConfigError naming the field path (e.g. "settings.inputs.alpha.mode").
ExperimentConfig parse_config(const std::string& json_text);
/// Fully resolved configuration including defaults.
Json to_json(const ExperimentConfig& cfg);
void validate(const ExperimentConfig& cfg);

Json density_to_json(const sampling::Density& d);
sampling::Density density_from_json(const Json& j, const std::string& path);

struct File {
  std::string name;
  std::string content;
};

struct Verdict {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct Result {
  Kind kind = Kind::GsaGeneric;
  std::vector<File> files;
  Json summary = Json::object();
  std::vector<Verdict> verdicts;

  void add(std::string name, std::string content);
  /// A plot and the CSV holding exactly its series, sharing a stem.
  void add_plot(const std::string& stem, std::string csv, std::string svg);
  const File* find(const std::string& name) const;
  bool passed() const;
  void check(std::string name, bool ok, std::string detail);
};

Result run(const ExperimentConfig& cfg);

Result run_poly_inadequate(const PolyInadequateConfig& c, std::uint64_t seed);
Result run_poly_hierarchical(const PolyHierarchicalConfig& c, std::uint64_t seed);
Result run_transport_forward(const TransportForwardConfig& c, std::uint64_t seed);
Result run_transport_calibrate(const TransportCalibrateConfig& c, std::uint64_t seed);
Result run_transport_robustness(const TransportRobustnessConfig& c, std::uint64_t seed);
Result run_gsa_generic(const GsaGenericConfig& c, std::uint64_t seed);
Result run_dci(const DciConfig& c, std::uint64_t seed);

}  // namespace mfu::experiments
