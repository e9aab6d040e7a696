#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "mfl/coupling.hpp"
#include "mfl/ensemble.hpp"
#include "mfl/gan.hpp"
#include "mfl/integrator.hpp"
#include "mfl/potentials.hpp"
#include "mfl/rates.hpp"

namespace mfl {

/// Schema or value error at a dotted key path such as `simulate.dt`.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// The config file itself could not be opened.
class MissingFileError : public std::runtime_error {
 public:
  explicit MissingFileError(const std::string& file)
      : std::runtime_error("cannot open config file " + file), file_(file) {}
  const std::string& file() const { return file_; }

 private:
  std::string file_;
};

struct SimulateSection {
  std::string variant = "quadratic";  // quadratic | mean_attraction
  double lambda = 1.0;
  double alpha = 0.0;
  DynamicsParams dynamics{1.0, 1.0, 1.0, 0.01, 5000};
  std::size_t count = 5000;
  std::size_t dim = 2;
  InitSpec init{IsotropicGaussian{{}, 4.0, {}, 1.0}, 0};
  std::size_t entropy_k = 4;
  std::size_t bootstrap = 50;

  Potential potential() const;
};

struct CoupleSection {
  ContractionConfig experiment;
};

struct RatesSection {
  RateInputs inputs;
  double sweep_max = 0.0;  // <= 0: twice the computed iota*
  std::size_t sweep_points = 41;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::string out = "out";
  std::optional<std::size_t> record_every;
  SimulateSection simulate;
  CoupleSection couple;
  RatesSection rates;
  GanConfig gan;
};

/// Strict parse: unknown keys and wrong types are rejected with their key
/// path, defaults fill absent keys, and value constraints are checked.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

/// Precedence: command line beats file.
void apply_overrides(RunConfig& config, std::optional<std::uint64_t> seed,
                     std::optional<std::string> out, std::optional<std::size_t> record_every);

/// Fully resolved config (all defaults filled in), the form stored in manifests.
nlohmann::json to_json(const RunConfig& config);

/// FNV-1a 64 of the compact dump of `j`, as 16 hex digits.
std::string config_hash(const nlohmann::json& j);

}  // namespace mfl
