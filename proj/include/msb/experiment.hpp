#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "msb/graph.hpp"
#include "msb/metrics.hpp"
#include "msb/synthetic.hpp"
#include "msb/train.hpp"

namespace msb {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Method {
  Supervised,
  L2rw,
  L2rwMicro,
  L2rwMeso,
  ConstantWeight,
  PlAll,
  PlRandom,
  PlUncertainty,
};

const char* to_string(Method m);
/// Throws ConfigError for unknown ids.
Method method_from_string(const std::string& id);

/// Declarative experiment description. Text form is `key = value` per line
/// with `#` comments; list values are comma separated.
///
///   dataset = data/alpha.csv   # or "planted"
///   format = rating            # rating | sign
///   methods = supervised, l2rw
///   noise = 0, 0.1, 0.2
///   seeds = 20
///   unlabeled_fractions = 1.0
///   compare = best_competitor  # or a method id used as the fixed baseline
///
/// Training keys: epochs, eval_interval, patience, lr, weight_decay, dim,
/// clean_fraction, sb_ratio, meta_alpha, meta_eta, epsilon_init, scorer,
/// spectral_init, init_scale. Planted graph keys: planted.nodes,
/// planted.blocks, planted.p_intra, planted.p_inter, planted.violations,
/// planted.seed. Others: base_seed, pl_k, pl_rounds, resolution, threads,
/// save_checkpoints.
struct ExperimentConfig {
  std::string dataset = "planted";
  ValueKind format = ValueKind::Rating;
  PlantedConfig planted;
  std::vector<Method> methods{Method::Supervised, Method::L2rw};
  std::vector<double> noise{0.0};
  std::size_t seeds = 20;
  std::uint64_t base_seed = 0;
  std::vector<double> unlabeled_fractions{1.0};
  std::string compare = "best_competitor";
  TrainConfig train;
  std::size_t pl_k = 50;
  std::size_t pl_rounds = 10;
  double resolution = 1.0;
  std::size_t threads = 0;
  bool save_checkpoints = false;

  /// Canonical key = value text; the run directory name hashes it.
  std::string canonical() const;
  std::string digest() const;
};

/// Throws ConfigError on unknown keys, malformed values or unknown methods.
ExperimentConfig parse_experiment_config(std::istream& in);
ExperimentConfig read_experiment_config(const std::filesystem::path& path);

struct RunRow {
  Method method = Method::Supervised;
  double noise = 0.0;
  double unlabeled_fraction = 1.0;
  std::size_t seed = 0;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  bool single_class = false;
  std::size_t best_epoch = 0;
  std::size_t stop_epoch = 0;
  std::size_t sb_size = 0;
  nlohmann::json history;
  /// Best parameters, kept only when save_checkpoints is set.
  std::optional<ModelParams> checkpoint;
};

struct MethodSummary {
  Method method = Method::Supervised;
  MeanStd accuracy;
  MeanStd macro_f1;
  /// Method it was tested against and the paired t-test on Macro-F1.
  std::optional<Method> compared_with;
  std::optional<TTestResult> test;
  std::string stars;
};

struct CellSummary {
  double noise = 0.0;
  double unlabeled_fraction = 1.0;
  std::vector<MethodSummary> methods;
};

struct ExperimentResult {
  std::string dataset;
  std::vector<RunRow> rows;  ///< sorted by (noise, fraction, seed, method)
  std::vector<CellSummary> cells;
};

/// Runs the full (noise x unlabeled fraction x seed x method) matrix. Every
/// method in a cell sees the same split, noise and partition.
ExperimentResult run_experiment(const ExperimentConfig& config, const SignedDigraph& graph);
/// Loads or generates the dataset named by the config first.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Per-(noise, fraction, method) means plus significance tests.
std::vector<CellSummary> summarize(const std::vector<RunRow>& rows, const std::vector<Method>& methods,
                                   const std::string& compare);

void write_rows_csv(std::ostream& out, const std::vector<RunRow>& rows);
nlohmann::json aggregate_json(const ExperimentResult& result);

/// $MSB_RUN_ROOT (default "runs") / digest.
std::filesystem::path run_directory(const ExperimentConfig& config);

/// Writes results.csv, aggregate.json, config.txt and per-run histories
/// under `dir`. Returns `dir`.
std::filesystem::path persist_experiment(const ExperimentConfig& config, const ExperimentResult& result,
                                         const std::filesystem::path& dir);

}  // namespace msb
