#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "eigenhearts/convnet.hpp"
#include "eigenhearts/dataset.hpp"
#include "eigenhearts/eigenbasis.hpp"
#include "eigenhearts/evaluator.hpp"
#include "eigenhearts/svd.hpp"
#include "eigenhearts/synthetic.hpp"

namespace eigenhearts {

/// Where frames come from: an on-disk dataset (split by its manifest.tsv when
/// present) or the synthetic generator.
struct DataSource {
  std::filesystem::path data_dir;
  std::optional<SyntheticSpec> synthetic;
};

/// Loads or synthesizes the samples and splits them. On-disk data with a
/// manifest.tsv reuses that split; otherwise the proportional policy is
/// applied with `seed`.
DatasetSplit prepare_split(const DataSource& source, std::uint64_t seed,
                           std::optional<Partition> only = std::nullopt);

struct ExperimentConfig {
  DataSource source;
  std::string view = "synthetic";
  std::vector<TruncationRule> rules;
  bool include_raw = true;
  std::size_t runs = 5;
  TrainConfig train;
  ConvNetArch arch;  // input shape and classes are taken from the data
  std::filesystem::path out_dir;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ArmResult {
  std::string name;  // "original" or the rule tag
  bool ok = false;
  std::string error;
  int exit_code = 0;
  std::vector<std::size_t> ranks;  // per class, projected arms only
  RunAggregate validation;
  RunAggregate testing;
  RunAggregate unseen;
  // Nearest-subspace accuracy on the unprojected frames.
  double baseline_validation = 0.0;
  double baseline_testing = 0.0;
  double baseline_unseen = 0.0;
};

struct ExperimentResult {
  std::vector<ArmResult> arms;
  std::uint64_t data_hash = 0;

  /// 0 when every arm succeeded, else the code of the first failure.
  int exit_code() const;
};

/// `<arm>\tvalidation <m>±<s>\ttesting <m>±<s>\tunseen <m>±<s>`
std::string report_row(const std::string& arm, const RunAggregate& validation, const RunAggregate& testing,
                       const RunAggregate& unseen);

/// Full protocol: a raw-image arm plus one arm per truncation rule, each with
/// `runs` CNN trainings (seeds seed + i) and one residual-baseline pass.
/// Writes report.txt and per-arm aggregate.json, run<i>_history.csv and
/// residual CSVs under out_dir. A failing arm is recorded and the rest
/// continue.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Basis library built from the training partition only.
EigenBasisLibrary<double> build_training_library(const DatasetSplit& split, const TruncationRule& rule,
                                                 std::uint64_t seed, const std::string& source);

/// Spectrum of every class's centered training matrix, with the
/// Gavish-Donoho threshold and rank.
struct ClassSpectrum {
  ClassLabel label;
  std::vector<SpectrumPoint> series;
  double threshold = 0.0;
  Eigen::Index gavish_rank = 0;
};
std::vector<ClassSpectrum> training_spectra(const DatasetSplit& split);

/// Writes every partition in the dataset layout under `root`, 8-bit clamped.
void export_split(const std::filesystem::path& root, const DatasetSplit& split);

}  // namespace eigenhearts
