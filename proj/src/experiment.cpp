#include "eigenhearts/experiment.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <tuple>

#include "eigenhearts/binary_io.hpp"
#include "eigenhearts/error.hpp"
#include "eigenhearts/pgm.hpp"
#include "eigenhearts/subspace_classifier.hpp"

namespace fs = std::filesystem;

namespace eigenhearts {

DatasetSplit prepare_split(const DataSource& source, std::uint64_t seed, std::optional<Partition> only) {
  if (source.synthetic) {
    const auto samples = generate_synthetic(*source.synthetic);
    DatasetSplit split = split_dataset(samples, proportional_policy(samples), source.synthetic->seed);
    split.view = "synthetic";
    return split;
  }
  if (source.data_dir.empty()) fail(ErrorKind::Config, "no data source given (use --data or --spec)");
  DatasetSplit split;
  const fs::path manifest = source.data_dir / "manifest.tsv";
  if (fs::exists(manifest)) {
    auto entries = read_manifest(manifest);
    FrameFilter keep;
    std::set<std::tuple<std::string, std::string, std::size_t>> wanted;
    if (only) {
      std::erase_if(entries, [&](const ManifestEntry& e) { return e.partition != *only; });
      for (const auto& e : entries) wanted.emplace(e.class_code, e.sample_id, e.frame_index);
      keep = [&](const std::string& code, const std::string& sample, std::size_t frame) {
        return wanted.count({code, sample, frame}) > 0;
      };
    }
    split = apply_manifest(load_dataset(source.data_dir, keep), entries);
  } else {
    const auto samples = load_dataset(source.data_dir);
    split = split_dataset(samples, proportional_policy(samples), seed);
  }
  split.view = source.data_dir.filename().string();
  return split;
}

void ExperimentConfig::validate() const {
  if (runs < 1) fail(ErrorKind::Config, "runs must be >= 1");
  if (rules.empty() && !include_raw) fail(ErrorKind::Config, "experiment needs at least one arm");
  if (out_dir.empty()) fail(ErrorKind::Config, "experiment needs an output directory (--out)");
  train.validate();
}

int ExperimentResult::exit_code() const {
  for (const auto& arm : arms) {
    if (!arm.ok) return arm.exit_code;
  }
  return 0;
}

std::string report_row(const std::string& arm, const RunAggregate& validation, const RunAggregate& testing,
                       const RunAggregate& unseen) {
  return arm + "\tvalidation " + format_mean_std(validation, "±") + "\ttesting " +
         format_mean_std(testing, "±") + "\tunseen " + format_mean_std(unseen, "±");
}

EigenBasisLibrary<double> build_training_library(const DatasetSplit& split, const TruncationRule& rule,
                                                 std::uint64_t seed, const std::string& source) {
  LibraryProvenance provenance;
  provenance.source = source + ":train";
  provenance.seed = seed;
  return build_library<double>(split.train, split.classes, rule, provenance);
}

std::vector<ClassSpectrum> training_spectra(const DatasetSplit& split) {
  std::vector<ClassSpectrum> out;
  for (const auto& label : split.classes) {
    std::vector<Image> frames;
    for (const auto& item : split.train) {
      if (item.label.id == label.id) frames.push_back(item.image);
    }
    if (frames.empty()) fail(ErrorKind::Capacity, "no training frames for class " + label.code);
    Eigen::MatrixXd snapshots = assemble_snapshot_matrix(frames);
    const Eigen::VectorXd mean = snapshots.rowwise().mean();
    snapshots.colwise() -= mean;
    const auto factors = svd<double>(snapshots);
    if (factors.rank() == 0) fail(ErrorKind::Capacity, "class " + label.code + " has a zero centered matrix");
    out.push_back({label, singular_spectrum(factors), gavish_donoho_threshold(factors), gavish_donoho_rank(factors)});
  }
  return out;
}

void export_split(const fs::path& root, const DatasetSplit& split) {
  std::error_code ec;
  for (Partition p : kAllPartitions) {
    for (const auto& item : split[p]) {
      const fs::path dir = root / item.label.code / item.sample_id;
      fs::create_directories(dir, ec);
      if (ec) fail(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
      write_pgm(dir / (format_frame_index(item.frame_index) + ".pgm"), item.image);
    }
  }
  std::ofstream roster(root / "classes.txt", std::ios::binary);
  for (const auto& label : split.classes) roster << label.code << '\n';
  write_manifest(root / "manifest.tsv", split);
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_text(const fs::path& path, const std::string& text) { binary::write_file(path.string(), text); }

struct RunOutcome {
  double validation = 0.0;
  double testing = 0.0;
  double unseen = 0.0;
  ConfusionMatrix test_confusion;
  ConfusionMatrix unseen_confusion;
};

ArmResult run_arm(const ExperimentConfig& config, const DatasetSplit& raw, const std::optional<TruncationRule>& rule,
                  const fs::path& arm_dir, nlohmann::json& arm_json) {
  ArmResult arm;
  arm.name = rule ? describe(*rule) : "original";
  const std::string source = raw.view;

  DatasetSplit data;
  EigenBasisLibrary<double> library;
  if (rule) {
    library = build_training_library(raw, *rule, config.seed, source);
    data = project_dataset(library, raw);
  } else {
    // The raw arm gets a leak-free reference from the data-driven rank.
    library = build_training_library(raw, GavishDonoho{}, config.seed, source);
    data = raw;
  }
  for (const auto& b : library.bases) arm.ranks.push_back(static_cast<std::size_t>(b.rank()));

  arm.baseline_validation = accuracy(classify_split(library, raw.validation));
  arm.baseline_testing = accuracy(classify_split(library, raw.test));
  arm.baseline_unseen = accuracy(classify_split(library, raw.unseen));
  write_text(arm_dir / "residual_unseen.csv", residual_csv(library, raw.unseen));

  ConvNetArch arch = config.arch;
  arch.height = raw.height;
  arch.width = raw.width;
  arch.classes = raw.classes.size();

  std::vector<double> validation, testing, unseen;
  nlohmann::json runs = nlohmann::json::array();
  for (std::size_t i = 0; i < config.runs; ++i) {
    TrainConfig tc = config.train;
    tc.seed = config.seed + i;
    const TrainResult trained = train(init_model(arch, config.seed + i), data.train, data.validation, tc);
    write_text(arm_dir / ("run" + std::to_string(i) + "_history.csv"), history_csv(trained.history));

    const auto val_pairs = predict(trained.model, data.validation);
    const auto test_pairs = predict(trained.model, data.test);
    const auto unseen_pairs = predict(trained.model, data.unseen);
    validation.push_back(accuracy(val_pairs));
    testing.push_back(accuracy(test_pairs));
    unseen.push_back(accuracy(unseen_pairs));
    runs.push_back({{"run", i},
                    {"seed", config.seed + i},
                    {"validation", validation.back()},
                    {"testing", testing.back()},
                    {"unseen", unseen.back()},
                    {"confusion_testing", to_json(confusion(test_pairs, raw.classes))},
                    {"confusion_unseen", to_json(confusion(unseen_pairs, raw.classes))}});
  }
  arm.validation = aggregate(validation);
  arm.testing = aggregate(testing);
  arm.unseen = aggregate(unseen);
  arm.ok = true;

  arm_json = {{"arm", arm.name},
              {"run_count", config.runs},
              {"validation", to_json(arm.validation)},
              {"testing", to_json(arm.testing)},
              {"unseen", to_json(arm.unseen)},
              {"runs", runs},
              {"residual_baseline",
               {{"validation", arm.baseline_validation},
                {"testing", arm.baseline_testing},
                {"unseen", arm.baseline_unseen},
                {"rule", library.provenance.rule}}},
              {"metadata",
               {{"rank", arm.ranks},
                {"rule", rule ? describe(*rule) : "none"},
                {"view", raw.view},
                {"label_leak", rule.has_value()}}}};
  return arm;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const DatasetSplit raw = prepare_split(config.source, config.seed);
  ExperimentResult result;
  result.data_hash = split_hash(raw);

  std::error_code ec;
  fs::create_directories(config.out_dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create " + config.out_dir.string() + ": " + ec.message());
  write_manifest(config.out_dir / "manifest.tsv", raw);

  std::vector<std::optional<TruncationRule>> arms;
  if (config.include_raw) arms.push_back(std::nullopt);
  for (const auto& rule : config.rules) arms.push_back(rule);

  for (const auto& rule : arms) {
    const std::string name = rule ? describe(*rule) : "original";
    const fs::path arm_dir = config.out_dir / name;
    nlohmann::json arm_json;
    try {
      fs::create_directories(arm_dir, ec);
      if (ec) fail(ErrorKind::Io, "cannot create " + arm_dir.string() + ": " + ec.message());
      ArmResult arm = run_arm(config, raw, rule, arm_dir, arm_json);
      arm_json["metadata"]["data_hash"] = hex64(result.data_hash);
      write_text(arm_dir / "aggregate.json", arm_json.dump(2) + "\n");
      result.arms.push_back(std::move(arm));
    } catch (const Error& e) {
      ArmResult failed;
      failed.name = name;
      failed.error = e.what();
      failed.exit_code = eigenhearts::exit_code(e.kind());
      std::cerr << "arm " << name << " failed: " << to_string(e.kind()) << ": " << e.what() << '\n';
      result.arms.push_back(std::move(failed));
    }
  }

  std::string report;
  report += "# view: " + raw.view + "\n";
  report += "# data hash: " + hex64(result.data_hash) + "\n";
  report += "# runs per arm: " + std::to_string(config.runs) + ", epochs: " + std::to_string(config.train.epochs) +
            ", batch: " + std::to_string(config.train.batch_size) + "\n";
  report += "# NOTE: projected arms project validation, test and unseen frames onto the basis of their TRUE\n";
  report += "# class, so the network sees label information at inference. The residual rows below are\n";
  report += "# leak-free nearest-subspace results on the unprojected frames.\n";
  for (const auto& arm : result.arms) {
    if (arm.ok) {
      report += report_row(arm.name, arm.validation, arm.testing, arm.unseen) + "\n";
    } else {
      report += arm.name + "\tFAILED\t" + arm.error + "\n";
    }
  }
  for (const auto& arm : result.arms) {
    if (!arm.ok) continue;
    const double v[3] = {arm.baseline_validation, arm.baseline_testing, arm.baseline_unseen};
    RunAggregate a[3];
    for (int i = 0; i < 3; ++i) a[i] = aggregate(std::span<const double>(&v[i], 1));
    report += report_row(arm.name + "/residual", a[0], a[1], a[2]) + "\n";
  }
  write_text(config.out_dir / "report.txt", report);
  return result;
}

}  // namespace eigenhearts
