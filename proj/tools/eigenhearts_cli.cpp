// Command-line front end for the eigenheart pipeline.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "CLI11.hpp"
#include "eigenhearts/binary_io.hpp"
#include "eigenhearts/convnet.hpp"
#include "eigenhearts/dataset.hpp"
#include "eigenhearts/eigenbasis.hpp"
#include "eigenhearts/error.hpp"
#include "eigenhearts/evaluator.hpp"
#include "eigenhearts/experiment.hpp"
#include "eigenhearts/subspace_classifier.hpp"
#include "eigenhearts/synthetic.hpp"

namespace fs = std::filesystem;
using namespace eigenhearts;

namespace {

struct Options {
  std::string data;
  std::string spec;
  std::vector<long> ranks;
  std::optional<double> tolerance;
  bool gavish = false;
  std::size_t runs = 5;
  std::size_t epochs = 80;
  std::size_t batch = 128;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  std::string out;
  std::string arch = "32,64,64,128";
  std::string library;
  std::string model;
  std::string view;
  bool skip_raw = false;
};

DataSource source_of(const Options& o) {
  DataSource source;
  if (!o.spec.empty()) {
    source.synthetic = read_synthetic_spec(o.spec);
  } else {
    source.data_dir = o.data;
  }
  return source;
}

std::vector<TruncationRule> rules_of(const Options& o) {
  std::vector<TruncationRule> rules;
  for (long r : o.ranks) rules.push_back(FixedRank{r});
  if (o.tolerance) rules.push_back(EnergyTolerance{*o.tolerance});
  if (o.gavish) rules.push_back(GavishDonoho{});
  return rules;
}

TrainConfig train_config_of(const Options& o) {
  TrainConfig tc;
  tc.epochs = o.epochs;
  tc.batch_size = o.batch;
  tc.learning_rate = o.lr;
  tc.seed = o.seed;
  return tc;
}

ConvNetArch arch_for(const Options& o, const DatasetSplit& split) {
  ConvNetArch arch;
  parse_arch_channels(o.arch, arch);
  arch.height = split.height;
  arch.width = split.width;
  arch.classes = split.classes.size();
  return arch;
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) { binary::write_file(path.string(), text); }

fs::path with_tag(const fs::path& path, const std::string& tag) {
  return path.parent_path() / (path.stem().string() + "_" + tag + path.extension().string());
}

int cmd_synth(const Options& o) {
  if (o.spec.empty() || o.out.empty()) fail(ErrorKind::Config, "synth needs --spec and --out");
  const SyntheticSpec spec = read_synthetic_spec(o.spec);
  const auto samples = generate_synthetic(spec);
  const fs::path root = o.out;
  write_dataset(root, samples, synthetic_roster(spec.class_count));
  write_text(root / "spec.txt", synthetic_spec_text(spec));
  // Split what the files hold, so manifest users see the quantized pixels.
  const auto stored = load_dataset(root);
  write_manifest(root / "manifest.tsv", split_dataset(stored, proportional_policy(stored), spec.seed));
  std::cout << "wrote " << samples.size() << " samples (" << spec.class_count * spec.frames_per_class
            << " frames) to " << root.string() << '\n';
  return 0;
}

int cmd_ingest_check(const Options& o) {
  const auto samples = load_dataset(o.data);
  const auto roster = roster_of(samples);
  std::cout << "classes: " << roster.size() << '\n';
  for (const auto& label : roster) {
    std::size_t count = 0;
    std::size_t frames = 0;
    for (const auto& s : samples) {
      if (s.label.id == label.id) {
        ++count;
        frames += s.frames.size();
      }
    }
    std::cout << "  " << label.id << ' ' << label.code << ": " << count << " samples, " << frames << " frames\n";
  }
  const auto& first = samples.front().frames.front();
  std::cout << "frame size: " << first.height << 'x' << first.width << '\n';
  const SplitPolicy policy = proportional_policy(samples);
  const DatasetSplit split = prepare_split(source_of(o), o.seed);
  std::cout << "policy per class: " << policy.train_samples << " training samples, " << policy.unseen_samples
            << " hold-out samples, " << policy.frames_taken << " frames each\n";
  for (Partition p : kAllPartitions) std::cout << "  " << to_string(p) << ": " << split[p].size() << " frames\n";
  return 0;
}

int cmd_spectrum(const Options& o) {
  if (o.out.empty()) fail(ErrorKind::Config, "spectrum needs --out");
  const DatasetSplit split = prepare_split(source_of(o), o.seed, Partition::Train);
  make_dir(o.out);
  for (const auto& cs : training_spectra(split)) {
    write_text(fs::path(o.out) / ("spectrum_" + cs.label.code + ".csv"), spectrum_csv(cs.series));
    std::cout << cs.label.code << ": " << cs.series.size() << " singular values, Gavish-Donoho threshold "
              << cs.threshold << ", rank " << cs.gavish_rank << '\n';
  }
  return 0;
}

int cmd_build_basis(const Options& o) {
  if (o.out.empty()) fail(ErrorKind::Config, "build-basis needs --out <library file>");
  const auto rules = rules_of(o);
  if (rules.empty()) fail(ErrorKind::Config, "build-basis needs --rank, --tolerance or --gavish");
  const DatasetSplit split = prepare_split(source_of(o), o.seed, Partition::Train);
  const fs::path out = o.out;
  if (out.has_parent_path()) make_dir(out.parent_path());
  for (const auto& rule : rules) {
    const auto library = build_training_library(split, rule, o.seed, split.view);
    const fs::path file = rules.size() == 1 ? out : with_tag(out, describe(rule));
    save_library(file, library);
    for (const auto& b : library.bases) {
      std::cout << describe(rule) << ' ' << b.label.code << ": rank " << b.rank() << " from " << b.training_frames
                << " frames\n";
    }
    for (const auto& w : library.provenance.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << "wrote " << file.string() << '\n';
  }
  const fs::path spectra_dir = out.has_parent_path() ? out.parent_path() : fs::path(".");
  for (const auto& cs : training_spectra(split)) {
    write_text(spectra_dir / (out.stem().string() + "_spectrum_" + cs.label.code + ".csv"), spectrum_csv(cs.series));
  }
  return 0;
}

int cmd_project(const Options& o) {
  if (o.library.empty() || o.out.empty()) fail(ErrorKind::Config, "project needs --library and --out");
  const auto library = load_library(o.library);
  const DatasetSplit split = prepare_split(source_of(o), o.seed);
  const DatasetSplit projected = project_dataset(library, split);
  const std::string base = o.data.empty() ? std::string("synthetic") : fs::path(o.data).filename().string();
  const fs::path root = fs::path(o.out) / (base + "_proj_" + library.provenance.rule);
  export_split(root, projected);
  std::cout << "wrote " << root.string() << '\n';
  return 0;
}

int cmd_train(const Options& o) {
  if (o.out.empty()) fail(ErrorKind::Config, "train needs --out");
  DatasetSplit split = prepare_split(source_of(o), o.seed);
  if (!o.library.empty()) split = project_dataset(load_library(o.library), split);
  const TrainResult result = train(init_model(arch_for(o, split), o.seed), split.train, split.validation,
                                   train_config_of(o));
  make_dir(o.out);
  save_model(fs::path(o.out) / "model.bin", result.model);
  write_text(fs::path(o.out) / "history.csv", history_csv(result.history));
  const auto& last = result.history.back();
  std::cout << "epoch " << last.epoch << ": train acc " << last.train_accuracy << ", val acc "
            << last.validation_accuracy << '\n';
  return 0;
}

int cmd_evaluate(const Options& o) {
  if (o.model.empty() || o.out.empty()) fail(ErrorKind::Config, "evaluate needs --model and --out");
  const ConvNetModel model = load_model(o.model);
  const DatasetSplit raw = prepare_split(source_of(o), o.seed);
  DatasetSplit data = raw;
  std::optional<EigenBasisLibrary<double>> library;
  if (!o.library.empty()) {
    library = load_library(o.library);
    data = project_dataset(*library, raw);
  }
  nlohmann::json report;
  for (Partition p : {Partition::Test, Partition::Unseen}) {
    if (data[p].empty()) continue;
    const auto pairs = predict(model, data[p]);
    std::vector<std::string> samples;
    for (const auto& item : data[p]) samples.push_back(item.sample_id);
    const RunAggregate agg = aggregate(std::vector<double>{accuracy(pairs)});
    nlohmann::json part = to_json(agg);
    part["confusion"] = to_json(confusion(pairs, raw.classes));
    part["sample_vote_accuracy"] = sample_vote_accuracy(pairs, samples);
    if (library) part["residual_baseline"] = accuracy(classify_split(*library, raw[p]));
    report[std::string(to_string(p))] = part;
    std::cout << to_string(p) << ": " << format_mean_std(agg) << '\n';
  }
  report["metadata"] = {{"view", raw.view}, {"data_hash", split_hash(raw)}, {"model", o.model},
                        {"rank", library ? library->provenance.rule : "none"}};
  make_dir(o.out);
  write_text(fs::path(o.out) / "evaluation.json", report.dump(2) + "\n");
  if (library) {
    write_text(fs::path(o.out) / "residual_unseen.csv", residual_csv(*library, raw.unseen));
  }
  return 0;
}

int cmd_experiment(const Options& o) {
  ExperimentConfig config;
  config.source = source_of(o);
  config.rules = rules_of(o);
  config.include_raw = !o.skip_raw;
  config.runs = o.runs;
  config.train = train_config_of(o);
  parse_arch_channels(o.arch, config.arch);
  config.out_dir = o.out;
  config.seed = o.seed;
  const ExperimentResult result = run_experiment(config);
  std::ifstream report(fs::path(o.out) / "report.txt");
  std::cout << report.rdbuf();
  return result.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
#if defined(__GLIBC__)
  // Keep large per-batch buffers on the heap instead of a fresh mmap each time.
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 256 << 20);
#endif
  CLI::App app{"Eigenheart bases, projections and classifiers for grayscale frame ensembles"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from an INI/TOML file");
  Options o;

  auto data_flags = [&](CLI::App* cmd) {
    cmd->add_option("--data", o.data, "Dataset root (<class>/<sample>/<frame>.pgm)");
    cmd->add_option("--spec", o.spec, "Synthetic spec file (key=value)");
    cmd->add_option("--seed", o.seed, "Global seed");
  };
  auto rule_flags = [&](CLI::App* cmd) {
    cmd->add_option("--rank", o.ranks, "Fixed truncation rank (repeatable)");
    cmd->add_option("--tolerance", o.tolerance, "Relative Frobenius tolerance in (0,1)");
    cmd->add_flag("--gavish", o.gavish, "Gavish-Donoho optimal hard threshold, per class");
  };
  auto train_flags = [&](CLI::App* cmd) {
    cmd->add_option("--epochs", o.epochs, "Training epochs");
    cmd->add_option("--batch", o.batch, "Mini-batch size");
    cmd->add_option("--lr", o.lr, "RMSprop learning rate");
    cmd->add_option("--arch", o.arch, "Conv channels and dense units: c1,c2,c3,hidden");
  };

  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset and its split manifest");
  synth->add_option("--spec", o.spec)->required();
  synth->add_option("--out", o.out)->required();

  auto* ingest = app.add_subcommand("ingest-check", "Load a dataset and print its split");
  data_flags(ingest);

  auto* spectrum = app.add_subcommand("spectrum", "Singular spectra of the per-class training matrices");
  data_flags(spectrum);
  spectrum->add_option("--out", o.out, "Output directory");

  auto* build = app.add_subcommand("build-basis", "Build per-class bases from the training partition");
  data_flags(build);
  rule_flags(build);
  build->add_option("--out", o.out, "Library file");

  auto* project = app.add_subcommand("project", "Project every partition onto its class basis");
  data_flags(project);
  project->add_option("--library", o.library)->required();
  project->add_option("--out", o.out, "Output directory");

  auto* train_cmd = app.add_subcommand("train", "Train one network");
  data_flags(train_cmd);
  train_flags(train_cmd);
  train_cmd->add_option("--library", o.library, "Train on projections onto this library");
  train_cmd->add_option("--out", o.out, "Output directory");

  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a trained network on test and unseen frames");
  data_flags(evaluate);
  evaluate->add_option("--model", o.model)->required();
  evaluate->add_option("--library", o.library, "Project inputs with this library first");
  evaluate->add_option("--out", o.out, "Output directory");

  auto* experiment = app.add_subcommand("experiment", "Raw arm plus one arm per truncation rule");
  data_flags(experiment);
  rule_flags(experiment);
  train_flags(experiment);
  experiment->add_option("--runs", o.runs, "Trainings per arm");
  experiment->add_flag("--skip-raw", o.skip_raw, "Omit the raw-image arm");
  experiment->add_option("--out", o.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*synth) return cmd_synth(o);
    if (*ingest) return cmd_ingest_check(o);
    if (*spectrum) return cmd_spectrum(o);
    if (*build) return cmd_build_basis(o);
    if (*project) return cmd_project(o);
    if (*train_cmd) return cmd_train(o);
    if (*evaluate) return cmd_evaluate(o);
    if (*experiment) return cmd_experiment(o);
  } catch (const Error& e) {
    std::cerr << to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 2;
}
