#include <eigenhearts/binary_io.hpp>
#include <eigenhearts/experiment.hpp>
#include <eigenhearts/pgm.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include "doctest.h"

namespace fs = std::filesystem;
using namespace eigenhearts;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("eigenhearts_test_experiment_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) { return binary::read_file(path.string()); }

SyntheticSpec small_spec() {
  SyntheticSpec spec;
  spec.class_count = 3;
  spec.image_side = 16;
  spec.frames_per_class = 60;
  spec.samples_per_class = 6;
  spec.intrinsic_rank = 3;
  spec.noise_level = 0.1;
  return spec;
}

ExperimentConfig small_config(const fs::path& out) {
  ExperimentConfig config;
  config.source.synthetic = small_spec();
  config.rules = {GavishDonoho{}, FixedRank{2}};
  config.runs = 2;
  config.train.epochs = 3;
  config.train.batch_size = 16;
  parse_arch_channels("4,4,8,8", config.arch);
  config.out_dir = out;
  config.seed = 5;
  return config;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(EIGENHEARTS_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("report row format") {
  RunAggregate a, b, c;
  a.mean = 1.0;
  b.mean = 0.97;
  b.std = 0.027;
  c.mean = 0.5;
  c.std = 0.041;
  CHECK(report_row("r200", a, b, c) == "r200\tvalidation 1±0\ttesting 0.97±0.027\tunseen 0.5±0.041");
}

TEST_CASE("experiment is reproducible and writes per-arm outputs") {
  const fs::path a = scratch("a"), b = scratch("b");
  const auto ra = run_experiment(small_config(a));
  const auto rb = run_experiment(small_config(b));
  CHECK(ra.exit_code() == 0);
  REQUIRE(ra.arms.size() == 3);
  CHECK(ra.arms[0].name == "original");
  CHECK(ra.arms[1].name == "gavish");
  CHECK(ra.arms[2].name == "r2");
  CHECK(ra.arms[2].ranks == std::vector<std::size_t>{2, 2, 2});
  CHECK(slurp(a / "report.txt") == slurp(b / "report.txt"));
  for (const char* arm : {"original", "gavish", "r2"}) {
    CHECK(slurp(a / arm / "aggregate.json") == slurp(b / arm / "aggregate.json"));
    CHECK(fs::exists(a / arm / "run0_history.csv"));
    CHECK(fs::exists(a / arm / "run1_history.csv"));
    CHECK(fs::exists(a / arm / "residual_unseen.csv"));
  }

  std::istringstream report(slurp(a / "report.txt"));
  std::string line;
  std::size_t rows = 0;
  while (std::getline(report, line)) {
    if (line.empty() || line[0] == '#') continue;
    ++rows;
    CHECK(line.find("\tvalidation ") != std::string::npos);
    CHECK(line.find("\ttesting ") != std::string::npos);
    CHECK(line.find("\tunseen ") != std::string::npos);
  }
  CHECK(rows == 6);

  auto other = small_config(scratch("c"));
  other.seed = 6;
  run_experiment(other);
  CHECK(slurp(a / "original" / "aggregate.json") != slurp(other.out_dir / "original" / "aggregate.json"));
}

TEST_CASE("single run has zero spread") {
  auto config = small_config(scratch("single"));
  config.runs = 1;
  config.rules = {GavishDonoho{}};
  config.include_raw = false;
  const auto r = run_experiment(config);
  REQUIRE(r.arms.size() == 1);
  CHECK(r.arms[0].unseen.std == 0.0);
  CHECK(r.arms[0].testing.std == 0.0);
}

TEST_CASE("a failing arm is recorded and the others continue") {
  auto config = small_config(scratch("fail"));
  config.runs = 1;
  config.rules = {FixedRank{100000}, GavishDonoho{}};
  const auto r = run_experiment(config);
  REQUIRE(r.arms.size() == 3);
  CHECK(r.arms[0].ok);
  CHECK(!r.arms[1].ok);
  CHECK(r.arms[2].ok);
  CHECK(r.exit_code() == 2);
  const std::string report = slurp(config.out_dir / "report.txt");
  CHECK(report.find("r100000\tFAILED") != std::string::npos);
}

TEST_CASE("bases come from the training partition only") {
  const fs::path root = scratch("guard");
  const DatasetSplit split = prepare_split(DataSource{{}, small_spec()}, 0);
  export_split(root / "data", split);
  const DataSource disk{root / "data", std::nullopt};
  const auto before = encode_library(
      build_training_library(prepare_split(disk, 0, Partition::Train), GavishDonoho{}, 0, "data"));

  // corrupt every test frame and rename every unseen frame
  for (const Partition p : {Partition::Test, Partition::Unseen}) {
    for (const auto& item : split[p]) {
      const fs::path file = root / "data" / item.label.code / item.sample_id /
                            (format_frame_index(item.frame_index) + ".pgm");
      REQUIRE(fs::exists(file));
      if (p == Partition::Test) {
        std::ofstream(file, std::ios::binary) << "garbage";
      } else {
        fs::rename(file, fs::path(file).replace_extension(".moved"));
      }
    }
  }
  const auto after = encode_library(
      build_training_library(prepare_split(disk, 0, Partition::Train), GavishDonoho{}, 0, "data"));
  CHECK(before == after);
  CHECK_THROWS_AS(prepare_split(disk, 0), Error);
}

TEST_CASE("cli build-basis ignores test and unseen files") {
  const fs::path root = scratch("cli");
  {
    std::ofstream spec(root / "spec.txt");
    spec << synthetic_spec_text(small_spec());
  }
  REQUIRE(run_cli("synth --spec " + (root / "spec.txt").string() + " --out " + (root / "data").string()) == 0);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(root / "data")) files += e.path().extension() == ".pgm";
  CHECK(files == 3 * 60);
  CHECK(fs::exists(root / "data" / "manifest.tsv"));

  const std::string build = "build-basis --gavish --data " + (root / "data").string() + " --out ";
  REQUIRE(run_cli(build + (root / "lib1.bin").string()) == 0);
  CHECK(fs::exists(root / "lib1_spectrum_H.csv"));

  const auto entries = read_manifest(root / "data" / "manifest.tsv");
  for (const auto& e : entries) {
    if (e.partition != Partition::Test && e.partition != Partition::Unseen) continue;
    const fs::path file = root / "data" / e.class_code / e.sample_id / (format_frame_index(e.frame_index) + ".pgm");
    if (e.partition == Partition::Test) {
      std::ofstream(file, std::ios::binary) << "P5 broken";
    } else {
      fs::rename(file, fs::path(file).replace_extension(".bak"));
    }
  }
  REQUIRE(run_cli(build + (root / "lib2.bin").string()) == 0);
  CHECK(slurp(root / "lib1.bin") == slurp(root / "lib2.bin"));

  // the full split now needs the damaged files
  CHECK(run_cli("ingest-check --data " + (root / "data").string()) == 3);
}

TEST_CASE("cli synth is deterministic and spectra end at 1") {
  const fs::path root = scratch("synth");
  {
    std::ofstream spec(root / "spec.txt");
    spec << synthetic_spec_text(small_spec());
  }
  REQUIRE(run_cli("synth --spec " + (root / "spec.txt").string() + " --out " + (root / "a").string()) == 0);
  REQUIRE(run_cli("synth --spec " + (root / "spec.txt").string() + " --out " + (root / "b").string()) == 0);
  for (const auto& e : fs::recursive_directory_iterator(root / "a")) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), root / "a");
    CHECK(slurp(e.path()) == slurp(root / "b" / rel));
  }
  REQUIRE(run_cli("spectrum --data " + (root / "a").string() + " --out " + (root / "spec_out").string()) == 0);
  std::ifstream csv(root / "spec_out" / "spectrum_H.csv");
  std::string line, last;
  while (std::getline(csv, line))
    if (!line.empty()) last = line;
  CHECK(last.substr(last.rfind(',') + 1) == "1");
}

TEST_CASE("noise-free synthetic data recovers the intrinsic rank") {
  SyntheticSpec spec;
  spec.noise_level = 0.0;
  spec.image_side = 32;
  const DatasetSplit split = prepare_split(DataSource{{}, spec}, 0);
  for (const auto& cs : training_spectra(split)) CHECK(cs.gavish_rank == 5);
}

TEST_CASE("cli exit codes") {
  const fs::path root = scratch("codes");
  CHECK(run_cli("") == 2);
  CHECK(run_cli("build-basis --data " + (root / "nothing").string() + " --out x.bin") == 2);
  CHECK(run_cli("build-basis --gavish --data " + (root / "nothing").string() + " --out " +
                (root / "x.bin").string()) == 3);
  CHECK(run_cli("experiment --runs 0 --gavish --data " + root.string() + " --out " + root.string()) == 2);
}
