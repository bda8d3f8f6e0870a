#include <eigenhearts/dataset.hpp>
#include <eigenhearts/error.hpp>
#include <eigenhearts/pgm.hpp>
#include <eigenhearts/synthetic.hpp>

#include <Eigen/SVD>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "doctest.h"

namespace fs = std::filesystem;
using namespace eigenhearts;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("eigenhearts_test_dataset_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_bytes(const fs::path& path, const std::string& bytes) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << bytes;
}

// Hand-built P5 file, independent of encode_pgm.
std::string raw_pgm(int w, int h, const std::vector<unsigned char>& values) {
  std::string s = "P5\n# hand\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  s.append(values.begin(), values.end());
  return s;
}

std::vector<Sample> tiny_samples(std::size_t classes, std::size_t samples, std::size_t frames) {
  std::vector<Sample> out;
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t s = 0; s < samples; ++s) {
      Sample sample;
      sample.label = {static_cast<int>(c), "C" + std::to_string(c)};
      sample.sample_id = "s" + std::to_string(100 + s);
      for (std::size_t f = 0; f < frames; ++f) {
        Image img(1, 1);
        img.pixels[0] = static_cast<double>((c * 131 + s * 17 + f) % 256) / 255.0;
        sample.frames.push_back(img);
        sample.frame_numbers.push_back(f);
      }
      out.push_back(std::move(sample));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("pgm values are rescaled by maxval") {
  const Image img = decode_pgm(raw_pgm(3, 1, {255, 0, 128}));
  REQUIRE(img.height == 1);
  REQUIRE(img.width == 3);
  CHECK(img.pixels[0] == 1.0);
  CHECK(img.pixels[1] == 0.0);
  CHECK(img.pixels[2] == 128.0 / 255.0);
}

TEST_CASE("pgm 16-bit samples are big-endian") {
  std::string s = "P5 2 1 65535\n";
  s += std::string("\xff\xff\x00\x01", 4);
  const Image img = decode_pgm(s);
  CHECK(img.pixels[0] == 1.0);
  CHECK(img.pixels[1] == 1.0 / 65535.0);
}

TEST_CASE("pgm rejects malformed input") {
  CHECK_THROWS_AS(decode_pgm("P2 1 1 255\n0"), Error);
  CHECK_THROWS_AS(decode_pgm(raw_pgm(2, 2, {1, 2, 3})), Error);
  try {
    decode_pgm("P6 1 1 255\n000");
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Decode);
  }
}

TEST_CASE("pgm encode/decode round trip on 8-bit grid") {
  Image img(4, 5);
  for (Eigen::Index i = 0; i < img.pixels.size(); ++i) img.pixels[i] = quantize_8bit(i / 19.0);
  CHECK(decode_pgm(encode_pgm(img)) == img);
}

TEST_CASE("flatten is row-major and round trips") {
  Image img(2, 2);
  img(0, 0) = 0.1;
  img(0, 1) = 0.2;
  img(1, 0) = 0.3;
  img(1, 1) = 0.4;
  const Eigen::VectorXd v = flatten_image(img);
  CHECK(v[0] == 0.1);
  CHECK(v[1] == 0.2);
  CHECK(v[2] == 0.3);
  CHECK(v[3] == 0.4);
  CHECK(unflatten_image(v, 2, 2) == img);
  CHECK(flatten_image(Image(256, 256)).size() == 65536);
  CHECK_THROWS_AS(unflatten_image(v, 3, 2), Error);
}

TEST_CASE("snapshot matrix shapes and rank") {
  Image a(3, 4);
  a.pixels.setLinSpaced(0.0, 1.0);
  std::vector<Image> one{a};
  const Eigen::MatrixXd m1 = assemble_snapshot_matrix(one);
  CHECK(m1.rows() == 12);
  CHECK(m1.cols() == 1);
  CHECK(m1.col(0) == flatten_image(a));

  std::vector<Image> same(6, a);
  const Eigen::MatrixXd m = assemble_snapshot_matrix(same);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto s = svd.singularValues();
  CHECK(s[1] / s[0] < 1e-12);

  std::vector<Image> mixed{a, Image(4, 3)};
  CHECK_THROWS_AS(assemble_snapshot_matrix(mixed), Error);
}

TEST_CASE("load_dataset reads the class/sample/frame layout") {
  const fs::path root = scratch("layout");
  write_bytes(root / "DC" / "m02" / "0001.pgm", raw_pgm(2, 1, {0, 255}));
  write_bytes(root / "DC" / "m02" / "0000.pgm", raw_pgm(2, 1, {128, 0}));
  write_bytes(root / "H" / "m01" / "0000.pgm", raw_pgm(2, 1, {1, 2}));
  const auto samples = load_dataset(root);
  REQUIRE(samples.size() == 2);
  CHECK(samples[0].label.code == "DC");
  CHECK(samples[0].label.id == 0);
  CHECK(samples[1].label.code == "H");
  REQUIRE(samples[0].frames.size() == 2);
  CHECK(samples[0].frame_numbers == std::vector<std::size_t>{0, 1});
  CHECK(samples[0].frames[0].pixels[0] == 128.0 / 255.0);
  CHECK(samples[0].frames[1].pixels[1] == 1.0);

  write_bytes(root / "classes.txt", "H\nDC\n");
  const auto ordered = load_dataset(root);
  CHECK(ordered[0].label.code == "H");
  CHECK(ordered[0].label.id == 0);
  CHECK(ordered[1].label.id == 1);
}

TEST_CASE("load_dataset single all-zero frame") {
  const fs::path root = scratch("zero");
  write_bytes(root / "H" / "a" / "0000.pgm", raw_pgm(3, 2, {0, 0, 0, 0, 0, 0}));
  const auto samples = load_dataset(root);
  REQUIRE(samples.size() == 1);
  REQUIRE(samples[0].frames.size() == 1);
  CHECK(samples[0].frames[0].pixels.isZero(0.0));
}

TEST_CASE("load_dataset errors") {
  try {
    load_dataset(scratch("missing") / "nope");
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Path);
  }

  const fs::path root = scratch("shapes");
  write_bytes(root / "H" / "a" / "0000.pgm", raw_pgm(2, 1, {0, 0}));
  write_bytes(root / "H" / "a" / "0001.pgm", raw_pgm(1, 2, {0, 0}));
  try {
    load_dataset(root);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Format);
  }

  const fs::path roster = scratch("roster");
  write_bytes(roster / "H" / "a" / "0000.pgm", raw_pgm(1, 1, {0}));
  write_bytes(roster / "X" / "a" / "0000.pgm", raw_pgm(1, 1, {0}));
  write_bytes(roster / "classes.txt", "H\n");
  try {
    load_dataset(roster);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Roster);
  }
}

TEST_CASE("paper-scale layout loads 130 samples") {
  const fs::path root = scratch("paper");
  const auto samples = tiny_samples(5, 26, 90);
  write_dataset(root, samples, roster_of(samples));
  const auto loaded = load_dataset(root);
  CHECK(loaded.size() == 130);
  CHECK(roster_of(loaded).size() == 5);
  for (const auto& s : loaded) CHECK(s.frames.size() == 90);
}

TEST_CASE("paper split policy gives Table 1 counts") {
  const auto samples = tiny_samples(5, 26, 90);
  const DatasetSplit split = split_dataset(samples, SplitPolicy::paper(), 11);
  CHECK(split.train.size() == 5 * 1200);
  CHECK(split.validation.size() == 5 * 500);
  CHECK(split.test.size() == 5 * 100);
  CHECK(split.unseen.size() == 5 * 540);

  for (const Partition p : kAllPartitions) {
    std::map<int, std::size_t> per_class;
    for (const auto& item : split[p]) ++per_class[item.label.id];
    REQUIRE(per_class.size() == 5);
    for (const auto& [id, n] : per_class) CHECK(n == per_class.begin()->second);
  }

  // samples never straddle partitions
  std::map<std::string, std::set<Partition>> owner;
  for (const Partition p : kAllPartitions)
    for (const auto& item : split[p]) owner[item.label.code + "/" + item.sample_id].insert(p);
  for (const auto& [id, parts] : owner) {
    const bool train_side = !parts.count(Partition::Unseen);
    CHECK((train_side || parts.size() == 1));
  }

  // no frame is used twice
  std::set<std::string> seen;
  for (const Partition p : kAllPartitions)
    for (const auto& item : split[p])
      CHECK(seen.insert(item.label.code + "/" + item.sample_id + "/" +
                        std::to_string(item.frame_index))
                .second);
}

TEST_CASE("split without unseen samples") {
  const auto samples = tiny_samples(3, 4, 10);
  SplitPolicy policy;
  policy.train_samples = 4;
  policy.unseen_samples = 0;
  policy.frames_taken = 10;
  policy.train_frames = 20;
  policy.validation_frames = 10;
  policy.test_frames = 5;
  const auto split = split_dataset(samples, policy, 3);
  CHECK(split.unseen.empty());
  CHECK(split.train.size() == 60);
  CHECK(split.validation.size() == 30);
  CHECK(split.test.size() == 15);
}

TEST_CASE("split capacity shortfall is reported") {
  const auto samples = tiny_samples(2, 3, 5);
  SplitPolicy policy = SplitPolicy::paper();
  try {
    split_dataset(samples, policy, 1);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Capacity);
    CHECK(std::string(e.what()).find("C0") != std::string::npos);
  }
}

TEST_CASE("split is deterministic under seed") {
  const auto samples = tiny_samples(5, 26, 90);
  const auto a = split_dataset(samples, SplitPolicy::paper(), 99);
  const auto b = split_dataset(samples, SplitPolicy::paper(), 99);
  const auto c = split_dataset(samples, SplitPolicy::paper(), 100);
  CHECK(manifest_text(a) == manifest_text(b));
  CHECK(split_hash(a) == split_hash(b));
  CHECK(manifest_text(a) != manifest_text(c));
}

TEST_CASE("scaled policy keeps paper proportions") {
  const SplitPolicy p = SplitPolicy::scaled(12, 10);
  CHECK(p.train_samples == 9);
  CHECK(p.unseen_samples == 3);
  CHECK(p.train_frames == 60);
  CHECK(p.validation_frames == 25);
  CHECK(p.test_frames == 5);
  const SplitPolicy q = SplitPolicy::scaled(26, 90);
  CHECK(q.train_frames == 1200);
  CHECK(q.validation_frames == 500);
  CHECK(q.test_frames == 100);
}

TEST_CASE("manifest round trip reproduces the split") {
  const fs::path root = scratch("manifest");
  const auto samples = tiny_samples(3, 12, 10);
  const auto split = split_dataset(samples, SplitPolicy::scaled(12, 10), 5);
  write_dataset(root, samples, roster_of(samples));
  write_manifest(root / "manifest.tsv", split);
  const auto reloaded = load_dataset(root);
  const auto again = apply_manifest(reloaded, read_manifest(root / "manifest.tsv"));
  CHECK(manifest_text(again) == manifest_text(split));
  CHECK(split_hash(again) == split_hash(split));
}

TEST_CASE("synthetic generator is deterministic") {
  SyntheticSpec spec;
  spec.frames_per_class = 24;
  spec.samples_per_class = 4;
  spec.image_side = 16;
  spec.intrinsic_rank = 3;
  const auto a = generate_synthetic(spec);
  const auto b = generate_synthetic(spec);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t f = 0; f < a[i].frames.size(); ++f) CHECK(a[i].frames[f] == b[i].frames[f]);
  spec.seed = 8;
  const auto c = generate_synthetic(spec);
  CHECK(!(c[0].frames[0] == a[0].frames[0]));
}

TEST_CASE("noise-free synthetic classes have the intrinsic rank") {
  SyntheticSpec spec;
  spec.intrinsic_rank = 3;
  spec.noise_level = 0.0;
  spec.image_side = 32;
  const auto samples = generate_synthetic(spec);
  std::map<int, std::vector<Image>> per_class;
  for (const auto& s : samples)
    for (const auto& f : s.frames) per_class[s.label.id].push_back(f);
  REQUIRE(per_class.size() == 5);
  for (const auto& [id, frames] : per_class) {
    CHECK(frames.size() == 120);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(assemble_snapshot_matrix(frames));
    const auto s = svd.singularValues();
    CHECK(s[3] / s[0] < 1e-10);
    CHECK(s[2] / s[0] > 1e-3);
  }
}

TEST_CASE("synthetic spec parsing") {
  const auto spec = parse_synthetic_spec("# demo\nclasses=3\nframes=30\nside=16\nrank=2\n"
                                         "noise=0.1\nseed=9\nsamples=6\n");
  CHECK(spec.class_count == 3);
  CHECK(spec.frames_per_class == 30);
  CHECK(spec.image_side == 16);
  CHECK(spec.intrinsic_rank == 2);
  CHECK(spec.noise_level == 0.1);
  CHECK(spec.seed == 9);
  CHECK(spec.samples_per_class == 6);
  CHECK(parse_synthetic_spec(synthetic_spec_text(spec)).seed == 9);
  CHECK_THROWS_AS(parse_synthetic_spec("bogus=1\n"), Error);
  CHECK_THROWS_AS(parse_synthetic_spec("rank=30\nframes=30\n"), Error);
  CHECK_THROWS_AS(parse_synthetic_spec("side=4\n"), Error);
}

TEST_CASE("synthetic export reproduces 8-bit pixel values") {
  SyntheticSpec spec;
  spec.frames_per_class = 24;
  spec.samples_per_class = 4;
  spec.image_side = 16;
  spec.intrinsic_rank = 3;
  const auto samples = generate_synthetic(spec);
  const fs::path root = scratch("export");
  write_dataset(root, samples, roster_of(samples));
  const auto loaded = load_dataset(root);
  REQUIRE(loaded.size() == samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    CHECK(loaded[i].label == samples[i].label);
    for (std::size_t f = 0; f < samples[i].frames.size(); ++f) {
      const auto& src = samples[i].frames[f].pixels;
      const auto& got = loaded[i].frames[f].pixels;
      for (Eigen::Index k = 0; k < src.size(); ++k) REQUIRE(got[k] == quantize_8bit(src[k]));
    }
  }
}
