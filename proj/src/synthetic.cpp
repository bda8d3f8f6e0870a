#include "eigenhearts/synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "eigenhearts/error.hpp"

namespace eigenhearts {

void SyntheticSpec::validate() const {
  auto bad = [](const std::string& why) { fail(ErrorKind::Config, "synthetic spec: " + why); };
  if (class_count < 1) bad("classes must be >= 1");
  if (image_side < 8) bad("side must be >= 8");
  if (intrinsic_rank < 1) bad("rank must be >= 1");
  if (intrinsic_rank >= frames_per_class) bad("rank must be < frames");
  if (!(noise_level >= 0.0) || !std::isfinite(noise_level)) bad("noise must be >= 0");
  if (samples_per_class < 1 || frames_per_class % samples_per_class != 0) {
    bad("frames must be a positive multiple of samples");
  }
  if (!(background >= 0.0 && background <= 1.0)) bad("background must be in [0,1]");
  if (!(amplitude > 0.0 && amplitude <= 1.0)) bad("amplitude must be in (0,1]");
  const std::size_t blocks = ((image_side + 1) / 2) * ((image_side + 1) / 2);
  if (blocks < class_count * intrinsic_rank) {
    bad("side " + std::to_string(image_side) + " has too few 2x2 blocks for " +
        std::to_string(class_count * intrinsic_rank) + " patterns");
  }
}

SyntheticSpec parse_synthetic_spec(const std::string& text) {
  SyntheticSpec spec;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line.erase(std::remove_if(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); }),
               line.end());
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorKind::Config, "synthetic spec line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    try {
      std::size_t used = 0;
      auto whole = [&](std::size_t n) {
        if (n != value.size()) throw std::invalid_argument(value);
      };
      if (key == "classes") { spec.class_count = std::stoul(value, &used); whole(used); }
      else if (key == "frames") { spec.frames_per_class = std::stoul(value, &used); whole(used); }
      else if (key == "side") { spec.image_side = std::stoul(value, &used); whole(used); }
      else if (key == "rank") { spec.intrinsic_rank = std::stoul(value, &used); whole(used); }
      else if (key == "noise") { spec.noise_level = std::stod(value, &used); whole(used); }
      else if (key == "seed") { spec.seed = std::stoull(value, &used); whole(used); }
      else if (key == "samples") { spec.samples_per_class = std::stoul(value, &used); whole(used); }
      else if (key == "background") { spec.background = std::stod(value, &used); whole(used); }
      else if (key == "amplitude") { spec.amplitude = std::stod(value, &used); whole(used); }
      else fail(ErrorKind::Config, "synthetic spec: unknown key '" + key + "'");
    } catch (const std::logic_error&) {
      fail(ErrorKind::Config, "synthetic spec: bad value for '" + key + "': " + value);
    }
  }
  spec.validate();
  return spec;
}

SyntheticSpec read_synthetic_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Path, "synthetic spec not found: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_synthetic_spec(buffer.str());
}

std::string synthetic_spec_text(const SyntheticSpec& spec) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "classes=%zu\nframes=%zu\nside=%zu\nrank=%zu\nnoise=%.17g\nseed=%llu\n"
                "samples=%zu\nbackground=%.17g\namplitude=%.17g\n",
                spec.class_count, spec.frames_per_class, spec.image_side, spec.intrinsic_rank,
                spec.noise_level, static_cast<unsigned long long>(spec.seed), spec.samples_per_class,
                spec.background, spec.amplitude);
  return buf;
}

std::vector<ClassLabel> synthetic_roster(std::size_t class_count) {
  std::vector<ClassLabel> roster;
  const auto cardiac = cardiac_roster();
  for (std::size_t c = 0; c < class_count; ++c) {
    roster.push_back({static_cast<int>(c),
                      class_count <= cardiac.size() ? cardiac[c].code : "C" + std::to_string(c)});
  }
  return roster;
}

namespace {

// Raw (unnormalized) patterns: pattern_blocks[c][k] over J pixels, peak 1.
std::vector<Eigen::MatrixXd> raw_patterns(const SyntheticSpec& spec, std::mt19937_64& rng) {
  const std::size_t side = spec.image_side;
  const std::size_t grid = (side + 1) / 2;
  const std::size_t owners = spec.class_count * spec.intrinsic_rank;

  std::vector<std::size_t> blocks(grid * grid);
  for (std::size_t b = 0; b < blocks.size(); ++b) blocks[b] = b;
  std::shuffle(blocks.begin(), blocks.end(), rng);
  std::vector<std::size_t> owner(blocks.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) owner[blocks[i]] = i % owners;

  const auto J = static_cast<Eigen::Index>(side * side);
  std::vector<Eigen::MatrixXd> patterns(spec.class_count,
                                        Eigen::MatrixXd::Zero(J, static_cast<Eigen::Index>(spec.intrinsic_rank)));
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) {
      const std::size_t who = owner[(r / 2) * grid + c / 2];
      const std::size_t own_class = who / spec.intrinsic_rank;
      const auto k = static_cast<Eigen::Index>(who % spec.intrinsic_rank);
      const auto pixel = static_cast<Eigen::Index>(r * side + c);
      for (std::size_t cls = 0; cls < spec.class_count; ++cls) {
        patterns[cls](pixel, k) = cls == own_class ? 1.0 : spec.background;
      }
    }
  }
  return patterns;
}

}  // namespace

std::vector<Eigen::MatrixXd> synthetic_patterns(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  auto patterns = raw_patterns(spec, rng);
  for (auto& p : patterns) p.colwise().normalize();
  return patterns;
}

std::vector<Sample> generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const auto patterns = raw_patterns(spec, rng);
  const auto roster = synthetic_roster(spec.class_count);
  const auto rank = static_cast<Eigen::Index>(spec.intrinsic_rank);

  std::uniform_real_distribution<double> profile(0.25, 1.0);
  std::uniform_real_distribution<double> jitter(0.75, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  std::vector<Sample> samples;
  for (std::size_t cls = 0; cls < spec.class_count; ++cls) {
    for (std::size_t s = 0; s < spec.samples_per_class; ++s) {
      Sample sample;
      sample.label = roster[cls];
      char id[32];
      std::snprintf(id, sizeof id, "s%02zu", s);
      sample.sample_id = id;

      Eigen::VectorXd base(rank);
      for (Eigen::Index k = 0; k < rank; ++k) base[k] = profile(rng);
      for (std::size_t f = 0; f < spec.frames_per_sample(); ++f) {
        Eigen::VectorXd coeff(rank);
        for (Eigen::Index k = 0; k < rank; ++k) coeff[k] = spec.amplitude * base[k] * jitter(rng);
        Image frame(spec.image_side, spec.image_side);
        frame.pixels = patterns[cls] * coeff;
        if (spec.noise_level > 0.0) {
          for (Eigen::Index i = 0; i < frame.pixels.size(); ++i) {
            frame.pixels[i] += spec.noise_level * noise(rng);
          }
        }
        frame.pixels = frame.pixels.cwiseMax(0.0).cwiseMin(1.0);
        sample.frames.push_back(std::move(frame));
      }
      samples.push_back(std::move(sample));
    }
  }
  return samples;
}

}  // namespace eigenhearts
