#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eigenhearts/dataset.hpp"

namespace eigenhearts {

/// Parameters of the stand-in dataset generator.
///
/// Every class owns `intrinsic_rank` nonnegative spatial patterns built from
/// 2x2 pixel blocks. Blocks are dealt to (class, pattern) owners so no two
/// patterns share a block; pattern k of a class also carries the shared
/// background at weight `background` over every block owned by pattern k of
/// the other classes. Within a class the patterns have disjoint supports, so
/// they are orthogonal; across classes the background overlap makes them
/// correlated.
///
/// A frame is `amplitude * sum_k a_k p_k + noise`, clamped to [0,1]. Each
/// sample (video) draws its own coefficient profile m_k ~ U[0.25, 1]; frames
/// jitter it as a_k = m_k * U[0.75, 1].
struct SyntheticSpec {
  std::size_t class_count = 5;
  std::size_t frames_per_class = 120;
  std::size_t image_side = 64;
  std::size_t intrinsic_rank = 5;
  double noise_level = 0.05;
  std::uint64_t seed = 7;
  std::size_t samples_per_class = 12;
  double background = 0.2;
  double amplitude = 1.0;

  std::size_t frames_per_sample() const { return frames_per_class / samples_per_class; }

  /// Throws a config error when the spec cannot be realized.
  void validate() const;
};

/// Parses `key=value` lines (`classes`, `frames`, `side`, `rank`, `noise`,
/// `seed`, plus optional `samples`, `background`, `amplitude`). `#` starts a
/// comment.
SyntheticSpec parse_synthetic_spec(const std::string& text);
SyntheticSpec read_synthetic_spec(const std::filesystem::path& path);
std::string synthetic_spec_text(const SyntheticSpec& spec);

/// Orthonormal J x rank basis of each class's pattern span.
std::vector<Eigen::MatrixXd> synthetic_patterns(const SyntheticSpec& spec);

std::vector<Sample> generate_synthetic(const SyntheticSpec& spec);

/// Class labels used by the generator: the cardiac codes for up to five
/// classes, `C<i>` beyond that.
std::vector<ClassLabel> synthetic_roster(std::size_t class_count);

}  // namespace eigenhearts
