#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "eigenhearts/image.hpp"

namespace eigenhearts {

/// One video: an ordered run of frames from a single subject.
struct Sample {
  ClassLabel label;
  std::string sample_id;
  std::vector<Image> frames;
  // Frame numbers parsed from file names; empty means 0, 1, 2, ...
  std::vector<std::size_t> frame_numbers;

  std::size_t frame_number(std::size_t position) const {
    return frame_numbers.empty() ? position : frame_numbers[position];
  }
};

struct LabeledImage {
  Image image;
  ClassLabel label;
  std::string sample_id;
  std::size_t frame_index = 0;
};

enum class Partition { Train, Validation, Test, Unseen };

inline constexpr std::array<Partition, 4> kAllPartitions = {
    Partition::Train, Partition::Validation, Partition::Test, Partition::Unseen};

std::string_view to_string(Partition partition);
Partition parse_partition(std::string_view name);

struct DatasetSplit {
  std::vector<LabeledImage> train;
  std::vector<LabeledImage> validation;
  std::vector<LabeledImage> test;
  std::vector<LabeledImage> unseen;

  std::string view;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<ClassLabel> classes;

  std::vector<LabeledImage>& operator[](Partition p);
  const std::vector<LabeledImage>& operator[](Partition p) const;
};

/// Per-class split counts. Hold-out samples go whole to the unseen partition;
/// the remaining training samples feed train/validation/test frame-wise.
struct SplitPolicy {
  std::size_t train_samples = 20;
  std::size_t unseen_samples = 6;
  std::size_t frames_taken = 90;
  std::size_t train_frames = 1200;
  std::size_t validation_frames = 500;
  std::size_t test_frames = 100;

  /// 20 + 6 samples, 90 frames each, 1200/500/100 frames per class.
  static SplitPolicy paper();

  /// The paper proportions scaled down to `samples_per_class` samples of
  /// `frames_per_sample` frames, rounding down.
  static SplitPolicy scaled(std::size_t samples_per_class, std::size_t frames_per_sample);
};

/// Reads `<root>/<class_code>/<sample_id>/<frame>.pgm`. Class ids follow
/// `<root>/classes.txt` (one code per line) when present, otherwise the
/// sorted class directory names.
/// Decides per (class code, sample id, frame number) whether a file is read.
using FrameFilter = std::function<bool(const std::string&, const std::string&, std::size_t)>;

/// With a filter, only numbered frames it accepts are opened and samples left
/// empty are dropped.
std::vector<Sample> load_dataset(const std::filesystem::path& root, const FrameFilter& keep = {});

/// Writes samples in the layout load_dataset reads, plus classes.txt.
/// Pixels are clamped and quantized to 8 bits.
void write_dataset(const std::filesystem::path& root, const std::vector<Sample>& samples,
                   const std::vector<ClassLabel>& roster);

/// Class roster in id order, collected from samples.
std::vector<ClassLabel> roster_of(const std::vector<Sample>& samples);

DatasetSplit split_dataset(const std::vector<Sample>& samples, const SplitPolicy& policy,
                           std::uint64_t seed);

/// Policy derived from the smallest class/sample sizes present in `samples`.
SplitPolicy proportional_policy(const std::vector<Sample>& samples);

/// One line per frame: `<partition>\t<class>\t<sample_id>\t<frame_index>`.
std::string manifest_text(const DatasetSplit& split);
void write_manifest(const std::filesystem::path& path, const DatasetSplit& split);

struct ManifestEntry {
  Partition partition;
  std::string class_code;
  std::string sample_id;
  std::size_t frame_index;
};
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

/// Reassembles a split from loaded samples and a manifest.
DatasetSplit apply_manifest(const std::vector<Sample>& samples,
                            const std::vector<ManifestEntry>& entries);

/// FNV-1a over shapes, labels and pixel bit patterns of every partition.
std::uint64_t split_hash(const DatasetSplit& split);

std::string format_frame_index(std::size_t index);

}  // namespace eigenhearts
