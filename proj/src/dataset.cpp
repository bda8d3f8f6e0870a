#include "eigenhearts/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "eigenhearts/error.hpp"
#include "eigenhearts/pgm.hpp"

namespace fs = std::filesystem;

namespace eigenhearts {

std::string_view to_string(Partition partition) {
  switch (partition) {
    case Partition::Train: return "train";
    case Partition::Validation: return "validation";
    case Partition::Test: return "test";
    case Partition::Unseen: return "unseen";
  }
  return "unknown";
}

Partition parse_partition(std::string_view name) {
  for (Partition p : kAllPartitions) {
    if (to_string(p) == name) return p;
  }
  fail(ErrorKind::Format, "unknown partition '" + std::string(name) + "'");
}

std::vector<LabeledImage>& DatasetSplit::operator[](Partition p) {
  switch (p) {
    case Partition::Train: return train;
    case Partition::Validation: return validation;
    case Partition::Test: return test;
    case Partition::Unseen: break;
  }
  return unseen;
}

const std::vector<LabeledImage>& DatasetSplit::operator[](Partition p) const {
  return const_cast<DatasetSplit&>(*this)[p];
}

SplitPolicy SplitPolicy::paper() { return SplitPolicy{}; }

SplitPolicy SplitPolicy::scaled(std::size_t samples_per_class, std::size_t frames_per_sample) {
  const SplitPolicy ref = paper();
  const std::size_t ref_samples = ref.train_samples + ref.unseen_samples;
  SplitPolicy policy;
  if (samples_per_class >= ref_samples) {
    policy.train_samples = ref.train_samples;
    policy.unseen_samples = ref.unseen_samples;
  } else {
    policy.train_samples = std::max<std::size_t>(1, samples_per_class * ref.train_samples / ref_samples);
    policy.unseen_samples = samples_per_class - policy.train_samples;
  }
  policy.frames_taken = std::min(frames_per_sample, ref.frames_taken);
  const std::size_t pool = policy.train_samples * policy.frames_taken;
  const std::size_t ref_pool = ref.train_samples * ref.frames_taken;
  policy.train_frames = pool * ref.train_frames / ref_pool;
  policy.validation_frames = pool * ref.validation_frames / ref_pool;
  policy.test_frames = pool * ref.test_frames / ref_pool;
  return policy;
}

std::string format_frame_index(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04zu", index);
  return buf;
}

namespace {

std::vector<fs::path> sorted_entries(const fs::path& dir, bool directories) {
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (directories ? entry.is_directory()
                    : (entry.is_regular_file() && entry.path().extension() == ".pgm")) {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> read_roster_file(const fs::path& file) {
  std::ifstream in(file);
  if (!in) fail(ErrorKind::Io, "cannot read " + file.string());
  std::vector<std::string> codes;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) codes.push_back(line);
  }
  return codes;
}

}  // namespace

std::vector<Sample> load_dataset(const fs::path& root, const FrameFilter& keep) {
  if (!fs::is_directory(root)) fail(ErrorKind::Path, "dataset root not found: " + root.string());

  const std::vector<fs::path> class_dirs = sorted_entries(root, true);
  std::vector<std::string> codes;
  if (fs::exists(root / "classes.txt")) {
    codes = read_roster_file(root / "classes.txt");
  } else {
    for (const auto& dir : class_dirs) codes.push_back(dir.filename().string());
  }
  std::map<std::string, int> ids;
  for (std::size_t i = 0; i < codes.size(); ++i) ids[codes[i]] = static_cast<int>(i);

  auto is_number = [](const std::string& stem) {
    return !stem.empty() && std::all_of(stem.begin(), stem.end(), [](unsigned char c) { return std::isdigit(c); });
  };

  std::vector<Sample> samples;
  for (const auto& class_dir : class_dirs) {
    const std::string code = class_dir.filename().string();
    auto id = ids.find(code);
    if (id == ids.end()) fail(ErrorKind::Roster, "class directory '" + code + "' not in classes.txt");
    const auto sample_dirs = sorted_entries(class_dir, true);
    if (sample_dirs.empty()) fail(ErrorKind::Format, "class directory has no samples: " + class_dir.string());
    for (const auto& sample_dir : sample_dirs) {
      Sample sample;
      sample.label = ClassLabel{id->second, code};
      sample.sample_id = sample_dir.filename().string();
      auto frame_paths = sorted_entries(sample_dir, false);
      if (keep) {
        // Filtered loads are addressed by frame number; other files are never opened.
        std::erase_if(frame_paths, [&](const fs::path& path) {
          const std::string stem = path.stem().string();
          return !is_number(stem) || !keep(code, sample.sample_id, std::stoul(stem));
        });
        if (frame_paths.empty()) continue;
      }
      const bool numbered = std::all_of(frame_paths.begin(), frame_paths.end(),
                                        [&](const fs::path& path) { return is_number(path.stem().string()); });
      for (const auto& frame_path : frame_paths) {
        if (numbered) sample.frame_numbers.push_back(std::stoul(frame_path.stem().string()));
        Image frame = read_pgm(frame_path);
        if (!sample.frames.empty() && !frame.same_shape(sample.frames.front())) {
          fail(ErrorKind::Format, "frame " + frame_path.string() + " is " +
                                      std::to_string(frame.height) + "x" + std::to_string(frame.width) +
                                      ", sample frames are " + std::to_string(sample.frames.front().height) +
                                      "x" + std::to_string(sample.frames.front().width));
        }
        sample.frames.push_back(std::move(frame));
      }
      if (sample.frames.empty()) fail(ErrorKind::Format, "sample has no frames: " + sample_dir.string());
      samples.push_back(std::move(sample));
    }
  }
  std::stable_sort(samples.begin(), samples.end(),
                   [](const Sample& a, const Sample& b) { return a.label.id < b.label.id; });
  return samples;
}

void write_dataset(const fs::path& root, const std::vector<Sample>& samples,
                   const std::vector<ClassLabel>& roster) {
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) fail(ErrorKind::Io, "cannot create " + root.string() + ": " + ec.message());
  {
    std::ofstream out(root / "classes.txt", std::ios::binary);
    for (const auto& label : roster) out << label.code << '\n';
    if (!out) fail(ErrorKind::Io, "cannot write " + (root / "classes.txt").string());
  }
  for (const auto& sample : samples) {
    const fs::path dir = root / sample.label.code / sample.sample_id;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
    for (std::size_t f = 0; f < sample.frames.size(); ++f) {
      write_pgm(dir / (format_frame_index(sample.frame_number(f)) + ".pgm"), sample.frames[f]);
    }
  }
}

std::vector<ClassLabel> roster_of(const std::vector<Sample>& samples) {
  std::map<int, ClassLabel> by_id;
  for (const auto& s : samples) {
    auto [it, inserted] = by_id.emplace(s.label.id, s.label);
    if (!inserted && it->second.code != s.label.code) {
      fail(ErrorKind::Roster, "class id " + std::to_string(s.label.id) + " has codes '" +
                                  it->second.code + "' and '" + s.label.code + "'");
    }
  }
  std::vector<ClassLabel> roster;
  for (auto& [id, label] : by_id) roster.push_back(label);
  return roster;
}

SplitPolicy proportional_policy(const std::vector<Sample>& samples) {
  if (samples.empty()) fail(ErrorKind::Capacity, "no samples to split");
  std::map<int, std::size_t> per_class;
  std::size_t min_frames = samples.front().frames.size();
  for (const auto& s : samples) {
    ++per_class[s.label.id];
    min_frames = std::min(min_frames, s.frames.size());
  }
  std::size_t min_samples = per_class.begin()->second;
  for (auto& [id, n] : per_class) min_samples = std::min(min_samples, n);
  return SplitPolicy::scaled(min_samples, min_frames);
}

DatasetSplit split_dataset(const std::vector<Sample>& samples, const SplitPolicy& policy,
                           std::uint64_t seed) {
  const std::vector<ClassLabel> roster = roster_of(samples);
  if (roster.empty()) fail(ErrorKind::Capacity, "no samples to split");
  if (policy.train_samples == 0 || policy.frames_taken == 0) {
    fail(ErrorKind::Config, "split policy needs at least one training sample and frame");
  }
  const std::size_t pool = policy.train_samples * policy.frames_taken;
  const std::size_t requested = policy.train_frames + policy.validation_frames + policy.test_frames;
  if (requested > pool) {
    fail(ErrorKind::Capacity, "split asks for " + std::to_string(requested) + " frames per class from " +
                                  std::to_string(pool) + " available training frames");
  }

  DatasetSplit split;
  split.classes = roster;
  split.height = samples.front().frames.front().height;
  split.width = samples.front().frames.front().width;

  std::mt19937_64 rng(seed);
  for (const ClassLabel& label : roster) {
    std::vector<const Sample*> members;
    for (const auto& s : samples) {
      if (s.label.id == label.id) members.push_back(&s);
    }
    const std::size_t needed = policy.train_samples + policy.unseen_samples;
    if (members.size() < needed) {
      fail(ErrorKind::Capacity, "class " + label.code + " has " + std::to_string(members.size()) +
                                    " samples, needs " + std::to_string(needed) + " (short by " +
                                    std::to_string(needed - members.size()) + ")");
    }
    std::shuffle(members.begin(), members.end(), rng);

    for (std::size_t i = 0; i < needed; ++i) {
      const Sample& s = *members[i];
      if (s.frames.size() < policy.frames_taken) {
        fail(ErrorKind::Capacity, "class " + label.code + " sample " + s.sample_id + " has " +
                                      std::to_string(s.frames.size()) + " frames, needs " +
                                      std::to_string(policy.frames_taken) + " (short by " +
                                      std::to_string(policy.frames_taken - s.frames.size()) + ")");
      }
      if (s.frames.front().height != split.height || s.frames.front().width != split.width) {
        fail(ErrorKind::Format, "sample " + s.sample_id + " frame size differs from the dataset");
      }
    }

    // Quotas are spread over the training samples with staggered remainders,
    // so no sample is asked for more than ceil(total / n) frames.
    const std::size_t n = policy.train_samples;
    const std::array<std::size_t, 3> totals = {policy.train_frames, policy.validation_frames,
                                               policy.test_frames};
    std::vector<std::array<std::size_t, 3>> quota(n);
    std::size_t offset = 0;
    for (std::size_t p = 0; p < 3; ++p) {
      const std::size_t base = totals[p] / n;
      const std::size_t rem = totals[p] % n;
      for (std::size_t i = 0; i < n; ++i) {
        quota[i][p] = base + (((i + n - offset % n) % n) < rem ? 1 : 0);
      }
      offset += rem;
    }

    for (std::size_t i = 0; i < n; ++i) {
      const Sample& s = *members[i];
      std::array<std::size_t, 3> order = {0, 1, 2};
      std::shuffle(order.begin(), order.end(), rng);
      std::size_t frame = 0;
      for (std::size_t block : order) {
        auto& target = split[static_cast<Partition>(block)];
        for (std::size_t f = 0; f < quota[i][block]; ++f, ++frame) {
          target.push_back({s.frames[frame], label, s.sample_id, s.frame_number(frame)});
        }
      }
    }
    for (std::size_t i = n; i < needed; ++i) {
      const Sample& s = *members[i];
      for (std::size_t f = 0; f < policy.frames_taken; ++f) {
        split.unseen.push_back({s.frames[f], label, s.sample_id, s.frame_number(f)});
      }
    }
  }
  return split;
}

std::string manifest_text(const DatasetSplit& split) {
  std::string text;
  for (Partition p : kAllPartitions) {
    for (const auto& item : split[p]) {
      text += to_string(p);
      text += '\t';
      text += item.label.code;
      text += '\t';
      text += item.sample_id;
      text += '\t';
      text += format_frame_index(item.frame_index);
      text += '\n';
    }
  }
  return text;
}

void write_manifest(const fs::path& path, const DatasetSplit& split) {
  std::ofstream out(path, std::ios::binary);
  const std::string text = manifest_text(split);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) fail(ErrorKind::Io, "cannot write manifest " + path.string());
}

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Path, "manifest not found: " + path.string());
  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, '\t')) fields.push_back(field);
    if (fields.size() != 4) {
      fail(ErrorKind::Format, path.string() + ":" + std::to_string(line_no) + ": expected 4 fields");
    }
    std::size_t index = 0;
    try {
      index = std::stoul(fields[3]);
    } catch (const std::exception&) {
      fail(ErrorKind::Format, path.string() + ":" + std::to_string(line_no) + ": bad frame index");
    }
    entries.push_back({parse_partition(fields[0]), fields[1], fields[2], index});
  }
  return entries;
}

DatasetSplit apply_manifest(const std::vector<Sample>& samples,
                            const std::vector<ManifestEntry>& entries) {
  std::map<std::pair<std::string, std::string>, const Sample*> lookup;
  for (const auto& s : samples) lookup[{s.label.code, s.sample_id}] = &s;

  DatasetSplit split;
  split.classes = roster_of(samples);
  if (!samples.empty()) {
    split.height = samples.front().frames.front().height;
    split.width = samples.front().frames.front().width;
  }
  for (const auto& e : entries) {
    auto it = lookup.find({e.class_code, e.sample_id});
    if (it == lookup.end()) {
      fail(ErrorKind::Roster, "manifest names unknown sample " + e.class_code + "/" + e.sample_id);
    }
    const Sample& s = *it->second;
    std::size_t position = 0;
    while (position < s.frames.size() && s.frame_number(position) != e.frame_index) ++position;
    if (position == s.frames.size()) {
      fail(ErrorKind::Bounds, "manifest frame " + format_frame_index(e.frame_index) + " missing from sample " +
                                  e.class_code + "/" + e.sample_id);
    }
    split[e.partition].push_back({s.frames[position], s.label, s.sample_id, e.frame_index});
  }
  return split;
}

std::uint64_t split_hash(const DatasetSplit& split) {
  std::uint64_t h = 14695981039346656037ull;
  auto mix_bytes = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  auto mix_u64 = [&](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      const unsigned char b = static_cast<unsigned char>(v >> (8 * i));
      mix_bytes(&b, 1);
    }
  };
  for (Partition p : kAllPartitions) {
    mix_u64(split[p].size());
    for (const auto& item : split[p]) {
      mix_u64(static_cast<std::uint64_t>(item.label.id));
      mix_u64(item.image.height);
      mix_u64(item.image.width);
      for (Eigen::Index i = 0; i < item.image.pixels.size(); ++i) {
        mix_u64(std::bit_cast<std::uint64_t>(item.image.pixels[i]));
      }
    }
  }
  return h;
}

}  // namespace eigenhearts
