#include <cstring>

#include "eigenhearts/binary_io.hpp"
#include "eigenhearts/eigenbasis.hpp"
#include "eigenhearts/factors_io.hpp"

namespace eigenhearts {

std::string encode_library(const EigenBasisLibrary<double>& library) {
  binary::Writer w;
  w.bytes(std::string_view(kFactorsMagic, 4));
  w.u32(kLibraryVersion);
  w.u64(library.bases.size());
  w.u64(library.height);
  w.u64(library.width);
  w.string(library.provenance.source);
  w.string(library.provenance.rule);
  w.u64(library.provenance.seed);
  w.u64(library.provenance.warnings.size());
  for (const auto& warning : library.provenance.warnings) w.string(warning);
  for (const auto& b : library.bases) {
    w.u64(static_cast<std::uint64_t>(b.label.id));
    w.string(b.label.code);
    w.u64(static_cast<std::uint64_t>(b.pixels()));
    w.u64(b.training_frames);
    w.u64(static_cast<std::uint64_t>(b.rank()));
    w.u32(b.degenerate ? 1 : 0);
    w.f64_block(b.singular_values);
    w.f64_block(b.mean);
    w.f64_block(b.basis);
  }
  return w.data();
}

EigenBasisLibrary<double> decode_library(const std::string& bytes, const std::string& name) {
  binary::Reader r(bytes, name);
  if (r.bytes(4) != std::string_view(kFactorsMagic, 4)) fail(ErrorKind::Format, name + ": bad magic");
  if (const auto version = r.u32(); version != kLibraryVersion) {
    fail(ErrorKind::Format, name + ": not a basis library (version " + std::to_string(version) + ")");
  }
  EigenBasisLibrary<double> library;
  const std::uint64_t classes = r.u64();
  library.height = r.u64();
  library.width = r.u64();
  library.provenance.source = r.string();
  library.provenance.rule = r.string();
  library.provenance.seed = r.u64();
  const std::uint64_t warnings = r.u64();
  if (warnings > r.remaining()) fail(ErrorKind::Io, name + ": truncated file");
  for (std::uint64_t i = 0; i < warnings; ++i) library.provenance.warnings.push_back(r.string());
  if (classes > r.remaining()) fail(ErrorKind::Io, name + ": truncated file");
  for (std::uint64_t c = 0; c < classes; ++c) {
    EigenBasis<double> b;
    b.label.id = static_cast<int>(r.u64());
    b.label.code = r.string(256);
    const std::uint64_t pixels = r.u64();
    b.training_frames = r.u64();
    const std::uint64_t rank = r.u64();
    b.degenerate = r.u32() != 0;
    if (pixels != library.height * library.width) {
      fail(ErrorKind::Format, name + ": class " + b.label.code + " pixel count disagrees with frame shape");
    }
    b.height = library.height;
    b.width = library.width;
    b.singular_values = r.f64_block<double>(rank, 1);
    b.mean = r.f64_block<double>(pixels, 1);
    b.basis = r.f64_block<double>(pixels, rank);
    library.bases.push_back(std::move(b));
  }
  if (!r.at_end()) fail(ErrorKind::Format, name + ": trailing bytes after library");
  return library;
}

void save_library(const std::filesystem::path& path, const EigenBasisLibrary<double>& library) {
  binary::write_file(path.string(), encode_library(library));
}

EigenBasisLibrary<double> load_library(const std::filesystem::path& path) {
  return decode_library(binary::read_file(path.string()), path.string());
}

std::size_t library_file_size(const EigenBasisLibrary<double>& library) {
  const auto& p = library.provenance;
  std::size_t size = 4 + 4 + 8 + 8 + 8;
  size += 8 + p.source.size() + 8 + p.rule.size() + 8 + 8;
  for (const auto& w : p.warnings) size += 8 + w.size();
  for (const auto& b : library.bases) {
    const auto J = static_cast<std::size_t>(b.pixels());
    const auto r = static_cast<std::size_t>(b.rank());
    size += 8 + (8 + b.label.code.size()) + 8 + 8 + 8 + 4;
    size += 8 * r + 8 * J + 8 * J * r;
  }
  return size;
}

namespace {

template <typename Derived>
bool same_bits(const Eigen::DenseBase<Derived>& a, const Eigen::DenseBase<Derived>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      const double x = a(r, c);
      const double y = b(r, c);
      if (std::memcmp(&x, &y, sizeof(double)) != 0) return false;
    }
  }
  return true;
}

}  // namespace

bool bit_equal(const EigenBasisLibrary<double>& a, const EigenBasisLibrary<double>& b) {
  if (a.height != b.height || a.width != b.width || !(a.provenance == b.provenance) ||
      a.bases.size() != b.bases.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.bases.size(); ++i) {
    const auto& x = a.bases[i];
    const auto& y = b.bases[i];
    if (!(x.label == y.label) || x.training_frames != y.training_frames || x.degenerate != y.degenerate ||
        !same_bits(x.mean, y.mean) || !same_bits(x.basis, y.basis) ||
        !same_bits(x.singular_values, y.singular_values)) {
      return false;
    }
  }
  return true;
}

}  // namespace eigenhearts
