#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "eigenhearts/error.hpp"

namespace eigenhearts::binary {

/// Little-endian byte sink.
class Writer {
 public:
  void bytes(std::string_view data) { out_.append(data); }

  void u32(std::uint32_t v) { little(v, 4); }
  void u64(std::uint64_t v) { little(v, 8); }
  void f64(double v) { little(std::bit_cast<std::uint64_t>(v), 8); }

  void string(std::string_view s) {
    u64(s.size());
    bytes(s);
  }

  /// Writes `m` column by column.
  template <typename Derived>
  void f64_block(const Eigen::DenseBase<Derived>& m) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      for (Eigen::Index r = 0; r < m.rows(); ++r) f64(static_cast<double>(m(r, c)));
    }
  }

  const std::string& data() const { return out_; }

 private:
  void little(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }

  std::string out_;
};

/// Little-endian byte source over an in-memory file. Running off the end is
/// an I/O error (truncated file).
class Reader {
 public:
  Reader(std::string_view data, std::string name) : data_(data), name_(std::move(name)) {}

  std::string_view bytes(std::size_t n) {
    need(n);
    std::string_view out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  std::uint32_t u32() { return static_cast<std::uint32_t>(little(4)); }
  std::uint64_t u64() { return little(8); }
  double f64() { return std::bit_cast<double>(little(8)); }

  std::string string(std::size_t max_length = 1 << 20) {
    const std::uint64_t n = u64();
    if (n > max_length) fail(ErrorKind::Format, name_ + ": string length " + std::to_string(n) + " too large");
    return std::string(bytes(n));
  }

  template <typename Scalar>
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> f64_block(std::uint64_t rows, std::uint64_t cols) {
    if (rows != 0 && cols > remaining() / 8 / rows) {
      fail(ErrorKind::Io, name_ + ": truncated file (block of " + std::to_string(rows) + "x" +
                              std::to_string(cols) + " does not fit)");
    }
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m(static_cast<Eigen::Index>(rows),
                                                            static_cast<Eigen::Index>(cols));
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = static_cast<Scalar>(f64());
    }
    return m;
  }

  std::size_t remaining() const { return data_.size() - pos_; }
  bool at_end() const { return pos_ == data_.size(); }
  const std::string& name() const { return name_; }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) fail(ErrorKind::Io, name_ + ": truncated file");
  }

  std::uint64_t little(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::string_view data_;
  std::string name_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& data);

}  // namespace eigenhearts::binary
