#include "eigenhearts/factors_io.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>

#include "eigenhearts/binary_io.hpp"

namespace eigenhearts {

namespace binary {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Path, "cannot open " + path);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) fail(ErrorKind::Io, "write failed for " + path);
}

}  // namespace binary

std::string describe(const TruncationRule& rule) {
  return std::visit(
      [](const auto& r) -> std::string {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, FixedRank>) {
          return "r" + std::to_string(r.rank);
        } else if constexpr (std::is_same_v<R, EnergyTolerance>) {
          char buf[64];
          std::snprintf(buf, sizeof buf, "tol%g", r.tolerance);
          return buf;
        } else {
          return "gavish";
        }
      },
      rule);
}

TruncationRule parse_truncation_rule(const std::string& text) {
  try {
    if (text == "gavish") return GavishDonoho{};
    std::size_t used = 0;
    if (text.rfind("tol", 0) == 0) {
      const double tol = std::stod(text.substr(3), &used);
      if (used + 3 == text.size() && tol > 0.0 && tol < 1.0) return EnergyTolerance{tol};
    } else if (text.rfind("r", 0) == 0) {
      const long rank = std::stol(text.substr(1), &used);
      if (used + 1 == text.size() && rank >= 1) return FixedRank{rank};
    }
  } catch (const std::logic_error&) {
  }
  fail(ErrorKind::Config, "bad truncation rule '" + text + "'");
}

std::string spectrum_csv(const std::vector<SpectrumPoint>& series) {
  std::string out = "j,sigma,cumulative_energy\n";
  char buf[96];
  for (const auto& p : series) {
    std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g\n", static_cast<long long>(p.index), p.sigma,
                  p.cumulative_energy);
    out += buf;
  }
  return out;
}

std::string encode_factors(const SvdFactors<double>& f) {
  check_factors(f);
  binary::Writer w;
  w.bytes(std::string_view(kFactorsMagic, 4));
  w.u32(kFactorsVersion);
  w.u64(static_cast<std::uint64_t>(f.source_rows));
  w.u64(static_cast<std::uint64_t>(f.source_cols));
  w.u64(static_cast<std::uint64_t>(f.rank()));
  w.f64_block(f.singular_values);
  w.f64_block(f.left);
  w.f64_block(f.right);
  return w.data();
}

SvdFactors<double> decode_factors(const std::string& bytes, const std::string& name) {
  binary::Reader r(bytes, name);
  if (r.bytes(4) != std::string_view(kFactorsMagic, 4)) fail(ErrorKind::Format, name + ": bad magic");
  if (const auto version = r.u32(); version != kFactorsVersion) {
    fail(ErrorKind::Format, name + ": unsupported version " + std::to_string(version));
  }
  SvdFactors<double> f;
  const std::uint64_t rows = r.u64();
  const std::uint64_t cols = r.u64();
  const std::uint64_t rank = r.u64();
  f.source_rows = static_cast<Eigen::Index>(rows);
  f.source_cols = static_cast<Eigen::Index>(cols);
  f.singular_values = r.f64_block<double>(rank, 1);
  f.left = r.f64_block<double>(rows, rank);
  f.right = r.f64_block<double>(cols, rank);
  if (!r.at_end()) fail(ErrorKind::Format, name + ": trailing bytes after factors");
  check_factors(f);
  return f;
}

void save_factors(const std::filesystem::path& path, const SvdFactors<double>& factors) {
  binary::write_file(path.string(), encode_factors(factors));
}

SvdFactors<double> load_factors(const std::filesystem::path& path) {
  return decode_factors(binary::read_file(path.string()), path.string());
}

}  // namespace eigenhearts
