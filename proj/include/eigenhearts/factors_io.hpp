#pragma once

#include <filesystem>
#include <string>

#include "eigenhearts/svd.hpp"

namespace eigenhearts {

inline constexpr char kFactorsMagic[4] = {'E', 'I', 'G', 'H'};
inline constexpr std::uint32_t kFactorsVersion = 1;

/// Factor file layout (little-endian): "EIGH", u32 version, u64 J, u64 K,
/// u64 r, r f64 singular values, then the r left vectors (J values each),
/// then the r right vectors (K values each).
std::string encode_factors(const SvdFactors<double>& factors);
SvdFactors<double> decode_factors(const std::string& bytes, const std::string& name = "<memory>");

void save_factors(const std::filesystem::path& path, const SvdFactors<double>& factors);
SvdFactors<double> load_factors(const std::filesystem::path& path);

}  // namespace eigenhearts
