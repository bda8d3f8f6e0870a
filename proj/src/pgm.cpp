#include "eigenhearts/pgm.hpp"

#include <cctype>
#include <fstream>
#include <iterator>
#include <sstream>

#include "eigenhearts/error.hpp"

namespace eigenhearts {

namespace {

class HeaderReader {
 public:
  HeaderReader(const std::string& bytes, const std::string& name) : bytes_(bytes), name_(name) {}

  std::size_t next_number() {
    skip_space_and_comments();
    std::size_t value = 0;
    bool any = false;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + static_cast<std::size_t>(bytes_[pos_] - '0');
      if (value > (1u << 30)) bad("header value too large");
      any = true;
      ++pos_;
    }
    if (!any) bad("expected a number in header");
    return value;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  void end_header() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      bad("missing whitespace after maxval");
    }
    ++pos_;
  }

  std::size_t position() const { return pos_; }

  [[noreturn]] void bad(const std::string& why) const {
    fail(ErrorKind::Decode, "cannot decode " + name_ + ": " + why);
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& bytes_;
  const std::string& name_;
  std::size_t pos_ = 2;
};

}  // namespace

Image decode_pgm(const std::string& bytes, const std::string& name) {
  HeaderReader header(bytes, name);
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') header.bad("not a binary PGM (P5)");
  const std::size_t width = header.next_number();
  const std::size_t height = header.next_number();
  const std::size_t maxval = header.next_number();
  header.end_header();
  if (width == 0 || height == 0) header.bad("zero image dimension");
  if (maxval == 0 || maxval > 65535) header.bad("maxval out of range");

  const std::size_t bytes_per_value = maxval > 255 ? 2 : 1;
  const std::size_t needed = width * height * bytes_per_value;
  if (bytes.size() - header.position() < needed) header.bad("truncated raster");

  Image image(height, width);
  const auto* raster = reinterpret_cast<const unsigned char*>(bytes.data() + header.position());
  const double scale = static_cast<double>(maxval);
  for (std::size_t i = 0; i < width * height; ++i) {
    std::size_t stored = raster[i * bytes_per_value];
    if (bytes_per_value == 2) stored = (stored << 8) | raster[i * 2 + 1];
    if (stored > maxval) header.bad("sample exceeds maxval");
    image.pixels[static_cast<Eigen::Index>(i)] = static_cast<double>(stored) / scale;
  }
  return image;
}

Image read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Decode, "cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_pgm(bytes, path.string());
}

std::string encode_pgm(const Image& image) {
  std::ostringstream out;
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  std::string raster(image.size(), '\0');
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double q = quantize_8bit(image.pixels[static_cast<Eigen::Index>(i)]);
    raster[i] = static_cast<char>(static_cast<unsigned char>(q * 255.0 + 0.5));
  }
  out << raster;
  return out.str();
}

void write_pgm(const std::filesystem::path& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  const std::string bytes = encode_pgm(image);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace eigenhearts
