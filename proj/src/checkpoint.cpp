#include "eigenhearts/binary_io.hpp"
#include "eigenhearts/convnet.hpp"

namespace eigenhearts {

namespace {
constexpr char kModelMagic[4] = {'E', 'H', 'C', 'N'};
constexpr std::uint32_t kModelVersion = 1;
}  // namespace

std::string encode_model(const ConvNetModel& model) {
  binary::Writer w;
  w.bytes(std::string_view(kModelMagic, 4));
  w.u32(kModelVersion);
  const ConvNetArch& a = model.arch;
  for (std::size_t v : {a.height, a.width, a.conv_channels[0], a.conv_channels[1], a.conv_channels[2],
                        a.dense_hidden, a.classes}) {
    w.u64(v);
  }
  w.u64(model.seed);
  model.params.for_each([&](const auto& t) { w.f64_block(t); });
  return w.data();
}

ConvNetModel decode_model(const std::string& bytes, const std::string& name) {
  binary::Reader r(bytes, name);
  if (r.bytes(4) != std::string_view(kModelMagic, 4)) fail(ErrorKind::Format, name + ": bad magic");
  if (const auto version = r.u32(); version != kModelVersion) {
    fail(ErrorKind::Format, name + ": unsupported checkpoint version " + std::to_string(version));
  }
  ConvNetModel model;
  ConvNetArch& a = model.arch;
  a.height = r.u64();
  a.width = r.u64();
  for (auto& c : a.conv_channels) c = r.u64();
  a.dense_hidden = r.u64();
  a.classes = r.u64();
  model.seed = r.u64();
  try {
    a.validate();
  } catch (const Error& e) {
    fail(ErrorKind::Format, name + ": " + e.what());
  }
  if (a.parameter_count() * 8 != r.remaining()) {
    fail(r.remaining() < a.parameter_count() * 8 ? ErrorKind::Io : ErrorKind::Format,
         name + ": parameter block is " + std::to_string(r.remaining()) + " bytes, architecture needs " +
             std::to_string(a.parameter_count() * 8));
  }
  model.params = ConvNetParams::zeros(a);
  model.params.for_each([&](auto& t) {
    const auto block = r.f64_block<double>(static_cast<std::uint64_t>(t.rows()), static_cast<std::uint64_t>(t.cols()));
    t = block;
  });
  return model;
}

void save_model(const std::filesystem::path& path, const ConvNetModel& model) {
  binary::write_file(path.string(), encode_model(model));
}

ConvNetModel load_model(const std::filesystem::path& path) {
  return decode_model(binary::read_file(path.string()), path.string());
}

}  // namespace eigenhearts
