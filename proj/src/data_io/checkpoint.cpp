#include <map>

#include "bipath/data_io.hpp"
#include "bytes.hpp"

namespace bipath {

namespace {
constexpr char kMagic[4] = {'B', 'P', 'C', 'C'};
}

std::vector<std::uint8_t> encode_checkpoint(const BiPathModel<float>& model) {
  detail::ByteWriter w;
  w.put_bytes(kMagic, 4);
  w.put(kCheckpointVersion);
  w.put(model.config().digest());
  const auto params = model.params();
  w.put(static_cast<std::uint32_t>(params.size()));
  for (const Param<float>* p : params) {
    if (!p->value.all_finite()) throw NumericError("parameter " + p->name + " is not finite");
    w.put(static_cast<std::uint16_t>(p->name.size()));
    w.put_bytes(p->name.data(), p->name.size());
    w.put(static_cast<std::uint8_t>(p->value.rank()));
    for (int d : p->value.shape()) w.put(static_cast<std::uint32_t>(d));
    w.put_bytes(p->value.raw(), p->value.size() * sizeof(float));
  }
  return w.take();
}

void decode_checkpoint(BiPathModel<float>& model, const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader r(bytes, "checkpoint");
  char magic[4];
  r.get_bytes(magic, 4);
  if (!std::equal(magic, magic + 4, kMagic)) throw FormatError("checkpoint: bad magic");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  const auto digest = r.get<std::uint64_t>();
  if (digest != model.config().digest()) {
    throw FormatError("checkpoint: config digest mismatch (checkpoint was written for a different model config)");
  }
  const auto count = r.get<std::uint32_t>();
  std::map<std::string, Tensor> loaded;
  for (std::uint32_t k = 0; k < count; ++k) {
    std::string name(r.get<std::uint16_t>(), '\0');
    r.get_bytes(name.data(), name.size());
    Shape shape(r.get<std::uint8_t>());
    for (int& d : shape) d = static_cast<int>(r.get<std::uint32_t>());
    const std::size_t n = shape_numel(shape);
    r.require(n * sizeof(float));
    Tensor t(shape);
    r.get_bytes(t.raw(), n * sizeof(float));
    if (!loaded.emplace(name, std::move(t)).second) throw FormatError("checkpoint: duplicate parameter " + name);
  }
  r.expect_end();

  auto params = model.params();
  for (const Param<float>* p : params) {
    auto it = loaded.find(p->name);
    if (it == loaded.end()) throw FormatError("checkpoint: missing parameter " + p->name);
    if (it->second.shape() != p->value.shape()) {
      throw FormatError("checkpoint: shape mismatch for " + p->name + ": " + shape_string(it->second.shape()) +
                        " vs " + shape_string(p->value.shape()));
    }
  }
  if (loaded.size() != params.size()) {
    for (const auto& [name, t] : loaded) {
      if (!model.find(name)) throw FormatError("checkpoint: unexpected parameter " + name);
    }
  }
  for (Param<float>* p : params) p->value = std::move(loaded.at(p->name));
}

void save_checkpoint(const BiPathModel<float>& model, const fs::path& path) {
  write_bytes_atomic(path, encode_checkpoint(model));
}

void load_checkpoint(BiPathModel<float>& model, const fs::path& path) { decode_checkpoint(model, read_bytes(path)); }

}  // namespace bipath
