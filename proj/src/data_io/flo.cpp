#include <cmath>
#include <fstream>
#include <iterator>

#include "bipath/data_io.hpp"
#include "bytes.hpp"

namespace bipath {

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes_atomic(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  write_bytes_atomic(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

namespace {
constexpr float kFloMagic = 202021.25f;
}

std::vector<std::uint8_t> encode_flo(const FlowField& flow) {
  if (flow.u.size() != static_cast<std::size_t>(flow.width) * flow.height || flow.v.size() != flow.u.size()) {
    throw std::invalid_argument("flow planes do not match the declared size");
  }
  detail::ByteWriter w;
  w.put(kFloMagic);
  w.put(static_cast<std::int32_t>(flow.width));
  w.put(static_cast<std::int32_t>(flow.height));
  for (std::size_t i = 0; i < flow.size(); ++i) {
    if (!std::isfinite(flow.u[i]) || !std::isfinite(flow.v[i])) throw NumericError("flow contains non-finite values");
    w.put(flow.u[i]);
    w.put(flow.v[i]);
  }
  return w.take();
}

FlowField decode_flo(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader r(bytes, "flo");
  if (r.get<float>() != kFloMagic) throw FormatError("flo: bad magic");
  const std::int32_t w = r.get<std::int32_t>();
  const std::int32_t h = r.get<std::int32_t>();
  if (w < 0 || h < 0) throw FormatError("flo: negative dimensions");
  r.require(static_cast<std::size_t>(w) * h * 8);
  FlowField flow(w, h);
  for (std::size_t i = 0; i < flow.size(); ++i) {
    flow.u[i] = r.get<float>();
    flow.v[i] = r.get<float>();
  }
  r.expect_end();
  return flow;
}

void write_flo(const fs::path& path, const FlowField& flow) { write_bytes_atomic(path, encode_flo(flow)); }

FlowField read_flo(const fs::path& path) { return decode_flo(read_bytes(path)); }

}  // namespace bipath
