#include <png.h>

#include <algorithm>
#include <cmath>
#include <memory>

#include "bipath/data_io.hpp"
#include "bytes.hpp"

namespace bipath {

std::vector<std::uint8_t> encode_density(const DensityMap& map) {
  if (map.values.size() != static_cast<std::size_t>(map.width) * map.height) {
    throw std::invalid_argument("density values do not match the declared size");
  }
  detail::ByteWriter w;
  w.put(static_cast<std::uint32_t>(map.width));
  w.put(static_cast<std::uint32_t>(map.height));
  w.put_bytes(map.values.data(), map.values.size() * sizeof(float));
  return w.take();
}

DensityMap decode_density(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader r(bytes, "density");
  const auto w = r.get<std::uint32_t>();
  const auto h = r.get<std::uint32_t>();
  r.require(static_cast<std::size_t>(w) * h * sizeof(float));
  DensityMap map(static_cast<int>(w), static_cast<int>(h));
  r.get_bytes(map.values.data(), map.values.size() * sizeof(float));
  r.expect_end();
  return map;
}

void write_density(const fs::path& path, const DensityMap& map) { write_bytes_atomic(path, encode_density(map)); }

DensityMap read_density(const fs::path& path) { return decode_density(read_bytes(path)); }

void write_density_png(const fs::path& path, const DensityMap& map) {
  Image gray(map.width, map.height, 1);
  float peak = 0;
  for (float v : map.values) peak = std::max(peak, v);
  for (std::size_t i = 0; i < map.values.size(); ++i) gray.data[i] = peak > 0 ? std::max(0.0f, map.values[i]) / peak : 0;
  write_png(path, gray);
}

std::vector<std::uint8_t> encode_flow_input(const FlowInput& input) {
  if (input.planes.channels != 3) throw std::invalid_argument("flow input must have three planes");
  detail::ByteWriter w;
  w.put(static_cast<std::uint32_t>(input.planes.width));
  w.put(static_cast<std::uint32_t>(input.planes.height));
  w.put(static_cast<std::uint8_t>(input.mode == FlowEncoding::polar ? 1 : 0));
  w.put(input.max_magnitude);
  w.put_bytes(input.planes.data.data(), input.planes.data.size() * sizeof(float));
  return w.take();
}

FlowInput decode_flow_input(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader r(bytes, "flow input");
  const auto w = r.get<std::uint32_t>();
  const auto h = r.get<std::uint32_t>();
  const auto mode = r.get<std::uint8_t>();
  if (mode > 1) throw FormatError("flow input: unknown encoding tag " + std::to_string(mode));
  FlowInput input;
  input.mode = mode == 1 ? FlowEncoding::polar : FlowEncoding::cartesian;
  input.max_magnitude = r.get<float>();
  r.require(static_cast<std::size_t>(w) * h * 3 * sizeof(float));
  input.planes = Image(static_cast<int>(w), static_cast<int>(h), 3);
  r.get_bytes(input.planes.data.data(), input.planes.data.size() * sizeof(float));
  r.expect_end();
  return input;
}

void write_flow_input(const fs::path& path, const FlowInput& input) {
  write_bytes_atomic(path, encode_flow_input(input));
}

FlowInput read_flow_input(const fs::path& path) { return decode_flow_input(read_bytes(path)); }

Image read_png(const fs::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw FormatError("png " + path.string() + ": " + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&img);
    throw FormatError("png " + path.string() + ": " + img.message);
  }
  const int w = static_cast<int>(img.width), h = static_cast<int>(img.height);
  Image out(w, h, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) out.at(c, x, y) = buf[(static_cast<std::size_t>(y) * w + x) * 3 + c] / 255.0f;
  return out;
}

void write_png(const fs::path& path, const Image& image) {
  if (image.channels != 1 && image.channels != 3) throw std::invalid_argument("png writer takes 1 or 3 channels");
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = image.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int c = image.channels;
  std::vector<png_byte> buf(static_cast<std::size_t>(image.width) * image.height * c);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      for (int k = 0; k < c; ++k) {
        const float v = std::clamp(image.at(k, x, y), 0.0f, 1.0f);
        buf[(static_cast<std::size_t>(y) * image.width + x) * c + k] = static_cast<png_byte>(std::lround(v * 255.0f));
      }
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, buf.data(), 0, nullptr)) {
    throw std::runtime_error(std::string("png encode: ") + img.message);
  }
  std::vector<std::uint8_t> bytes(size);
  if (!png_image_write_to_memory(&img, bytes.data(), &size, 0, buf.data(), 0, nullptr)) {
    throw std::runtime_error(std::string("png encode: ") + img.message);
  }
  bytes.resize(size);
  write_bytes_atomic(path, bytes);
}

}  // namespace bipath
