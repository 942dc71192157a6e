#include <doctest.h>

#include <cstring>
#include <random>

#include "bipath/config.hpp"
#include "bipath/data_io.hpp"
#include "bipath/synthetic_gen.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

using namespace bipath;

namespace {

std::vector<std::uint8_t> le32(std::uint32_t v) {
  return {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v >> 16),
          static_cast<std::uint8_t>(v >> 24)};
}

std::vector<std::uint8_t> le_float(float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  return le32(bits);
}

template <class Decode>
void every_truncation_rejected(const std::vector<std::uint8_t>& bytes, Decode decode) {
  for (std::size_t n = 0; n < bytes.size(); ++n) {
    const std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(n));
    REQUIRE_THROWS_AS(decode(cut), FormatError);
  }
}

FlowField random_flow(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> d(0, 3);
  FlowField f(w, h);
  for (auto& u : f.u) u = d(rng);
  for (auto& v : f.v) v = d(rng);
  return f;
}

ModelConfig tiny(double width = 1.0 / 32) {
  ModelConfig c;
  c.width = width;
  c.crop_size = 16;
  return c;
}

}  // namespace

TEST_CASE("flo byte layout") {
  std::vector<std::uint8_t> expect;
  for (auto part : {le_float(202021.25f), le32(1), le32(1), le_float(0), le_float(0)})
    expect.insert(expect.end(), part.begin(), part.end());
  CHECK(encode_flo(FlowField(1, 1)) == expect);
  CHECK(expect.size() == 20);
}

TEST_CASE("flo round trip and rejection") {
  TempDir dir;
  const FlowField f = random_flow(7, 5, 1);
  write_flo(dir / "a.flo", f);
  CHECK(read_flo(dir / "a.flo") == f);
  CHECK_FALSE(std::filesystem::exists(dir / "a.flo.tmp"));
  std::vector<std::uint8_t> bytes = encode_flo(f);
  every_truncation_rejected(bytes, decode_flo);
  std::fill(bytes.begin(), bytes.begin() + 4, 0);
  CHECK_THROWS_AS(decode_flo(bytes), FormatError);
  bytes = encode_flo(f);
  bytes.push_back(0);
  CHECK_THROWS_AS(decode_flo(bytes), FormatError);
  CHECK_THROWS(read_flo(dir / "missing.flo"));
}

TEST_CASE("dots csv") {
  CHECK(parse_dots_csv("", 64, 64).size() == 0);
  const DotMap two = parse_dots_csv("10.5,20.0\n3,4", 64, 64);
  REQUIRE(two.size() == 2);
  CHECK(two.dots()[0] == Dot{10.5, 20.0});
  try {
    parse_dots_csv("abc,3\n", 64, 64);
    FAIL("expected a parse error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
  }
  CHECK_THROWS_WITH(parse_dots_csv("1,2\n70,3\n", 64, 64), doctest::Contains("line 2"));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 64);
  DotMap m(64, 64);
  for (int i = 0; i < 50; ++i) m.add(u(rng), u(rng));
  CHECK(parse_dots_csv(format_dots_csv(m), 64, 64) == m);
}

TEST_CASE("density raw round trip") {
  DotMap d(24, 16);
  d.add(3, 4);
  d.add(20.5, 12.25);
  const DensityMap map = rasterize_density(d, 2);
  const auto bytes = encode_density(map);
  CHECK(bytes.size() == 8 + 4 * 24 * 16);
  CHECK(decode_density(bytes) == map);
  every_truncation_rejected(bytes, decode_density);
  CHECK(encode_density(map) == bytes);
}

TEST_CASE("flow input round trip") {
  const FlowInput in = encode_flow(random_flow(9, 6, 2), Image(9, 6, 1, 0.25f), FlowEncoding::cartesian);
  const auto bytes = encode_flow_input(in);
  CHECK(decode_flow_input(bytes) == in);
  every_truncation_rejected(bytes, decode_flow_input);
}

TEST_CASE("png round trip") {
  TempDir dir;
  Image img(5, 3, 3);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<float>(i % 256) / 255.0f;
  write_png(dir / "x.png", img);
  const Image back = read_png(dir / "x.png");
  REQUIRE(back.same_size(img));
  for (std::size_t i = 0; i < img.data.size(); ++i) CHECK(back.data[i] == doctest::Approx(img.data[i]).epsilon(1e-6));
  CHECK_THROWS(read_png(dir / "missing.png"));
}

TEST_CASE("checkpoint round trip") {
  std::mt19937_64 rng(4);
  const Tensor img = oracle::random_tensor<float>({1, 3, 16, 16}, rng, 0, 1);
  const Tensor flow = oracle::random_tensor<float>({1, 3, 16, 16}, rng, 0, 1);
  BiPathModel<float> a(tiny(), 1);
  a.sam_gate().value[0] = 0.3f;
  BiPathModel<float> b(tiny(), 2);
  const auto bytes = encode_checkpoint(a);
  decode_checkpoint(b, bytes);
  Tape<float> ta, tb;
  CHECK(a.forward(ta, img, flow).value() == b.forward(tb, img, flow).value());
  CHECK(encode_checkpoint(b) == bytes);

  TempDir dir;
  save_checkpoint(a, dir / "m.ckpt");
  BiPathModel<float> c(tiny(), 3);
  load_checkpoint(c, dir / "m.ckpt");
  CHECK(encode_checkpoint(c) == bytes);
}

TEST_CASE("checkpoint rejection") {
  BiPathModel<float> a(tiny(), 1);
  const auto bytes = encode_checkpoint(a);

  BiPathModel<float> wider(tiny(1.0 / 16), 1);
  CHECK_THROWS_WITH_AS(decode_checkpoint(wider, bytes), doctest::Contains("digest"), FormatError);

  // Corrupt the first parameter name: the loader reports it as missing and leaves the model untouched.
  std::vector<std::uint8_t> tampered = bytes;
  const std::size_t first_name = 4 + 4 + 8 + 4 + 2;
  tampered[first_name] ^= 0x20;
  BiPathModel<float> b(tiny(), 2);
  const auto before = encode_checkpoint(b);
  CHECK_THROWS_WITH_AS(decode_checkpoint(b, tampered), doctest::Contains("missing"), FormatError);
  CHECK(encode_checkpoint(b) == before);

  std::vector<std::uint8_t> version = bytes;
  version[4] = 9;
  CHECK_THROWS_WITH_AS(decode_checkpoint(b, version), doctest::Contains("version"), FormatError);

  // Every strict prefix fails; sampled offsets keep this quick for a 59k-parameter model.
  for (std::size_t n = 0; n < bytes.size(); n += (n < 512 ? 1 : 997)) {
    const std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(n));
    REQUIRE_THROWS_AS(decode_checkpoint(b, cut), FormatError);
  }
  const std::vector<std::uint8_t> last(bytes.begin(), bytes.end() - 1);
  CHECK_THROWS_AS(decode_checkpoint(b, last), FormatError);
}

TEST_CASE("sequence layout") {
  TempDir dir;
  const SequenceLayout layout(dir.path());
  CHECK(layout.frame_path(3).filename() == "img000003.png");
  CHECK(layout.dots_path(3).filename() == "img000003.csv");
  CHECK(layout.flo_path(2).filename() == "flow000002.flo");
  CHECK_THROWS(layout.frame_count());
  for (int i = 1; i <= 3; ++i) {
    write_png(layout.frame_path(i), Image(8, 8, 3));
    write_text_atomic(layout.dots_path(i), "");
  }
  CHECK(layout.frame_count() == 3);
  write_png(layout.frame_path(5), Image(8, 8, 3));
  write_text_atomic(layout.dots_path(5), "");
  CHECK_THROWS(layout.frame_count());
  std::filesystem::remove(layout.frame_path(5));
  std::filesystem::remove(layout.dots_path(2));
  CHECK_THROWS(layout.frame_count());
}

TEST_CASE("config defaults and keys") {
  const RunConfig d = parse_config_text("");
  CHECK(d.augment.crop_size == 576);
  CHECK(d.model.crop_size == 576);
  CHECK(d.augment.gamma_lo == 0.4);
  CHECK(d.augment.gamma_hi == 2.0);
  CHECK(d.augment.scale_lo == 0.6);
  CHECK(d.augment.scale_hi == 1.8);
  CHECK(d.trainer.lr == 1e-5);
  CHECK(d.trainer.epochs == 30);
  CHECK(d.trainer.batch == 1);
  CHECK(d.trainer.tau == 1.0);
  CHECK(d.trainer.sigma == 4.0);

  CHECK_THROWS(parse_config_text("crop = 0\n"));
  const RunConfig mid = parse_config_text("# comment\nscale_range = 0.7,1.2\n");
  CHECK(mid.augment.scale_lo == 0.7);
  CHECK(mid.augment.scale_hi == 1.2);
  CHECK_THROWS_WITH(parse_config_text("lr = 1e-4\nbogus = 1\n"), doctest::Contains("bogus"));
  CHECK_THROWS(parse_config_text("lr = fast\n"));
  CHECK_THROWS(parse_config_text("lr 1e-4\n"));

  RunConfig c;
  set_config_value(c, "width", "0.0625");
  set_config_value(c, "flow_mode", "cartesian");
  set_config_value(c, "attention", "per_stream");
  set_config_value(c, "lr_cosine", "true");
  const RunConfig again = parse_config_text(format_config(c));
  CHECK(format_config(again) == format_config(c));
  CHECK(again.model.width == 0.0625);
  CHECK(again.model.flow_mode == FlowEncoding::cartesian);
  CHECK(again.trainer.lr_cosine);
}
