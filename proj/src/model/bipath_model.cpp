#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "bipath/model.hpp"

namespace bipath {
namespace {

constexpr int kEncoderBase[4] = {64, 256, 512, 1024};
constexpr int kEncoderStride[4] = {2, 1, 2, 2};
constexpr int kDecoderBase[6] = {512, 512, 512, 256, 128, 64};
constexpr int kRegressionBase = 512;

int scaled_channels(double width, int base) {
  const int c = static_cast<int>(std::lround(width * base));
  if (c < 1) throw std::invalid_argument("width multiplier leaves a layer with zero channels");
  return c;
}

std::size_t conv_params(int in, int out, int kernel) {
  return static_cast<std::size_t>(out) * in * kernel * kernel + out;
}

const char* stream_name(Stream s) { return s == Stream::image ? "image" : "flow"; }

}  // namespace

std::string to_string(AttentionPlacement placement) {
  return placement == AttentionPlacement::fused ? "fused" : "per_stream";
}

AttentionPlacement parse_attention_placement(const std::string& text) {
  if (text == "fused") return AttentionPlacement::fused;
  if (text == "per_stream") return AttentionPlacement::per_stream;
  throw std::invalid_argument("unknown attention placement '" + text + "' (expected fused or per_stream)");
}

void ModelConfig::validate() const {
  if (!(width > 0 && width <= 1)) throw std::invalid_argument("width multiplier must lie in (0, 1]");
  if (crop_size < 8 || crop_size % 8 != 0) throw std::invalid_argument("crop size must be a positive multiple of 8");
  if (!(init_std > 0)) throw std::invalid_argument("init_std must be positive");
  encoder_channels();
  decoder_channels();
  regression_channels();
}

std::vector<int> ModelConfig::encoder_channels() const {
  std::vector<int> out;
  for (int base : kEncoderBase) out.push_back(scaled_channels(width, base));
  return out;
}

std::vector<int> ModelConfig::decoder_channels() const {
  std::vector<int> out;
  for (int base : kDecoderBase) out.push_back(scaled_channels(width, base));
  return out;
}

int ModelConfig::regression_channels() const { return scaled_channels(width, kRegressionBase); }

int ModelConfig::attention_channels() const {
  const int stream = decoder_channels().back();
  return (flow_enabled && attention == AttentionPlacement::fused) ? 2 * stream : stream;
}

int ModelConfig::attention_reduced_channels() const { return std::max(1, attention_channels() / 8); }

std::uint64_t ModelConfig::digest() const {
  std::ostringstream os;
  os << "enc=";
  for (int c : encoder_channels()) os << c << ',';
  os << ";dec=";
  for (int c : decoder_channels()) os << c << ',';
  os << ";reg=" << regression_channels() << ";flow=" << flow_enabled << ";mode=" << to_string(flow_mode)
     << ";attention=" << to_string(attention);
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : os.str()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::size_t parameter_count(const ModelConfig& cfg) {
  const auto enc = cfg.encoder_channels();
  const auto dec = cfg.decoder_channels();
  std::size_t stream = 0;
  int in = 3;
  for (int c : enc) {
    stream += conv_params(in, c, 3) + conv_params(c, c, 3);
    in = c;
  }
  for (int c : dec) {
    stream += conv_params(in, c, 3);
    in = c;
  }
  const int att = cfg.attention_channels();
  const int red = cfg.attention_reduced_channels();
  const std::size_t sam = 2 * conv_params(att, red, 1) + conv_params(att, att, 1) + 1;
  const std::size_t cam = 1;
  const int reg = cfg.regression_channels();
  const std::size_t regression = conv_params(2 * att, reg, 3) + conv_params(reg, 1, 1);
  return (cfg.flow_enabled ? 2 : 1) * stream + sam + cam + regression;
}

Shape encoder_output_shape(const ModelConfig& cfg, int height, int width) {
  if (height % 8 != 0 || width % 8 != 0 || height < 8 || width < 8) {
    throw std::invalid_argument("input height and width must be positive multiples of 8");
  }
  return {cfg.encoder_channels().back(), height / 8, width / 8};
}

Shape decoder_output_shape(const ModelConfig& cfg, const Shape& encoder_shape) {
  if (encoder_shape.size() != 3 || encoder_shape[0] != cfg.encoder_channels().back()) {
    throw ShapeError("decoder input channels do not match the encoder");
  }
  return {cfg.decoder_channels().back(), encoder_shape[1], encoder_shape[2]};
}

template <class T>
BiPathModel<T>::BiPathModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg), init_state_(seed) {
  cfg_.validate();
  const auto enc = cfg_.encoder_channels();
  const auto dec = cfg_.decoder_channels();
  const int streams = cfg_.flow_enabled ? 2 : 1;
  for (int s = 0; s < streams; ++s) {
    const std::string prefix = std::string(stream_name(static_cast<Stream>(s))) + ".";
    int in = 3;
    for (int stage = 0; stage < 4; ++stage) {
      const std::string name = prefix + "encoder.stage" + std::to_string(stage);
      const int c = enc[stage];
      // He init for the plain conv encoder that stands in for a pretrained backbone.
      encoder_[s].push_back(make_conv(name + ".conv0", in, c, 3, {kEncoderStride[stage], 1, 1}, true,
                                      std::sqrt(2.0 / (9.0 * in))));
      encoder_[s].push_back(make_conv(name + ".conv1", c, c, 3, {1, 1, 1}, true, std::sqrt(2.0 / (9.0 * c))));
      in = c;
    }
    for (int i = 0; i < 6; ++i) {
      decoder_[s].push_back(make_conv(prefix + "decoder.conv" + std::to_string(i), in, dec[i], 3, {1, 2, 2}, true,
                                      cfg_.init_std));
      in = dec[i];
    }
  }
  const int att = cfg_.attention_channels();
  const int red = cfg_.attention_reduced_channels();
  sam_.query = make_conv("sam.query", att, red, 1, {}, false, cfg_.init_std);
  sam_.key = make_conv("sam.key", att, red, 1, {}, false, cfg_.init_std);
  sam_.value = make_conv("sam.value", att, att, 1, {}, false, cfg_.init_std);
  sam_.gamma = &store_.emplace_back("sam.gamma", BasicTensor<T>({1}));
  cam_gamma_ = &store_.emplace_back("cam.gamma", BasicTensor<T>({1}));
  const int reg = cfg_.regression_channels();
  regression_.push_back(make_conv("regression.conv0", 2 * att, reg, 3, {1, 2, 2}, true, cfg_.init_std));
  regression_.push_back(make_conv("regression.head", reg, 1, 1, {}, true, cfg_.init_std));
}

template <class T>
typename BiPathModel<T>::Conv BiPathModel<T>::make_conv(const std::string& name, int in, int out, int kernel,
                                                       ConvSpec spec, bool relu, double std) {
  // Each layer draws from its own stream so adding layers does not reshuffle earlier weights.
  std::mt19937_64 rng(init_state_ ^ (0x9E3779B97F4A7C15ull * (store_.size() + 1)));
  std::normal_distribution<double> normal(0.0, std);
  BasicTensor<T> w({out, in, kernel, kernel});
  for (auto& v : w.data()) v = static_cast<T>(normal(rng));
  Conv conv;
  conv.weight = &store_.emplace_back(name + ".weight", std::move(w));
  conv.bias = &store_.emplace_back(name + ".bias", BasicTensor<T>({out}));
  conv.spec = spec;
  conv.relu = relu;
  return conv;
}

template <class T>
std::vector<Param<T>*> BiPathModel<T>::params() {
  std::vector<Param<T>*> out;
  for (auto& p : store_) out.push_back(&p);
  return out;
}

template <class T>
std::vector<const Param<T>*> BiPathModel<T>::params() const {
  std::vector<const Param<T>*> out;
  for (const auto& p : store_) out.push_back(&p);
  return out;
}

template <class T>
Param<T>* BiPathModel<T>::find(const std::string& name) {
  for (auto& p : store_)
    if (p.name == name) return &p;
  return nullptr;
}

template <class T>
std::size_t BiPathModel<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : store_) n += p.value.size();
  return n;
}

template <class T>
void BiPathModel<T>::zero_grad() {
  for (auto& p : store_) p.zero_grad();
}

template <class T>
Var<T> BiPathModel<T>::apply(const Conv& conv, const Var<T>& x) const {
  Tape<T>& tape = x.tape();
  Var<T> y = conv2d(x, tape.param(*conv.weight), tape.param(*conv.bias), conv.spec);
  return conv.relu ? relu(y) : y;
}

template <class T>
Var<T> BiPathModel<T>::encoder_forward(Stream stream, const Var<T>& x) const {
  const int s = static_cast<int>(stream);
  if (encoder_[s].empty()) throw std::logic_error("flow stream requested but the flow branch is disabled");
  const Shape shape = x.shape();
  if (shape.size() != 4 || shape[1] != 3) throw ShapeError("encoder expects N×3×H×W input");
  if (shape[2] % 8 != 0 || shape[3] % 8 != 0) throw ShapeError("encoder input height and width must divide by 8");
  Var<T> h = x;
  for (const Conv& conv : encoder_[s]) h = apply(conv, h);
  return h;
}

template <class T>
Var<T> BiPathModel<T>::decoder_forward(Stream stream, const Var<T>& features) const {
  const int s = static_cast<int>(stream);
  if (decoder_[s].empty()) throw std::logic_error("flow stream requested but the flow branch is disabled");
  const Shape shape = features.shape();
  if (shape.size() != 4 || shape[1] != cfg_.encoder_channels().back()) {
    throw ShapeError("decoder expects " + std::to_string(cfg_.encoder_channels().back()) + " input channels, got " +
                     shape_string(shape));
  }
  Var<T> h = features;
  for (const Conv& conv : decoder_[s]) h = apply(conv, h);
  return h;
}

template <class T>
Var<T> BiPathModel<T>::sam_forward(const Var<T>& x) const {
  const Shape s = x.shape();
  if (s.size() != 4 || s[1] != cfg_.attention_channels()) throw ShapeError("SAM input channel mismatch");
  const int n = s[0], c = s[1], hw = s[2] * s[3];
  const int red = cfg_.attention_reduced_channels();
  Var<T> q = reshape(apply(sam_.query, x), {n, red, hw});
  Var<T> k = reshape(apply(sam_.key, x), {n, red, hw});
  Var<T> v = reshape(apply(sam_.value, x), {n, c, hw});
  Var<T> attention = softmax_rows(matmul(transpose_last2(q), k));  // n × hw × hw
  Var<T> out = reshape(matmul(v, transpose_last2(attention)), s);
  return scale_add(x, out, x.tape().param(*sam_.gamma));
}

template <class T>
Var<T> BiPathModel<T>::cam_forward(const Var<T>& x) const {
  const Shape s = x.shape();
  if (s.size() != 4) throw ShapeError("CAM expects a rank-4 input");
  const int n = s[0], c = s[1], hw = s[2] * s[3];
  Var<T> flat = reshape(x, {n, c, hw});
  Var<T> attention = softmax_rows(matmul(flat, transpose_last2(flat)));  // n × c × c
  Var<T> out = reshape(matmul(attention, flat), s);
  return scale_add(x, out, x.tape().param(*cam_gamma_));
}

template <class T>
Var<T> BiPathModel<T>::attention_forward(const Var<T>& image_features, const Var<T>* flow_features) const {
  const bool with_flow = cfg_.flow_enabled && flow_features != nullptr;
  std::vector<Var<T>> parts;
  if (cfg_.attention == AttentionPlacement::fused) {
    Var<T> fused = image_features;
    if (with_flow) {
      const Var<T> streams[2] = {image_features, *flow_features};
      fused = concat_channels<T>(streams);
    }
    parts = {sam_forward(fused), cam_forward(fused)};
  } else {
    parts = {sam_forward(image_features), cam_forward(with_flow ? *flow_features : image_features)};
  }
  return concat_channels<T>(parts);
}

template <class T>
Var<T> BiPathModel<T>::regression_forward(const Var<T>& features) const {
  Var<T> h = features;
  for (const Conv& conv : regression_) h = apply(conv, h);
  return bilinear_upsample(h, 8);
}

template <class T>
Var<T> BiPathModel<T>::decode_streams(Tape<T>& tape, const BasicTensor<T>& image, const BasicTensor<T>& flow,
                                      Var<T>& image_features, Var<T>& flow_features) const {
  if (image.rank() != 4 || image.dim(1) != 3) throw ShapeError("image must be N×3×H×W");
  if (cfg_.flow_enabled && flow.shape() != image.shape()) {
    throw ShapeError("image and flow inputs differ in size: " + shape_string(image.shape()) + " vs " +
                     shape_string(flow.shape()));
  }
  image_features = decoder_forward(Stream::image, encoder_forward(Stream::image, tape.constant(image)));
  if (cfg_.flow_enabled) {
    flow_features = decoder_forward(Stream::flow, encoder_forward(Stream::flow, tape.constant(flow)));
  }
  return image_features;
}

template <class T>
Var<T> BiPathModel<T>::forward(Tape<T>& tape, const BasicTensor<T>& image, const BasicTensor<T>& flow) const {
  Var<T> fi, ff;
  decode_streams(tape, image, flow, fi, ff);
  return regression_forward(attention_forward(fi, cfg_.flow_enabled ? &ff : nullptr));
}

template <class T>
Var<T> BiPathModel<T>::forward_without_attention(Tape<T>& tape, const BasicTensor<T>& image,
                                                 const BasicTensor<T>& flow) const {
  Var<T> fi, ff;
  decode_streams(tape, image, flow, fi, ff);
  std::vector<Var<T>> parts;
  if (cfg_.attention == AttentionPlacement::fused) {
    Var<T> fused = fi;
    if (cfg_.flow_enabled) {
      const Var<T> streams[2] = {fi, ff};
      fused = concat_channels<T>(streams);
    }
    parts = {fused, fused};
  } else {
    parts = {fi, cfg_.flow_enabled ? ff : fi};
  }
  return regression_forward(concat_channels<T>(parts));
}

template class BiPathModel<float>;
template class BiPathModel<double>;

}  // namespace bipath
