#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "bipath/autodiff.hpp"
#include "bipath/optical_flow.hpp"

namespace bipath {

enum class AttentionPlacement {
  fused,       // SAM and CAM both over the concatenated streams
  per_stream,  // SAM over the image stream, CAM over the flow stream
};

std::string to_string(AttentionPlacement placement);
AttentionPlacement parse_attention_placement(const std::string& text);

struct ModelConfig {
  double width = 1.0;  // channel multiplier in (0, 1]
  int crop_size = 576;
  FlowEncoding flow_mode = FlowEncoding::polar;
  bool flow_enabled = true;
  AttentionPlacement attention = AttentionPlacement::fused;
  double init_std = 0.01;  // std of the normal init for non-encoder convs

  void validate() const;

  std::vector<int> encoder_channels() const;  // four stages
  std::vector<int> decoder_channels() const;  // six dilated convs
  int regression_channels() const;
  /// Channels entering the attention modules.
  int attention_channels() const;
  /// Query/key width of the spatial attention: max(1, C / 8).
  int attention_reduced_channels() const;

  /// 64-bit FNV-1a digest of everything that fixes the parameter table.
  std::uint64_t digest() const;
};

/// Closed-form parameter count for a config (weights plus biases plus the two gates).
std::size_t parameter_count(const ModelConfig& cfg);

/// Encoder output shape C×H/8×W/8 for an input of H×W; throws unless both divide by 8.
Shape encoder_output_shape(const ModelConfig& cfg, int height, int width);
Shape decoder_output_shape(const ModelConfig& cfg, const Shape& encoder_shape);

enum class Stream { image, flow };

/// Two-stream encoder/decoder crowd counter with spatial and channel attention.
/// All stage methods read parameters onto the tape of their input.
template <class T>
class BiPathModel {
 public:
  BiPathModel(const ModelConfig& cfg, std::uint64_t seed);
  BiPathModel(const BiPathModel&) = delete;
  BiPathModel& operator=(const BiPathModel&) = delete;

  const ModelConfig& config() const noexcept { return cfg_; }
  std::vector<Param<T>*> params();
  std::vector<const Param<T>*> params() const;
  Param<T>* find(const std::string& name);
  std::size_t parameter_count() const;
  void zero_grad();

  Param<T>& sam_gate() { return *sam_.gamma; }
  Param<T>& cam_gate() { return *cam_gamma_; }

  Var<T> encoder_forward(Stream stream, const Var<T>& x) const;
  Var<T> decoder_forward(Stream stream, const Var<T>& features) const;
  Var<T> sam_forward(const Var<T>& x) const;
  Var<T> cam_forward(const Var<T>& x) const;
  /// Attention over the decoded streams; `flow_features` is ignored when the flow branch is disabled.
  Var<T> attention_forward(const Var<T>& image_features, const Var<T>* flow_features) const;
  Var<T> regression_forward(const Var<T>& features) const;

  /// Full forward pass. image and flow are N×3×H×W; returns N×1×H×W.
  Var<T> forward(Tape<T>& tape, const BasicTensor<T>& image, const BasicTensor<T>& flow) const;
  /// Same graph with the attention modules replaced by identities.
  Var<T> forward_without_attention(Tape<T>& tape, const BasicTensor<T>& image, const BasicTensor<T>& flow) const;

 private:
  struct Conv {
    Param<T>* weight = nullptr;
    Param<T>* bias = nullptr;
    ConvSpec spec;
    bool relu = true;
  };
  struct Sam {
    Conv query, key, value;
    Param<T>* gamma = nullptr;
  };

  Conv make_conv(const std::string& name, int in, int out, int kernel, ConvSpec spec, bool relu, double std);
  Var<T> apply(const Conv& conv, const Var<T>& x) const;
  Var<T> decode_streams(Tape<T>& tape, const BasicTensor<T>& image, const BasicTensor<T>& flow, Var<T>& image_features,
                        Var<T>& flow_features) const;

  ModelConfig cfg_;
  std::deque<Param<T>> store_;
  std::vector<Conv> encoder_[2];
  std::vector<Conv> decoder_[2];
  Sam sam_;
  Param<T>* cam_gamma_ = nullptr;
  std::vector<Conv> regression_;
  std::uint64_t init_state_ = 0;
};

extern template class BiPathModel<float>;
extern template class BiPathModel<double>;

/// Copies parameter values between models built from the same config (e.g. float to double).
template <class To, class From>
void copy_parameters(BiPathModel<To>& dst, const BiPathModel<From>& src) {
  auto d = dst.params();
  auto s = src.params();
  if (d.size() != s.size()) throw std::invalid_argument("copy_parameters: parameter tables differ");
  for (std::size_t i = 0; i < d.size(); ++i) d[i]->value = s[i]->value.template cast<To>();
}

struct AdamOptions {
  double lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <class T>
class Adam {
 public:
  Adam(std::vector<Param<T>*> params, AdamOptions options);
  void step();
  void zero_grad();
  long steps() const noexcept { return steps_; }
  double lr() const noexcept { return opt_.lr; }
  void set_lr(double lr);

 private:
  std::vector<Param<T>*> params_;
  std::vector<std::vector<double>> m_, v_;
  AdamOptions opt_;
  long steps_ = 0;
};

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace bipath
