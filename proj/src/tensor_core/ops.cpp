#include <algorithm>
#include <cmath>
#include <numeric>

#include "bipath/autodiff.hpp"

namespace bipath {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

void require_rank(const Shape& s, int rank, const char* op) {
  require(static_cast<int>(s.size()) == rank,
          std::string(op) + ": expected rank " + std::to_string(rank) + ", got " + shape_string(s));
}

struct ConvGeometry {
  int channels, height, width;
  int kernel_h, kernel_w;
  int out_h, out_w;
  ConvSpec spec;

  std::size_t patch() const { return static_cast<std::size_t>(channels) * kernel_h * kernel_w; }
  std::size_t positions() const { return static_cast<std::size_t>(out_h) * out_w; }
};

// Unfolds one image (C×H×W) into a (C·Kh·Kw)×(Ho·Wo) matrix.
template <class T>
void im2col(const T* image, const ConvGeometry& g, T* col) {
  const std::size_t P = g.positions();
  for (int c = 0; c < g.channels; ++c) {
    for (int i = 0; i < g.kernel_h; ++i) {
      for (int j = 0; j < g.kernel_w; ++j) {
        T* row = col + ((static_cast<std::size_t>(c) * g.kernel_h + i) * g.kernel_w + j) * P;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.spec.stride - g.spec.padding + i * g.spec.dilation;
          T* dst = row + static_cast<std::size_t>(oy) * g.out_w;
          if (iy < 0 || iy >= g.height) {
            std::fill(dst, dst + g.out_w, T(0));
            continue;
          }
          const T* src = image + (static_cast<std::size_t>(c) * g.height + iy) * g.width;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.spec.stride - g.spec.padding + j * g.spec.dilation;
            dst[ox] = (ix >= 0 && ix < g.width) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

template <class T>
void col2im(const T* col, const ConvGeometry& g, T* image) {
  const std::size_t P = g.positions();
  for (int c = 0; c < g.channels; ++c) {
    for (int i = 0; i < g.kernel_h; ++i) {
      for (int j = 0; j < g.kernel_w; ++j) {
        const T* row = col + ((static_cast<std::size_t>(c) * g.kernel_h + i) * g.kernel_w + j) * P;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.spec.stride - g.spec.padding + i * g.spec.dilation;
          if (iy < 0 || iy >= g.height) continue;
          T* dst = image + (static_cast<std::size_t>(c) * g.height + iy) * g.width;
          const T* src = row + static_cast<std::size_t>(oy) * g.out_w;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.spec.stride - g.spec.padding + j * g.spec.dilation;
            if (ix >= 0 && ix < g.width) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

template <class T>
inline void axpy(std::size_t n, T a, const T* x, T* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

template <class T>
inline T dot(std::size_t n, const T* x, const T* y) {
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

// C (M×P) += A (M×K) · B (K×P), all row-major.
template <class T>
void gemm_acc(std::size_t M, std::size_t K, std::size_t P, const T* A, const T* B, T* C) {
  for (std::size_t i = 0; i < M; ++i) {
    T* c_row = C + i * P;
    const T* a_row = A + i * K;
    for (std::size_t k = 0; k < K; ++k) axpy(P, a_row[k], B + k * P, c_row);
  }
}

struct BatchedDims {
  std::size_t batch, rows, cols;
};

BatchedDims batched(const Shape& s, const char* op) {
  require(s.size() == 2 || s.size() == 3, std::string(op) + ": expected rank 2 or 3, got " + shape_string(s));
  if (s.size() == 2) return {1, static_cast<std::size_t>(s[0]), static_cast<std::size_t>(s[1])};
  return {static_cast<std::size_t>(s[0]), static_cast<std::size_t>(s[1]), static_cast<std::size_t>(s[2])};
}

template <class T>
void add_into(BasicTensor<T>& dst, const BasicTensor<T>& src) {
  auto d = dst.data();
  auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

}  // namespace

int conv_output_extent(int input, int kernel, const ConvSpec& spec) {
  if (spec.stride < 1 || spec.dilation < 1 || spec.padding < 0) {
    throw std::invalid_argument("conv2d: stride and dilation must be >= 1 and padding >= 0");
  }
  const int span = spec.dilation * (kernel - 1) + 1;
  const int padded = input + 2 * spec.padding;
  if (padded < span) {
    throw ShapeError("conv2d: output extent would be nonpositive (input " + std::to_string(input) + ", kernel span " +
                     std::to_string(span) + ")");
  }
  return (padded - span) / spec.stride + 1;
}

template <class T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, const ConvSpec& spec) {
  const auto& X = x.value();
  const auto& W = weight.value();
  const auto& B = bias.value();
  require_rank(X.shape(), 4, "conv2d input");
  require_rank(W.shape(), 4, "conv2d weight");
  require_rank(B.shape(), 1, "conv2d bias");
  require(W.dim(1) == X.dim(1), "conv2d: channel mismatch, weight expects " + std::to_string(W.dim(1)) +
                                    " input channels but input has " + std::to_string(X.dim(1)));
  require(B.dim(0) == W.dim(0), "conv2d: bias length does not match output channels");

  const int N = X.dim(0);
  const int O = W.dim(0);
  ConvGeometry g{X.dim(1), X.dim(2), X.dim(3), W.dim(2), W.dim(3), 0, 0, spec};
  g.out_h = conv_output_extent(g.height, g.kernel_h, spec);
  g.out_w = conv_output_extent(g.width, g.kernel_w, spec);
  const std::size_t K = g.patch();
  const std::size_t P = g.positions();
  const std::size_t in_stride = static_cast<std::size_t>(g.channels) * g.height * g.width;

  BasicTensor<T> out({N, O, g.out_h, g.out_w});
  std::vector<T> col(K * P);
  for (int n = 0; n < N; ++n) {
    im2col(X.raw() + n * in_stride, g, col.data());
    T* dst = out.raw() + static_cast<std::size_t>(n) * O * P;
    for (int o = 0; o < O; ++o) std::fill(dst + o * P, dst + (o + 1) * P, B[o]);
    gemm_acc(static_cast<std::size_t>(O), K, P, W.raw(), col.data(), dst);
  }

  auto backward = [x, weight, bias, g, N, O, K, P, in_stride](Tape<T>& tape, const BasicTensor<T>& grad) {
    const bool need_x = tape.requires_grad(x);
    const bool need_w = tape.requires_grad(weight);
    const bool need_b = tape.requires_grad(bias);
    const auto& Xv = x.value();
    const auto& Wv = weight.value();
    T* dx = need_x ? tape.grad_buffer(x).raw() : nullptr;
    T* dw = need_w ? tape.grad_buffer(weight).raw() : nullptr;
    T* db = need_b ? tape.grad_buffer(bias).raw() : nullptr;
    std::vector<T> col(need_w ? K * P : 0);
    std::vector<T> dcol(need_x ? K * P : 0);
    for (int n = 0; n < N; ++n) {
      const T* G = grad.raw() + static_cast<std::size_t>(n) * O * P;
      if (need_b) {
        for (int o = 0; o < O; ++o) db[o] += std::accumulate(G + o * P, G + (o + 1) * P, T(0));
      }
      if (need_w) {
        im2col(Xv.raw() + n * in_stride, g, col.data());
        for (int o = 0; o < O; ++o) {
          for (std::size_t k = 0; k < K; ++k) dw[o * K + k] += dot(P, G + o * P, col.data() + k * P);
        }
      }
      if (need_x) {
        std::fill(dcol.begin(), dcol.end(), T(0));
        for (int o = 0; o < O; ++o) {
          for (std::size_t k = 0; k < K; ++k) axpy(P, Wv[o * K + k], G + o * P, dcol.data() + k * P);
        }
        col2im(dcol.data(), g, dx + n * in_stride);
      }
    }
  };
  return x.tape().record(std::move(out), {x, weight, bias}, std::move(backward));
}

template <class T>
Var<T> relu(const Var<T>& x) {
  BasicTensor<T> out = x.value();
  for (auto& v : out.data()) v = v > T(0) ? v : T(0);
  auto backward = [x](Tape<T>& tape, const BasicTensor<T>& grad) {
    auto dx = tape.grad_buffer(x).data();
    auto xv = x.value().data();
    auto g = grad.data();
    for (std::size_t i = 0; i < dx.size(); ++i) {
      if (xv[i] > T(0)) dx[i] += g[i];
    }
  };
  return x.tape().record(std::move(out), {x}, std::move(backward));
}

template <class T>
Var<T> add(const Var<T>& x, const Var<T>& y) {
  require(x.shape() == y.shape(), "add: shape mismatch " + shape_string(x.shape()) + " vs " + shape_string(y.shape()));
  BasicTensor<T> out = x.value();
  add_into(out, y.value());
  auto backward = [x, y](Tape<T>& tape, const BasicTensor<T>& grad) {
    if (tape.requires_grad(x)) add_into(tape.grad_buffer(x), grad);
    if (tape.requires_grad(y)) add_into(tape.grad_buffer(y), grad);
  };
  return x.tape().record(std::move(out), {x, y}, std::move(backward));
}

template <class T>
Var<T> scale_add(const Var<T>& x, const Var<T>& y, const Var<T>& gamma) {
  require(x.shape() == y.shape(),
          "scale_add: shape mismatch " + shape_string(x.shape()) + " vs " + shape_string(y.shape()));
  require(gamma.value().size() == 1, "scale_add: gamma must hold exactly one element");
  const T gv = gamma.value()[0];
  BasicTensor<T> out = x.value();
  if (gv != T(0)) {
    auto o = out.data();
    auto yv = y.value().data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += gv * yv[i];
  }
  auto backward = [x, y, gamma](Tape<T>& tape, const BasicTensor<T>& grad) {
    const T gv = gamma.value()[0];
    auto g = grad.data();
    if (tape.requires_grad(x)) add_into(tape.grad_buffer(x), grad);
    if (tape.requires_grad(y)) {
      auto dy = tape.grad_buffer(y).data();
      for (std::size_t i = 0; i < dy.size(); ++i) dy[i] += gv * g[i];
    }
    if (tape.requires_grad(gamma)) {
      auto yv = y.value().data();
      T acc = 0;
      for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * yv[i];
      tape.grad_buffer(gamma)[0] += acc;
    }
  };
  return x.tape().record(std::move(out), {x, y, gamma}, std::move(backward));
}

template <class T>
Var<T> concat_channels(std::span<const Var<T>> xs) {
  require(!xs.empty(), "concat_channels: no inputs");
  const Shape& first = xs[0].shape();
  require_rank(first, 4, "concat_channels");
  int channels = 0;
  for (const auto& v : xs) {
    const Shape& s = v.shape();
    require_rank(s, 4, "concat_channels");
    require(s[0] == first[0] && s[2] == first[2] && s[3] == first[3],
            "concat_channels: N,H,W mismatch " + shape_string(first) + " vs " + shape_string(s));
    channels += s[1];
  }
  const int N = first[0];
  const std::size_t plane = static_cast<std::size_t>(first[2]) * first[3];
  BasicTensor<T> out({N, channels, first[2], first[3]});
  for (int n = 0; n < N; ++n) {
    T* dst = out.raw() + static_cast<std::size_t>(n) * channels * plane;
    for (const auto& v : xs) {
      const std::size_t block = static_cast<std::size_t>(v.shape()[1]) * plane;
      const T* src = v.value().raw() + n * block;
      dst = std::copy(src, src + block, dst);
    }
  }
  std::vector<Var<T>> inputs(xs.begin(), xs.end());
  auto backward = [inputs, N, channels, plane](Tape<T>& tape, const BasicTensor<T>& grad) {
    std::size_t offset = 0;
    for (const auto& v : inputs) {
      const std::size_t block = static_cast<std::size_t>(v.shape()[1]) * plane;
      if (tape.requires_grad(v)) {
        T* dst = tape.grad_buffer(v).raw();
        for (int n = 0; n < N; ++n) {
          const T* src = grad.raw() + static_cast<std::size_t>(n) * channels * plane + offset;
          for (std::size_t i = 0; i < block; ++i) dst[n * block + i] += src[i];
        }
      }
      offset += block;
    }
  };
  return xs[0].tape().record(std::move(out), std::span<const Var<T>>(inputs), std::move(backward));
}

template <class T>
Var<T> slice_channels(const Var<T>& x, int begin, int count) {
  const Shape& s = x.shape();
  require_rank(s, 4, "slice_channels");
  require(begin >= 0 && count >= 1 && begin + count <= s[1], "slice_channels: range outside channel axis");
  const int N = s[0];
  const std::size_t plane = static_cast<std::size_t>(s[2]) * s[3];
  const std::size_t in_block = static_cast<std::size_t>(s[1]) * plane;
  const std::size_t out_block = static_cast<std::size_t>(count) * plane;
  BasicTensor<T> out({N, count, s[2], s[3]});
  for (int n = 0; n < N; ++n) {
    const T* src = x.value().raw() + n * in_block + begin * plane;
    std::copy(src, src + out_block, out.raw() + n * out_block);
  }
  auto backward = [x, N, begin, plane, in_block, out_block](Tape<T>& tape, const BasicTensor<T>& grad) {
    T* dst = tape.grad_buffer(x).raw();
    for (int n = 0; n < N; ++n) {
      for (std::size_t i = 0; i < out_block; ++i) dst[n * in_block + begin * plane + i] += grad[n * out_block + i];
    }
  };
  return x.tape().record(std::move(out), {x}, std::move(backward));
}

template <class T>
Var<T> reshape(const Var<T>& x, Shape shape) {
  BasicTensor<T> out = x.value().reshaped(std::move(shape));
  auto backward = [x](Tape<T>& tape, const BasicTensor<T>& grad) {
    auto dx = tape.grad_buffer(x).data();
    auto g = grad.data();
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g[i];
  };
  return x.tape().record(std::move(out), {x}, std::move(backward));
}

template <class T>
Var<T> transpose_last2(const Var<T>& x) {
  const BatchedDims d = batched(x.shape(), "transpose_last2");
  Shape out_shape = x.shape();
  std::swap(out_shape[out_shape.size() - 1], out_shape[out_shape.size() - 2]);
  BasicTensor<T> out(out_shape);
  const std::size_t block = d.rows * d.cols;
  for (std::size_t b = 0; b < d.batch; ++b) {
    const T* src = x.value().raw() + b * block;
    T* dst = out.raw() + b * block;
    for (std::size_t i = 0; i < d.rows; ++i)
      for (std::size_t j = 0; j < d.cols; ++j) dst[j * d.rows + i] = src[i * d.cols + j];
  }
  auto backward = [x, d, block](Tape<T>& tape, const BasicTensor<T>& grad) {
    T* dx = tape.grad_buffer(x).raw();
    for (std::size_t b = 0; b < d.batch; ++b) {
      const T* g = grad.raw() + b * block;
      for (std::size_t i = 0; i < d.rows; ++i)
        for (std::size_t j = 0; j < d.cols; ++j) dx[b * block + i * d.cols + j] += g[j * d.rows + i];
    }
  };
  return x.tape().record(std::move(out), {x}, std::move(backward));
}

template <class T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
  const BatchedDims da = batched(a.shape(), "matmul");
  const BatchedDims db = batched(b.shape(), "matmul");
  require(a.shape().size() == b.shape().size(), "matmul: rank mismatch");
  require(da.batch == db.batch, "matmul: batch mismatch");
  require(da.cols == db.rows, "matmul: inner dimension mismatch " + shape_string(a.shape()) + " x " +
                                  shape_string(b.shape()));
  const std::size_t M = da.rows, K = da.cols, P = db.cols;
  Shape out_shape = a.shape();
  out_shape.back() = static_cast<int>(P);
  BasicTensor<T> out(out_shape);
  for (std::size_t bi = 0; bi < da.batch; ++bi) {
    gemm_acc(M, K, P, a.value().raw() + bi * M * K, b.value().raw() + bi * K * P, out.raw() + bi * M * P);
  }
  auto backward = [a, b, M, K, P, batch = da.batch](Tape<T>& tape, const BasicTensor<T>& grad) {
    const T* A = a.value().raw();
    const T* B = b.value().raw();
    T* dA = tape.requires_grad(a) ? tape.grad_buffer(a).raw() : nullptr;
    T* dB = tape.requires_grad(b) ? tape.grad_buffer(b).raw() : nullptr;
    for (std::size_t bi = 0; bi < batch; ++bi) {
      const T* G = grad.raw() + bi * M * P;
      const T* Ab = A + bi * M * K;
      const T* Bb = B + bi * K * P;
      if (dA) {
        for (std::size_t i = 0; i < M; ++i)
          for (std::size_t k = 0; k < K; ++k) dA[bi * M * K + i * K + k] += dot(P, G + i * P, Bb + k * P);
      }
      if (dB) {
        for (std::size_t i = 0; i < M; ++i)
          for (std::size_t k = 0; k < K; ++k) axpy(P, Ab[i * K + k], G + i * P, dB + bi * K * P + k * P);
      }
    }
  };
  return a.tape().record(std::move(out), {a, b}, std::move(backward));
}

template <class T>
Var<T> softmax_rows(const Var<T>& x) {
  const Shape& s = x.shape();
  require(!s.empty() && s.back() >= 1, "softmax_rows: empty last axis");
  const std::size_t L = static_cast<std::size_t>(s.back());
  const std::size_t rows = x.value().size() / L;
  BasicTensor<T> out(s);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* src = x.value().raw() + r * L;
    T* dst = out.raw() + r * L;
    const T mx = *std::max_element(src, src + L);
    T total = 0;
    for (std::size_t i = 0; i < L; ++i) {
      dst[i] = std::exp(src[i] - mx);
      total += dst[i];
    }
    for (std::size_t i = 0; i < L; ++i) dst[i] /= total;
  }
  auto backward = [x, L, rows, y = out](Tape<T>& tape, const BasicTensor<T>& grad) {
    T* dx = tape.grad_buffer(x).raw();
    for (std::size_t r = 0; r < rows; ++r) {
      const T* yr = y.raw() + r * L;
      const T* gr = grad.raw() + r * L;
      const T inner = dot(L, yr, gr);
      for (std::size_t i = 0; i < L; ++i) dx[r * L + i] += yr[i] * (gr[i] - inner);
    }
  };
  return x.tape().record(std::move(out), {x}, std::move(backward));
}

namespace {

struct Tap {
  int lo, hi;
  double frac;
};

std::vector<Tap> upsample_taps(int in, int factor) {
  std::vector<Tap> taps(static_cast<std::size_t>(in) * factor);
  for (std::size_t o = 0; o < taps.size(); ++o) {
    double src = (static_cast<double>(o) + 0.5) / factor - 0.5;
    if (src < 0) src = 0;
    const int lo = std::min(static_cast<int>(src), in - 1);
    const int hi = std::min(lo + 1, in - 1);
    taps[o] = {lo, hi, src - lo};
  }
  return taps;
}

}  // namespace

template <class T>
Var<T> bilinear_upsample(const Var<T>& x, int factor) {
  if (factor < 1) throw std::invalid_argument("bilinear_upsample: factor must be >= 1");
  const Shape& s = x.shape();
  require_rank(s, 4, "bilinear_upsample");
  const int planes = s[0] * s[1];
  const int H = s[2], W = s[3];
  const int Ho = H * factor, Wo = W * factor;
  auto ty = upsample_taps(H, factor);
  auto tx = upsample_taps(W, factor);
  BasicTensor<T> out({s[0], s[1], Ho, Wo});
  for (int p = 0; p < planes; ++p) {
    const T* src = x.value().raw() + static_cast<std::size_t>(p) * H * W;
    T* dst = out.raw() + static_cast<std::size_t>(p) * Ho * Wo;
    for (int oy = 0; oy < Ho; ++oy) {
      const Tap& a = ty[oy];
      const T fy = static_cast<T>(a.frac);
      const T* r0 = src + static_cast<std::size_t>(a.lo) * W;
      const T* r1 = src + static_cast<std::size_t>(a.hi) * W;
      for (int ox = 0; ox < Wo; ++ox) {
        const Tap& b = tx[ox];
        const T fx = static_cast<T>(b.frac);
        const T top = r0[b.lo] + fx * (r0[b.hi] - r0[b.lo]);
        const T bot = r1[b.lo] + fx * (r1[b.hi] - r1[b.lo]);
        dst[static_cast<std::size_t>(oy) * Wo + ox] = top + fy * (bot - top);
      }
    }
  }
  auto backward = [x, planes, H, W, Ho, Wo, ty, tx](Tape<T>& tape, const BasicTensor<T>& grad) {
    T* dx = tape.grad_buffer(x).raw();
    for (int p = 0; p < planes; ++p) {
      T* d = dx + static_cast<std::size_t>(p) * H * W;
      const T* g = grad.raw() + static_cast<std::size_t>(p) * Ho * Wo;
      for (int oy = 0; oy < Ho; ++oy) {
        const Tap& a = ty[oy];
        const T fy = static_cast<T>(a.frac);
        for (int ox = 0; ox < Wo; ++ox) {
          const Tap& b = tx[ox];
          const T fx = static_cast<T>(b.frac);
          const T gv = g[static_cast<std::size_t>(oy) * Wo + ox];
          d[a.lo * W + b.lo] += gv * (1 - fy) * (1 - fx);
          d[a.lo * W + b.hi] += gv * (1 - fy) * fx;
          d[a.hi * W + b.lo] += gv * fy * (1 - fx);
          d[a.hi * W + b.hi] += gv * fy * fx;
        }
      }
    }
  };
  return x.tape().record(std::move(out), {x}, std::move(backward));
}

template <class T>
Var<T> mse_loss(const Var<T>& pred, const Var<T>& target) {
  require(pred.shape() == target.shape(), "mse_loss: shape mismatch " + shape_string(pred.shape()) + " vs " +
                                              shape_string(target.shape()));
  const auto p = pred.value().data();
  const auto t = target.value().data();
  require(!p.empty(), "mse_loss: empty input");
  double acc = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = static_cast<double>(p[i]) - static_cast<double>(t[i]);
    acc += d * d;
  }
  BasicTensor<T> out({1}, static_cast<T>(acc / static_cast<double>(p.size())));
  auto backward = [pred, target](Tape<T>& tape, const BasicTensor<T>& grad) {
    const auto pv = pred.value().data();
    const auto tv = target.value().data();
    const T scale = T(2) * grad[0] / static_cast<T>(pv.size());
    if (tape.requires_grad(pred)) {
      auto d = tape.grad_buffer(pred).data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += scale * (pv[i] - tv[i]);
    }
    if (tape.requires_grad(target)) {
      auto d = tape.grad_buffer(target).data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] -= scale * (pv[i] - tv[i]);
    }
  };
  return pred.tape().record(std::move(out), {pred, target}, std::move(backward));
}

template <class T>
Var<T> sum(const Var<T>& x) {
  const auto v = x.value().data();
  BasicTensor<T> out({1}, std::accumulate(v.begin(), v.end(), T(0)));
  auto backward = [x](Tape<T>& tape, const BasicTensor<T>& grad) {
    for (auto& d : tape.grad_buffer(x).data()) d += grad[0];
  };
  return x.tape().record(std::move(out), {x}, std::move(backward));
}

#define BIPATH_INSTANTIATE_OPS(T)                                                      \
  template Var<T> conv2d(const Var<T>&, const Var<T>&, const Var<T>&, const ConvSpec&); \
  template Var<T> relu(const Var<T>&);                                                 \
  template Var<T> add(const Var<T>&, const Var<T>&);                                   \
  template Var<T> scale_add(const Var<T>&, const Var<T>&, const Var<T>&);              \
  template Var<T> concat_channels(std::span<const Var<T>>);                            \
  template Var<T> slice_channels(const Var<T>&, int, int);                             \
  template Var<T> reshape(const Var<T>&, Shape);                                       \
  template Var<T> transpose_last2(const Var<T>&);                                      \
  template Var<T> matmul(const Var<T>&, const Var<T>&);                                \
  template Var<T> softmax_rows(const Var<T>&);                                         \
  template Var<T> bilinear_upsample(const Var<T>&, int);                               \
  template Var<T> mse_loss(const Var<T>&, const Var<T>&);                              \
  template Var<T> sum(const Var<T>&);

BIPATH_INSTANTIATE_OPS(float)
BIPATH_INSTANTIATE_OPS(double)

}  // namespace bipath
