#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "bipath/autodiff.hpp"

namespace bipath {

template <class T>
double gradient_check(const std::function<Var<T>(Tape<T>&)>& forward, std::span<Param<T>* const> probes,
                      const GradCheckOptions& options) {
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  for (Param<T>* p : probes) p->zero_grad();
  BasicTensor<T> cotangent;
  {
    Tape<T> tape;
    Var<T> out = forward(tape);
    cotangent = BasicTensor<T>(out.shape());
    for (auto& c : cotangent.data()) c = static_cast<T>(unit(rng));
    tape.backward(out, cotangent);
  }

  auto objective = [&]() {
    Tape<T> tape;
    Var<T> out = forward(tape);
    if (out.shape() != cotangent.shape()) throw ShapeError("gradient_check: output shape changed between runs");
    double acc = 0;
    auto o = out.value().data();
    for (std::size_t i = 0; i < o.size(); ++i) acc += static_cast<double>(cotangent[i]) * static_cast<double>(o[i]);
    return acc;
  };

  double worst = 0;
  for (Param<T>* p : probes) {
    const BasicTensor<T> analytic = p->grad;
    std::vector<std::size_t> coords(p->value.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (options.max_coords_per_probe != 0 && coords.size() > options.max_coords_per_probe) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(options.max_coords_per_probe);
    }
    for (std::size_t idx : coords) {
      const T saved = p->value[idx];
      const T up = saved + static_cast<T>(options.eps);
      const T down = saved - static_cast<T>(options.eps);
      p->value[idx] = up;
      const double f_up = objective();
      p->value[idx] = down;
      const double f_down = objective();
      p->value[idx] = saved;
      const double numeric = (f_up - f_down) / (static_cast<double>(up) - static_cast<double>(down));
      const double err = std::abs(static_cast<double>(analytic[idx]) - numeric) / std::max(1.0, std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

template <class T>
double gradient_check(const std::function<Var<T>(Tape<T>&, std::span<const Var<T>>)>& op,
                      std::vector<BasicTensor<T>> inputs, const GradCheckOptions& options) {
  std::vector<Param<T>> params;
  params.reserve(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) params.emplace_back("input" + std::to_string(i), std::move(inputs[i]));
  std::vector<Param<T>*> probes;
  for (auto& p : params) probes.push_back(&p);
  auto forward = [&](Tape<T>& tape) {
    std::vector<Var<T>> vars;
    for (auto& p : params) vars.push_back(tape.param(p));
    return op(tape, vars);
  };
  return gradient_check<T>(forward, std::span<Param<T>* const>(probes), options);
}

template double gradient_check<float>(const std::function<Var<float>(Tape<float>&)>&, std::span<Param<float>* const>,
                                      const GradCheckOptions&);
template double gradient_check<double>(const std::function<Var<double>(Tape<double>&)>&,
                                       std::span<Param<double>* const>, const GradCheckOptions&);
template double gradient_check<float>(const std::function<Var<float>(Tape<float>&, std::span<const Var<float>>)>&,
                                      std::vector<BasicTensor<float>>, const GradCheckOptions&);
template double gradient_check<double>(const std::function<Var<double>(Tape<double>&, std::span<const Var<double>>)>&,
                                       std::vector<BasicTensor<double>>, const GradCheckOptions&);

}  // namespace bipath
