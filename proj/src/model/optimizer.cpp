#include <cmath>
#include <stdexcept>

#include "bipath/model.hpp"

namespace bipath {

template <class T>
Adam<T>::Adam(std::vector<Param<T>*> params, AdamOptions options) : params_(std::move(params)), opt_(options) {
  if (!(opt_.lr > 0)) throw std::invalid_argument("learning rate must be positive");
  if (!(opt_.beta1 >= 0 && opt_.beta1 < 1 && opt_.beta2 >= 0 && opt_.beta2 < 1)) {
    throw std::invalid_argument("Adam betas must lie in [0, 1)");
  }
  for (const Param<T>* p : params_) {
    m_.emplace_back(p->value.size(), 0.0);
    v_.emplace_back(p->value.size(), 0.0);
  }
}

template <class T>
void Adam<T>::step() {
  ++steps_;
  const double c1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(steps_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Param<T>& p = *params_[k];
    auto value = p.value.data();
    auto grad = p.grad.data();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i];
      if (!std::isfinite(g)) throw NumericError("non-finite gradient in " + p.name);
      m[i] = opt_.beta1 * m[i] + (1 - opt_.beta1) * g;
      v[i] = opt_.beta2 * v[i] + (1 - opt_.beta2) * g * g;
      value[i] = static_cast<T>(value[i] - opt_.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + opt_.eps));
    }
  }
}

template <class T>
void Adam<T>::set_lr(double lr) {
  if (!(lr >= 0)) throw std::invalid_argument("learning rate must be nonnegative");
  opt_.lr = lr;
}

template <class T>
void Adam<T>::zero_grad() {
  for (Param<T>* p : params_) p->zero_grad();
}

template class Adam<float>;
template class Adam<double>;

}  // namespace bipath
