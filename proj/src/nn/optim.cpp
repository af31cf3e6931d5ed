#include "signrec/nn/optim.hpp"

#include <cmath>
#include <string>

namespace signrec::nn {

void TrainConfig::validate() const {
  const auto bad = [](const std::string& what) { throw ConfigError(what); };
  if (!(learning_rate >= 0.0)) bad("learning rate must be nonnegative");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) bad("beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) bad("beta2 must lie in [0, 1)");
  if (!(epsilon >= 0.0)) bad("epsilon must be nonnegative");
  if (!(weight_decay >= 0.0)) bad("weight decay must be nonnegative");
  if (!(dropout >= 0.0 && dropout < 1.0)) bad("dropout must lie in [0, 1)");
  if (batch_size == 0) bad("batch size must be at least 1");
  if (std::isnan(clip_norm)) bad("clip norm must be a number");
}

template <typename Real>
void add_l2_gradient(const ParamRefs<Real>& params, double weight_decay) {
  if (weight_decay == 0.0) return;
  for (auto* p : params) {
    if (!p->trainable) continue;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      p->grad[i] += static_cast<Real>(weight_decay * p->value[i]);
    }
  }
}

template <typename Real>
double clip_global_norm(const ParamRefs<Real>& params, double max_norm) {
  double sq = 0.0;
  for (auto* p : params) {
    if (!p->trainable) continue;
    for (Real g : p->grad.data()) sq += static_cast<double>(g) * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto* p : params) {
      if (!p->trainable) continue;
      for (auto& g : p->grad.data()) g = static_cast<Real>(g * s);
    }
  }
  return norm;
}

template <typename Real>
void zero_grads(const ParamRefs<Real>& params) {
  for (auto* p : params) p->zero_grad();
}

template <typename Real>
void Adam<Real>::step(const ParamRefs<Real>& params, std::size_t step_index) {
  if (step_index == 0) throw ConfigError("adam step index counts from 1");
  if (m_.size() != params.size()) {
    m_.assign(params.size(), {});
    v_.assign(params.size(), {});
    for (std::size_t k = 0; k < params.size(); ++k) {
      m_[k].assign(params[k]->value.size(), 0.0);
      v_[k].assign(params[k]->value.size(), 0.0);
    }
  }
  clip_global_norm(params, config_.clip_norm);
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double t = static_cast<double>(step_index);
  const double c1 = 1.0 - std::pow(b1, t);
  const double c2 = 1.0 - std::pow(b2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto* p = params[k];
    if (!p->trainable) continue;
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double g = p->grad[i];
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p->value[i] = static_cast<Real>(p->value[i] -
                                      config_.learning_rate * mhat / (std::sqrt(vhat) + config_.epsilon));
    }
  }
}

template void add_l2_gradient<float>(const ParamRefs<float>&, double);
template void add_l2_gradient<double>(const ParamRefs<double>&, double);
template double clip_global_norm<float>(const ParamRefs<float>&, double);
template double clip_global_norm<double>(const ParamRefs<double>&, double);
template void zero_grads<float>(const ParamRefs<float>&);
template void zero_grads<double>(const ParamRefs<double>&);
template class Adam<float>;
template class Adam<double>;

}  // namespace signrec::nn
