#include "pirec/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace pirec {

template <typename Scalar>
Adam<Scalar>::Adam(std::vector<Parameter<Scalar>*> params, const AdamConfig& config)
    : params_(std::move(params)), config_(config) {
  if (!(config.lr > 0) || config.beta1 < 0 || config.beta1 >= 1 || config.beta2 < 0 || config.beta2 >= 1)
    throw std::invalid_argument("Adam: bad hyperparameters");
  for (auto* p : params_) {
    m_.push_back(RowMatrix<Scalar>::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(RowMatrix<Scalar>::Zero(p->value.rows(), p->value.cols()));
  }
}

template <typename Scalar>
void Adam<Scalar>::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  const auto b1 = static_cast<Scalar>(config_.beta1), b2 = static_cast<Scalar>(config_.beta2);
  const auto step = static_cast<Scalar>(config_.lr / c1);
  const auto root_c2 = static_cast<Scalar>(std::sqrt(c2));
  const auto eps = static_cast<Scalar>(config_.eps);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto* p = params_[i];
    if (!p->trainable) continue;
    m_[i] = b1 * m_[i] + (Scalar(1) - b1) * p->grad;
    v_[i] = b2 * v_[i] + (Scalar(1) - b2) * p->grad.cwiseAbs2();
    p->value.array() -= step * m_[i].array() / (v_[i].array().sqrt() / root_c2 + eps);
  }
}

template <typename Scalar>
void Adam<Scalar>::save(Archive& ar, const std::string& prefix) const {
  ar.meta()[prefix + "steps"] = t_;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (!params_[i]->trainable) continue;
    ar.put(prefix + "m." + params_[i]->name, m_[i]);
    ar.put(prefix + "v." + params_[i]->name, v_[i]);
  }
}

template <typename Scalar>
void Adam<Scalar>::load(const Archive& ar, const std::string& prefix) {
  t_ = ar.meta().at(prefix + "steps").get<long long>();
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (!params_[i]->trainable) continue;
    m_[i] = ar.get<Scalar>(prefix + "m." + params_[i]->name);
    v_[i] = ar.get<Scalar>(prefix + "v." + params_[i]->name);
    if (m_[i].rows() != params_[i]->value.rows() || m_[i].cols() != params_[i]->value.cols())
      throw std::runtime_error("optimizer state shape mismatch for " + params_[i]->name);
  }
}

template class Adam<float>;
template class Adam<double>;

}  // namespace pirec
