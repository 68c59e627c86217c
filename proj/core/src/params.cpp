#include "hirevae/params.hpp"

#include <cmath>
#include <stdexcept>

namespace hirevae {

ad::Mat snap_f32(ad::Mat m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = snap_f32(m(i, j));
  return m;
}

Parameter make_param(const std::string& path, int rows, int cols, Init init,
                     std::uint64_t model_seed, double const_val) {
  Parameter p;
  p.path = path;
  p.value = ad::Mat::Zero(rows, cols);
  switch (init) {
    case Init::Zero:
      break;
    case Init::Constant:
      p.value.setConstant(const_val);
      break;
    case Init::Xavier: {
      Rng rng(derive_seed(model_seed, path));
      const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) p.value(i, j) = rng.uniform(-a, a);
      break;
    }
  }
  p.value = snap_f32(std::move(p.value));
  p.adam_m = ad::Mat::Zero(rows, cols);
  p.adam_v = ad::Mat::Zero(rows, cols);
  return p;
}

void ParamRegistry::add(Parameter* p) {
  if (by_path_.count(p->path))
    throw std::logic_error("duplicate parameter path: " + p->path);
  params_.push_back(p);
  by_path_[p->path] = p;
}

Parameter* ParamRegistry::find(const std::string& path) const {
  auto it = by_path_.find(path);
  return it == by_path_.end() ? nullptr : it->second;
}

std::size_t ParamRegistry::scalar_count() const {
  std::size_t n = 0;
  for (const Parameter* p : params_) n += static_cast<std::size_t>(p->value.size());
  return n;
}

ad::Var Binder::operator()(Parameter& p) {
  auto it = cache_.find(&p);
  if (it != cache_.end()) return it->second;
  ad::Var v = g_->input(p.value);
  bound_.emplace_back(&p, v);
  cache_.emplace(&p, v);
  return v;
}

void Adam::step(ad::Graph& g, const Binder& binder) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
  const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
  for (auto& [p, var] : binder.bound()) {
    const ad::Mat grad = g.grad(var);
    p->adam_m = cfg_.beta1 * p->adam_m + (1.0 - cfg_.beta1) * grad;
    p->adam_v = cfg_.beta2 * p->adam_v + (1.0 - cfg_.beta2) * grad.cwiseProduct(grad);
    const ad::Mat mhat = p->adam_m / bc1;
    const ad::Mat vhat = p->adam_v / bc2;
    p->value -= cfg_.lr * mhat.cwiseQuotient(vhat.cwiseSqrt() + ad::Mat::Constant(
                              vhat.rows(), vhat.cols(), cfg_.eps));
    p->value = snap_f32(std::move(p->value));
  }
}

}  // namespace hirevae
