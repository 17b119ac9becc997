#include "ssgn/optim.hpp"

#include <cmath>

#include "ssgn/error.hpp"

namespace ssgn {

double Adam::lr_at(long long t) const {
  double lr = cfg_.lr;
  for (long long m : cfg_.milestones) {
    if (t > m) lr *= cfg_.decay;
  }
  return lr;
}

void Adam::step(ParamStore& params) {
  t_ += 1;
  const double lr = lr_at(t_);
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (const auto& [name, p] : params.all()) {
    auto& mom = moments_[name];
    if (mom.m.size() != p->size()) {
      mom.m.assign(p->size(), 0.0);
      mom.v.assign(p->size(), 0.0);
    }
    p->ensure_grad();
    for (size_t i = 0; i < p->size(); ++i) {
      const double g = p->grad[i];
      if (!std::isfinite(g)) {
        throw NumericError("adam: non-finite gradient in parameter " + name);
      }
      mom.m[i] = cfg_.beta1 * mom.m[i] + (1.0 - cfg_.beta1) * g;
      mom.v[i] = cfg_.beta2 * mom.v[i] + (1.0 - cfg_.beta2) * g * g;
      const double m_hat = mom.m[i] / bc1;
      const double v_hat = mom.v[i] / bc2;
      p->values[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
    }
  }
}

}  // namespace ssgn
