#ifndef SSGN_OPTIM_HPP
#define SSGN_OPTIM_HPP

#include <map>
#include <string>
#include <vector>

#include "ssgn/nn.hpp"

namespace ssgn {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<long long> milestones = {10000, 21000};  // iterations where lr decays
  double decay = 0.1;
};

/// Adam with bias correction and a milestone step-decay schedule. The
/// effective rate at iteration t (1-based) is lr * decay^(milestones passed),
/// where a milestone m counts as passed once t > m.
class Adam {
 public:
  struct Moments {
    std::vector<double> m, v;
  };

  explicit Adam(AdamConfig cfg) : cfg_(std::move(cfg)) {}

  double lr_at(long long t) const;
  long long step_count() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

  /// One update over every parameter in the store using accumulated
  /// gradients. A non-finite gradient aborts, naming the parameter.
  void step(ParamStore& params);

  const std::map<std::string, Moments>& moments() const { return moments_; }
  void restore(long long t, std::map<std::string, Moments> moments) {
    t_ = t;
    moments_ = std::move(moments);
  }

 private:
  AdamConfig cfg_;
  long long t_ = 0;
  std::map<std::string, Moments> moments_;
};

}  // namespace ssgn

#endif  // SSGN_OPTIM_HPP
