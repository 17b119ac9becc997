#ifndef SSGN_TRAINING_HPP
#define SSGN_TRAINING_HPP

#include <string>
#include <vector>

#include "ssgn/config.hpp"
#include "ssgn/decoder.hpp"
#include "ssgn/metrics.hpp"

namespace ssgn {

struct LossBreakdown {
  double bce = 0.0;
  double pg = 0.0;
  double total = 0.0;
  double lambda = 1.0;
};

/// Mean over steps and classes of the stabilized binary cross-entropy
/// softplus(x) - x*y against multi-hot targets over [vocabulary || tokens].
TensorPtr bce_loss(const std::vector<TensorPtr>& step_logits,
                   const std::vector<TargetStep>& target);

/// reward * mean over decoded steps of -log sigmoid(selected logit). The
/// reward is a constant; gradient flows only through the selected logits.
TensorPtr pg_loss(const std::vector<TensorPtr>& step_logits, const DecodedAnswer& decoded,
                  int vocab_size, double reward);

/// Seeded-shuffle single-example training loop with milestone lr decay,
/// periodic validation, best/last checkpoints, and an append-only CSV
/// metrics log (step,lr,bce,pg,total,val_acc,val_anls).
class Trainer {
 public:
  explicit Trainer(RunConfig cfg);

  /// Runs to cfg.steps; returns the last validation report (empty when the
  /// validation split is empty or steps = 0).
  EvalReport run();

 private:
  RunConfig cfg_;
};

/// Greedy-decodes every example of the given scenes under the checkpointed
/// parameters and scores the predictions.
EvalReport evaluate_scenes(const RunConfig& cfg, ParamStore& params,
                           const Vocabulary& vocab, const std::vector<Scene>& scenes,
                           const std::vector<std::string>& scene_names,
                           std::vector<DecodedAnswer>* decoded_out = nullptr);

}  // namespace ssgn

#endif  // SSGN_TRAINING_HPP
