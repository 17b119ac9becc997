#ifndef SSGN_DECODER_HPP
#define SSGN_DECODER_HPP

#include <string>
#include <utility>
#include <vector>

#include "ssgn/model.hpp"

namespace ssgn {

enum class StepSource { vocab, token };

struct DecodeStep {
  StepSource source = StepSource::vocab;
  int index = 0;
  double logit = 0.0;
};

/// One decoded answer: per-step choices, the realized text (end/pad markers
/// stripped), and the step index where the end marker fired (or the step
/// limit if it never did).
struct DecodedAnswer {
  std::vector<DecodeStep> steps;
  std::string text;
  int stopped_at = 0;
};

/// Argmax over the concatenation [y_o || y_t]; ties resolve to the lower
/// concatenated index, so vocabulary beats copied tokens on exact ties.
std::pair<StepSource, int> select(const std::vector<double>& y_o,
                                  const std::vector<double>& y_t);

/// Training target for one answer step: every class index over
/// [vocabulary || scene tokens] that realizes the gold word, plus the
/// realization fed to the next step (first matching token when one exists,
/// otherwise the vocabulary word).
struct TargetStep {
  std::vector<int> positives;
  StepSource feed_source = StepSource::vocab;
  int feed_index = 0;
};

/// Splits a gold answer into words and aligns each (left to right) against
/// token labels and the vocabulary; a final end-marker step is appended.
/// At most max_steps steps are produced.
std::vector<TargetStep> align_target(const std::string& answer, const Vocabulary& vocab,
                                     const std::vector<Entity>& tokens, int max_steps);

/// Copy-augmented iterative decoder over the context
/// [projected Q; projected V; projected T; answer steps so far].
class Decoder {
 public:
  Decoder(const ModelConfig& cfg, const Vocabulary& vocab);

  struct StepScores {
    TensorPtr y_o;  // [1, vocab]
    TensorPtr y_t;  // [1, tokens]
  };
  /// Readout of one decoder output row against the token features.
  StepScores readout(ParamStore& params, const TensorPtr& o_l, const TensorPtr& T2);

  struct GreedyResult {
    DecodedAnswer answer;
    std::vector<TensorPtr> step_logits;  // [1, vocab + tokens] per emitted step
  };
  /// Feeds each step its previous selection, starting from the begin marker;
  /// stops at the end marker or the step limit.
  GreedyResult greedy(ParamStore& params, const EncoderState& state, const TensorPtr& V2,
                      const TensorPtr& T2, const Scene& scene);

  /// Feeds ground-truth realizations; returns one logit row per target step.
  std::vector<TensorPtr> teacher_forced(ParamStore& params, const EncoderState& state,
                                        const TensorPtr& V2, const TensorPtr& T2,
                                        const std::vector<TargetStep>& target);

 private:
  TensorPtr context_rows(ParamStore& params, const EncoderState& state,
                         const TensorPtr& V2, const TensorPtr& T2);
  TensorPtr step_row(ParamStore& params, StepSource source, int index,
                     const TensorPtr& T2, int position);
  TensorPtr run_layers(ParamStore& params, const TensorPtr& seq, int prefix, int steps);

  ModelConfig cfg_;
  const Vocabulary* vocab_;
};

}  // namespace ssgn

#endif  // SSGN_DECODER_HPP
