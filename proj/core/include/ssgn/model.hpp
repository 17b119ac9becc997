#ifndef SSGN_MODEL_HPP
#define SSGN_MODEL_HPP

#include <string>
#include <utility>

#include "ssgn/graph.hpp"
#include "ssgn/nn.hpp"
#include "ssgn/scene.hpp"

namespace ssgn {

/// Order in which the three relation graphs update entity features.
enum class Hierarchy {
  otsg_then_osg_tsg,  // object-token first, then object-object and token-token
  parallel,           // all three read the encoder output; results fused
  osg_tsg_then_otsg,  // object-object and token-token first
};

Hierarchy hierarchy_from_string(const std::string& s);
std::string to_string(Hierarchy h);

struct ModelConfig {
  int d = 32;
  int heads = 4;
  int encoder_layers = 2;
  int decoder_layers = 4;
  Hierarchy hierarchy = Hierarchy::otsg_then_osg_tsg;
  bool sparse_otsg = true;
  bool sparse_osg = true;
  bool sparse_tsg = true;
  int max_answer_len = 12;    // L, answer steps including the end marker
  int max_question_len = 20;  // K, question words beyond this are dropped

  void validate() const;
};

/// Per-modality encoded features of one example.
struct EncoderState {
  TensorPtr Q;  // [question words, d]
  TensorPtr V;  // [objects, d]
  TensorPtr T;  // [tokens, d]
};

/// The graph network: joint transformer encoding, question pooling, edge
/// attention (mp), graph inference (gin), and the hierarchy orchestration.
class Model {
 public:
  Model(const ModelConfig& cfg, const Vocabulary& vocab, ParamStore& params);

  /// Builds the four directed edge sets, pruning each graph only when its
  /// sparsity toggle is on; a disabled toggle keeps the unpruned mask.
  SceneGraphs prepare_graphs(const Scene& scene, const PruneConfig& prune) const;

  EncoderState encode(const Scene& scene, const QAExample& example);

  /// Attention-pooled question vector [1, d]; each graph has its own scorer.
  TensorPtr pool_question(const TensorPtr& Q, const std::string& graph_name);

  /// Edge attention [receivers, senders]: rows softmax-normalized over each
  /// receiver's surviving senders, exact zeros elsewhere; an all-pruned row
  /// is all zeros.
  TensorPtr mp(const EdgeSet& edges, const TensorPtr& q, const std::string& prefix);

  /// Graph inference step: receiver update from its own features, the
  /// attention-weighted edge features, and the attention-weighted senders.
  TensorPtr gin(const EdgeSet& edges, const TensorPtr& A, const TensorPtr& receivers,
                const TensorPtr& senders, const std::string& prefix);

  /// Runs the configured hierarchy; returns final (V, T) features.
  std::pair<TensorPtr, TensorPtr> forward_hierarchy(const EncoderState& state,
                                                    const SceneGraphs& graphs);

  const ModelConfig& config() const { return cfg_; }
  ParamStore& params() { return *params_; }
  const Vocabulary& vocab() const { return *vocab_; }

 private:
  TensorPtr entity_rows(const std::vector<Entity>& entities, const Scene& scene,
                        const std::string& which);

  ModelConfig cfg_;
  const Vocabulary* vocab_;
  ParamStore* params_;
};

}  // namespace ssgn

#endif  // SSGN_MODEL_HPP
