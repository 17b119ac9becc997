#include "ssgn/model.hpp"

#include <algorithm>

#include "ssgn/error.hpp"

namespace ssgn {

Hierarchy hierarchy_from_string(const std::string& s) {
  if (s == "otsg_then_osg_tsg") return Hierarchy::otsg_then_osg_tsg;
  if (s == "parallel") return Hierarchy::parallel;
  if (s == "osg_tsg_then_otsg") return Hierarchy::osg_tsg_then_otsg;
  throw DataError("model: unknown hierarchy " + s);
}

std::string to_string(Hierarchy h) {
  switch (h) {
    case Hierarchy::otsg_then_osg_tsg: return "otsg_then_osg_tsg";
    case Hierarchy::parallel: return "parallel";
    case Hierarchy::osg_tsg_then_otsg: return "osg_tsg_then_otsg";
  }
  return "?";
}

void ModelConfig::validate() const {
  if (d < 1) throw DataError("model: d must be >= 1");
  if (heads < 1 || d % heads != 0) {
    throw DataError("model: d must be divisible by heads");
  }
  if (encoder_layers < 1 || decoder_layers < 1) {
    throw DataError("model: layer counts must be >= 1");
  }
  if (max_answer_len < 1) throw DataError("model: max_answer_len must be >= 1");
  if (max_question_len < 1) throw DataError("model: max_question_len must be >= 1");
}

Model::Model(const ModelConfig& cfg, const Vocabulary& vocab, ParamStore& params)
    : cfg_(cfg), vocab_(&vocab), params_(&params) {
  cfg_.validate();
}

SceneGraphs Model::prepare_graphs(const Scene& scene, const PruneConfig& prune) const {
  const double d_img = scene.diagonal();
  SceneGraphs g;
  g.otsg_token_to_object = build_edges(scene.tokens, scene.objects);
  g.otsg_object_to_token = build_edges(scene.objects, scene.tokens);
  g.osg = build_edges(scene.objects, scene.objects);
  g.tsg = build_edges(scene.tokens, scene.tokens);
  if (cfg_.sparse_otsg) {
    g.otsg_token_to_object = prune_otsg(g.otsg_token_to_object, scene.tokens,
                                        scene.objects, d_img, prune);
    g.otsg_object_to_token = prune_otsg(g.otsg_object_to_token, scene.objects,
                                        scene.tokens, d_img, prune);
  }
  if (cfg_.sparse_osg) g.osg = prune_osg(g.osg, scene.objects, d_img, prune);
  if (cfg_.sparse_tsg) g.tsg = prune_tsg(g.tsg, scene.tokens, scene.image_height, prune);
  return g;
}

TensorPtr Model::entity_rows(const std::vector<Entity>& entities, const Scene& scene,
                             const std::string& which) {
  const int n = static_cast<int>(entities.size());
  if (n == 0) return make_tensor(0, cfg_.d);
  const int d_in = static_cast<int>(entities[0].feature.size());
  auto feats = make_tensor(n, d_in);
  auto boxes = make_tensor(n, 5);
  const double w = scene.image_width, h = scene.image_height;
  for (int i = 0; i < n; ++i) {
    const Entity& e = entities[i];
    if (static_cast<int>(e.feature.size()) != d_in) {
      throw DataError("model: entity id " + std::to_string(e.id) +
                      " has feature length " + std::to_string(e.feature.size()) +
                      ", expected " + std::to_string(d_in));
    }
    std::copy(e.feature.begin(), e.feature.end(), feats->values.begin() + i * d_in);
    boxes->at(i, 0) = e.box.x_tl / w;
    boxes->at(i, 1) = e.box.y_tl / h;
    boxes->at(i, 2) = e.box.x_br / w;
    boxes->at(i, 3) = e.box.y_br / h;
    boxes->at(i, 4) = e.box.area() / (w * h);
  }
  auto proj = linear(feats, params_->get("enc." + which + "proj", cfg_.d, d_in), nullptr);
  auto bproj = linear(boxes, params_->get("enc." + which + "box", cfg_.d, 5), nullptr);
  return add(proj, bproj);
}

EncoderState Model::encode(const Scene& scene, const QAExample& example) {
  if (scene.objects.empty() && scene.tokens.empty()) {
    throw DataError("encode: scene has no objects and no tokens");
  }
  if (example.question.empty()) throw DataError("encode: question is empty");

  std::vector<int> ids;
  const int k = std::min<int>(static_cast<int>(example.question.size()),
                              cfg_.max_question_len);
  ids.reserve(k);
  for (int i = 0; i < k; ++i) ids.push_back(vocab_->index(example.question[i]));

  auto word_table = params_->get("embed.word", vocab_->size(), cfg_.d);
  auto qpos = params_->get("enc.qpos", cfg_.max_question_len, cfg_.d);
  auto Q0 = add(embedding_rows(word_table, ids), slice_rows(qpos, 0, k));
  auto V0 = entity_rows(scene.objects, scene, "v");
  auto T0 = entity_rows(scene.tokens, scene, "t");

  std::vector<TensorPtr> parts = {Q0};
  if (V0->rows > 0) parts.push_back(V0);
  if (T0->rows > 0) parts.push_back(T0);
  auto joint = parts.size() == 1 ? parts[0] : concat_rows(parts);
  const auto mask = full_mask(joint->rows, joint->rows);
  for (int l = 0; l < cfg_.encoder_layers; ++l) {
    joint = transformer_layer(*params_, "enc.l" + std::to_string(l) + ".", joint,
                              cfg_.heads, mask);
  }
  const int n = static_cast<int>(scene.objects.size());
  const int m = static_cast<int>(scene.tokens.size());
  EncoderState state;
  state.Q = slice_rows(joint, 0, k);
  state.V = n > 0 ? slice_rows(joint, k, k + n) : make_tensor(0, cfg_.d);
  state.T = m > 0 ? slice_rows(joint, k + n, k + n + m) : make_tensor(0, cfg_.d);
  return state;
}

TensorPtr Model::pool_question(const TensorPtr& Q, const std::string& graph_name) {
  if (Q->rows < 1) throw DataError("pool_question: empty question");
  auto w = params_->get("pool." + graph_name + ".w", 1, cfg_.d);
  auto logits = transpose(linear(Q, w, nullptr));  // [1, K]
  auto weights = masked_softmax(logits, full_mask(1, Q->rows));
  return matmul(weights, Q);  // [1, d]
}

namespace {

/// Receiver-major views of an edge set: row r*S+s holds the feature of the
/// edge from sender s to receiver r, with the matching keep-mask.
struct PairView {
  int receivers = 0;
  int senders = 0;
  TensorPtr feats;        // [R*S, 5] constants
  std::vector<char> mask;  // [R*S]
};

PairView pair_view(const EdgeSet& edges) {
  PairView p;
  p.receivers = edges.cols;
  p.senders = edges.rows;
  p.feats = make_tensor(p.receivers * p.senders, 5);
  p.mask.assign(static_cast<size_t>(p.receivers) * p.senders, 0);
  for (int r = 0; r < p.receivers; ++r) {
    for (int s = 0; s < p.senders; ++s) {
      const auto& f = edges.feature(s, r);
      const size_t row = static_cast<size_t>(r) * p.senders + s;
      for (int c = 0; c < 5; ++c) p.feats->values[row * 5 + c] = f[c];
      p.mask[row] = edges.kept(s, r) ? 1 : 0;
    }
  }
  return p;
}

}  // namespace

TensorPtr Model::mp(const EdgeSet& edges, const TensorPtr& q, const std::string& prefix) {
  const PairView pv = pair_view(edges);
  auto we = params_->get(prefix + "we", cfg_.d, 5);
  auto wq = params_->get(prefix + "wq", cfg_.d, cfg_.d);
  auto a = tanh_op(add_row(linear(pv.feats, we, nullptr), linear(q, wq, nullptr)));
  auto wa = params_->get(prefix + "wa", 1, cfg_.d);
  auto logits = reshape(linear(a, wa, nullptr), pv.receivers, pv.senders);
  return masked_softmax(logits, pv.mask);
}

TensorPtr Model::gin(const EdgeSet& edges, const TensorPtr& A, const TensorPtr& receivers,
                     const TensorPtr& senders, const std::string& prefix) {
  if (A->rows != edges.cols || A->cols != edges.rows) {
    throw ShapeError("gin: attention shape [" + std::to_string(A->rows) + "," +
                     std::to_string(A->cols) + "] does not match edge set");
  }
  const PairView pv = pair_view(edges);
  auto wedge = params_->get(prefix + "wedge", cfg_.d, 5);
  auto edge_agg = pairwise_weighted_sum(A, linear(pv.feats, wedge, nullptr));
  auto wt = params_->get(prefix + "wt", cfg_.d, cfg_.d);
  auto msg = linear(matmul(A, senders), wt, nullptr);
  auto wx = params_->get(prefix + "wx", cfg_.d, cfg_.d);
  auto wep = params_->get(prefix + "wep", cfg_.d, cfg_.d);
  auto wm = params_->get(prefix + "wm", cfg_.d, cfg_.d);
  return add(add(linear(receivers, wx, nullptr), linear(edge_agg, wep, nullptr)),
             linear(msg, wm, nullptr));
}

std::pair<TensorPtr, TensorPtr> Model::forward_hierarchy(const EncoderState& state,
                                                         const SceneGraphs& graphs) {
  auto run_otsg = [&](const TensorPtr& V, const TensorPtr& T) {
    auto q = pool_question(state.Q, "otsg");
    auto A_tv = mp(graphs.otsg_token_to_object, q, "otsg.tv.");
    auto V_out = gin(graphs.otsg_token_to_object, A_tv, V, T, "otsg.tv.");
    auto A_vt = mp(graphs.otsg_object_to_token, q, "otsg.vt.");
    auto T_out = gin(graphs.otsg_object_to_token, A_vt, T, V, "otsg.vt.");
    return std::pair<TensorPtr, TensorPtr>(V_out, T_out);
  };
  auto run_osg = [&](const TensorPtr& V) {
    auto q = pool_question(state.Q, "osg");
    return gin(graphs.osg, mp(graphs.osg, q, "osg."), V, V, "osg.");
  };
  auto run_tsg = [&](const TensorPtr& T) {
    auto q = pool_question(state.Q, "tsg");
    return gin(graphs.tsg, mp(graphs.tsg, q, "tsg."), T, T, "tsg.");
  };

  switch (cfg_.hierarchy) {
    case Hierarchy::otsg_then_osg_tsg: {
      auto [V1, T1] = run_otsg(state.V, state.T);
      return {run_osg(V1), run_tsg(T1)};
    }
    case Hierarchy::parallel: {
      auto [V_otsg, T_otsg] = run_otsg(state.V, state.T);
      auto V_osg = run_osg(state.V);
      auto T_tsg = run_tsg(state.T);
      auto fuse_v = params_->get("fuse.v", cfg_.d, 2 * cfg_.d);
      auto fuse_t = params_->get("fuse.t", cfg_.d, 2 * cfg_.d);
      return {linear(concat_cols({V_osg, V_otsg}), fuse_v, nullptr),
              linear(concat_cols({T_tsg, T_otsg}), fuse_t, nullptr)};
    }
    case Hierarchy::osg_tsg_then_otsg: {
      auto V1 = run_osg(state.V);
      auto T1 = run_tsg(state.T);
      return run_otsg(V1, T1);
    }
  }
  throw DataError("model: unknown hierarchy");
}

}  // namespace ssgn
