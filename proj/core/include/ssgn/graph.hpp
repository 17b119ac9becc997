#ifndef SSGN_GRAPH_HPP
#define SSGN_GRAPH_HPP

#include <array>
#include <string>
#include <vector>

#include "ssgn/scene.hpp"

namespace ssgn {

/// Dense pairwise edge features with a boolean keep-mask. Rows index edge
/// sources (senders), columns index edge targets (receivers); the 5-dim
/// feature for (i, j) encodes source i relative to target j. A dropped edge
/// always has an exactly-zero feature vector.
struct EdgeSet {
  int rows = 0;
  int cols = 0;
  std::vector<std::array<double, 5>> features;  // row-major, rows*cols
  std::vector<unsigned char> keep;              // row-major, rows*cols

  EdgeSet() = default;
  EdgeSet(int r, int c)
      : rows(r), cols(c), features(static_cast<size_t>(r) * c, {0, 0, 0, 0, 0}),
        keep(static_cast<size_t>(r) * c, 1) {}

  size_t index(int i, int j) const { return static_cast<size_t>(i) * cols + j; }
  const std::array<double, 5>& feature(int i, int j) const { return features[index(i, j)]; }
  std::array<double, 5>& feature(int i, int j) { return features[index(i, j)]; }
  bool kept(int i, int j) const { return keep[index(i, j)] != 0; }
  void drop(int i, int j) {
    keep[index(i, j)] = 0;
    features[index(i, j)] = {0, 0, 0, 0, 0};
  }
  int kept_count() const;
};

/// Thresholds for the three sparsity rules.
struct PruneConfig {
  double theta = 0.5;    // object-token: distance fraction and DIoU floor
  double epsilon = 0.3;  // object-object: DIoU ceiling (duplicate suppression)
  double alpha = 5.0;    // token-token: gap limit in receiver diagonals
  double beta = 0.3;     // token-token: height window lower factor
  double gamma = 2.0;    // token-token: height window upper factor
  double delta = 0.5;    // token-token: overlap ceiling

  void validate() const;  // throws DataError on out-of-range values
};

/// Sparsity statistic for one edge set: pruned count over candidate count.
struct SparsityStats {
  long long pruned = 0;      // N_p
  long long candidates = 0;  // N_I
  double ratio = 0.0;        // N_p / N_I, 0 when N_I = 0
};

/// All-pairs edge features. When sources and targets are the same vector
/// (by address), self-pairs are dropped and zeroed.
EdgeSet build_edges(const std::vector<Entity>& sources, const std::vector<Entity>& targets);

/// Object-token pruning: keep an edge iff the boxes' center distance is at
/// most theta * d_img or their DIoU is at least theta. Applied identically
/// to either direction.
EdgeSet prune_otsg(const EdgeSet& edges, const std::vector<Entity>& sources,
                   const std::vector<Entity>& targets, double d_img,
                   const PruneConfig& cfg);

/// Object-object pruning: keep an edge iff the center distance is at most
/// theta * d_img and the DIoU is at most epsilon, so near-duplicates and
/// distant pairs are both removed.
EdgeSet prune_osg(const EdgeSet& edges, const std::vector<Entity>& objects, double d_img,
                  const PruneConfig& cfg);

/// Token-token pruning, receiver-relative: keep edge j -> i iff the box gap
/// is at most alpha * diagonal(t_i), the sender height falls in
/// [beta, gamma] * h_i (heights normalized by image height), and the overlap
/// ratio is at most delta. Not symmetric in general.
EdgeSet prune_tsg(const EdgeSet& edges, const std::vector<Entity>& tokens,
                  double image_height, const PruneConfig& cfg);

/// N_p / N_I between a pre-pruning and post-pruning mask of the same shape.
SparsityStats sparsity_ratio(const EdgeSet& before, const EdgeSet& after);

/// Named pruned edge sets of one scene, ready for export or model input.
struct SceneGraphs {
  EdgeSet otsg_token_to_object;  // rows: tokens, cols: objects
  EdgeSet otsg_object_to_token;  // rows: objects, cols: tokens
  EdgeSet osg;                   // objects x objects
  EdgeSet tsg;                   // tokens x tokens
};

/// Builds and prunes all four directed edge sets of a scene.
SceneGraphs build_scene_graphs(const Scene& scene, const PruneConfig& cfg);

/// Serializes nodes plus surviving edges as JSON ({nodes, edges}) or DOT.
std::string export_graph(const Scene& scene, const SceneGraphs& graphs,
                         const std::string& format);

}  // namespace ssgn

#endif  // SSGN_GRAPH_HPP
