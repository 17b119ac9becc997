#include "ssgn/graph.hpp"

#include <json.hpp>
#include <unordered_set>

#include "ssgn/error.hpp"
#include "ssgn/geometry.hpp"

namespace ssgn {

namespace {
using json = nlohmann::ordered_json;
}

int EdgeSet::kept_count() const {
  int n = 0;
  for (unsigned char k : keep) n += k != 0;
  return n;
}

void PruneConfig::validate() const {
  if (theta < 0.0 || theta > 1.0) throw DataError("prune: theta must be in [0,1]");
  if (epsilon < 0.0 || epsilon > 1.0) throw DataError("prune: epsilon must be in [0,1]");
  if (delta < 0.0 || delta > 1.0) throw DataError("prune: delta must be in [0,1]");
  if (alpha <= 0.0) throw DataError("prune: alpha must be > 0");
  if (beta <= 0.0 || beta > gamma) throw DataError("prune: need 0 < beta <= gamma");
}

EdgeSet build_edges(const std::vector<Entity>& sources, const std::vector<Entity>& targets) {
  const bool same_list = &sources == &targets;
  EdgeSet e(static_cast<int>(sources.size()), static_cast<int>(targets.size()));
  for (int i = 0; i < e.rows; ++i) {
    for (int j = 0; j < e.cols; ++j) {
      if (same_list && i == j) {
        e.drop(i, j);
      } else {
        e.feature(i, j) = edge_feature(sources[i].box, targets[j].box);
      }
    }
  }
  return e;
}

EdgeSet prune_otsg(const EdgeSet& edges, const std::vector<Entity>& sources,
                   const std::vector<Entity>& targets, double d_img,
                   const PruneConfig& cfg) {
  cfg.validate();
  if (d_img <= 0.0) throw DataError("prune: d_img must be > 0");
  if (edges.rows != static_cast<int>(sources.size()) ||
      edges.cols != static_cast<int>(targets.size())) {
    throw DataError("prune: edge set shape does not match entity counts");
  }
  EdgeSet out = edges;
  for (int i = 0; i < out.rows; ++i) {
    for (int j = 0; j < out.cols; ++j) {
      if (!out.kept(i, j)) continue;
      const BoundingBox& a = sources[i].box;
      const BoundingBox& b = targets[j].box;
      const bool near = center_distance(a, b) <= cfg.theta * d_img;
      const bool overlapping = iou_family(IouKind::DIoU, a, b) >= cfg.theta;
      if (!(near || overlapping)) out.drop(i, j);
    }
  }
  return out;
}

EdgeSet prune_osg(const EdgeSet& edges, const std::vector<Entity>& objects, double d_img,
                  const PruneConfig& cfg) {
  cfg.validate();
  if (d_img <= 0.0) throw DataError("prune: d_img must be > 0");
  if (edges.rows != edges.cols || edges.rows != static_cast<int>(objects.size())) {
    throw DataError("prune: edge set shape does not match object count");
  }
  EdgeSet out = edges;
  for (int i = 0; i < out.rows; ++i) {
    for (int j = 0; j < out.cols; ++j) {
      if (i == j) {
        out.drop(i, j);
        continue;
      }
      if (!out.kept(i, j)) continue;
      const BoundingBox& a = objects[i].box;
      const BoundingBox& b = objects[j].box;
      const bool near = center_distance(a, b) <= cfg.theta * d_img;
      const bool distinct = iou_family(IouKind::DIoU, a, b) <= cfg.epsilon;
      if (!(near && distinct)) out.drop(i, j);
    }
  }
  return out;
}

EdgeSet prune_tsg(const EdgeSet& edges, const std::vector<Entity>& tokens,
                  double image_height, const PruneConfig& cfg) {
  cfg.validate();
  if (image_height <= 0.0) throw DataError("prune: image_height must be > 0");
  if (edges.rows != edges.cols || edges.rows != static_cast<int>(tokens.size())) {
    throw DataError("prune: edge set shape does not match token count");
  }
  for (const Entity& t : tokens) {
    if (t.box.height() <= 0.0) {
      throw DataError("prune: token id " + std::to_string(t.id) + " has zero height");
    }
  }
  EdgeSet out = edges;
  // Edge (row j, col i) carries sender t_j to receiver t_i; the thresholds
  // scale with the receiver's diagonal and height.
  for (int j = 0; j < out.rows; ++j) {
    for (int i = 0; i < out.cols; ++i) {
      if (j == i) {
        out.drop(j, i);
        continue;
      }
      if (!out.kept(j, i)) continue;
      const BoundingBox& sender = tokens[j].box;
      const BoundingBox& receiver = tokens[i].box;
      const double h_i = receiver.height() / image_height;
      const double h_j = sender.height() / image_height;
      const bool close = gap_distance(sender, receiver) <= cfg.alpha * receiver.diagonal();
      const bool similar = h_j >= cfg.beta * h_i && h_j <= cfg.gamma * h_i;
      const bool non_overlapping = overlap_ratio(sender, receiver) <= cfg.delta;
      if (!(close && similar && non_overlapping)) out.drop(j, i);
    }
  }
  return out;
}

SparsityStats sparsity_ratio(const EdgeSet& before, const EdgeSet& after) {
  if (before.rows != after.rows || before.cols != after.cols) {
    throw ShapeError("sparsity: edge set shapes differ");
  }
  SparsityStats s;
  s.candidates = before.kept_count();
  s.pruned = s.candidates - after.kept_count();
  s.ratio = s.candidates == 0 ? 0.0 : static_cast<double>(s.pruned) / s.candidates;
  return s;
}

SceneGraphs build_scene_graphs(const Scene& scene, const PruneConfig& cfg) {
  const double d_img = scene.diagonal();
  SceneGraphs g;
  g.otsg_token_to_object = prune_otsg(build_edges(scene.tokens, scene.objects),
                                      scene.tokens, scene.objects, d_img, cfg);
  g.otsg_object_to_token = prune_otsg(build_edges(scene.objects, scene.tokens),
                                      scene.objects, scene.tokens, d_img, cfg);
  g.osg = prune_osg(build_edges(scene.objects, scene.objects), scene.objects, d_img, cfg);
  g.tsg = prune_tsg(build_edges(scene.tokens, scene.tokens), scene.tokens,
                    scene.image_height, cfg);
  return g;
}

namespace {

void check_unique_ids(const Scene& scene) {
  std::unordered_set<int> seen;
  for (const Entity& e : scene.objects) {
    if (!seen.insert(e.id).second) {
      throw DataError("export: duplicate entity id " + std::to_string(e.id));
    }
  }
  for (const Entity& e : scene.tokens) {
    if (!seen.insert(e.id).second) {
      throw DataError("export: duplicate entity id " + std::to_string(e.id));
    }
  }
}

json node_json(const Entity& e) {
  json n;
  n["id"] = e.id;
  n["kind"] = e.kind == EntityKind::object ? "object" : "token";
  n["label"] = e.label;
  n["box"] = {e.box.x_tl, e.box.y_tl, e.box.x_br, e.box.y_br};
  return n;
}

void append_edges(json& out, const EdgeSet& edges, const std::vector<Entity>& sources,
                  const std::vector<Entity>& targets, const char* graph_name) {
  for (int i = 0; i < edges.rows; ++i) {
    for (int j = 0; j < edges.cols; ++j) {
      if (!edges.kept(i, j)) continue;
      json e;
      e["src"] = sources[i].id;
      e["dst"] = targets[j].id;
      e["graph"] = graph_name;
      e["feature"] = edges.feature(i, j);
      out.push_back(std::move(e));
    }
  }
}

std::string dot_name(const Entity& e) {
  return (e.kind == EntityKind::object ? "o" : "t") + std::to_string(e.id);
}

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

void append_dot_edges(std::string& out, const EdgeSet& edges,
                      const std::vector<Entity>& sources,
                      const std::vector<Entity>& targets, const char* color) {
  for (int i = 0; i < edges.rows; ++i) {
    for (int j = 0; j < edges.cols; ++j) {
      if (!edges.kept(i, j)) continue;
      out += "  " + dot_name(sources[i]) + " -> " + dot_name(targets[j]) +
             " [color=" + color + "];\n";
    }
  }
}

}  // namespace

std::string export_graph(const Scene& scene, const SceneGraphs& graphs,
                         const std::string& format) {
  check_unique_ids(scene);
  if (format == "json") {
    json out;
    out["nodes"] = json::array();
    for (const Entity& e : scene.objects) out["nodes"].push_back(node_json(e));
    for (const Entity& e : scene.tokens) out["nodes"].push_back(node_json(e));
    out["edges"] = json::array();
    append_edges(out["edges"], graphs.otsg_token_to_object, scene.tokens, scene.objects,
                 "otsg");
    append_edges(out["edges"], graphs.otsg_object_to_token, scene.objects, scene.tokens,
                 "otsg");
    append_edges(out["edges"], graphs.osg, scene.objects, scene.objects, "osg");
    append_edges(out["edges"], graphs.tsg, scene.tokens, scene.tokens, "tsg");
    return out.dump(2) + "\n";
  }
  if (format == "dot") {
    std::string out = "digraph scene {\n";
    for (const Entity& e : scene.objects) {
      out += "  " + dot_name(e) + " [shape=box, label=\"" + dot_escape(e.label) + "\"];\n";
    }
    for (const Entity& e : scene.tokens) {
      out += "  " + dot_name(e) + " [shape=ellipse, label=\"" + dot_escape(e.label) + "\"];\n";
    }
    append_dot_edges(out, graphs.otsg_token_to_object, scene.tokens, scene.objects, "black");
    append_dot_edges(out, graphs.otsg_object_to_token, scene.objects, scene.tokens, "gray");
    append_dot_edges(out, graphs.osg, scene.objects, scene.objects, "blue");
    append_dot_edges(out, graphs.tsg, scene.tokens, scene.tokens, "red");
    out += "}\n";
    return out;
  }
  throw DataError("export: unknown format " + format);
}

}  // namespace ssgn
