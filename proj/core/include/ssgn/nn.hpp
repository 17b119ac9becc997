#ifndef SSGN_NN_HPP
#define SSGN_NN_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ssgn/tensor.hpp"

namespace ssgn {

enum class Init { xavier, zeros, ones };

/// Named trainable tensors, created lazily on first use. Initialization is a
/// pure function of (store seed, parameter name), so any creation order
/// yields the same values. Iteration order is lexicographic by name.
class ParamStore {
 public:
  explicit ParamStore(uint64_t seed) : seed_(seed) {}

  /// Returns the named parameter, creating it on first use. A shape mismatch
  /// against an existing entry is an error.
  TensorPtr get(const std::string& name, int rows, int cols, Init init = Init::xavier);

  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  void put(const std::string& name, TensorPtr t) { params_[name] = std::move(t); }
  const std::map<std::string, TensorPtr>& all() const { return params_; }
  void zero_grad();
  size_t scalar_count() const;
  uint64_t seed() const { return seed_; }

 private:
  std::map<std::string, TensorPtr> params_;
  uint64_t seed_ = 0;
};

/// Attention masks, row-major [rows, cols]: entry true = position visible.
std::vector<char> full_mask(int rows, int cols);
std::vector<char> causal_mask(int n);

/// Joint mask for a sequence of `prefix` context rows followed by `steps`
/// answer rows: context rows see only the context; answer row l sees the
/// context plus answer rows up to and including itself.
std::vector<char> prefix_step_mask(int prefix, int steps);

/// Pre-norm transformer layer: multi-head self-attention plus a GELU
/// feed-forward (x4 expansion), both with residuals. Parameters live under
/// `prefix` in the store. The mask is [L, L] over sequence positions.
TensorPtr transformer_layer(ParamStore& params, const std::string& prefix,
                            const TensorPtr& x, int heads, const std::vector<char>& mask);

}  // namespace ssgn

#endif  // SSGN_NN_HPP
