#include "ssgn/nn.hpp"

#include <cmath>

#include "ssgn/error.hpp"
#include "ssgn/rng.hpp"

namespace ssgn {

TensorPtr ParamStore::get(const std::string& name, int rows, int cols, Init init) {
  auto it = params_.find(name);
  if (it != params_.end()) {
    if (it->second->rows != rows || it->second->cols != cols) {
      throw ShapeError("param " + name + ": requested [" + std::to_string(rows) + "," +
                       std::to_string(cols) + "] but stored [" +
                       std::to_string(it->second->rows) + "," +
                       std::to_string(it->second->cols) + "]");
    }
    return it->second;
  }
  auto t = make_tensor(rows, cols, true);
  if (init == Init::xavier) {
    Rng rng(mix_seed(seed_, fnv1a64(name)));
    const double bound = std::sqrt(6.0 / (rows + cols));
    for (double& v : t->values) v = rng.uniform(-bound, bound);
  } else if (init == Init::ones) {
    for (double& v : t->values) v = 1.0;
  }
  params_.emplace(name, t);
  return t;
}

void ParamStore::zero_grad() {
  for (auto& [name, t] : params_) t->zero_grad();
}

size_t ParamStore::scalar_count() const {
  size_t n = 0;
  for (const auto& [name, t] : params_) n += t->size();
  return n;
}

std::vector<char> full_mask(int rows, int cols) {
  return std::vector<char>(static_cast<size_t>(rows) * cols, 1);
}

std::vector<char> causal_mask(int n) {
  std::vector<char> m(static_cast<size_t>(n) * n, 0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) m[static_cast<size_t>(i) * n + j] = 1;
  }
  return m;
}

std::vector<char> prefix_step_mask(int prefix, int steps) {
  const int n = prefix + steps;
  std::vector<char> m(static_cast<size_t>(n) * n, 0);
  for (int i = 0; i < n; ++i) {
    const int limit = i < prefix ? prefix : i + 1;
    for (int j = 0; j < limit; ++j) m[static_cast<size_t>(i) * n + j] = 1;
  }
  return m;
}

namespace {

TensorPtr multi_head_attention(ParamStore& params, const std::string& prefix,
                               const TensorPtr& x, int heads,
                               const std::vector<char>& mask) {
  const int d = x->cols;
  const int dh = d / heads;
  auto wqkv = params.get(prefix + "wqkv", 3 * d, d);
  auto bqkv = params.get(prefix + "bqkv", 1, 3 * d, Init::zeros);
  auto qkv = linear(x, wqkv, bqkv);
  auto q = slice_cols(qkv, 0, d);
  auto k = slice_cols(qkv, d, 2 * d);
  auto v = slice_cols(qkv, 2 * d, 3 * d);

  std::vector<TensorPtr> ctx;
  ctx.reserve(heads);
  for (int h = 0; h < heads; ++h) {
    auto qh = slice_cols(q, h * dh, (h + 1) * dh);
    auto kh = slice_cols(k, h * dh, (h + 1) * dh);
    auto vh = slice_cols(v, h * dh, (h + 1) * dh);
    auto scores = scale(matmul(qh, transpose(kh)), 1.0 / std::sqrt(static_cast<double>(dh)));
    auto attn = masked_softmax(scores, mask);
    ctx.push_back(matmul(attn, vh));
  }
  auto merged = heads == 1 ? ctx[0] : concat_cols(ctx);
  auto wo = params.get(prefix + "wo", d, d);
  auto bo = params.get(prefix + "bo", 1, d, Init::zeros);
  return linear(merged, wo, bo);
}

}  // namespace

TensorPtr transformer_layer(ParamStore& params, const std::string& prefix,
                            const TensorPtr& x, int heads, const std::vector<char>& mask) {
  const int d = x->cols;
  if (heads < 1 || d % heads != 0) {
    throw ShapeError("attention: width " + std::to_string(d) + " not divisible by " +
                     std::to_string(heads) + " heads");
  }
  if (mask.size() != static_cast<size_t>(x->rows) * x->rows) {
    throw ShapeError("attention: mask size " + std::to_string(mask.size()) +
                     " for sequence length " + std::to_string(x->rows));
  }
  auto g1 = params.get(prefix + "ln1.gain", 1, d, Init::ones);
  auto b1 = params.get(prefix + "ln1.bias", 1, d, Init::zeros);
  auto h = add(x, multi_head_attention(params, prefix + "attn.", layer_norm(x, g1, b1),
                                       heads, mask));
  auto g2 = params.get(prefix + "ln2.gain", 1, d, Init::ones);
  auto b2 = params.get(prefix + "ln2.bias", 1, d, Init::zeros);
  auto hn = layer_norm(h, g2, b2);
  auto w1 = params.get(prefix + "ffn.w1", 4 * d, d);
  auto f1 = params.get(prefix + "ffn.b1", 1, 4 * d, Init::zeros);
  auto w2 = params.get(prefix + "ffn.w2", d, 4 * d);
  auto f2 = params.get(prefix + "ffn.b2", 1, d, Init::zeros);
  return add(h, linear(gelu(linear(hn, w1, f1)), w2, f2));
}

}  // namespace ssgn
