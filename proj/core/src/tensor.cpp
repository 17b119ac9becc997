#include "ssgn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <unordered_set>

#include "ssgn/error.hpp"

namespace ssgn {

namespace {

std::string shape_str(const Tensor& t) {
  return "[" + std::to_string(t.rows) + "," + std::to_string(t.cols) + "]";
}

std::string shape_str(const TensorPtr& t) { return shape_str(*t); }

TensorPtr result(int rows, int cols, std::vector<TensorPtr> parents) {
  auto out = std::make_shared<Tensor>();
  out->rows = rows;
  out->cols = cols;
  out->values.assign(static_cast<size_t>(rows) * cols, 0.0);
  for (const auto& p : parents) out->requires_grad = out->requires_grad || p->requires_grad;
  if (out->requires_grad) out->parents = std::move(parents);
  return out;
}

void require_same_shape(const TensorPtr& a, const TensorPtr& b, const char* op) {
  if (a->rows != b->rows || a->cols != b->cols) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " +
                     shape_str(b));
  }
}

}  // namespace

TensorPtr make_tensor(int rows, int cols, bool requires_grad) {
  auto t = std::make_shared<Tensor>();
  t->rows = rows;
  t->cols = cols;
  t->values.assign(static_cast<size_t>(rows) * cols, 0.0);
  t->requires_grad = requires_grad;
  return t;
}

TensorPtr make_tensor(int rows, int cols, const std::vector<double>& values,
                      bool requires_grad) {
  if (values.size() != static_cast<size_t>(rows) * cols) {
    throw ShapeError("make_tensor: " + std::to_string(values.size()) +
                     " values for shape [" + std::to_string(rows) + "," +
                     std::to_string(cols) + "]");
  }
  auto t = make_tensor(rows, cols, requires_grad);
  t->values = values;
  return t;
}

TensorPtr make_row(const std::vector<double>& values, bool requires_grad) {
  return make_tensor(1, static_cast<int>(values.size()), values, requires_grad);
}

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b) {
  if (a->cols != b->rows) {
    throw ShapeError("matmul: shape mismatch " + shape_str(a) + " vs " + shape_str(b));
  }
  auto out = result(a->rows, b->cols, {a, b});
  const int m = a->rows, k = a->cols, n = b->cols;
  for (int i = 0; i < m; ++i) {
    for (int p = 0; p < k; ++p) {
      const double av = a->at(i, p);
      if (av == 0.0) continue;
      for (int j = 0; j < n; ++j) out->at(i, j) += av * b->at(p, j);
    }
  }
  if (out->requires_grad) {
    out->backprop = [a, b, m, k, n](Tensor& self) {
      if (a->requires_grad) {
        a->ensure_grad();
        for (int i = 0; i < m; ++i) {
          for (int j = 0; j < n; ++j) {
            const double g = self.grad[static_cast<size_t>(i) * n + j];
            if (g == 0.0) continue;
            for (int p = 0; p < k; ++p) a->grad_at(i, p) += g * b->at(p, j);
          }
        }
      }
      if (b->requires_grad) {
        b->ensure_grad();
        for (int i = 0; i < m; ++i) {
          for (int p = 0; p < k; ++p) {
            const double av = a->at(i, p);
            if (av == 0.0) continue;
            for (int j = 0; j < n; ++j) {
              b->grad_at(p, j) += av * self.grad[static_cast<size_t>(i) * n + j];
            }
          }
        }
      }
    };
  }
  return out;
}

TensorPtr transpose(const TensorPtr& a) {
  auto out = result(a->cols, a->rows, {a});
  for (int i = 0; i < a->rows; ++i) {
    for (int j = 0; j < a->cols; ++j) out->at(j, i) = a->at(i, j);
  }
  if (out->requires_grad) {
    out->backprop = [a](Tensor& self) {
      a->ensure_grad();
      for (int i = 0; i < self.rows; ++i) {
        for (int j = 0; j < self.cols; ++j) {
          a->grad_at(j, i) += self.grad[static_cast<size_t>(i) * self.cols + j];
        }
      }
    };
  }
  return out;
}

TensorPtr reshape(const TensorPtr& a, int rows, int cols) {
  if (static_cast<size_t>(rows) * cols != a->size()) {
    throw ShapeError("reshape: cannot view " + shape_str(a) + " as [" +
                     std::to_string(rows) + "," + std::to_string(cols) + "]");
  }
  auto out = result(rows, cols, {a});
  out->values = a->values;
  if (out->requires_grad) {
    out->backprop = [a](Tensor& self) {
      a->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) a->grad[i] += self.grad[i];
    };
  }
  return out;
}

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
  require_same_shape(a, b, "add");
  auto out = result(a->rows, a->cols, {a, b});
  for (size_t i = 0; i < out->size(); ++i) out->values[i] = a->values[i] + b->values[i];
  if (out->requires_grad) {
    out->backprop = [a, b](Tensor& self) {
      if (a->requires_grad) {
        a->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) a->grad[i] += self.grad[i];
      }
      if (b->requires_grad) {
        b->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) b->grad[i] += self.grad[i];
      }
    };
  }
  return out;
}

TensorPtr sub(const TensorPtr& a, const TensorPtr& b) {
  require_same_shape(a, b, "sub");
  auto out = result(a->rows, a->cols, {a, b});
  for (size_t i = 0; i < out->size(); ++i) out->values[i] = a->values[i] - b->values[i];
  if (out->requires_grad) {
    out->backprop = [a, b](Tensor& self) {
      if (a->requires_grad) {
        a->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) a->grad[i] += self.grad[i];
      }
      if (b->requires_grad) {
        b->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) b->grad[i] -= self.grad[i];
      }
    };
  }
  return out;
}

TensorPtr mul(const TensorPtr& a, const TensorPtr& b) {
  require_same_shape(a, b, "mul");
  auto out = result(a->rows, a->cols, {a, b});
  for (size_t i = 0; i < out->size(); ++i) out->values[i] = a->values[i] * b->values[i];
  if (out->requires_grad) {
    out->backprop = [a, b](Tensor& self) {
      if (a->requires_grad) {
        a->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) a->grad[i] += self.grad[i] * b->values[i];
      }
      if (b->requires_grad) {
        b->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) b->grad[i] += self.grad[i] * a->values[i];
      }
    };
  }
  return out;
}

TensorPtr scale(const TensorPtr& a, double s) {
  auto out = result(a->rows, a->cols, {a});
  for (size_t i = 0; i < out->size(); ++i) out->values[i] = a->values[i] * s;
  if (out->requires_grad) {
    out->backprop = [a, s](Tensor& self) {
      a->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) a->grad[i] += self.grad[i] * s;
    };
  }
  return out;
}

TensorPtr add_row(const TensorPtr& x, const TensorPtr& row) {
  if (row->rows != 1 || row->cols != x->cols) {
    throw ShapeError("add_row: shape mismatch " + shape_str(x) + " vs " + shape_str(row));
  }
  auto out = result(x->rows, x->cols, {x, row});
  for (int i = 0; i < x->rows; ++i) {
    for (int j = 0; j < x->cols; ++j) out->at(i, j) = x->at(i, j) + row->values[j];
  }
  if (out->requires_grad) {
    out->backprop = [x, row](Tensor& self) {
      if (x->requires_grad) {
        x->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) x->grad[i] += self.grad[i];
      }
      if (row->requires_grad) {
        row->ensure_grad();
        for (int i = 0; i < self.rows; ++i) {
          for (int j = 0; j < self.cols; ++j) {
            row->grad[j] += self.grad[static_cast<size_t>(i) * self.cols + j];
          }
        }
      }
    };
  }
  return out;
}

TensorPtr linear(const TensorPtr& x, const TensorPtr& W, const TensorPtr& b) {
  if (x->cols != W->cols) {
    throw ShapeError("linear: shape mismatch " + shape_str(x) + " vs " + shape_str(W));
  }
  if (b && (b->rows != 1 || b->cols != W->rows)) {
    throw ShapeError("linear: bias shape mismatch " + shape_str(b) + " vs " + shape_str(W));
  }
  std::vector<TensorPtr> parents = {x, W};
  if (b) parents.push_back(b);
  auto out = result(x->rows, W->rows, std::move(parents));
  const int m = x->rows, in = x->cols, n_out = W->rows;
  for (int i = 0; i < m; ++i) {
    for (int o = 0; o < n_out; ++o) {
      double acc = b ? b->values[o] : 0.0;
      for (int k = 0; k < in; ++k) acc += x->at(i, k) * W->at(o, k);
      out->at(i, o) = acc;
    }
  }
  if (out->requires_grad) {
    out->backprop = [x, W, b, m, in, n_out](Tensor& self) {
      if (x->requires_grad) {
        x->ensure_grad();
        for (int i = 0; i < m; ++i) {
          for (int o = 0; o < n_out; ++o) {
            const double g = self.grad[static_cast<size_t>(i) * n_out + o];
            if (g == 0.0) continue;
            for (int k = 0; k < in; ++k) x->grad_at(i, k) += g * W->at(o, k);
          }
        }
      }
      if (W->requires_grad) {
        W->ensure_grad();
        for (int i = 0; i < m; ++i) {
          for (int o = 0; o < n_out; ++o) {
            const double g = self.grad[static_cast<size_t>(i) * n_out + o];
            if (g == 0.0) continue;
            for (int k = 0; k < in; ++k) W->grad_at(o, k) += g * x->at(i, k);
          }
        }
      }
      if (b && b->requires_grad) {
        b->ensure_grad();
        for (int i = 0; i < m; ++i) {
          for (int o = 0; o < n_out; ++o) {
            b->grad[o] += self.grad[static_cast<size_t>(i) * n_out + o];
          }
        }
      }
    };
  }
  return out;
}

namespace {

TensorPtr unary(const TensorPtr& x, double (*fwd)(double), double (*dfdx)(double)) {
  auto out = result(x->rows, x->cols, {x});
  for (size_t i = 0; i < out->size(); ++i) out->values[i] = fwd(x->values[i]);
  if (out->requires_grad) {
    out->backprop = [x, dfdx](Tensor& self) {
      x->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) {
        x->grad[i] += self.grad[i] * dfdx(x->values[i]);
      }
    };
  }
  return out;
}

double sigmoid_scalar(double v) {
  return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
}

double softplus_scalar(double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); }

double gelu_scalar(double v) { return 0.5 * v * (1.0 + std::erf(v / std::numbers::sqrt2)); }

double gelu_grad(double v) {
  const double cdf = 0.5 * (1.0 + std::erf(v / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * v * v) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + v * pdf;
}

}  // namespace

TensorPtr tanh_op(const TensorPtr& x) {
  return unary(
      x, [](double v) { return std::tanh(v); },
      [](double v) {
        const double t = std::tanh(v);
        return 1.0 - t * t;
      });
}

TensorPtr sigmoid(const TensorPtr& x) {
  return unary(x, sigmoid_scalar, [](double v) {
    const double s = sigmoid_scalar(v);
    return s * (1.0 - s);
  });
}

TensorPtr gelu(const TensorPtr& x) { return unary(x, gelu_scalar, gelu_grad); }

TensorPtr softplus(const TensorPtr& x) { return unary(x, softplus_scalar, sigmoid_scalar); }

TensorPtr masked_softmax(const TensorPtr& logits, const std::vector<char>& mask) {
  if (mask.size() != logits->size()) {
    throw ShapeError("masked_softmax: mask size " + std::to_string(mask.size()) +
                     " vs logits " + shape_str(logits));
  }
  auto out = result(logits->rows, logits->cols, {logits});
  const int n = logits->cols;
  for (int i = 0; i < logits->rows; ++i) {
    const size_t base = static_cast<size_t>(i) * n;
    double max_v = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      if (mask[base + j]) max_v = std::max(max_v, logits->values[base + j]);
    }
    if (max_v == -std::numeric_limits<double>::infinity()) continue;  // all-false row
    double z = 0.0;
    for (int j = 0; j < n; ++j) {
      if (!mask[base + j]) continue;
      out->values[base + j] = std::exp(logits->values[base + j] - max_v);
      z += out->values[base + j];
    }
    for (int j = 0; j < n; ++j) {
      if (mask[base + j]) out->values[base + j] /= z;
    }
  }
  if (out->requires_grad) {
    out->backprop = [logits, mask, n](Tensor& self) {
      logits->ensure_grad();
      for (int i = 0; i < self.rows; ++i) {
        const size_t base = static_cast<size_t>(i) * n;
        double dot = 0.0;
        for (int j = 0; j < n; ++j) {
          if (mask[base + j]) dot += self.grad[base + j] * self.values[base + j];
        }
        for (int j = 0; j < n; ++j) {
          if (!mask[base + j]) continue;
          logits->grad[base + j] += self.values[base + j] * (self.grad[base + j] - dot);
        }
      }
    };
  }
  return out;
}

TensorPtr layer_norm(const TensorPtr& x, const TensorPtr& gain, const TensorPtr& bias) {
  if (gain->rows != 1 || gain->cols != x->cols || bias->rows != 1 || bias->cols != x->cols) {
    throw ShapeError("layer_norm: parameter shapes " + shape_str(gain) + "/" +
                     shape_str(bias) + " do not match " + shape_str(x));
  }
  constexpr double kEps = 1e-5;
  auto out = result(x->rows, x->cols, {x, gain, bias});
  const int n = x->cols;
  std::vector<double> inv_std(x->rows), xhat(x->size());
  for (int i = 0; i < x->rows; ++i) {
    const size_t base = static_cast<size_t>(i) * n;
    double mean = 0.0;
    for (int j = 0; j < n; ++j) mean += x->values[base + j];
    mean /= n;
    double var = 0.0;
    for (int j = 0; j < n; ++j) {
      const double d = x->values[base + j] - mean;
      var += d * d;
    }
    var /= n;
    inv_std[i] = 1.0 / std::sqrt(var + kEps);
    for (int j = 0; j < n; ++j) {
      xhat[base + j] = (x->values[base + j] - mean) * inv_std[i];
      out->values[base + j] = gain->values[j] * xhat[base + j] + bias->values[j];
    }
  }
  if (out->requires_grad) {
    out->backprop = [x, gain, bias, n, inv_std = std::move(inv_std),
                     xhat = std::move(xhat)](Tensor& self) {
      for (int i = 0; i < self.rows; ++i) {
        const size_t base = static_cast<size_t>(i) * n;
        if (x->requires_grad) {
          x->ensure_grad();
          double mean_h = 0.0, mean_hx = 0.0;
          for (int j = 0; j < n; ++j) {
            const double h = self.grad[base + j] * gain->values[j];
            mean_h += h;
            mean_hx += h * xhat[base + j];
          }
          mean_h /= n;
          mean_hx /= n;
          for (int j = 0; j < n; ++j) {
            const double h = self.grad[base + j] * gain->values[j];
            x->grad[base + j] += (h - mean_h - xhat[base + j] * mean_hx) * inv_std[i];
          }
        }
        if (gain->requires_grad) {
          gain->ensure_grad();
          for (int j = 0; j < n; ++j) gain->grad[j] += self.grad[base + j] * xhat[base + j];
        }
        if (bias->requires_grad) {
          bias->ensure_grad();
          for (int j = 0; j < n; ++j) bias->grad[j] += self.grad[base + j];
        }
      }
    };
  }
  return out;
}

TensorPtr embedding_rows(const TensorPtr& table, const std::vector<int>& ids) {
  for (int id : ids) {
    if (id < 0 || id >= table->rows) {
      throw ShapeError("embedding_rows: id " + std::to_string(id) + " outside table " +
                       shape_str(table));
    }
  }
  auto out = result(static_cast<int>(ids.size()), table->cols, {table});
  for (size_t i = 0; i < ids.size(); ++i) {
    for (int j = 0; j < table->cols; ++j) {
      out->at(static_cast<int>(i), j) = table->at(ids[i], j);
    }
  }
  if (out->requires_grad) {
    out->backprop = [table, ids](Tensor& self) {
      table->ensure_grad();
      for (size_t i = 0; i < ids.size(); ++i) {
        for (int j = 0; j < self.cols; ++j) {
          table->grad_at(ids[i], j) += self.grad[i * self.cols + j];
        }
      }
    };
  }
  return out;
}

TensorPtr concat_rows(const std::vector<TensorPtr>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  int rows = 0;
  const int cols = parts[0]->cols;
  for (const auto& p : parts) {
    if (p->cols != cols) {
      throw ShapeError("concat_rows: column mismatch " + shape_str(parts[0]) + " vs " +
                       shape_str(p));
    }
    rows += p->rows;
  }
  auto out = result(rows, cols, parts);
  size_t offset = 0;
  for (const auto& p : parts) {
    std::copy(p->values.begin(), p->values.end(), out->values.begin() + offset);
    offset += p->size();
  }
  if (out->requires_grad) {
    out->backprop = [parts](Tensor& self) {
      size_t off = 0;
      for (const auto& p : parts) {
        if (p->requires_grad) {
          p->ensure_grad();
          for (size_t i = 0; i < p->size(); ++i) p->grad[i] += self.grad[off + i];
        }
        off += p->size();
      }
    };
  }
  return out;
}

TensorPtr concat_cols(const std::vector<TensorPtr>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const int rows = parts[0]->rows;
  int cols = 0;
  for (const auto& p : parts) {
    if (p->rows != rows) {
      throw ShapeError("concat_cols: row mismatch " + shape_str(parts[0]) + " vs " +
                       shape_str(p));
    }
    cols += p->cols;
  }
  auto out = result(rows, cols, parts);
  int col0 = 0;
  for (const auto& p : parts) {
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < p->cols; ++j) out->at(i, col0 + j) = p->at(i, j);
    }
    col0 += p->cols;
  }
  if (out->requires_grad) {
    out->backprop = [parts, rows](Tensor& self) {
      int c0 = 0;
      for (const auto& p : parts) {
        if (p->requires_grad) {
          p->ensure_grad();
          for (int i = 0; i < rows; ++i) {
            for (int j = 0; j < p->cols; ++j) {
              p->grad_at(i, j) += self.grad[static_cast<size_t>(i) * self.cols + c0 + j];
            }
          }
        }
        c0 += p->cols;
      }
    };
  }
  return out;
}

TensorPtr slice_rows(const TensorPtr& x, int begin, int end) {
  if (begin < 0 || end > x->rows || begin >= end) {
    throw ShapeError("slice_rows: range [" + std::to_string(begin) + "," +
                     std::to_string(end) + ") outside " + shape_str(x));
  }
  auto out = result(end - begin, x->cols, {x});
  std::copy(x->values.begin() + static_cast<size_t>(begin) * x->cols,
            x->values.begin() + static_cast<size_t>(end) * x->cols, out->values.begin());
  if (out->requires_grad) {
    out->backprop = [x, begin](Tensor& self) {
      x->ensure_grad();
      const size_t off = static_cast<size_t>(begin) * x->cols;
      for (size_t i = 0; i < self.grad.size(); ++i) x->grad[off + i] += self.grad[i];
    };
  }
  return out;
}

TensorPtr slice_cols(const TensorPtr& x, int begin, int end) {
  if (begin < 0 || end > x->cols || begin >= end) {
    throw ShapeError("slice_cols: range [" + std::to_string(begin) + "," +
                     std::to_string(end) + ") outside " + shape_str(x));
  }
  auto out = result(x->rows, end - begin, {x});
  for (int i = 0; i < x->rows; ++i) {
    for (int j = begin; j < end; ++j) out->at(i, j - begin) = x->at(i, j);
  }
  if (out->requires_grad) {
    out->backprop = [x, begin](Tensor& self) {
      x->ensure_grad();
      for (int i = 0; i < self.rows; ++i) {
        for (int j = 0; j < self.cols; ++j) {
          x->grad_at(i, begin + j) += self.grad[static_cast<size_t>(i) * self.cols + j];
        }
      }
    };
  }
  return out;
}

TensorPtr sum_all(const TensorPtr& x) {
  auto out = result(1, 1, {x});
  double acc = 0.0;
  for (double v : x->values) acc += v;
  out->values[0] = acc;
  if (out->requires_grad) {
    out->backprop = [x](Tensor& self) {
      x->ensure_grad();
      for (size_t i = 0; i < x->grad.size(); ++i) x->grad[i] += self.grad[0];
    };
  }
  return out;
}

TensorPtr mean_all(const TensorPtr& x) {
  if (x->size() == 0) throw ShapeError("mean_all: empty tensor");
  return scale(sum_all(x), 1.0 / static_cast<double>(x->size()));
}

TensorPtr pairwise_weighted_sum(const TensorPtr& A, const TensorPtr& P) {
  const int R = A->rows, S = A->cols, d = P->cols;
  if (P->rows != R * S) {
    throw ShapeError("pairwise_weighted_sum: " + shape_str(A) + " needs P rows " +
                     std::to_string(R * S) + ", got " + shape_str(P));
  }
  auto out = result(R, d, {A, P});
  for (int i = 0; i < R; ++i) {
    for (int j = 0; j < S; ++j) {
      const double w = A->at(i, j);
      if (w == 0.0) continue;
      const size_t p_base = static_cast<size_t>(i) * S + j;
      for (int c = 0; c < d; ++c) out->at(i, c) += w * P->values[p_base * d + c];
    }
  }
  if (out->requires_grad) {
    out->backprop = [A, P, R, S, d](Tensor& self) {
      if (A->requires_grad) {
        A->ensure_grad();
        for (int i = 0; i < R; ++i) {
          for (int j = 0; j < S; ++j) {
            const size_t p_base = static_cast<size_t>(i) * S + j;
            double acc = 0.0;
            for (int c = 0; c < d; ++c) {
              acc += self.grad[static_cast<size_t>(i) * d + c] * P->values[p_base * d + c];
            }
            A->grad_at(i, j) += acc;
          }
        }
      }
      if (P->requires_grad) {
        P->ensure_grad();
        for (int i = 0; i < R; ++i) {
          for (int j = 0; j < S; ++j) {
            const double w = A->at(i, j);
            if (w == 0.0) continue;
            const size_t p_base = static_cast<size_t>(i) * S + j;
            for (int c = 0; c < d; ++c) {
              P->grad[p_base * d + c] += w * self.grad[static_cast<size_t>(i) * d + c];
            }
          }
        }
      }
    };
  }
  return out;
}

void backward(const TensorPtr& root) {
  if (root->rows != 1 || root->cols != 1) {
    throw ShapeError("backward: root must be a [1,1] scalar, got " + shape_str(root));
  }
  std::vector<Tensor*> order;
  std::unordered_set<Tensor*> visited;
  std::vector<std::pair<Tensor*, size_t>> stack;
  stack.emplace_back(root.get(), 0);
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Tensor* parent = node->parents[next++].get();
      if (visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root->ensure_grad();
  root->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Tensor* node = *it;
    if (node->backprop && node->requires_grad && !node->grad.empty()) {
      node->backprop(*node);
    }
  }
}

}  // namespace ssgn
