#include "ssgn/decoder.hpp"

#include <limits>

#include "ssgn/error.hpp"

namespace ssgn {

std::pair<StepSource, int> select(const std::vector<double>& y_o,
                                  const std::vector<double>& y_t) {
  if (y_o.empty() && y_t.empty()) throw DataError("select: no scores");
  int best = 0;
  double best_v = -std::numeric_limits<double>::infinity();
  const int n_o = static_cast<int>(y_o.size());
  const int total = n_o + static_cast<int>(y_t.size());
  for (int i = 0; i < total; ++i) {
    const double v = i < n_o ? y_o[i] : y_t[i - n_o];
    if (v > best_v) {
      best_v = v;
      best = i;
    }
  }
  return best < n_o ? std::make_pair(StepSource::vocab, best)
                    : std::make_pair(StepSource::token, best - n_o);
}

std::vector<TargetStep> align_target(const std::string& answer, const Vocabulary& vocab,
                                     const std::vector<Entity>& tokens, int max_steps) {
  std::vector<std::string> words;
  std::string word;
  for (char c : answer + " ") {
    if (c == ' ' || c == '\t') {
      if (!word.empty()) words.push_back(word);
      word.clear();
    } else {
      word += c;
    }
  }
  if (words.empty()) throw DataError("align_target: empty answer");

  std::vector<TargetStep> target;
  for (const std::string& w : words) {
    if (static_cast<int>(target.size()) == max_steps) return target;
    TargetStep step;
    int first_token = -1;
    for (size_t j = 0; j < tokens.size(); ++j) {
      if (tokens[j].label == w) {
        step.positives.push_back(vocab.size() + static_cast<int>(j));
        if (first_token < 0) first_token = static_cast<int>(j);
      }
    }
    if (vocab.contains(w)) step.positives.push_back(vocab.index(w));
    if (step.positives.empty()) step.positives.push_back(Vocabulary::kUnk);
    if (first_token >= 0) {
      step.feed_source = StepSource::token;
      step.feed_index = first_token;
    } else {
      step.feed_source = StepSource::vocab;
      step.feed_index = vocab.contains(w) ? vocab.index(w) : Vocabulary::kUnk;
    }
    target.push_back(std::move(step));
  }
  if (static_cast<int>(target.size()) < max_steps) {
    TargetStep end;
    end.positives.push_back(Vocabulary::kEnd);
    end.feed_source = StepSource::vocab;
    end.feed_index = Vocabulary::kEnd;
    target.push_back(std::move(end));
  }
  return target;
}

Decoder::Decoder(const ModelConfig& cfg, const Vocabulary& vocab)
    : cfg_(cfg), vocab_(&vocab) {}

Decoder::StepScores Decoder::readout(ParamStore& params, const TensorPtr& o_l,
                                     const TensorPtr& T2) {
  StepScores s;
  auto w_out = params.get("dec.out", vocab_->size(), cfg_.d);
  auto b_out = params.get("dec.outb", 1, vocab_->size(), Init::zeros);
  s.y_o = linear(o_l, w_out, b_out);
  auto wt1 = params.get("dec.wt1", cfg_.d, cfg_.d);
  auto bt1 = params.get("dec.bt1", 1, cfg_.d, Init::zeros);
  auto wt2 = params.get("dec.wt2", cfg_.d, cfg_.d);
  auto bt2 = params.get("dec.bt2", 1, cfg_.d, Init::zeros);
  if (T2->rows == 0) {
    s.y_t = make_tensor(o_l->rows, 0);
    return s;
  }
  auto token_keys = linear(T2, wt1, bt1);  // [M, d]
  auto step_keys = linear(o_l, wt2, bt2);  // [steps, d]
  s.y_t = matmul(step_keys, transpose(token_keys));
  return s;
}

TensorPtr Decoder::context_rows(ParamStore& params, const EncoderState& state,
                                const TensorPtr& V2, const TensorPtr& T2) {
  std::vector<TensorPtr> parts;
  parts.push_back(linear(state.Q, params.get("dec.pq", cfg_.d, cfg_.d), nullptr));
  if (V2->rows > 0) parts.push_back(linear(V2, params.get("dec.pv", cfg_.d, cfg_.d), nullptr));
  if (T2->rows > 0) parts.push_back(linear(T2, params.get("dec.pt", cfg_.d, cfg_.d), nullptr));
  return parts.size() == 1 ? parts[0] : concat_rows(parts);
}

TensorPtr Decoder::step_row(ParamStore& params, StepSource source, int index,
                            const TensorPtr& T2, int position) {
  TensorPtr base;
  if (source == StepSource::vocab) {
    base = embedding_rows(params.get("embed.word", vocab_->size(), cfg_.d), {index});
  } else {
    if (index < 0 || index >= T2->rows) {
      throw DataError("decode: token feedback index " + std::to_string(index) +
                      " outside scene");
    }
    base = slice_rows(T2, index, index + 1);
  }
  auto projected = linear(base, params.get("dec.po", cfg_.d, cfg_.d), nullptr);
  auto pos_table = params.get("dec.pos", cfg_.max_answer_len, cfg_.d);
  return add(projected, slice_rows(pos_table, position, position + 1));
}

TensorPtr Decoder::run_layers(ParamStore& params, const TensorPtr& seq, int prefix,
                              int steps) {
  auto mask = prefix_step_mask(prefix, steps);
  TensorPtr x = seq;
  for (int l = 0; l < cfg_.decoder_layers; ++l) {
    x = transformer_layer(params, "dec.l" + std::to_string(l) + ".", x, cfg_.heads, mask);
  }
  return x;
}

Decoder::GreedyResult Decoder::greedy(ParamStore& params, const EncoderState& state,
                                      const TensorPtr& V2, const TensorPtr& T2,
                                      const Scene& scene) {
  auto prefix = context_rows(params, state, V2, T2);
  const int P = prefix->rows;
  const int L = cfg_.max_answer_len;

  GreedyResult result;
  result.answer.stopped_at = L;
  std::vector<TensorPtr> step_rows;
  step_rows.push_back(step_row(params, StepSource::vocab, Vocabulary::kBegin, T2, 0));

  for (int l = 0; l < L; ++l) {
    std::vector<TensorPtr> parts = {prefix};
    parts.insert(parts.end(), step_rows.begin(), step_rows.end());
    auto out = run_layers(params, concat_rows(parts), P, l + 1);
    auto o_l = slice_rows(out, P + l, P + l + 1);
    auto scores = readout(params, o_l, T2);
    auto logits = scores.y_t->cols > 0 ? concat_cols({scores.y_o, scores.y_t})
                                       : scores.y_o;
    result.step_logits.push_back(logits);

    std::vector<double> y_t_vals(scores.y_t->values);
    auto [source, index] = select(scores.y_o->values, y_t_vals);
    DecodeStep step;
    step.source = source;
    step.index = index;
    step.logit = source == StepSource::vocab
                     ? scores.y_o->values[index]
                     : scores.y_t->values[index];
    result.answer.steps.push_back(step);

    if (source == StepSource::vocab && index == Vocabulary::kEnd) {
      result.answer.stopped_at = l;
      break;
    }
    if (l + 1 < L) step_rows.push_back(step_row(params, source, index, T2, l + 1));
  }

  std::string text;
  for (const DecodeStep& step : result.answer.steps) {
    if (step.source == StepSource::vocab &&
        (step.index == Vocabulary::kEnd || step.index == Vocabulary::kPad)) {
      if (step.index == Vocabulary::kEnd) break;
      continue;
    }
    const std::string word = step.source == StepSource::vocab
                                 ? vocab_->word(step.index)
                                 : scene.tokens[step.index].label;
    if (!text.empty()) text += ' ';
    text += word;
  }
  result.answer.text = text;
  return result;
}

std::vector<TensorPtr> Decoder::teacher_forced(ParamStore& params,
                                               const EncoderState& state,
                                               const TensorPtr& V2, const TensorPtr& T2,
                                               const std::vector<TargetStep>& target) {
  if (target.empty()) throw DataError("decode: empty teacher-forcing target");
  if (static_cast<int>(target.size()) > cfg_.max_answer_len) {
    throw DataError("decode: target longer than the answer step limit");
  }
  auto prefix = context_rows(params, state, V2, T2);
  const int P = prefix->rows;
  const int steps = static_cast<int>(target.size());

  std::vector<TensorPtr> parts = {prefix};
  parts.push_back(step_row(params, StepSource::vocab, Vocabulary::kBegin, T2, 0));
  for (int l = 1; l < steps; ++l) {
    parts.push_back(
        step_row(params, target[l - 1].feed_source, target[l - 1].feed_index, T2, l));
  }
  auto out = run_layers(params, concat_rows(parts), P, steps);
  auto o = slice_rows(out, P, P + steps);
  auto scores = readout(params, o, T2);

  std::vector<TensorPtr> logits;
  logits.reserve(steps);
  for (int l = 0; l < steps; ++l) {
    auto y_o = slice_rows(scores.y_o, l, l + 1);
    if (scores.y_t->cols > 0) {
      logits.push_back(concat_cols({y_o, slice_rows(scores.y_t, l, l + 1)}));
    } else {
      logits.push_back(y_o);
    }
  }
  return logits;
}

}  // namespace ssgn
