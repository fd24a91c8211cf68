#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <span>
#include <thread>
#include <utility>
#include <vector>

#include "meshpad/codec.hpp"
#include "meshpad/sketch.hpp"

namespace meshpad {

/// Probability per token id (see token_id); size vocabulary_size(bins).
using Distribution = std::vector<double>;

/// Opaque per-position state a model exposes to its speculator.
struct HiddenState {
  std::vector<std::uint64_t> words;
};

/// Conditioning input. Reference models ignore it; a learned model would
/// read sketch features from here.
struct Condition {
  const SketchImage* sketch = nullptr;
  std::vector<float> embedding;
};

struct StepOutput {
  Distribution probs;
  HiddenState hidden;  // state at the last consumed context position
};

/// Autoregressive next-token model over {Coord(0..bins-1), Split, End}.
class SequenceModel {
 public:
  virtual ~SequenceModel() = default;
  virtual int bins() const = 0;
  virtual StepOutput step(std::span<const Token> context, const Condition& condition) const = 0;
};

/// Vertex-aligned speculator: given the hidden state that produced an x token
/// and the sampled x, predicts the same vertex's y and z. Distributions have
/// size bins (coordinates only). z may condition on the drawn y.
class Speculator {
 public:
  virtual ~Speculator() = default;
  virtual int bins() const = 0;
  virtual Distribution predict_y(const HiddenState& hidden, int x) const = 0;
  virtual Distribution predict_z(const HiddenState& hidden, int x, int y) const = 0;
};

enum class SamplingMode { Greedy, Temperature, TopK };

struct SamplingConfig {
  SamplingMode mode = SamplingMode::Greedy;
  double temperature = 0.5;
  int top_k = 8;
};

struct DecodeConfig {
  std::size_t max_tokens = 7000;
  SamplingConfig sampling{};
  bool speculate = false;
  /// Re-score speculated y/z with the base model and fall back on disagreement.
  bool verify = false;
  std::uint64_t seed = 0;
};

/// Draws token ids from distributions, restricted to an id range.
class TokenSampler {
 public:
  TokenSampler(SamplingConfig cfg, std::uint64_t seed) : cfg_(cfg), rng_(seed) {}

  /// Draws an id in [lo, hi) plus any extra ids listed.
  int draw(const Distribution& p, int lo, int hi, std::span<const int> extra = {}) {
    std::vector<int> ids;
    for (int i = lo; i < hi && i < static_cast<int>(p.size()); ++i) ids.push_back(i);
    for (int e : extra)
      if (e >= 0 && e < static_cast<int>(p.size())) ids.push_back(e);
    if (ids.empty()) throw Error("empty sampling support");
    if (cfg_.mode == SamplingMode::Greedy) {
      int best = ids.front();
      for (int id : ids)
        if (p[id] > p[best] || (p[id] == p[best] && id < best)) best = id;
      return best;
    }
    if (cfg_.mode == SamplingMode::TopK && cfg_.top_k > 0 && static_cast<int>(ids.size()) > cfg_.top_k) {
      std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) { return p[a] > p[b]; });
      ids.resize(static_cast<std::size_t>(cfg_.top_k));
    }
    const double inv_t = 1.0 / std::max(cfg_.temperature, 1e-6);
    std::vector<double> w(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) w[i] = p[ids[i]] > 0.0 ? std::pow(p[ids[i]], inv_t) : 0.0;
    if (std::accumulate(w.begin(), w.end(), 0.0) <= 0.0) std::fill(w.begin(), w.end(), 1.0);
    std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
    return ids[pick(rng_)];
  }

 private:
  SamplingConfig cfg_;
  Rng rng_;
};

struct DecodeTrace {
  std::vector<Token> tokens;  // generated fragment
  std::size_t model_forward_passes = 0;
  std::size_t speculator_calls = 0;
  std::size_t n_control = 0;
  std::size_t n_vertices = 0;
  std::size_t verify_rejections = 0;
  std::chrono::nanoseconds wall_time{0};
  bool truncated = false;
};

/// Addition decoding loop. Every model step yields either a control token or
/// the x of a new vertex; y and z come from the speculator in one call
/// (speculate on) or from two further model steps (off). Coordinates are
/// therefore always emitted as aligned triples.
inline DecodeTrace generate_addition(const SequenceModel& model, const Speculator* speculator,
                                     const TokenSequence& prompt, const Condition& condition,
                                     const DecodeConfig& cfg) {
  if (cfg.max_tokens < 3) throw Error("max_tokens must leave room for one vertex");
  if (cfg.speculate && speculator == nullptr) throw Error("speculation requested without a speculator");
  if (prompt.bins != model.bins() || (speculator && speculator->bins() != model.bins()))
    throw Error("prompt, model and speculator disagree on bins");
  if (prompt.tokens.empty() || prompt.tokens.front().kind != TokenKind::Start)
    throw SequenceError(0, "prompt must begin with <start>");

  const int bins = model.bins();
  const int end_id = token_id(Token::end(), bins);
  const int split_id = token_id(Token::split(), bins);
  const int controls[] = {end_id, split_id};

  std::vector<Token> context = prompt.tokens;
  if (context.back().kind == TokenKind::End) context.pop_back();
  DecodeTrace trace;
  TokenSampler sampler(cfg.sampling, cfg.seed);
  const auto start = std::chrono::steady_clock::now();

  auto emit = [&](Token t) {
    context.push_back(t);
    trace.tokens.push_back(t);
  };

  // Generation stops once a whole vertex no longer fits in the budget, so a
  // truncated fragment never ends mid-vertex and every pass is accounted for.
  bool finished = false;
  while (trace.tokens.size() + 3 <= cfg.max_tokens) {
    const StepOutput out = model.step(context, condition);
    ++trace.model_forward_passes;
    const Token head = token_from_id(sampler.draw(out.probs, 0, bins, controls), bins);
    if (head.is_control()) {
      emit(head);
      ++trace.n_control;
      if (head.kind == TokenKind::End) {
        finished = true;
        break;
      }
      continue;
    }
    const int x = head.value;
    int y = 0;
    int z = 0;
    if (cfg.speculate && speculator) {
      ++trace.speculator_calls;
      y = sampler.draw(speculator->predict_y(out.hidden, x), 0, bins);
      z = sampler.draw(speculator->predict_z(out.hidden, x, y), 0, bins);
      if (cfg.verify) {
        std::vector<Token> probe = context;
        probe.push_back(Token::coord(x));
        const int y_model = sampler.draw(model.step(probe, condition).probs, 0, bins);
        ++trace.model_forward_passes;
        if (y_model != y) {
          ++trace.verify_rejections;
          y = y_model;
          probe.push_back(Token::coord(y));
          z = sampler.draw(model.step(probe, condition).probs, 0, bins);
          ++trace.model_forward_passes;
        } else {
          probe.push_back(Token::coord(y));
          const int z_model = sampler.draw(model.step(probe, condition).probs, 0, bins);
          ++trace.model_forward_passes;
          if (z_model != z) {
            ++trace.verify_rejections;
            z = z_model;
          }
        }
      }
      emit(Token::coord(x));
      emit(Token::coord(y));
      emit(Token::coord(z));
    } else {
      emit(Token::coord(x));
      y = sampler.draw(model.step(context, condition).probs, 0, bins);
      ++trace.model_forward_passes;
      emit(Token::coord(y));
      z = sampler.draw(model.step(context, condition).probs, 0, bins);
      ++trace.model_forward_passes;
      emit(Token::coord(z));
    }
    ++trace.n_vertices;
  }
  trace.truncated = !finished;
  trace.wall_time = std::chrono::steady_clock::now() - start;
  return trace;
}

/// Alignment check for a generated fragment: coordinate runs between control
/// tokens are multiples of three and no <start> appears.
inline bool fragment_aligned(std::span<const Token> fragment) {
  std::size_t run = 0;
  for (const auto& t : fragment) {
    if (t.kind == TokenKind::Start) return false;
    if (t.is_control()) {
      if (run % 3 != 0) return false;
      run = 0;
    } else {
      ++run;
    }
  }
  return run % 3 == 0;
}

/// prompt (without <end>) followed by the fragment; closed with <end> if the
/// fragment was truncated.
inline TokenSequence join_fragment(const TokenSequence& prompt, std::span<const Token> fragment) {
  TokenSequence out = prompt;
  if (!out.tokens.empty() && out.tokens.back().kind == TokenKind::End) out.tokens.pop_back();
  out.tokens.insert(out.tokens.end(), fragment.begin(), fragment.end());
  if (out.tokens.empty() || out.tokens.back().kind != TokenKind::End) out.tokens.push_back(Token::end());
  return out;
}

namespace detail {

inline Distribution one_hot(std::size_t size, int id) {
  Distribution d(size, 0.0);
  if (id >= 0 && id < static_cast<int>(size)) d[static_cast<std::size_t>(id)] = 1.0;
  return d;
}

}  // namespace detail

/// Teacher-forcing model: the next token is target[context.size()].
class OracleModel : public SequenceModel {
 public:
  explicit OracleModel(std::shared_ptr<const TokenSequence> target) : target_(std::move(target)) {}

  int bins() const override { return target_->bins; }

  StepOutput step(std::span<const Token> context, const Condition&) const override {
    const std::size_t pos = context.size();
    const Token next = pos < target_->size() ? target_->tokens[pos] : Token::end();
    return {detail::one_hot(static_cast<std::size_t>(vocabulary_size(bins())), token_id(next, bins())), {{pos}}};
  }

 private:
  std::shared_ptr<const TokenSequence> target_;
};

/// Replays the y and z that follow the x at the hidden state's position.
class OracleSpeculator : public Speculator {
 public:
  explicit OracleSpeculator(std::shared_ptr<const TokenSequence> target) : target_(std::move(target)) {}

  int bins() const override { return target_->bins; }

  Distribution predict_y(const HiddenState& hidden, int) const override { return at(hidden, 1); }
  Distribution predict_z(const HiddenState& hidden, int, int) const override { return at(hidden, 2); }

 private:
  Distribution at(const HiddenState& hidden, std::size_t offset) const {
    const std::size_t pos = hidden.words.empty() ? 0 : hidden.words[0];
    const std::size_t i = pos + offset;
    const bool coord = i < target_->size() && !target_->tokens[i].is_control();
    return detail::one_hot(static_cast<std::size_t>(bins()), coord ? target_->tokens[i].value : 0);
  }

  std::shared_ptr<const TokenSequence> target_;
};

struct OraclePair {
  std::shared_ptr<OracleModel> model;
  std::shared_ptr<OracleSpeculator> speculator;
};

/// `target` is the full sequence (prompt included) the decode should reproduce.
inline OraclePair oracle_model(const TokenSequence& target) {
  auto shared = std::make_shared<const TokenSequence>(target);
  return {std::make_shared<OracleModel>(shared), std::make_shared<OracleSpeculator>(shared)};
}

/// Wraps a model and sleeps for a fixed time per forward pass, emulating the
/// cost of a large network so pass-count savings dominate wall time.
class DelayedModel : public SequenceModel {
 public:
  DelayedModel(const SequenceModel& inner, std::chrono::microseconds delay) : inner_(inner), delay_(delay) {}

  int bins() const override { return inner_.bins(); }
  StepOutput step(std::span<const Token> context, const Condition& condition) const override {
    if (delay_.count() > 0) std::this_thread::sleep_for(delay_);
    return inner_.step(context, condition);
  }

 private:
  const SequenceModel& inner_;
  std::chrono::microseconds delay_;
};

struct DecodeJob {
  const SequenceModel* model = nullptr;
  const Speculator* speculator = nullptr;
  TokenSequence prompt;
};

struct ThroughputReport {
  std::size_t tokens = 0;
  std::size_t passes = 0;
  std::size_t runs = 0;
  double seconds = 0.0;
  double tokens_per_second = 0.0;
};

/// Runs every job `runs` times with generation capped at `measured_tokens`.
inline ThroughputReport measure_throughput(std::span<const DecodeJob> jobs, DecodeConfig cfg,
                                           std::chrono::microseconds delay, int runs,
                                           std::size_t measured_tokens = 300) {
  cfg.max_tokens = measured_tokens;
  ThroughputReport r;
  for (int run = 0; run < runs; ++run) {
    for (const auto& job : jobs) {
      const DelayedModel slow(*job.model, delay);
      const auto trace = generate_addition(slow, job.speculator, job.prompt, Condition{}, cfg);
      r.tokens += trace.tokens.size();
      r.passes += trace.model_forward_passes;
      r.seconds += std::chrono::duration<double>(trace.wall_time).count();
      ++r.runs;
    }
  }
  r.tokens_per_second = r.seconds > 0.0 ? static_cast<double>(r.tokens) / r.seconds : 0.0;
  return r;
}

struct BenchReport {
  ThroughputReport on;
  ThroughputReport off;
  double ratio = 0.0;  // tokens/s with speculation over tokens/s without
};

inline BenchReport bench_decode(std::span<const DecodeJob> jobs, DecodeConfig cfg, std::chrono::microseconds delay,
                                int runs, std::size_t measured_tokens = 300) {
  BenchReport b;
  cfg.speculate = false;
  b.off = measure_throughput(jobs, cfg, delay, runs, measured_tokens);
  cfg.speculate = true;
  b.on = measure_throughput(jobs, cfg, delay, runs, measured_tokens);
  b.ratio = b.off.tokens_per_second > 0.0 ? b.on.tokens_per_second / b.off.tokens_per_second : 0.0;
  return b;
}

}  // namespace meshpad
