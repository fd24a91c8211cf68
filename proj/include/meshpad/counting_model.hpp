#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "meshpad/codec.hpp"
#include "meshpad/editgen.hpp"

namespace meshpad {

namespace detail {

/// Coordinates since the last control token, mod 3: 0 at an x position.
inline int vertex_phase(std::span<const Token> context) {
  std::size_t run = 0;
  for (auto it = context.rbegin(); it != context.rend() && !it->is_control(); ++it) ++run;
  return static_cast<int>(run % 3);
}

struct ChainShape {
  std::size_t run = 0;      // coordinates since the last control token
  bool after_start = false;  // that control token is <start>
};

inline ChainShape chain_shape(std::span<const Token> context) {
  ChainShape s;
  auto it = context.rbegin();
  for (; it != context.rend() && !it->is_control(); ++it) ++s.run;
  s.after_start = it != context.rend() && it->kind == TokenKind::Start;
  return s;
}

/// True when the triangle formed by the last three vertices of the current
/// chain already occurs earlier in the context.
inline bool last_triangle_repeats(std::span<const Token> context, std::size_t run) {
  if (run < 9) return false;
  auto vertex_at = [&](std::size_t end) {
    return QuantizedVertex{context[end - 3].value, context[end - 2].value, context[end - 1].value};
  };
  const std::size_t n = context.size();
  const Triangle last(vertex_at(n), vertex_at(n - 3), vertex_at(n - 6));
  bool repeated = false;
  for_each_chain_triangle(context.first(n - 3), [&](auto a, auto b, auto c, std::size_t) {
    repeated = repeated || Triangle(a, b, c) == last;
  });
  return repeated;
}

/// [phase, id(-k), ..., id(-1)], padded on the left with the <start> id.
inline std::vector<std::uint64_t> context_words(std::span<const Token> context, int bins, int order) {
  std::vector<std::uint64_t> w(static_cast<std::size_t>(order) + 1, static_cast<std::uint64_t>(bins));
  w[0] = static_cast<std::uint64_t>(vertex_phase(context));
  const std::size_t n = std::min(context.size(), static_cast<std::size_t>(order));
  for (std::size_t i = 0; i < n; ++i)
    w[static_cast<std::size_t>(order) - i] = static_cast<std::uint64_t>(token_id(context[context.size() - 1 - i], bins));
  return w;
}

/// Byte key for the suffix of length `len` plus trailing extra ids.
inline std::string suffix_key(const std::vector<std::uint64_t>& words, std::size_t len, std::span<const int> extra = {}) {
  std::string key;
  key.push_back(static_cast<char>(words[0]));
  for (std::size_t i = words.size() - len; i < words.size(); ++i) {
    key.push_back(static_cast<char>(words[i] & 0xFF));
    key.push_back(static_cast<char>((words[i] >> 8) & 0xFF));
  }
  for (int e : extra) {
    key.push_back(static_cast<char>(e & 0xFF));
    key.push_back(static_cast<char>((e >> 8) & 0xFF));
  }
  return key;
}

using CountRow = std::map<int, std::uint32_t>;

/// One count table per context length 0..order; lookups back off to the
/// longest suffix that was observed.
struct BackoffTables {
  std::vector<std::unordered_map<std::string, CountRow>> levels;

  explicit BackoffTables(int order = 0) : levels(static_cast<std::size_t>(order) + 1) {}

  void add(const std::vector<std::uint64_t>& words, std::span<const int> extra, int id) {
    for (std::size_t len = 0; len < levels.size(); ++len) ++levels[len][suffix_key(words, len, extra)][id];
  }

  const CountRow* find(const std::vector<std::uint64_t>& words, std::span<const int> extra) const {
    for (std::size_t len = levels.size(); len-- > 0;) {
      const auto it = levels[len].find(suffix_key(words, len, extra));
      if (it != levels[len].end()) return &it->second;
    }
    return nullptr;
  }
};

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint32_t get_u32(const std::string& in, std::size_t& pos) {
  if (pos + 4 > in.size()) throw Error("count table truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += 4;
  return v;
}

inline void put_tables(std::string& out, const BackoffTables& t) {
  put_u32(out, static_cast<std::uint32_t>(t.levels.size()));
  for (const auto& level : t.levels) {
    std::vector<const std::pair<const std::string, CountRow>*> rows;
    for (const auto& r : level) rows.push_back(&r);
    std::sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return a->first < b->first; });
    put_u32(out, static_cast<std::uint32_t>(rows.size()));
    for (const auto* r : rows) {
      put_u32(out, static_cast<std::uint32_t>(r->first.size()));
      out += r->first;
      put_u32(out, static_cast<std::uint32_t>(r->second.size()));
      for (const auto& [id, c] : r->second) {
        put_u32(out, static_cast<std::uint32_t>(id));
        put_u32(out, c);
      }
    }
  }
}

inline BackoffTables get_tables(const std::string& in, std::size_t& pos) {
  BackoffTables t;
  t.levels.resize(get_u32(in, pos));
  for (auto& level : t.levels) {
    const std::uint32_t n_rows = get_u32(in, pos);
    for (std::uint32_t r = 0; r < n_rows; ++r) {
      const std::uint32_t len = get_u32(in, pos);
      if (pos + len > in.size()) throw Error("count table truncated");
      std::string key = in.substr(pos, len);
      pos += len;
      auto& row = level[key];
      const std::uint32_t n = get_u32(in, pos);
      for (std::uint32_t e = 0; e < n; ++e) {
        const auto id = static_cast<int>(get_u32(in, pos));
        row[id] = get_u32(in, pos);
      }
    }
  }
  return t;
}

inline std::string header(const char* magic, int bins, int order) {
  std::string out(magic, 4);
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(bins));
  put_u32(out, static_cast<std::uint32_t>(order));
  return out;
}

inline void read_header(const std::string& in, std::size_t& pos, const char* magic, int& bins, int& order) {
  if (in.size() < 16 || in.compare(0, 4, magic) != 0) throw Error(std::string("not a ") + magic + " count table");
  pos = 4;
  if (get_u32(in, pos) != 1) throw Error("unsupported count table version");
  bins = static_cast<int>(get_u32(in, pos));
  order = static_cast<int>(get_u32(in, pos));
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline void require_corpus(std::span<const TokenSequence> corpus, int order) {
  if (order < 1) throw Error("counting order must be at least 1");
  if (corpus.empty()) throw Error("counting model needs a non-empty corpus");
  for (const auto& s : corpus)
    if (s.bins != corpus.front().bins) throw Error("corpus sequences disagree on bins");
}

}  // namespace detail

/// Order-k next-token counts with add-one smoothing over the tokens the
/// grammar allows at each position (a chain closes only after three vertices).
/// The context key also carries the vertex phase. Unseen contexts back off to
/// the longest observed suffix. Read-only after fitting, so concurrent step()
/// calls on one instance are safe.
class CountingModel : public SequenceModel {
 public:
  CountingModel(int bins, int order) : bins_(bins), order_(order), tables_(order) {}

  int bins() const override { return bins_; }
  int order() const { return order_; }

  void observe(std::span<const Token> context, Token next) {
    tables_.add(detail::context_words(context, bins_, order_), {}, token_id(next, bins_));
  }

  /// When set (default), the model ends the sequence as soon as the newest
  /// triangle repeats an earlier one: a mesh never holds the same triangle
  /// twice, so a repeat means greedy decoding has entered a cycle.
  void set_end_on_repeat(bool on) { end_on_repeat_ = on; }
  bool end_on_repeat() const { return end_on_repeat_; }

  StepOutput step(std::span<const Token> context, const Condition&) const override {
    auto words = detail::context_words(context, bins_, order_);
    const auto v = static_cast<std::size_t>(vocabulary_size(bins_));
    const int end_id = token_id(Token::end(), bins_);
    const int split_id = token_id(Token::split(), bins_);
    const auto shape = detail::chain_shape(context);
    if (end_on_repeat_ && shape.run % 3 == 0 && detail::last_triangle_repeats(context, shape.run))
      return {detail::one_hot(v, end_id), {std::move(words)}};

    // Smoothing mass only goes to tokens the grammar allows here.
    std::vector<char> allowed(v, 0);
    for (int c = 0; c < bins_; ++c) allowed[static_cast<std::size_t>(c)] = 1;
    if (shape.run % 3 == 0) {
      const std::size_t chain_vertices = shape.run / 3;
      if (chain_vertices >= 3) allowed[static_cast<std::size_t>(end_id)] = allowed[static_cast<std::size_t>(split_id)] = 1;
      if (chain_vertices == 0 && shape.after_start) allowed[static_cast<std::size_t>(end_id)] = 1;
    }
    const detail::CountRow* row = tables_.find(words, {});
    Distribution p(v, 0.0);
    double total = 0.0;
    for (std::size_t id = 0; id < v; ++id) {
      if (!allowed[id]) continue;
      double c = 1.0;
      if (row) {
        const auto it = row->find(static_cast<int>(id));
        if (it != row->end()) c += it->second;
      }
      p[id] = c;
      total += c;
    }
    for (auto& x : p) x /= total;
    return {std::move(p), {std::move(words)}};
  }

  std::string serialize() const {
    std::string out = detail::header("MPCM", bins_, order_);
    detail::put_tables(out, tables_);
    return out;
  }

  static CountingModel deserialize(const std::string& bytes) {
    std::size_t pos = 0;
    int bins = 0;
    int order = 0;
    detail::read_header(bytes, pos, "MPCM", bins, order);
    CountingModel m(bins, order);
    m.tables_ = detail::get_tables(bytes, pos);
    if (m.tables_.levels.size() != static_cast<std::size_t>(order) + 1) throw Error("count table order mismatch");
    return m;
  }

  void save(const std::string& path) const { detail::spit(path, serialize()); }
  static CountingModel load(const std::string& path) { return deserialize(detail::slurp(path)); }

 private:
  int bins_;
  int order_;
  detail::BackoffTables tables_;
  bool end_on_repeat_ = true;
};

/// Counts of P(y | context, x) and P(z | context, x, y) with add-one smoothing
/// over coordinates. Reads the context from a CountingModel hidden state.
class CountingSpeculator : public Speculator {
 public:
  CountingSpeculator(int bins, int order) : bins_(bins), order_(order), y_(order), z_(order) {}

  int bins() const override { return bins_; }
  int order() const { return order_; }

  /// `context` ends just before the vertex's x.
  void observe(std::span<const Token> context, int x, int y, int z) {
    const auto words = detail::context_words(context, bins_, order_);
    const int xs[] = {x};
    const int xys[] = {x, y};
    y_.add(words, xs, y);
    z_.add(words, xys, z);
  }

  Distribution predict_y(const HiddenState& hidden, int x) const override {
    const int xs[] = {x};
    return smooth(y_.find(checked(hidden), xs));
  }

  Distribution predict_z(const HiddenState& hidden, int x, int y) const override {
    const int xys[] = {x, y};
    return smooth(z_.find(checked(hidden), xys));
  }

  std::string serialize() const {
    std::string out = detail::header("MPCS", bins_, order_);
    detail::put_tables(out, y_);
    detail::put_tables(out, z_);
    return out;
  }

  static CountingSpeculator deserialize(const std::string& bytes) {
    std::size_t pos = 0;
    int bins = 0;
    int order = 0;
    detail::read_header(bytes, pos, "MPCS", bins, order);
    CountingSpeculator s(bins, order);
    s.y_ = detail::get_tables(bytes, pos);
    s.z_ = detail::get_tables(bytes, pos);
    return s;
  }

  void save(const std::string& path) const { detail::spit(path, serialize()); }
  static CountingSpeculator load(const std::string& path) { return deserialize(detail::slurp(path)); }

 private:
  const std::vector<std::uint64_t>& checked(const HiddenState& hidden) const {
    if (hidden.words.size() != static_cast<std::size_t>(order_) + 1)
      throw Error("hidden state does not come from a counting model of the same order");
    return hidden.words;
  }

  Distribution smooth(const detail::CountRow* row) const {
    Distribution p(static_cast<std::size_t>(bins_), 1.0);
    double total = bins_;
    if (row)
      for (const auto& [id, c] : *row) {
        if (id >= 0 && id < bins_) p[static_cast<std::size_t>(id)] += c;
        total += c;
      }
    for (auto& v : p) v /= total;
    return p;
  }

  int bins_;
  int order_;
  detail::BackoffTables y_;
  detail::BackoffTables z_;
};

/// Fits on full sequences (prompt followed by target, as built by
/// addition_target). Every position after <start> is a training example.
inline CountingModel fit_counting_model(std::span<const TokenSequence> corpus, int order) {
  detail::require_corpus(corpus, order);
  CountingModel m(corpus.front().bins, order);
  for (const auto& seq : corpus) {
    const std::span<const Token> all(seq.tokens);
    for (std::size_t i = 1; i < all.size(); ++i) m.observe(all.first(i), all[i]);
  }
  return m;
}

inline CountingSpeculator fit_counting_speculator(std::span<const TokenSequence> corpus, int order) {
  detail::require_corpus(corpus, order);
  CountingSpeculator s(corpus.front().bins, order);
  for (const auto& seq : corpus) {
    const std::span<const Token> all(seq.tokens);
    std::size_t run = 0;
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (all[i].is_control()) {
        run = 0;
        continue;
      }
      if (run % 3 == 0 && i + 2 < all.size() && !all[i + 1].is_control() && !all[i + 2].is_control())
        s.observe(all.first(i), all[i].value, all[i + 1].value, all[i + 2].value);
      ++run;
    }
  }
  return s;
}

struct SpeculatorAccuracy {
  std::size_t vertices = 0;
  double y_accuracy = 1.0;
  double z_accuracy = 1.0;     // z given the true y
  double pair_accuracy = 1.0;  // greedy y, then z given that y; both right
};

/// Teacher-forced evaluation: at every vertex of every sequence, the model
/// supplies the hidden state and the speculator predicts greedily.
inline SpeculatorAccuracy evaluate_speculator(const SequenceModel& model, const Speculator& speculator,
                                              std::span<const TokenSequence> corpus) {
  auto argmax = [](const Distribution& p) {
    return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
  };
  std::size_t n = 0;
  std::size_t y_ok = 0;
  std::size_t z_ok = 0;
  std::size_t pair_ok = 0;
  for (const auto& seq : corpus) {
    const std::span<const Token> all(seq.tokens);
    std::size_t run = 0;
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (all[i].is_control()) {
        run = 0;
        continue;
      }
      if (run % 3 == 0 && i + 2 < all.size() && !all[i + 1].is_control() && !all[i + 2].is_control()) {
        const HiddenState h = model.step(all.first(i), Condition{}).hidden;
        const int x = all[i].value;
        const int y = all[i + 1].value;
        const int z = all[i + 2].value;
        const int y_hat = argmax(speculator.predict_y(h, x));
        ++n;
        y_ok += y_hat == y;
        z_ok += argmax(speculator.predict_z(h, x, y)) == z;
        pair_ok += y_hat == y && argmax(speculator.predict_z(h, x, y_hat)) == z;
      }
      ++run;
    }
  }
  SpeculatorAccuracy a;
  a.vertices = n;
  if (n > 0) {
    a.y_accuracy = static_cast<double>(y_ok) / n;
    a.z_accuracy = static_cast<double>(z_ok) / n;
    a.pair_accuracy = static_cast<double>(pair_ok) / n;
  }
  return a;
}

}  // namespace meshpad
