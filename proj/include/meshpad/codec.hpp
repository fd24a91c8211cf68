#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "meshpad/mesh.hpp"

namespace meshpad {

enum class TokenKind : std::uint8_t { Start, End, Split, Coord };

struct Token {
  TokenKind kind = TokenKind::Coord;
  int value = 0;  // bin index; meaningful for Coord only

  static constexpr Token start() { return {TokenKind::Start, 0}; }
  static constexpr Token end() { return {TokenKind::End, 0}; }
  static constexpr Token split() { return {TokenKind::Split, 0}; }
  static constexpr Token coord(int v) { return {TokenKind::Coord, v}; }

  constexpr bool is_control() const { return kind != TokenKind::Coord; }

  friend constexpr bool operator==(const Token&, const Token&) = default;
};

/// Dense token ids: coordinates occupy [0, bins), then Start, End, Split.
/// The same mapping is used by the binary stream format and the models.
inline int token_id(const Token& t, int bins) {
  switch (t.kind) {
    case TokenKind::Coord:
      return t.value;
    case TokenKind::Start:
      return bins;
    case TokenKind::End:
      return bins + 1;
    case TokenKind::Split:
      return bins + 2;
  }
  return -1;
}

inline Token token_from_id(int id, int bins) {
  if (id >= 0 && id < bins) return Token::coord(id);
  if (id == bins) return Token::start();
  if (id == bins + 1) return Token::end();
  if (id == bins + 2) return Token::split();
  throw Error("token id " + std::to_string(id) + " outside vocabulary");
}

inline int vocabulary_size(int bins) { return bins + 3; }

struct TokenSequence {
  std::vector<Token> tokens;
  int bins = kDefaultBins;

  std::size_t size() const { return tokens.size(); }
  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

struct VertexChain {
  std::vector<QuantizedVertex> vertices;
  friend bool operator==(const VertexChain&, const VertexChain&) = default;
};

class SequenceError : public Error {
 public:
  SequenceError(std::size_t index, const std::string& message)
      : Error("token " + std::to_string(index) + ": " + message), index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

struct Violation {
  std::size_t index = 0;
  std::string message;
};

/// Triangles in z-y-x canonical order (each triangle's vertices already sorted).
inline std::vector<Triangle> canonical_order(const QuantizedMesh& mesh) { return {mesh.begin(), mesh.end()}; }

/// Greedy strip construction. Each chain starts at the earliest unvisited
/// triangle and grows on its most recent edge, preferring the earliest
/// unvisited edge-adjacent triangle. A triangle is visited exactly once.
inline std::vector<VertexChain> build_chains(const QuantizedMesh& mesh) {
  const auto order = canonical_order(mesh);
  using Edge = std::pair<QuantizedVertex, QuantizedVertex>;
  auto make_edge = [](QuantizedVertex a, QuantizedVertex b) { return a < b ? Edge{a, b} : Edge{b, a}; };

  std::map<Edge, std::vector<std::size_t>> incident;
  for (std::size_t i = 0; i < order.size(); ++i)
    for (int e = 0; e < 3; ++e) incident[make_edge(order[i][e], order[i][(e + 1) % 3])].push_back(i);

  std::vector<bool> visited(order.size(), false);
  std::vector<VertexChain> chains;
  for (std::size_t seed = 0; seed < order.size(); ++seed) {
    if (visited[seed]) continue;
    visited[seed] = true;
    VertexChain chain{{order[seed][0], order[seed][1], order[seed][2]}};
    for (;;) {
      const auto& v = chain.vertices;
      const QuantizedVertex a = v[v.size() - 2];
      const QuantizedVertex b = v.back();
      std::optional<std::size_t> next;
      for (std::size_t cand : incident[make_edge(a, b)]) {
        if (!visited[cand]) {
          next = cand;
          break;
        }
      }
      if (!next) break;
      visited[*next] = true;
      for (const auto& q : order[*next]) {
        if (q != a && q != b) {
          chain.vertices.push_back(q);
          break;
        }
      }
    }
    chains.push_back(std::move(chain));
  }
  return chains;
}

inline void append_chain_tokens(std::vector<Token>& out, const VertexChain& chain) {
  for (const auto& v : chain.vertices) {
    out.push_back(Token::coord(v.x));
    out.push_back(Token::coord(v.y));
    out.push_back(Token::coord(v.z));
  }
}

inline void append_chains(std::vector<Token>& out, std::span<const VertexChain> chains) {
  for (std::size_t i = 0; i < chains.size(); ++i) {
    if (i > 0) out.push_back(Token::split());
    append_chain_tokens(out, chains[i]);
  }
}

inline TokenSequence tokenize(const QuantizedMesh& mesh) {
  TokenSequence seq{{Token::start()}, mesh.bins()};
  const auto chains = build_chains(mesh);
  append_chains(seq.tokens, chains);
  seq.tokens.push_back(Token::end());
  return seq;
}

/// Structural checks. Never throws; an empty result means the sequence is valid.
inline std::vector<Violation> validate(const TokenSequence& seq) {
  std::vector<Violation> out;
  const auto& t = seq.tokens;
  if (t.empty()) {
    out.push_back({0, "empty sequence"});
    return out;
  }
  if (t.front().kind != TokenKind::Start) out.push_back({0, "sequence must begin with <start>"});
  if (t.back().kind != TokenKind::End) out.push_back({t.size() - 1, "sequence must end with <end>"});

  std::size_t run_start = 0;
  std::size_t run = 0;
  bool any_split = false;
  auto close_run = [&](std::size_t at) {
    const bool sole_empty = run == 0 && !any_split && t[at].kind == TokenKind::End;
    if (sole_empty) return;
    if (run % 3 != 0) {
      out.push_back({run_start, "coord count not multiple of 3"});
    } else if (run < 9) {
      out.push_back({run_start, "chain shorter than one triangle"});
    }
  };
  for (std::size_t i = 0; i < t.size(); ++i) {
    switch (t[i].kind) {
      case TokenKind::Start:
        if (i != 0) out.push_back({i, "unexpected <start>"});
        run_start = i + 1;
        run = 0;
        break;
      case TokenKind::Split:
        if (i == 0) break;
        close_run(i);
        any_split = true;
        run_start = i + 1;
        run = 0;
        break;
      case TokenKind::End:
        if (i != t.size() - 1) {
          out.push_back({i, "unexpected <end>"});
        } else {
          close_run(i);
        }
        run_start = i + 1;
        run = 0;
        break;
      case TokenKind::Coord:
        if (t[i].value < 0 || t[i].value >= seq.bins) out.push_back({i, "coordinate outside [0, bins-1]"});
        ++run;
        break;
    }
  }
  return out;
}

struct DetokenizeStats {
  std::size_t degenerate_dropped = 0;
};

namespace detail {

/// Walks coordinate runs and emits {v_k, v_{k-1}, v_{k-2}} for k >= 2.
/// `emit(triangle, token_index_of_vk)` receives each triple.
template <class Emit>
void for_each_chain_triangle(std::span<const Token> tokens, Emit&& emit) {
  std::vector<QuantizedVertex> chain;
  int pending[3] = {0, 0, 0};
  int phase = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const Token& tok = tokens[i];
    if (tok.is_control()) {
      chain.clear();
      phase = 0;
      continue;
    }
    pending[phase++] = tok.value;
    if (phase < 3) continue;
    phase = 0;
    chain.push_back({pending[0], pending[1], pending[2]});
    const std::size_t k = chain.size() - 1;
    if (k >= 2) emit(chain[k], chain[k - 1], chain[k - 2], i);
  }
}

}  // namespace detail

inline QuantizedMesh detokenize(const TokenSequence& seq, DetokenizeStats* stats = nullptr) {
  if (const auto v = validate(seq); !v.empty()) throw SequenceError(v.front().index, v.front().message);
  QuantizedMesh mesh(seq.bins);
  DetokenizeStats s;
  detail::for_each_chain_triangle(seq.tokens, [&](auto a, auto b, auto c, std::size_t) {
    const Triangle t(a, b, c);
    if (t.degenerate()) {
      ++s.degenerate_dropped;
    } else {
      mesh.insert(t);
    }
  });
  if (stats) *stats = s;
  return mesh;
}

/// Triangles contributed by `fragment` when it is appended to `prompt`:
/// exactly those whose newest vertex comes from the fragment. Generated
/// vertices that continue the prompt's last chain form triangles with the
/// prompt's trailing vertices.
inline QuantizedMesh decode_continuation(std::span<const Token> prompt, std::span<const Token> fragment, int bins,
                                         DetokenizeStats* stats = nullptr) {
  std::vector<Token> all(prompt.begin(), prompt.end());
  if (!all.empty() && all.back().kind == TokenKind::End) all.pop_back();
  const std::size_t boundary = all.size();
  all.insert(all.end(), fragment.begin(), fragment.end());
  QuantizedMesh mesh(bins);
  DetokenizeStats s;
  detail::for_each_chain_triangle(all, [&](auto a, auto b, auto c, std::size_t at) {
    if (at < boundary) return;
    for (const auto& v : {a, b, c})
      if (!mesh.in_range(v)) throw SequenceError(at, "coordinate outside [0, bins-1]");
    const Triangle t(a, b, c);
    if (t.degenerate()) {
      ++s.degenerate_dropped;
    } else {
      mesh.insert(t);
    }
  });
  if (stats) *stats = s;
  return mesh;
}

struct CompressionStats {
  std::size_t tokens = 0;
  std::size_t naive_tokens = 0;
  double ratio = 0.0;
};

inline CompressionStats compression_stats(const QuantizedMesh& mesh) {
  CompressionStats s;
  s.tokens = tokenize(mesh).size();
  s.naive_tokens = 9 * mesh.size() + 2;
  s.ratio = static_cast<double>(s.tokens) / static_cast<double>(s.naive_tokens);
  return s;
}

/// Prompt for addition: tokenize(kept) with the trailing <end> removed.
inline TokenSequence addition_prompt(const QuantizedMesh& kept) {
  TokenSequence seq = tokenize(kept);
  seq.tokens.pop_back();
  return seq;
}

/// The full sequence an exact addition would produce: the kept chains,
/// a <split> when both parts are non-empty, the added chains, then <end>.
inline TokenSequence addition_target(const QuantizedMesh& kept, const QuantizedMesh& added) {
  require_same_bins(kept, added);
  TokenSequence seq = addition_prompt(kept);
  const auto chains = build_chains(added);
  if (!kept.empty() && !chains.empty()) seq.tokens.push_back(Token::split());
  append_chains(seq.tokens, chains);
  seq.tokens.push_back(Token::end());
  return seq;
}

}  // namespace meshpad
