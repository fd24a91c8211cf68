#pragma once

#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "json.hpp"
#include "meshpad/codec.hpp"

namespace meshpad {

/// Binary token stream: one little-endian u16 per token, ids as in token_id().
/// The leading <start> carries id == bins, which makes the stream self-describing.
inline std::vector<std::uint8_t> encode_tokens(const TokenSequence& seq) {
  if (seq.bins + 2 > 0xFFFF) throw Error("bins too large for the u16 token stream");
  std::vector<std::uint8_t> out;
  out.reserve(seq.size() * 2);
  for (const auto& t : seq.tokens) {
    const auto id = static_cast<std::uint16_t>(token_id(t, seq.bins));
    out.push_back(static_cast<std::uint8_t>(id & 0xFF));
    out.push_back(static_cast<std::uint8_t>(id >> 8));
  }
  return out;
}

inline TokenSequence decode_tokens(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() % 2 != 0) throw Error("token stream has odd byte length");
  if (bytes.size() < 2) throw Error("token stream is empty");
  const int bins = bytes[0] | (bytes[1] << 8);
  if (bins < 2) throw Error("token stream does not begin with <start>");
  TokenSequence seq{{}, bins};
  seq.tokens.reserve(bytes.size() / 2);
  for (std::size_t i = 0; i < bytes.size(); i += 2) seq.tokens.push_back(token_from_id(bytes[i] | (bytes[i + 1] << 8), bins));
  return seq;
}

inline void save_tokens(const TokenSequence& seq, const std::string& path) {
  const auto bytes = encode_tokens(seq);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline TokenSequence load_tokens(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode_tokens(bytes);
}

/// Debug form: {"bins": N, "tokens": [0, 12, "<split>", ...]}.
inline nlohmann::json tokens_to_json(const TokenSequence& seq) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& t : seq.tokens) {
    switch (t.kind) {
      case TokenKind::Coord:
        arr.push_back(t.value);
        break;
      case TokenKind::Start:
        arr.push_back("<start>");
        break;
      case TokenKind::End:
        arr.push_back("<end>");
        break;
      case TokenKind::Split:
        arr.push_back("<split>");
        break;
    }
  }
  return {{"bins", seq.bins}, {"tokens", arr}};
}

inline TokenSequence tokens_from_json(const nlohmann::json& j) {
  TokenSequence seq{{}, j.at("bins").get<int>()};
  for (const auto& e : j.at("tokens")) {
    if (e.is_number_integer()) {
      seq.tokens.push_back(Token::coord(e.get<int>()));
    } else {
      const auto s = e.get<std::string>();
      if (s == "<start>") {
        seq.tokens.push_back(Token::start());
      } else if (s == "<end>") {
        seq.tokens.push_back(Token::end());
      } else if (s == "<split>") {
        seq.tokens.push_back(Token::split());
      } else {
        throw Error("unknown control token '" + s + "'");
      }
    }
  }
  return seq;
}

}  // namespace meshpad
