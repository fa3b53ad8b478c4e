#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "roi/detail/unicode_tables.hpp"
#include "roi/detail/utf8.hpp"
#include "roi/errors.hpp"

namespace roi {

// Controls how raw text is canonicalized before tokenization. All metrics
// and the filtering gate run on top of this, so a run's policy is recorded
// in its manifest.
struct NormalizationPolicy {
  bool lowercase = true;
  // Canonical composition: a base character followed by combining marks is
  // collapsed into the precomposed code point where one exists, so the two
  // encodings of "é" normalize to identical bytes. Combining-class
  // reordering is not performed.
  bool unicode_compose = true;
  // Punctuation is split into standalone tokens instead of staying glued
  // to neighbouring words.
  bool split_punctuation = true;

  static NormalizationPolicy all_off() { return {false, false, false}; }
};

// An immutable word-token view of one sentence.
struct TokenSeq {
  std::vector<std::string> tokens;
  std::string source_text;

  std::size_t size() const noexcept { return tokens.size(); }
  bool empty() const noexcept { return tokens.empty(); }

  bool operator==(const TokenSeq& other) const {
    return tokens == other.tokens;
  }
};

namespace detail {

inline bool is_space_cp(char32_t cp) {
  switch (cp) {
    case 0x0009:
    case 0x000A:
    case 0x000B:
    case 0x000C:
    case 0x000D:
    case 0x0020:
    case 0x0085:
    case 0x00A0:
    case 0x1680:
    case 0x2028:
    case 0x2029:
    case 0x202F:
    case 0x205F:
    case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

inline bool is_punct_cp(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
           (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E);
  }
  switch (cp) {
    case 0x00A1:  // inverted exclamation
    case 0x00A7:  // section sign
    case 0x00AB:  // left guillemet
    case 0x00B6:
    case 0x00B7:
    case 0x00BB:  // right guillemet
    case 0x00BF:  // inverted question mark
      return true;
    default:
      break;
  }
  return (cp >= 0x2010 && cp <= 0x2027) || (cp >= 0x2030 && cp <= 0x205E) ||
         (cp >= 0x3001 && cp <= 0x3003) || (cp >= 0x3008 && cp <= 0x3011) ||
         (cp >= 0x3014 && cp <= 0x301F) || (cp >= 0xFF01 && cp <= 0xFF0F) ||
         (cp >= 0xFF1A && cp <= 0xFF20) || (cp >= 0xFF3B && cp <= 0xFF40) ||
         (cp >= 0xFF5B && cp <= 0xFF65);
}

inline char32_t to_lower_cp(char32_t cp) {
  const auto* begin = std::begin(kLowercaseMap);
  const auto* end = std::end(kLowercaseMap);
  const auto* it = std::lower_bound(
      begin, end, cp,
      [](const CaseMapping& m, char32_t key) { return m.from < key; });
  if (it != end && it->from == cp) return it->to;
  return cp;
}

inline char32_t compose_pair(char32_t a, char32_t b) {
  const auto* begin = std::begin(kComposePairs);
  const auto* end = std::end(kComposePairs);
  const auto* it = std::lower_bound(
      begin, end, std::pair<char32_t, char32_t>{a, b},
      [](const ComposePair& p, const std::pair<char32_t, char32_t>& key) {
        return p.first != key.first ? p.first < key.first
                                    : p.second < key.second;
      });
  if (it != end && it->first == a && it->second == b) return it->composed;
  return 0;
}

// Collapses adjacent canonically composable pairs, cascading left so the
// result contains no composable adjacency (this is what makes normalize
// idempotent).
inline void compose_in_place(std::vector<char32_t>& cps) {
  std::vector<char32_t> out;
  out.reserve(cps.size());
  for (char32_t cp : cps) {
    out.push_back(cp);
    while (out.size() >= 2) {
      const char32_t composed = compose_pair(out[out.size() - 2], out.back());
      if (composed == 0) break;
      out.pop_back();
      out.back() = composed;
    }
  }
  cps = std::move(out);
}

inline std::vector<std::string> split_tokens(std::string_view text,
                                             const NormalizationPolicy& policy) {
  std::vector<char32_t> cps = utf8_decode(text);
  if (policy.unicode_compose) compose_in_place(cps);
  if (policy.lowercase) {
    for (char32_t& cp : cps) cp = to_lower_cp(cp);
  }
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  };
  for (char32_t cp : cps) {
    if (is_space_cp(cp)) {
      flush();
    } else if (policy.split_punctuation && is_punct_cp(cp)) {
      flush();
      std::string solo;
      utf8_append(solo, cp);
      tokens.push_back(std::move(solo));
    } else {
      utf8_append(current, cp);
    }
  }
  flush();
  return tokens;
}

}  // namespace detail

// Canonical text form under the policy: tokens joined by single spaces.
// Deterministic and idempotent; empty input yields an empty string.
inline std::string normalize(std::string_view text,
                             const NormalizationPolicy& policy) {
  const std::vector<std::string> tokens = detail::split_tokens(text, policy);
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

// Word tokenization: Unicode-whitespace split of the normalized text.
// Total over arbitrary byte input; empty text yields an empty TokenSeq.
inline TokenSeq tokenize(std::string_view text,
                         const NormalizationPolicy& policy) {
  return TokenSeq{detail::split_tokens(text, policy), std::string(text)};
}

// N-gram multiset. Keys are the n tokens joined by single spaces, which is
// collision-free because tokens never contain whitespace.
using NgramCounts = std::unordered_map<std::string, std::size_t>;

inline NgramCounts ngram_counts(const TokenSeq& seq, std::size_t n) {
  if (n == 0) throw Error(ErrorKind::data, "ngram order must be at least 1");
  NgramCounts counts;
  if (seq.size() < n) return counts;
  for (std::size_t i = 0; i + n <= seq.size(); ++i) {
    std::string key = seq.tokens[i];
    for (std::size_t k = 1; k < n; ++k) {
      key.push_back(' ');
      key += seq.tokens[i + k];
    }
    ++counts[key];
  }
  return counts;
}

}  // namespace roi
