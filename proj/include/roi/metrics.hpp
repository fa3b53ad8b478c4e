#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "roi/errors.hpp"
#include "roi/text.hpp"

namespace roi {

enum class MetricKind {
  edit_rate,
  bleu,
  rouge_l,
};

inline const char* to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::edit_rate:
      return "editrate";
    case MetricKind::bleu:
      return "bleu";
    case MetricKind::rouge_l:
      return "rougel";
  }
  return "?";
}

inline MetricKind parse_metric_kind(std::string_view name) {
  if (name == "editrate") return MetricKind::edit_rate;
  if (name == "bleu") return MetricKind::bleu;
  if (name == "rougel") return MetricKind::rouge_l;
  throw Error(ErrorKind::data,
              "unknown metric '" + std::string(name) +
                  "' (expected editrate, bleu or rougel)");
}

// A similarity in [0, 1] where higher always means more similar, plus the
// raw metric value it was derived from. Raw edit rate can exceed 1; it maps
// to 1 - min(raw, 1). BLEU and ROUGE-L are already similarities.
struct SimilarityScore {
  double value = 0.0;
  MetricKind metric = MetricKind::edit_rate;
  double raw = 0.0;
};

enum class BleuSmoothing {
  none,
  add_one_on_zero,
  floor_epsilon,
};

enum class ReferenceLengthRule {
  closest,
  shortest,
};

inline constexpr double kBleuFloorEpsilon = 1e-9;

struct BleuConfig {
  std::size_t max_n = 4;
  BleuSmoothing smoothing = BleuSmoothing::none;
  ReferenceLengthRule reference_length_rule = ReferenceLengthRule::closest;
};

// Word-level Levenshtein distance:
//   D(i,j) = max(i,j)                                  if min(i,j) = 0
//          = D(i-1,j-1)                                if s[i] = t[j]
//          = 1 + min(D(i-1,j), D(i,j-1), D(i-1,j-1))   otherwise
// evaluated bottom-up with a rolling row.
inline std::size_t edit_distance(const TokenSeq& s, const TokenSeq& t) {
  const std::size_t m = s.size();
  const std::size_t n = t.size();
  if (m == 0) return n;
  if (n == 0) return m;
  std::vector<std::size_t> row(n + 1);
  for (std::size_t j = 0; j <= n; ++j) row[j] = j;
  for (std::size_t i = 1; i <= m; ++i) {
    std::size_t diagonal = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= n; ++j) {
      const std::size_t above = row[j];
      if (s.tokens[i - 1] == t.tokens[j - 1]) {
        row[j] = diagonal;
      } else {
        row[j] = 1 + std::min({row[j], row[j - 1], diagonal});
      }
      diagonal = above;
    }
  }
  return row[n];
}

// ER = D(s,t) / |s|. The denominator is the first argument's length, so
// callers must put the original sentence first. May exceed 1.
inline double edit_rate(const TokenSeq& s, const TokenSeq& t) {
  if (s.empty()) {
    throw Error(ErrorKind::data,
                "edit rate is undefined for an empty source sentence");
  }
  return static_cast<double>(edit_distance(s, t)) /
         static_cast<double>(s.size());
}

// Sufficient statistics for (corpus) BLEU: clipped and total n-gram counts
// per order, plus candidate/reference lengths. Additive across sentences.
struct BleuStats {
  std::vector<std::size_t> clipped;
  std::vector<std::size_t> total;
  std::size_t candidate_len = 0;
  std::size_t reference_len = 0;

  explicit BleuStats(std::size_t max_n = 4) : clipped(max_n, 0), total(max_n, 0) {}

  std::size_t max_n() const noexcept { return clipped.size(); }

  BleuStats& operator+=(const BleuStats& other) {
    if (other.max_n() != max_n()) {
      throw Error(ErrorKind::data, "cannot combine BLEU stats of different max_n");
    }
    for (std::size_t k = 0; k < clipped.size(); ++k) {
      clipped[k] += other.clipped[k];
      total[k] += other.total[k];
    }
    candidate_len += other.candidate_len;
    reference_len += other.reference_len;
    return *this;
  }
};

namespace detail {

inline std::size_t pick_reference_length(std::size_t candidate_len,
                                         const std::vector<TokenSeq>& references,
                                         ReferenceLengthRule rule) {
  std::size_t best = references.front().size();
  for (const TokenSeq& ref : references) {
    const std::size_t len = ref.size();
    if (rule == ReferenceLengthRule::shortest) {
      best = std::min(best, len);
    } else {
      const auto dist = [&](std::size_t l) {
        return l > candidate_len ? l - candidate_len : candidate_len - l;
      };
      // Closest to the candidate; ties break toward the shorter reference.
      if (dist(len) < dist(best) || (dist(len) == dist(best) && len < best)) {
        best = len;
      }
    }
  }
  return best;
}

}  // namespace detail

inline BleuStats bleu_sentence_stats(const TokenSeq& candidate,
                                     const std::vector<TokenSeq>& references,
                                     const BleuConfig& cfg = {}) {
  if (cfg.max_n == 0) throw Error(ErrorKind::data, "BLEU max_n must be at least 1");
  if (references.empty()) {
    throw Error(ErrorKind::data, "BLEU requires at least one reference");
  }
  BleuStats stats(cfg.max_n);
  stats.candidate_len = candidate.size();
  stats.reference_len = detail::pick_reference_length(
      candidate.size(), references, cfg.reference_length_rule);
  for (std::size_t n = 1; n <= cfg.max_n; ++n) {
    const NgramCounts cand_counts = ngram_counts(candidate, n);
    if (cand_counts.empty()) continue;
    // Clip each candidate n-gram count to its maximum count in any reference.
    NgramCounts max_ref_counts;
    for (const TokenSeq& ref : references) {
      for (const auto& [gram, count] : ngram_counts(ref, n)) {
        auto& slot = max_ref_counts[gram];
        slot = std::max(slot, count);
      }
    }
    std::size_t clipped = 0;
    std::size_t total = 0;
    for (const auto& [gram, count] : cand_counts) {
      total += count;
      const auto it = max_ref_counts.find(gram);
      if (it != max_ref_counts.end()) clipped += std::min(count, it->second);
    }
    stats.clipped[n - 1] = clipped;
    stats.total[n - 1] = total;
  }
  return stats;
}

// Geometric mean of the modified n-gram precisions times the brevity
// penalty. Orders with no candidate n-grams at all are left out of the
// mean, so a one-word candidate identical to its reference still scores 1.
inline double bleu_from_stats(const BleuStats& stats, const BleuConfig& cfg = {}) {
  if (stats.candidate_len == 0) return 0.0;
  double log_sum = 0.0;
  std::size_t orders_used = 0;
  for (std::size_t k = 0; k < stats.max_n(); ++k) {
    if (stats.total[k] == 0) continue;
    ++orders_used;
    double precision;
    if (stats.clipped[k] > 0) {
      precision = static_cast<double>(stats.clipped[k]) /
                  static_cast<double>(stats.total[k]);
    } else {
      switch (cfg.smoothing) {
        case BleuSmoothing::none:
          return 0.0;
        case BleuSmoothing::add_one_on_zero:
          precision = 1.0 / (static_cast<double>(stats.total[k]) + 1.0);
          break;
        case BleuSmoothing::floor_epsilon:
          precision = kBleuFloorEpsilon;
          break;
        default:
          return 0.0;
      }
    }
    log_sum += std::log(precision);
  }
  if (orders_used == 0) return 0.0;
  const double geo_mean = std::exp(log_sum / static_cast<double>(orders_used));
  const double c = static_cast<double>(stats.candidate_len);
  const double r = static_cast<double>(stats.reference_len);
  const double brevity_penalty = c >= r ? 1.0 : std::exp(1.0 - r / c);
  return brevity_penalty * geo_mean;
}

inline double bleu(const TokenSeq& candidate,
                   const std::vector<TokenSeq>& references,
                   const BleuConfig& cfg = {}) {
  return bleu_from_stats(bleu_sentence_stats(candidate, references, cfg), cfg);
}

// Corpus BLEU pools clipped counts and lengths over all pairs before the
// geometric mean; it is not a mean of sentence scores.
using BleuPair = std::pair<TokenSeq, std::vector<TokenSeq>>;

inline double corpus_bleu(const std::vector<BleuPair>& pairs,
                          const BleuConfig& cfg = {}) {
  if (pairs.empty()) {
    throw Error(ErrorKind::data, "corpus BLEU requires a non-empty corpus");
  }
  BleuStats pooled(cfg.max_n);
  for (const auto& [candidate, references] : pairs) {
    pooled += bleu_sentence_stats(candidate, references, cfg);
  }
  return bleu_from_stats(pooled, cfg);
}

inline std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b) {
  if (a.empty() || b.empty()) return 0;
  const std::size_t n = b.size();
  std::vector<std::size_t> row(n + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diagonal = 0;
    for (std::size_t j = 1; j <= n; ++j) {
      const std::size_t above = row[j];
      if (a.tokens[i - 1] == b.tokens[j - 1]) {
        row[j] = diagonal + 1;
      } else {
        row[j] = std::max(row[j], row[j - 1]);
      }
      diagonal = above;
    }
  }
  return row[n];
}

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

// ROUGE-L: P = LCS/|candidate|, R = LCS/|reference|,
// F = (1 + beta^2) P R / (R + beta^2 P). Zero whenever a denominator is.
inline RougeScore rouge_l(const TokenSeq& candidate, const TokenSeq& reference,
                          double beta = 1.0) {
  RougeScore score;
  if (candidate.empty() || reference.empty()) return score;
  const double lcs = static_cast<double>(lcs_length(candidate, reference));
  score.precision = lcs / static_cast<double>(candidate.size());
  score.recall = lcs / static_cast<double>(reference.size());
  const double beta2 = beta * beta;
  const double denom = score.recall + beta2 * score.precision;
  if (denom > 0.0) {
    score.f = (1.0 + beta2) * score.precision * score.recall / denom;
  }
  return score;
}

// Unified similarity used by the filtering gate: higher always means more
// similar. Edit rate enters as 1 - min(ER, 1) with the original sentence as
// the denominator; BLEU scores the candidate against the original as sole
// reference with floored smoothing so short rewrites stay comparable;
// ROUGE-L contributes its balanced F score.
inline SimilarityScore similarity(MetricKind metric, const TokenSeq& candidate,
                                  const TokenSeq& original) {
  SimilarityScore score;
  score.metric = metric;
  switch (metric) {
    case MetricKind::edit_rate: {
      score.raw = edit_rate(original, candidate);
      score.value = 1.0 - std::min(score.raw, 1.0);
      break;
    }
    case MetricKind::bleu: {
      BleuConfig cfg;
      cfg.smoothing = BleuSmoothing::floor_epsilon;
      score.raw = bleu(candidate, {original}, cfg);
      score.value = score.raw;
      break;
    }
    case MetricKind::rouge_l: {
      score.raw = rouge_l(candidate, original, 1.0).f;
      score.value = score.raw;
      break;
    }
  }
  return score;
}

}  // namespace roi
