#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "roi/errors.hpp"
#include "roi/metrics.hpp"
#include "roi/text.hpp"

namespace roi {

struct FilterConfig {
  MetricKind metric = MetricKind::edit_rate;
  double gamma = 0.5;
  std::size_t max_attempts = 3;

  void validate() const {
    if (gamma < 0.0 || gamma > 1.0) {
      throw Error(ErrorKind::data, "filter gamma must lie in [0, 1]");
    }
    if (max_attempts < 1) {
      throw Error(ErrorKind::data, "filter max_attempts must be at least 1");
    }
  }
};

// Outcome of gating one rewrite. chosen_text is byte-identical to either
// the rewritten text or the original, never a third string.
struct FilterDecision {
  std::string chosen_text;
  bool kept_rewrite = false;
  SimilarityScore score;
  std::size_t attempts_used = 1;
  std::string error;  // non-empty when the record was reverted because of an error

  bool errored() const noexcept { return !error.empty(); }
};

struct FilterStats {
  std::size_t total = 0;
  std::size_t kept = 0;
  std::size_t reverted = 0;
  std::size_t errors = 0;
  // Similarity histogram over 10 equal bins of [0, 1]; 1.0 lands in the last.
  std::array<std::size_t, 10> score_histogram{};

  void add(const FilterDecision& decision) {
    ++total;
    if (decision.kept_rewrite) {
      ++kept;
    } else {
      ++reverted;
    }
    if (decision.errored()) {
      ++errors;
    } else {
      const double v = decision.score.value;
      auto bin = static_cast<std::size_t>(v * 10.0);
      if (bin > 9) bin = 9;
      ++score_histogram[bin];
    }
  }
};

// One gate decision: keep the rewrite when its similarity to the original
// reaches gamma, otherwise fall back to the original text. The comparison
// is strict: score < gamma reverts, score == gamma keeps.
inline FilterDecision filter_pair(const std::string& original,
                                  const std::string& rewritten,
                                  const FilterConfig& cfg,
                                  const NormalizationPolicy& policy) {
  cfg.validate();
  const TokenSeq original_tokens = tokenize(original, policy);
  const TokenSeq rewritten_tokens = tokenize(rewritten, policy);
  FilterDecision decision;
  decision.score = similarity(cfg.metric, rewritten_tokens, original_tokens);
  if (decision.score.value < cfg.gamma) {
    decision.chosen_text = original;
    decision.kept_rewrite = false;
  } else {
    decision.chosen_text = rewritten;
    decision.kept_rewrite = true;
  }
  return decision;
}

// Element-wise filter over (original, rewritten) pairs, order preserving.
// A record whose metric errors is recorded as reverted-with-error instead
// of aborting the batch.
inline std::pair<std::vector<FilterDecision>, FilterStats> filter_dataset(
    const std::vector<std::pair<std::string, std::string>>& pairs,
    const FilterConfig& cfg, const NormalizationPolicy& policy) {
  cfg.validate();
  std::vector<FilterDecision> decisions;
  decisions.reserve(pairs.size());
  FilterStats stats;
  for (const auto& [original, rewritten] : pairs) {
    FilterDecision decision;
    try {
      decision = filter_pair(original, rewritten, cfg, policy);
    } catch (const Error& e) {
      decision.chosen_text = original;
      decision.kept_rewrite = false;
      decision.score = SimilarityScore{0.0, cfg.metric, 0.0};
      decision.error = e.what();
    }
    stats.add(decision);
    decisions.push_back(std::move(decision));
  }
  return {std::move(decisions), stats};
}

// A rewrite attempt: produces candidate text for the given original.
// attempt is 1-based; backends perturb only their sampling seed with it.
using RewriteFn =
    std::function<std::string(const std::string& original, std::size_t attempt)>;

// Calls the rewriter up to max_attempts times and returns the first
// decision that passes the gate. Attempts that throw are swallowed and
// counted; once every attempt has either failed the gate or errored, the
// decision reverts to the original (or, if every single attempt errored,
// the backend failure is propagated).
inline FilterDecision rewrite_with_retries(const std::string& original,
                                           const RewriteFn& rewriter,
                                           const FilterConfig& cfg,
                                           const NormalizationPolicy& policy) {
  cfg.validate();
  FilterDecision best;
  bool have_candidate = false;
  std::string last_error;
  for (std::size_t attempt = 1; attempt <= cfg.max_attempts; ++attempt) {
    std::string candidate;
    try {
      candidate = rewriter(original, attempt);
    } catch (const std::exception& e) {
      last_error = e.what();
      continue;
    }
    FilterDecision decision = filter_pair(original, candidate, cfg, policy);
    decision.attempts_used = attempt;
    if (decision.kept_rewrite) return decision;
    if (!have_candidate || decision.score.value > best.score.value) {
      best = decision;
      have_candidate = true;
    }
  }
  if (!have_candidate) {
    throw Error(ErrorKind::backend,
                "rewriter failed on all " + std::to_string(cfg.max_attempts) +
                    " attempts: " + last_error);
  }
  best.chosen_text = original;
  best.kept_rewrite = false;
  best.attempts_used = cfg.max_attempts;
  return best;
}

}  // namespace roi
