#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "roi/detail/digest.hpp"
#include "roi/detail/rng.hpp"
#include "roi/errors.hpp"
#include "roi/filter.hpp"
#include "roi/gateway.hpp"
#include "roi/metrics.hpp"
#include "roi/text.hpp"

namespace roi {

// One parallel-corpus item. source is the input-language text, target the
// reference output; label carries the gold class for judgment tasks.
struct ParallelRecord {
  std::string id;
  std::string source;
  std::string target;
  std::string domain;
  std::optional<std::string> label;

  nlohmann::json to_json() const {
    nlohmann::json j = {{"id", id}, {"source", source}, {"target", target},
                        {"domain", domain}};
    if (label.has_value()) j["label"] = *label;
    return j;
  }
};

// One rewrite-dataset item: the original input, the raw rewrite, the text
// the gate chose, and the similarity scores that informed the choice.
struct RewriteRecord {
  std::string id;
  std::string original;
  std::string rewritten;
  std::string chosen;
  std::map<MetricKind, SimilarityScore> scores;
  bool kept = false;
  std::size_t attempts = 1;
  std::string error;

  bool errored() const noexcept { return !error.empty(); }

  nlohmann::json to_json() const {
    nlohmann::json scores_json = nlohmann::json::object();
    for (const auto& [kind, score] : scores) {
      scores_json[to_string(kind)] = {{"value", score.value}, {"raw", score.raw}};
    }
    nlohmann::json j = {{"id", id},         {"original", original},
                        {"rewritten", rewritten}, {"chosen", chosen},
                        {"scores", scores_json},  {"kept", kept},
                        {"attempts", attempts}};
    if (!error.empty()) j["error"] = error;
    return j;
  }
};

namespace detail {

inline std::string require_string_field(const nlohmann::json& j,
                                        const char* field, std::size_t line_no,
                                        const std::filesystem::path& path) {
  if (!j.contains(field) || !j[field].is_string()) {
    throw Error(ErrorKind::data, path.string() + ":" + std::to_string(line_no) +
                                     ": missing or non-string field \"" +
                                     field + "\"");
  }
  return j[field].get<std::string>();
}

}  // namespace detail

inline ParallelRecord parse_parallel_record(const nlohmann::json& j,
                                            std::size_t line_no,
                                            const std::filesystem::path& path) {
  ParallelRecord record;
  record.id = detail::require_string_field(j, "id", line_no, path);
  record.source = detail::require_string_field(j, "source", line_no, path);
  record.target = detail::require_string_field(j, "target", line_no, path);
  if (j.contains("domain")) {
    record.domain = j["domain"].is_string() ? j["domain"].get<std::string>() : "";
  }
  if (j.contains("label") && j["label"].is_string()) {
    record.label = j["label"].get<std::string>();
  }
  if (record.id.empty()) {
    throw Error(ErrorKind::data, path.string() + ":" + std::to_string(line_no) +
                                     ": record id must be non-empty");
  }
  if (record.source.empty()) {
    throw Error(ErrorKind::data, path.string() + ":" + std::to_string(line_no) +
                                     ": record source must be non-empty (id \"" +
                                     record.id + "\")");
  }
  return record;
}

// Loads a JSONL parallel corpus, preserving file order. Parse problems
// report the offending line; duplicate ids are rejected.
inline std::vector<ParallelRecord> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::data, "cannot open corpus file " + path.string());
  }
  std::vector<ParallelRecord> records;
  std::set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::data, path.string() + ":" + std::to_string(line_no) +
                                       ": invalid JSON: " + e.what());
    }
    ParallelRecord record = parse_parallel_record(j, line_no, path);
    if (!seen_ids.insert(record.id).second) {
      throw Error(ErrorKind::data, path.string() + ":" + std::to_string(line_no) +
                                       ": duplicate record id \"" + record.id + "\"");
    }
    records.push_back(std::move(record));
  }
  return records;
}

inline void write_corpus(const std::filesystem::path& path,
                         const std::vector<ParallelRecord>& records) {
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorKind::io, "cannot write corpus file " + path.string());
  }
  for (const ParallelRecord& record : records) {
    out << record.to_json().dump() << '\n';
  }
}

// Corpus digest over the canonical JSONL serialization; used to prove two
// evaluation reports ran on the same data.
inline std::string corpus_digest(const std::vector<ParallelRecord>& records) {
  std::string buffer;
  for (const ParallelRecord& record : records) {
    buffer += record.to_json().dump();
    buffer.push_back('\n');
  }
  return detail::sha256_hex(buffer);
}

inline void write_rewrite_dataset(const std::filesystem::path& path,
                                  const std::vector<RewriteRecord>& records) {
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorKind::io, "cannot write rewrite dataset " + path.string());
  }
  for (const RewriteRecord& record : records) {
    out << record.to_json().dump() << '\n';
  }
}

inline std::vector<RewriteRecord> load_rewrite_dataset(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::data, "cannot open rewrite dataset " + path.string());
  }
  std::vector<RewriteRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::data, path.string() + ":" + std::to_string(line_no) +
                                       ": invalid JSON: " + e.what());
    }
    RewriteRecord record;
    record.id = detail::require_string_field(j, "id", line_no, path);
    record.original = detail::require_string_field(j, "original", line_no, path);
    record.rewritten = detail::require_string_field(j, "rewritten", line_no, path);
    record.chosen = detail::require_string_field(j, "chosen", line_no, path);
    record.kept = j.value("kept", false);
    record.attempts = j.value("attempts", std::size_t{1});
    record.error = j.value("error", std::string{});
    if (j.contains("scores") && j["scores"].is_object()) {
      for (const auto& [name, value] : j["scores"].items()) {
        SimilarityScore score;
        score.metric = parse_metric_kind(name);
        score.value = value.value("value", 0.0);
        score.raw = value.value("raw", 0.0);
        record.scores[score.metric] = score;
      }
    }
    records.push_back(std::move(record));
  }
  return records;
}

// Ties one produced artifact back to the inputs and configuration that
// made it.
struct CorpusManifest {
  std::vector<std::string> source_paths;
  std::size_t record_count = 0;
  NormalizationPolicy policy;
  std::string backend_digest;
  std::string config_digest;
  std::string tool_version;

  nlohmann::json to_json() const {
    return nlohmann::json{
        {"source_paths", source_paths},
        {"record_count", record_count},
        {"policy",
         {{"lowercase", policy.lowercase},
          {"unicode_compose", policy.unicode_compose},
          {"split_punctuation", policy.split_punctuation}}},
        {"backend_digest", backend_digest},
        {"config_digest", config_digest},
        {"tool_version", tool_version}};
  }
};

namespace detail {

// Similarity under every metric, for the record's score map. Metrics that
// cannot be computed for this pair (empty original under edit rate) are
// simply absent.
inline std::map<MetricKind, SimilarityScore> all_similarities(
    const std::string& original, const std::string& rewritten,
    const NormalizationPolicy& policy) {
  const TokenSeq original_tokens = tokenize(original, policy);
  const TokenSeq rewritten_tokens = tokenize(rewritten, policy);
  std::map<MetricKind, SimilarityScore> scores;
  for (MetricKind kind :
       {MetricKind::edit_rate, MetricKind::bleu, MetricKind::rouge_l}) {
    try {
      scores[kind] = similarity(kind, rewritten_tokens, original_tokens);
    } catch (const Error&) {
    }
  }
  return scores;
}

}  // namespace detail

// Back-translation construction: each record's target-side reference is
// translated back into the source language, and the gate decides whether
// that back-translation or the original source becomes the training text.
// Backend failures mark the record reverted-with-error; the job continues.
inline std::vector<RewriteRecord> build_backtranslation_pairs(
    const std::vector<ParallelRecord>& corpus, Gateway& gateway,
    const PromptTemplate& back_translate_template, const FilterConfig& cfg,
    const NormalizationPolicy& policy, const GenerationRequest& base_request = {}) {
  cfg.validate();
  std::vector<RewriteRecord> out;
  out.reserve(corpus.size());
  for (const ParallelRecord& record : corpus) {
    RewriteRecord rewrite;
    rewrite.id = record.id;
    rewrite.original = record.source;
    if (record.target.empty()) {
      rewrite.chosen = record.source;
      rewrite.error = "record has no target text to back-translate";
      out.push_back(std::move(rewrite));
      continue;
    }
    std::string candidate;
    try {
      candidate = gateway.cached_generate(
          make_request(back_translate_template, record.target, std::nullopt,
                       base_request));
    } catch (const Error& e) {
      rewrite.chosen = record.source;
      rewrite.error = e.what();
      out.push_back(std::move(rewrite));
      continue;
    }
    rewrite.rewritten = candidate;
    rewrite.scores = detail::all_similarities(record.source, candidate, policy);
    const auto gate_score = rewrite.scores.find(cfg.metric);
    if (gate_score == rewrite.scores.end()) {
      rewrite.chosen = record.source;
      rewrite.error = "gating metric undefined for this record";
    } else if (gate_score->second.value < cfg.gamma) {
      rewrite.chosen = record.source;
      rewrite.kept = false;
    } else {
      rewrite.chosen = candidate;
      rewrite.kept = true;
    }
    out.push_back(std::move(rewrite));
  }
  return out;
}

struct ExportCounts {
  std::size_t written = 0;
  std::size_t dropped = 0;
};

// Writes fine-tune training pairs, one JSON object per line. The default
// direction maps the original input to the gate's choice; reverse_direction
// flips it. Identity pairs (chosen == original) can be dropped.
inline ExportCounts export_finetune(const std::vector<RewriteRecord>& records,
                                    const std::filesystem::path& path,
                                    bool include_identity,
                                    bool reverse_direction = false) {
  if (records.empty()) {
    throw Error(ErrorKind::data, "refusing to export an empty rewrite dataset");
  }
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorKind::io, "cannot write fine-tune file " + path.string());
  }
  ExportCounts counts;
  for (const RewriteRecord& record : records) {
    if (!include_identity && record.chosen == record.original) {
      ++counts.dropped;
      continue;
    }
    const std::string& input = reverse_direction ? record.chosen : record.original;
    const std::string& output = reverse_direction ? record.original : record.chosen;
    out << nlohmann::json{{"id", record.id}, {"input", input}, {"output", output}}
               .dump()
        << '\n';
    ++counts.written;
  }
  return counts;
}

// Uniform sample of n records without replacement, deterministic for a
// given seed and independent of platform; keeps the original relative order.
inline std::vector<ParallelRecord> subsample(const std::vector<ParallelRecord>& corpus,
                                             std::size_t n, std::uint64_t seed) {
  if (n < 1 || n > corpus.size()) {
    throw Error(ErrorKind::data,
                "subsample size " + std::to_string(n) + " out of range [1, " +
                    std::to_string(corpus.size()) + "]");
  }
  std::vector<std::size_t> indices(corpus.size());
  for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
  detail::SplitMix64 rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + rng.next_below(indices.size() - i);
    std::swap(indices[i], indices[j]);
  }
  indices.resize(n);
  std::sort(indices.begin(), indices.end());
  std::vector<ParallelRecord> sample;
  sample.reserve(n);
  for (std::size_t index : indices) sample.push_back(corpus[index]);
  return sample;
}

}  // namespace roi
