#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pulse/model.hpp"
#include "pulse/timestore.hpp"

namespace pulse {

using json = nlohmann::json;

// Sparse L2-normalized term vector; indices ascending.
struct SparseVec {
  std::vector<std::pair<int, double>> terms;
};

// Unigram TF-IDF with smoothed idf: idf(t) = ln((1 + N) / (1 + df(t))) + 1,
// tf = raw in-document count, final vectors L2-normalized. Tokenization is
// lowercasing + splitting on every non-alphanumeric byte; no stop-words.
// Vocabulary is ordered lexicographically, so the model is deterministic for
// any ordering of the same corpus.
struct TfidfModel {
  std::map<std::string, int> vocabulary;  // term -> index
  std::vector<double> idf;                // by index
  int doc_count = 0;
};

std::vector<std::string> tokenize(std::string_view text);

// Corpus must be non-empty (invalid_argument otherwise); empty documents are
// allowed and only contribute to N.
TfidfModel fit_tfidf(const std::vector<std::string>& corpus);

// Out-of-vocabulary tokens are ignored; a text with no known tokens embeds as
// the zero vector.
SparseVec embed(const TfidfModel& model, std::string_view text);

double cosine(const SparseVec& a, const SparseVec& b);

// Daily sensing fingerprint: the 15 numeric day features in canonical order,
// z-normalized feature-wise with supplied stats; features that are missing
// (or have zero variance in the stats) sit at 0 after normalization, i.e. at
// the mean, so they neither attract nor repel.
struct Fingerprint {
  std::array<double, kNumDailyFeatures> values{};
  std::array<bool, kNumDailyFeatures> present{};
  int n_present = 0;
};

struct FeatureStats {
  std::array<double, kNumDailyFeatures> mean{};
  std::array<double, kNumDailyFeatures> sd{};  // population sd
};

// Stats over raw (un-normalized) day rows; features missing in a row are left
// out of that feature's mean/sd.
FeatureStats fit_feature_stats(const std::vector<DailyAggregates>& days);
Fingerprint make_fingerprint(const DailyAggregates& day, const FeatureStats& stats);

double cosine(const Fingerprint& a, const Fingerprint& b);

// One retrievable training-fold case: a peer's EMA entry with its diary text
// vector, same-day sensing fingerprint, and ground-truth outcomes.
struct PeerOutcomes {
  double pa_score = 0, na_score = 0, er_desire_score = 0;
  BinaryTargets binary_targets{};
};

struct PeerEntry {
  std::string user_id;
  std::string entry_ref;  // "<user_id>#<entry_index>", unique, used for tie-breaks
  int entry_index = 0;
  std::optional<SparseVec> text_vec;      // absent when the entry has no diary
  std::optional<Fingerprint> fingerprint; // absent when the day had no features
  std::string diary_snippet;              // first chars of the diary, if any
  PeerOutcomes outcomes;
};

enum class PeerSpace { text, sensing };
std::string_view to_string(PeerSpace s);
PeerSpace peer_space_from_string(std::string_view s);

// Cross-user retrieval index, built strictly from a training fold that is
// disjoint from the evaluation users (fold_leakage otherwise). Fingerprints of
// training entries cover the entry's full local day; normalization stats come
// from those same training days.
struct PeerIndex {
  TfidfModel tfidf;
  FeatureStats stats;
  std::vector<PeerEntry> entries;
  std::vector<std::string> fold_user_ids;  // sorted

  json to_json() const;  // versioned artifact
  static PeerIndex from_json(const json& j);
  void save(const std::string& path) const;
  static PeerIndex load(const std::string& path);
};

PeerIndex build_peer_index(const Store& store, const std::vector<std::string>& fold_user_ids,
                           const std::vector<std::string>& evaluation_user_ids);

struct RankedPeer {
  const PeerEntry* entry = nullptr;
  double similarity = 0;
};

// Top-k by cosine, descending; rows from exclude_user are removed before
// ranking; rows lacking the queried space are skipped; exact similarity ties
// are ordered by entry_ref ascending. k > 0 required.
std::vector<RankedPeer> rank_peers(const PeerIndex& index, const SparseVec& query,
                                   const std::string& exclude_user, int k);
std::vector<RankedPeer> rank_peers(const PeerIndex& index, const Fingerprint& query,
                                   const std::string& exclude_user, int k);

}  // namespace pulse
