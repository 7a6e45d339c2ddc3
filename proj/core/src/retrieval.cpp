#include "pulse/retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>

#include "pulse/error.hpp"
#include "pulse/jsonl.hpp"

namespace pulse {

namespace {
constexpr int kPeerIndexVersion = 1;
constexpr int kDiarySnippetChars = 120;
}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

TfidfModel fit_tfidf(const std::vector<std::string>& corpus) {
  if (corpus.empty()) raise(ErrorCode::invalid_argument, "tf-idf corpus is empty");
  std::map<std::string, int> df;  // ordered -> lexicographic vocabulary
  for (const auto& doc : corpus) {
    std::set<std::string> seen;
    for (auto& tok : tokenize(doc)) seen.insert(std::move(tok));
    for (const auto& tok : seen) df[tok] += 1;
  }
  TfidfModel model;
  model.doc_count = static_cast<int>(corpus.size());
  int index = 0;
  model.idf.reserve(df.size());
  for (const auto& [term, count] : df) {
    model.vocabulary.emplace(term, index++);
    model.idf.push_back(std::log((1.0 + model.doc_count) / (1.0 + count)) + 1.0);
  }
  return model;
}

SparseVec embed(const TfidfModel& model, std::string_view text) {
  std::map<int, double> weights;
  for (const auto& tok : tokenize(text)) {
    auto it = model.vocabulary.find(tok);
    if (it != model.vocabulary.end()) {
      weights[it->second] += model.idf[static_cast<std::size_t>(it->second)];
    }
  }
  double norm_sq = 0;
  for (const auto& [_, w] : weights) norm_sq += w * w;
  SparseVec vec;
  vec.terms.reserve(weights.size());
  const double norm = std::sqrt(norm_sq);
  for (const auto& [i, w] : weights) {
    vec.terms.emplace_back(i, norm > 0 ? w / norm : 0.0);
  }
  return vec;
}

double cosine(const SparseVec& a, const SparseVec& b) {
  double dot = 0, na = 0, nb = 0;
  for (const auto& [_, v] : a.terms) na += v * v;
  for (const auto& [_, v] : b.terms) nb += v * v;
  if (na == 0.0 || nb == 0.0) return 0.0;
  auto ia = a.terms.begin();
  auto ib = b.terms.begin();
  while (ia != a.terms.end() && ib != b.terms.end()) {
    if (ia->first == ib->first) {
      dot += ia->second * ib->second;
      ++ia;
      ++ib;
    } else if (ia->first < ib->first) {
      ++ia;
    } else {
      ++ib;
    }
  }
  return dot / std::sqrt(na * nb);
}

FeatureStats fit_feature_stats(const std::vector<DailyAggregates>& days) {
  FeatureStats stats;
  for (int f = 0; f < kNumDailyFeatures; ++f) {
    double sum = 0;
    int n = 0;
    for (const auto& d : days) {
      if (auto v = d.feature(f)) {
        sum += *v;
        ++n;
      }
    }
    const double mean = n > 0 ? sum / n : 0.0;
    double ss = 0;
    for (const auto& d : days) {
      if (auto v = d.feature(f)) ss += (*v - mean) * (*v - mean);
    }
    stats.mean[static_cast<std::size_t>(f)] = mean;
    stats.sd[static_cast<std::size_t>(f)] = n > 0 ? std::sqrt(ss / n) : 0.0;
  }
  return stats;
}

Fingerprint make_fingerprint(const DailyAggregates& day, const FeatureStats& stats) {
  Fingerprint fp;
  for (int f = 0; f < kNumDailyFeatures; ++f) {
    const auto fi = static_cast<std::size_t>(f);
    if (auto v = day.feature(f)) {
      fp.present[fi] = true;
      ++fp.n_present;
      fp.values[fi] = stats.sd[fi] > 0 ? (*v - stats.mean[fi]) / stats.sd[fi] : 0.0;
    } else {
      fp.values[fi] = 0.0;  // missing sits at the normalized mean
    }
  }
  return fp;
}

double cosine(const Fingerprint& a, const Fingerprint& b) {
  double dot = 0, na = 0, nb = 0;
  for (int f = 0; f < kNumDailyFeatures; ++f) {
    const auto fi = static_cast<std::size_t>(f);
    dot += a.values[fi] * b.values[fi];
    na += a.values[fi] * a.values[fi];
    nb += b.values[fi] * b.values[fi];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

std::string_view to_string(PeerSpace s) { return s == PeerSpace::text ? "text" : "sensing"; }

PeerSpace peer_space_from_string(std::string_view s) {
  if (s == "text") return PeerSpace::text;
  if (s == "sensing") return PeerSpace::sensing;
  raise(ErrorCode::invalid_argument, "unknown peer space: " + std::string(s));
}

PeerIndex build_peer_index(const Store& store, const std::vector<std::string>& fold_user_ids,
                           const std::vector<std::string>& evaluation_user_ids) {
  const std::set<std::string> fold(fold_user_ids.begin(), fold_user_ids.end());
  const std::set<std::string> eval(evaluation_user_ids.begin(), evaluation_user_ids.end());
  for (const auto& id : fold) {
    if (eval.count(id)) {
      raise(ErrorCode::fold_leakage, "training fold user " + id + " is also an evaluation user");
    }
  }
  if (fold.empty()) raise(ErrorCode::invalid_argument, "training fold is empty");

  PeerIndex index;
  index.fold_user_ids.assign(fold.begin(), fold.end());

  // Pass 1: the diary corpus (entries without a diary contribute no document)
  // and the full-day aggregates that define the normalization stats.
  std::vector<std::string> corpus;
  std::vector<DailyAggregates> all_days;
  struct Row {
    const EmaEntry* entry;
    int entry_index;
    const UserProfile* profile;
  };
  std::vector<Row> rows;
  for (const auto& id : index.fold_user_ids) {
    const auto& profile = store.profile(id);
    auto entries = store.entries(id);
    for (std::size_t i = 0; i < entries.size(); ++i) {
      rows.push_back({&entries[i], static_cast<int>(i), &profile});
      if (entries[i].diary) corpus.push_back(*entries[i].diary);
    }
  }
  if (corpus.empty()) corpus.push_back("");  // degenerate fold with no diaries at all

  // Full-day aggregates for each (user, local date) that carries an entry.
  // Training data is historical, so the whole day is admissible: read it
  // through a context bound to the user's last EMA pushed past the final day.
  std::map<std::pair<std::string, std::int32_t>, DailyAggregates> day_cache;
  auto full_day = [&](const std::string& uid, LocalDate date) -> const DailyAggregates& {
    auto key = std::make_pair(uid, date.days);
    auto it = day_cache.find(key);
    if (it != day_cache.end()) return it->second;
    const int tz = store.profile(uid).tz_offset_min;
    AccessContext open_end;
    open_end.user_id = uid;
    open_end.ema_timestamp = day_start(date + 2, tz);  // beyond end-of-day: full span
    open_end.tz_offset_min = tz;
    for (int m = 0; m < kNumModalities; ++m) {
      open_end.capabilities.insert(static_cast<Modality>(m));
    }
    return day_cache.emplace(key, store.daily_aggregates(open_end, date)).first->second;
  };

  for (const auto& row : rows) {
    const LocalDate date = local_date_of(row.entry->timestamp, row.profile->tz_offset_min);
    all_days.push_back(full_day(row.entry->user_id, date));
  }

  index.tfidf = fit_tfidf(corpus);
  index.stats = fit_feature_stats(all_days);

  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Row& row = rows[r];
    PeerEntry pe;
    pe.user_id = row.entry->user_id;
    pe.entry_index = row.entry_index;
    pe.entry_ref = pe.user_id + "#" + std::to_string(row.entry_index);
    if (row.entry->diary) {
      pe.text_vec = embed(index.tfidf, *row.entry->diary);
      pe.diary_snippet = row.entry->diary->substr(0, kDiarySnippetChars);
    }
    Fingerprint fp = make_fingerprint(all_days[r], index.stats);
    if (fp.n_present > 0) pe.fingerprint = fp;
    pe.outcomes.pa_score = row.entry->pa_score;
    pe.outcomes.na_score = row.entry->na_score;
    pe.outcomes.er_desire_score = row.entry->er_desire_score;
    pe.outcomes.binary_targets = row.entry->binary_targets;
    index.entries.push_back(std::move(pe));
  }
  return index;
}

namespace {

template <typename HasSpace, typename Sim>
std::vector<RankedPeer> rank_impl(const PeerIndex& index, const std::string& exclude_user, int k,
                                  HasSpace has_space, Sim sim) {
  if (k <= 0) raise(ErrorCode::invalid_argument, "k must be >= 1");
  std::vector<RankedPeer> scored;
  for (const auto& pe : index.entries) {
    if (pe.user_id == exclude_user) continue;  // removed before ranking
    if (!has_space(pe)) continue;
    scored.push_back({&pe, sim(pe)});
  }
  std::sort(scored.begin(), scored.end(), [](const RankedPeer& a, const RankedPeer& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.entry->entry_ref < b.entry->entry_ref;
  });
  if (static_cast<int>(scored.size()) > k) scored.resize(static_cast<std::size_t>(k));
  return scored;
}

}  // namespace

std::vector<RankedPeer> rank_peers(const PeerIndex& index, const SparseVec& query,
                                   const std::string& exclude_user, int k) {
  return rank_impl(
      index, exclude_user, k, [](const PeerEntry& pe) { return pe.text_vec.has_value(); },
      [&](const PeerEntry& pe) { return cosine(query, *pe.text_vec); });
}

std::vector<RankedPeer> rank_peers(const PeerIndex& index, const Fingerprint& query,
                                   const std::string& exclude_user, int k) {
  return rank_impl(
      index, exclude_user, k, [](const PeerEntry& pe) { return pe.fingerprint.has_value(); },
      [&](const PeerEntry& pe) { return cosine(query, *pe.fingerprint); });
}

json PeerIndex::to_json() const {
  json j;
  j["version"] = kPeerIndexVersion;
  j["fold_user_ids"] = fold_user_ids;
  json vocab = json::object();
  for (const auto& [term, idx] : tfidf.vocabulary) vocab[term] = idx;
  j["tfidf"] = {{"vocabulary", vocab}, {"idf", tfidf.idf}, {"doc_count", tfidf.doc_count}};
  j["stats"] = {{"mean", stats.mean}, {"sd", stats.sd}};
  json rows = json::array();
  for (const auto& pe : entries) {
    json r;
    r["user_id"] = pe.user_id;
    r["entry_index"] = pe.entry_index;
    r["entry_ref"] = pe.entry_ref;
    if (pe.text_vec) {
      json idx = json::array(), val = json::array();
      for (const auto& [i, v] : pe.text_vec->terms) {
        idx.push_back(i);
        val.push_back(v);
      }
      r["text_vec"] = {{"i", idx}, {"v", val}};
    }
    if (pe.fingerprint) {
      r["fingerprint"] = pe.fingerprint->values;
      r["fingerprint_present"] = pe.fingerprint->present;
    }
    if (!pe.diary_snippet.empty()) r["diary_snippet"] = pe.diary_snippet;
    r["outcomes"] = {{"pa_score", pe.outcomes.pa_score},
                     {"na_score", pe.outcomes.na_score},
                     {"er_desire_score", pe.outcomes.er_desire_score}};
    json targets = json::object();
    const auto& names = binary_target_names();
    for (int i = 0; i < kNumBinaryTargets; ++i) {
      targets[std::string(names[static_cast<std::size_t>(i)])] =
          pe.outcomes.binary_targets[static_cast<std::size_t>(i)];
    }
    r["outcomes"]["binary_targets"] = targets;
    rows.push_back(std::move(r));
  }
  j["entries"] = std::move(rows);
  return j;
}

PeerIndex PeerIndex::from_json(const json& j) {
  if (!j.is_object() || !j.contains("version") || j["version"].get<int>() != kPeerIndexVersion) {
    raise(ErrorCode::parse_error, "unsupported peer index artifact version");
  }
  PeerIndex index;
  index.fold_user_ids = j.at("fold_user_ids").get<std::vector<std::string>>();
  const json& tf = j.at("tfidf");
  for (auto it = tf.at("vocabulary").begin(); it != tf.at("vocabulary").end(); ++it) {
    index.tfidf.vocabulary[it.key()] = it.value().get<int>();
  }
  index.tfidf.idf = tf.at("idf").get<std::vector<double>>();
  index.tfidf.doc_count = tf.at("doc_count").get<int>();
  const json& st = j.at("stats");
  for (int f = 0; f < kNumDailyFeatures; ++f) {
    const auto fi = static_cast<std::size_t>(f);
    index.stats.mean[fi] = st.at("mean").at(fi).get<double>();
    index.stats.sd[fi] = st.at("sd").at(fi).get<double>();
  }
  for (const json& r : j.at("entries")) {
    PeerEntry pe;
    pe.user_id = r.at("user_id").get<std::string>();
    pe.entry_index = r.at("entry_index").get<int>();
    pe.entry_ref = r.at("entry_ref").get<std::string>();
    if (r.contains("text_vec")) {
      SparseVec vec;
      const auto& idx = r["text_vec"].at("i");
      const auto& val = r["text_vec"].at("v");
      for (std::size_t i = 0; i < idx.size(); ++i) {
        vec.terms.emplace_back(idx[i].get<int>(), val[i].get<double>());
      }
      pe.text_vec = std::move(vec);
    }
    if (r.contains("fingerprint")) {
      Fingerprint fp;
      for (int f = 0; f < kNumDailyFeatures; ++f) {
        const auto fi = static_cast<std::size_t>(f);
        fp.values[fi] = r["fingerprint"].at(fi).get<double>();
        fp.present[fi] = r["fingerprint_present"].at(fi).get<bool>();
        if (fp.present[fi]) ++fp.n_present;
      }
      pe.fingerprint = fp;
    }
    if (r.contains("diary_snippet")) pe.diary_snippet = r["diary_snippet"].get<std::string>();
    const json& oc = r.at("outcomes");
    pe.outcomes.pa_score = oc.at("pa_score").get<double>();
    pe.outcomes.na_score = oc.at("na_score").get<double>();
    pe.outcomes.er_desire_score = oc.at("er_desire_score").get<double>();
    const auto& names = binary_target_names();
    for (int i = 0; i < kNumBinaryTargets; ++i) {
      pe.outcomes.binary_targets[static_cast<std::size_t>(i)] =
          oc.at("binary_targets").at(std::string(names[static_cast<std::size_t>(i)])).get<bool>();
    }
    index.entries.push_back(std::move(pe));
  }
  return index;
}

void PeerIndex::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) raise(ErrorCode::not_found, "cannot write " + path);
  out << to_json().dump() << '\n';
}

PeerIndex PeerIndex::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::not_found, "cannot open " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) raise(ErrorCode::parse_error, "peer index artifact is not valid JSON");
  return from_json(j);
}

}  // namespace pulse
