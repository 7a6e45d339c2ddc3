#include "pulse/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <thread>

#include "pulse/error.hpp"
#include "pulse/jsonl.hpp"
#include "pulse/synth.hpp"

namespace pulse {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

json binaries_to_json(const BinaryTargets& targets) {
  json out = json::object();
  const auto& names = binary_target_names();
  for (int i = 0; i < kNumBinaryTargets; ++i) {
    out[std::string(names[static_cast<std::size_t>(i)])] = targets[static_cast<std::size_t>(i)];
  }
  return out;
}

BinaryTargets binaries_from_json(const json& j) {
  BinaryTargets out{};
  const auto& names = binary_target_names();
  for (int i = 0; i < kNumBinaryTargets; ++i) {
    out[static_cast<std::size_t>(i)] =
        j.at(std::string(names[static_cast<std::size_t>(i)])).get<bool>();
  }
  return out;
}

bool row_key_less(const EvalRow& a, const EvalRow& b) {
  if (a.user_id != b.user_id) return a.user_id < b.user_id;
  if (a.entry_index != b.entry_index) return a.entry_index < b.entry_index;
  return a.condition < b.condition;
}

// Confusion counts for one target over a set of rows.
struct Confusion {
  long tp = 0, tn = 0, fp = 0, fn = 0;

  void add(bool pred, bool actual) {
    if (actual) {
      pred ? ++tp : ++fn;
    } else {
      pred ? ++fp : ++tn;
    }
  }
  bool single_class() const { return tp + fn == 0 || tn + fp == 0; }
  // (TPR + TNR) / 2; recall of the present class when the other is absent.
  double ba() const {
    const double pos = static_cast<double>(tp + fn);
    const double neg = static_cast<double>(tn + fp);
    if (pos == 0 && neg == 0) return kNaN;
    if (pos == 0) return static_cast<double>(tn) / neg;
    if (neg == 0) return static_cast<double>(tp) / pos;
    return 0.5 * (static_cast<double>(tp) / pos + static_cast<double>(tn) / neg);
  }
};

double row_focus_accuracy(const EvalRow& row) {
  const auto& focus = focus_target_names();
  int correct = 0;
  for (const auto name : focus) {
    const auto idx = static_cast<std::size_t>(binary_target_index(name));
    if (row.pred_binary[idx] == row.actual_binary[idx]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(focus.size());
}

std::vector<const EvalRow*> sorted_row_ptrs(const std::vector<EvalRow>& rows) {
  std::vector<const EvalRow*> ptrs;
  ptrs.reserve(rows.size());
  for (const auto& r : rows) ptrs.push_back(&r);
  std::sort(ptrs.begin(), ptrs.end(),
            [](const EvalRow* a, const EvalRow* b) { return row_key_less(*a, *b); });
  return ptrs;
}

// Linear-interpolation percentile over an already sorted vector.
double percentile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return kNaN;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - std::floor(pos);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

// Runs fn(b) for b in [0, B) across a few worker threads; each call must be
// independent (per-resample seeding keeps results order-free).
void for_each_resample(int B, const std::function<void(int)>& fn) {
  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  const int workers = std::clamp(std::min(hw, B / 256), 1, 8);
  if (workers <= 1) {
    for (int b = 0; b < B; ++b) fn(b);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int b = w; b < B; b += workers) fn(b);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

// ---------------------------------------------------------------------------
// Rows
// ---------------------------------------------------------------------------

json EvalRow::to_json() const {
  return {{"user_id", user_id},
          {"entry_index", entry_index},
          {"condition", condition},
          {"pred", binaries_to_json(pred_binary)},
          {"actual", binaries_to_json(actual_binary)},
          {"pred_scores", {{"pa", pred_pa}, {"na", pred_na}, {"er_desire", pred_er}}},
          {"actual_scores", {{"pa", actual_pa}, {"na", actual_na}, {"er_desire", actual_er}}},
          {"confidence", confidence},
          {"turns_used", turns_used},
          {"tools_called", tools_called},
          {"trace_digest", trace_digest}};
}

EvalRow EvalRow::from_json(const json& j) {
  EvalRow r;
  r.user_id = j.at("user_id").get<std::string>();
  r.entry_index = j.at("entry_index").get<int>();
  r.condition = j.at("condition").get<std::string>();
  r.pred_binary = binaries_from_json(j.at("pred"));
  r.actual_binary = binaries_from_json(j.at("actual"));
  r.pred_pa = j.at("pred_scores").at("pa").get<double>();
  r.pred_na = j.at("pred_scores").at("na").get<double>();
  r.pred_er = j.at("pred_scores").at("er_desire").get<double>();
  r.actual_pa = j.at("actual_scores").at("pa").get<double>();
  r.actual_na = j.at("actual_scores").at("na").get<double>();
  r.actual_er = j.at("actual_scores").at("er_desire").get<double>();
  r.confidence = j.at("confidence").get<double>();
  r.turns_used = j.at("turns_used").get<int>();
  r.tools_called = j.at("tools_called").get<std::vector<std::string>>();
  r.trace_digest = j.at("trace_digest").get<std::string>();
  return r;
}

void save_eval_rows_jsonl(const std::string& path, const std::vector<EvalRow>& rows) {
  std::vector<json> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.to_json());
  save_jsonl(path, out);
}

std::vector<EvalRow> load_eval_rows_jsonl(const std::string& path) {
  std::vector<EvalRow> rows;
  for (const auto& j : load_jsonl(path)) rows.push_back(EvalRow::from_json(j));
  return rows;
}

std::vector<EvalRow> make_eval_rows(const Store& store,
                                    const std::vector<UserRunResult>& results,
                                    const RunCondition& condition) {
  std::vector<EvalRow> rows;
  const std::string label = condition.label();
  for (const auto& user : results) {
    const auto entries = store.entries(user.user_id);
    for (const auto& er : user.entries) {
      if (er.entry_index < 0 || static_cast<std::size_t>(er.entry_index) >= entries.size()) {
        raise(ErrorCode::not_found, "run result references an unknown entry of " + user.user_id);
      }
      const EmaEntry& truth = entries[static_cast<std::size_t>(er.entry_index)];
      EvalRow row;
      row.user_id = user.user_id;
      row.entry_index = er.entry_index;
      row.condition = label;
      row.pred_binary = er.prediction.binary_targets;
      row.actual_binary = truth.binary_targets;
      row.pred_pa = er.prediction.pa_pred;
      row.pred_na = er.prediction.na_pred;
      row.pred_er = er.prediction.er_desire_pred;
      row.actual_pa = truth.pa_score;
      row.actual_na = truth.na_score;
      row.actual_er = truth.er_desire_score;
      row.confidence = er.prediction.confidence;
      row.turns_used = er.prediction.turns_used;
      json trace = json::array();
      for (const auto& item : er.prediction.tool_trace) {
        row.tools_called.push_back(item.tool_name);
        trace.push_back(item.to_json());
      }
      row.trace_digest = fnv1a_hex(trace.dump());
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Point metrics
// ---------------------------------------------------------------------------

BinaryMetric balanced_accuracy(const std::vector<bool>& pred, const std::vector<bool>& actual) {
  if (pred.empty() || pred.size() != actual.size()) {
    raise(ErrorCode::invalid_argument, "balanced_accuracy needs equal non-empty inputs");
  }
  Confusion c;
  for (std::size_t i = 0; i < pred.size(); ++i) c.add(pred[i], actual[i]);
  return {c.ba(), c.single_class()};
}

BinaryMetric macro_f1(const std::vector<bool>& pred, const std::vector<bool>& actual) {
  if (pred.empty() || pred.size() != actual.size()) {
    raise(ErrorCode::invalid_argument, "macro_f1 needs equal non-empty inputs");
  }
  Confusion c;
  for (std::size_t i = 0; i < pred.size(); ++i) c.add(pred[i], actual[i]);

  auto f1 = [](double tp, double fp, double fn) {
    const double denom_p = tp + fp, denom_r = tp + fn;
    const double precision = denom_p == 0 ? 0.0 : tp / denom_p;
    const double recall = denom_r == 0 ? 0.0 : tp / denom_r;
    return precision + recall == 0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
  };
  // Positive class as-is; negative class with the roles flipped.
  const double f1_pos = (c.tp + c.fn) == 0
                            ? 0.0
                            : f1(static_cast<double>(c.tp), static_cast<double>(c.fp),
                                 static_cast<double>(c.fn));
  const double f1_neg = (c.tn + c.fp) == 0
                            ? 0.0
                            : f1(static_cast<double>(c.tn), static_cast<double>(c.fn),
                                 static_cast<double>(c.fp));
  return {(f1_pos + f1_neg) / 2.0, c.single_class()};
}

ContinuousMetrics continuous_metrics(const std::vector<double>& pred,
                                     const std::vector<double>& actual) {
  if (pred.empty() || pred.size() != actual.size()) {
    raise(ErrorCode::invalid_argument, "continuous_metrics needs equal non-empty inputs");
  }
  ContinuousMetrics m;
  const double n = static_cast<double>(pred.size());
  double sum_abs = 0, sum_p = 0, sum_a = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    sum_abs += std::abs(pred[i] - actual[i]);
    sum_p += pred[i];
    sum_a += actual[i];
  }
  m.mae = sum_abs / n;
  m.pred_mean = sum_p / n;
  m.actual_mean = sum_a / n;
  double ss_p = 0, ss_a = 0, ss_pa = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double dp = pred[i] - m.pred_mean;
    const double da = actual[i] - m.actual_mean;
    ss_p += dp * dp;
    ss_a += da * da;
    ss_pa += dp * da;
  }
  m.pred_sd = std::sqrt(ss_p / n);
  m.actual_sd = std::sqrt(ss_a / n);
  if (ss_p <= 0 || ss_a <= 0) {
    m.r_undefined = true;
    m.pearson_r = 0;
  } else {
    m.pearson_r = ss_pa / std::sqrt(ss_p * ss_a);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Bootstrap
// ---------------------------------------------------------------------------

RowMetric target_ba_metric(std::string_view target_name) {
  const auto idx = static_cast<std::size_t>(binary_target_index(target_name));
  return [idx](const std::vector<const EvalRow*>& rows) {
    if (rows.empty()) return kNaN;
    Confusion c;
    for (const EvalRow* r : rows) c.add(r->pred_binary[idx], r->actual_binary[idx]);
    return c.single_class() ? kNaN : c.ba();
  };
}

RowMetric mean_focus_ba_metric() {
  std::vector<std::size_t> idxs;
  for (const auto name : focus_target_names()) {
    idxs.push_back(static_cast<std::size_t>(binary_target_index(name)));
  }
  return [idxs](const std::vector<const EvalRow*>& rows) {
    if (rows.empty()) return kNaN;
    double sum = 0;
    for (const std::size_t idx : idxs) {
      Confusion c;
      for (const EvalRow* r : rows) c.add(r->pred_binary[idx], r->actual_binary[idx]);
      if (c.single_class()) return kNaN;
      sum += c.ba();
    }
    return sum / static_cast<double>(idxs.size());
  };
}

BootstrapCi bootstrap_ci(const std::vector<EvalRow>& rows, const RowMetric& metric, int B,
                         std::uint64_t seed) {
  if (rows.empty()) raise(ErrorCode::invalid_argument, "bootstrap_ci over empty rows");
  if (B < 1) raise(ErrorCode::invalid_argument, "bootstrap_ci needs B >= 1");

  const std::vector<const EvalRow*> base = sorted_row_ptrs(rows);
  const int n = static_cast<int>(base.size());

  BootstrapCi out;
  out.point = metric(base);

  std::vector<double> values(static_cast<std::size_t>(B), kNaN);
  for_each_resample(B, [&](int b) {
    Rng rng(splitmix64(seed + 1 + static_cast<std::uint64_t>(b)));
    std::vector<const EvalRow*> sample;
    sample.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      sample.push_back(base[static_cast<std::size_t>(rng.uniform_int(0, n - 1))]);
    }
    values[static_cast<std::size_t>(b)] = metric(sample);
  });

  std::vector<double> defined;
  defined.reserve(values.size());
  for (const double v : values) {
    if (!std::isnan(v)) defined.push_back(v);
  }
  out.degenerate = defined.size() * 2 < values.size();
  if (defined.empty()) {
    out.lo95 = out.hi95 = kNaN;
    return out;
  }
  std::sort(defined.begin(), defined.end());
  out.lo95 = percentile_sorted(defined, 0.025);
  out.hi95 = percentile_sorted(defined, 0.975);
  return out;
}

DiffTest bootstrap_diff_test(const std::vector<EvalRow>& rows_a,
                             const std::vector<EvalRow>& rows_b, std::string_view target_name,
                             int B, std::uint64_t seed) {
  if (rows_a.empty() || rows_b.empty()) {
    raise(ErrorCode::invalid_argument, "bootstrap_diff_test over empty rows");
  }
  if (B < 1) raise(ErrorCode::invalid_argument, "bootstrap_diff_test needs B >= 1");
  const std::vector<const EvalRow*> a = sorted_row_ptrs(rows_a);
  const std::vector<const EvalRow*> b = sorted_row_ptrs(rows_b);
  if (a.size() != b.size()) {
    raise(ErrorCode::pairing_error, "paired test row sets differ in size");
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i]->user_id != b[i]->user_id || a[i]->entry_index != b[i]->entry_index) {
      raise(ErrorCode::pairing_error, "paired test rows do not cover identical entries");
    }
  }

  const auto idx = static_cast<std::size_t>(binary_target_index(target_name));
  const int n = static_cast<int>(a.size());
  auto delta_over = [&](const std::vector<int>& indices) {
    Confusion ca, cb;
    for (const int i : indices) {
      ca.add(a[static_cast<std::size_t>(i)]->pred_binary[idx],
             a[static_cast<std::size_t>(i)]->actual_binary[idx]);
      cb.add(b[static_cast<std::size_t>(i)]->pred_binary[idx],
             b[static_cast<std::size_t>(i)]->actual_binary[idx]);
    }
    return ca.ba() - cb.ba();
  };

  std::vector<int> all(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;

  DiffTest out;
  out.delta = delta_over(all);

  std::vector<double> deltas(static_cast<std::size_t>(B), 0.0);
  for_each_resample(B, [&](int r) {
    Rng rng(splitmix64(seed + 1 + static_cast<std::uint64_t>(r)));
    std::vector<int> sample(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) sample[static_cast<std::size_t>(i)] = rng.uniform_int(0, n - 1);
    deltas[static_cast<std::size_t>(r)] = delta_over(sample);
  });

  long reversed = 0;
  for (const double d : deltas) {
    if (d <= 0.0) ++reversed;
  }
  out.p_one_sided =
      (static_cast<double>(reversed) + 1.0) / (static_cast<double>(B) + 1.0);
  std::sort(deltas.begin(), deltas.end());
  out.lo95 = percentile_sorted(deltas, 0.025);
  out.hi95 = percentile_sorted(deltas, 0.975);
  return out;
}

// ---------------------------------------------------------------------------
// Calibration and usage analytics
// ---------------------------------------------------------------------------

std::vector<ConfidenceBin> confidence_bins(const std::vector<EvalRow>& rows,
                                           const std::vector<double>& edges) {
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i - 1] < edges[i])) {
      raise(ErrorCode::invalid_argument, "confidence bin edges must be strictly increasing");
    }
  }
  std::vector<ConfidenceBin> bins(edges.size() + 1);
  for (std::size_t i = 0; i < bins.size(); ++i) {
    bins[i].lo = i == 0 ? 0.0 : edges[i - 1];
    bins[i].hi = i == edges.size() ? std::numeric_limits<double>::infinity() : edges[i];
  }
  std::vector<double> sums(bins.size(), 0.0);
  for (const auto& row : rows) {
    std::size_t slot = 0;
    while (slot < edges.size() && row.confidence >= edges[slot]) ++slot;
    ++bins[slot].n;
    sums[slot] += row_focus_accuracy(row);
  }
  for (std::size_t i = 0; i < bins.size(); ++i) {
    if (bins[i].n > 0) bins[i].mean_accuracy = sums[i] / static_cast<double>(bins[i].n);
  }
  return bins;
}

ToolUsageStats tool_usage_stats(const std::vector<EvalRow>& rows) {
  ToolUsageStats stats;
  if (rows.empty()) return stats;

  double total_calls = 0;
  std::map<std::string, int> rows_invoking;
  int max_bucket = 0;
  for (const auto& row : rows) {
    total_calls += static_cast<double>(row.tools_called.size());
    std::set<std::string> distinct(row.tools_called.begin(), row.tools_called.end());
    for (const auto& name : distinct) ++rows_invoking[name];
    max_bucket = std::max(max_bucket, row.entry_index / 5);
  }
  stats.mean_calls = total_calls / static_cast<double>(rows.size());
  for (const auto& [name, count] : rows_invoking) {
    stats.tool_frequency[name] = static_cast<double>(count) / static_cast<double>(rows.size());
  }

  stats.buckets.resize(static_cast<std::size_t>(max_bucket) + 1);
  std::vector<double> call_sums(stats.buckets.size(), 0.0);
  std::vector<double> conf_sums(stats.buckets.size(), 0.0);
  for (const auto& row : rows) {
    const auto bucket = static_cast<std::size_t>(row.entry_index / 5);
    ++stats.buckets[bucket].n;
    call_sums[bucket] += static_cast<double>(row.tools_called.size());
    conf_sums[bucket] += row.confidence;
  }
  for (std::size_t i = 0; i < stats.buckets.size(); ++i) {
    auto& bucket = stats.buckets[i];
    bucket.first_entry = static_cast<int>(i) * 5 + 1;
    bucket.last_entry = static_cast<int>(i) * 5 + 5;
    if (bucket.n > 0) {
      bucket.mean_calls = call_sums[i] / static_cast<double>(bucket.n);
      bucket.mean_confidence = conf_sums[i] / static_cast<double>(bucket.n);
    }
  }
  return stats;
}

// ---------------------------------------------------------------------------
// Factorial runner
// ---------------------------------------------------------------------------

namespace {

json condition_section(const std::vector<EvalRow>& rows, const FactorialOptions& options) {
  json section;
  section["n_rows"] = rows.size();
  std::set<std::string> users;
  for (const auto& r : rows) users.insert(r.user_id);
  section["n_users"] = users.size();

  const auto& names = binary_target_names();
  json targets = json::object();
  std::vector<bool> pred, actual;
  pred.reserve(rows.size());
  actual.reserve(rows.size());
  double focus_sum = 0;
  for (int t = 0; t < kNumBinaryTargets; ++t) {
    pred.clear();
    actual.clear();
    const auto idx = static_cast<std::size_t>(t);
    for (const auto& r : rows) {
      pred.push_back(r.pred_binary[idx]);
      actual.push_back(r.actual_binary[idx]);
    }
    const BinaryMetric ba = balanced_accuracy(pred, actual);
    const BinaryMetric f1 = macro_f1(pred, actual);
    targets[std::string(names[idx])] = {{"ba", ba.value},
                                        {"ba_degenerate", ba.degenerate},
                                        {"macro_f1", f1.value},
                                        {"f1_degenerate", f1.degenerate}};
  }
  section["targets"] = std::move(targets);
  for (const auto name : focus_target_names()) {
    focus_sum += section["targets"][std::string(name)]["ba"].get<double>();
  }
  section["mean_focus_ba"] = focus_sum / static_cast<double>(focus_target_names().size());

  const BootstrapCi focus_ci =
      bootstrap_ci(rows, mean_focus_ba_metric(), options.bootstrap_B, options.seed);
  section["mean_focus_ba_ci"] = {{"point", focus_ci.point},
                                 {"lo95", focus_ci.lo95},
                                 {"hi95", focus_ci.hi95},
                                 {"degenerate", focus_ci.degenerate}};

  auto continuous = [&](auto pred_of, auto actual_of) {
    std::vector<double> p, q;
    p.reserve(rows.size());
    q.reserve(rows.size());
    for (const auto& r : rows) {
      p.push_back(pred_of(r));
      q.push_back(actual_of(r));
    }
    const ContinuousMetrics m = continuous_metrics(p, q);
    return json{{"mae", m.mae},
                {"pearson_r", m.pearson_r},
                {"r_undefined", m.r_undefined},
                {"pred_mean", m.pred_mean},
                {"pred_sd", m.pred_sd},
                {"actual_mean", m.actual_mean},
                {"actual_sd", m.actual_sd}};
  };
  section["continuous"] = {
      {"pa", continuous([](const EvalRow& r) { return r.pred_pa; },
                        [](const EvalRow& r) { return r.actual_pa; })},
      {"na", continuous([](const EvalRow& r) { return r.pred_na; },
                        [](const EvalRow& r) { return r.actual_na; })},
      {"er_desire", continuous([](const EvalRow& r) { return r.pred_er; },
                               [](const EvalRow& r) { return r.actual_er; })}};

  json bins = json::array();
  for (const auto& bin : confidence_bins(rows, options.confidence_edges)) {
    bins.push_back({{"lo", bin.lo},
                    {"hi", std::isinf(bin.hi) ? json(nullptr) : json(bin.hi)},
                    {"n", bin.n},
                    {"mean_accuracy", bin.mean_accuracy}});
  }
  section["confidence_bins"] = std::move(bins);

  const ToolUsageStats usage = tool_usage_stats(rows);
  json buckets = json::array();
  for (const auto& bucket : usage.buckets) {
    buckets.push_back({{"first_entry", bucket.first_entry},
                       {"last_entry", bucket.last_entry},
                       {"n", bucket.n},
                       {"mean_calls", bucket.mean_calls},
                       {"mean_confidence", bucket.mean_confidence}});
  }
  section["tool_usage"] = {{"mean_calls", usage.mean_calls},
                           {"tool_frequency", usage.tool_frequency},
                           {"entry_buckets", std::move(buckets)}};
  return section;
}

// Rows of both conditions restricted to their common (user, entry) keys.
std::pair<std::vector<EvalRow>, std::vector<EvalRow>> paired_subset(
    const std::vector<EvalRow>& a, const std::vector<EvalRow>& b) {
  std::set<std::pair<std::string, int>> keys_a, keys_b;
  for (const auto& r : a) keys_a.insert({r.user_id, r.entry_index});
  for (const auto& r : b) keys_b.insert({r.user_id, r.entry_index});
  std::vector<EvalRow> out_a, out_b;
  for (const auto& r : a) {
    if (keys_b.count({r.user_id, r.entry_index})) out_a.push_back(r);
  }
  for (const auto& r : b) {
    if (keys_a.count({r.user_id, r.entry_index})) out_b.push_back(r);
  }
  return {std::move(out_a), std::move(out_b)};
}

}  // namespace

json report_from_rows(const std::vector<EvalRow>& rows, const FactorialOptions& options,
                      const std::map<std::string, std::vector<std::string>>& aborted_users) {
  if (rows.empty()) raise(ErrorCode::invalid_argument, "no rows to report on");

  std::map<std::string, std::vector<EvalRow>> by_condition;
  for (const auto& r : rows) by_condition[r.condition].push_back(r);

  json report;
  report["meta"] = {{"bootstrap_B", options.bootstrap_B},
                    {"seed", options.seed},
                    {"confidence_edges", options.confidence_edges},
                    {"focus_targets", [] {
                        std::vector<std::string> names;
                        for (const auto n : focus_target_names()) names.emplace_back(n);
                        return names;
                      }()}};
  report["conditions"] = json::object();
  for (const auto& [label, cond_rows] : by_condition) {
    json section = condition_section(cond_rows, options);
    const auto aborted = aborted_users.find(label);
    section["aborted_users"] =
        aborted == aborted_users.end() ? json::array() : json(aborted->second);
    report["conditions"][label] = std::move(section);
  }

  json pairwise = json::array();
  std::uint64_t pair_counter = 0;
  for (auto ia = by_condition.begin(); ia != by_condition.end(); ++ia) {
    for (auto ib = std::next(ia); ib != by_condition.end(); ++ib) {
      const auto [pa, pb] = paired_subset(ia->second, ib->second);
      if (pa.empty()) continue;
      for (const auto target : focus_target_names()) {
        const DiffTest t = bootstrap_diff_test(pa, pb, target, options.bootstrap_B,
                                               options.seed + (++pair_counter));
        pairwise.push_back({{"a", ia->first},
                            {"b", ib->first},
                            {"target", std::string(target)},
                            {"n_paired", pa.size()},
                            {"delta", t.delta},
                            {"p_one_sided", t.p_one_sided},
                            {"lo95", t.lo95},
                            {"hi95", t.hi95}});
      }
    }
  }
  report["pairwise"] = std::move(pairwise);
  return report;
}

FactorialReport run_factorial(const Store& store, const std::vector<std::string>& eval_user_ids,
                              const std::vector<RunCondition>& conditions, const PeerIndex* peers,
                              InferenceBackend& backend, const FactorialOptions& options) {
  if (conditions.empty()) raise(ErrorCode::invalid_argument, "no conditions to run");
  if (eval_user_ids.empty()) raise(ErrorCode::invalid_argument, "no evaluation users");
  for (const auto& c : conditions) c.validate();
  if (peers != nullptr) {
    std::set<std::string> fold(peers->fold_user_ids.begin(), peers->fold_user_ids.end());
    for (const auto& u : eval_user_ids) {
      if (fold.count(u)) {
        raise(ErrorCode::fold_leakage, "evaluation user " + u + " appears in the training fold");
      }
    }
  }

  FactorialReport out;
  std::map<std::string, std::vector<std::string>> aborted;
  for (const auto& condition : conditions) {
    const auto results = run_cohort(store, eval_user_ids, condition, peers, backend,
                                    options.concurrency, options.runtime);
    auto rows = make_eval_rows(store, results, condition);
    for (const auto& r : results) {
      if (r.aborted) aborted[condition.label()].push_back(r.user_id);
    }
    out.rows.insert(out.rows.end(), std::make_move_iterator(rows.begin()),
                    std::make_move_iterator(rows.end()));
  }
  out.report = report_from_rows(out.rows, options, aborted);
  return out;
}

// ---------------------------------------------------------------------------
// Markdown rendering
// ---------------------------------------------------------------------------

namespace {

std::string fixed3(double v) {
  if (std::isnan(v)) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::string pvalue(double p) {
  char buf[32];
  if (p < 0.0001) return "<0.0001";
  std::snprintf(buf, sizeof(buf), "%.4f", p);
  return buf;
}

}  // namespace

std::string render_factorial_markdown(const json& report) {
  std::string md = "# Evaluation report\n";

  md += "\n## Focus targets by condition\n\n";
  md += "| Condition | ";
  for (const auto target : focus_target_names()) {
    md += std::string(target) + " | ";
  }
  md += "Mean | 95% CI |\n|---|";
  for (std::size_t i = 0; i < focus_target_names().size() + 2; ++i) md += "---|";
  md += "\n";
  for (const auto& [label, section] : report.at("conditions").items()) {
    md += "| " + label + " | ";
    for (const auto target : focus_target_names()) {
      md += fixed3(section.at("targets").at(std::string(target)).at("ba").get<double>()) + " | ";
    }
    const auto& ci = section.at("mean_focus_ba_ci");
    md += fixed3(section.at("mean_focus_ba").get<double>()) + " | [" +
          fixed3(ci.at("lo95").get<double>()) + ", " + fixed3(ci.at("hi95").get<double>()) +
          "] |\n";
  }

  md += "\n## Continuous scores by condition\n\n";
  md += "| Condition | PA MAE | PA r | NA MAE | NA r | Desire MAE | Desire r |\n";
  md += "|---|---|---|---|---|---|---|\n";
  for (const auto& [label, section] : report.at("conditions").items()) {
    const auto& c = section.at("continuous");
    auto cell = [&](const char* key) {
      const auto& m = c.at(key);
      return fixed3(m.at("mae").get<double>()) + " | " +
             (m.at("r_undefined").get<bool>() ? "n/a" : fixed3(m.at("pearson_r").get<double>()));
    };
    md += "| " + label + " | " + cell("pa") + " | " + cell("na") + " | " + cell("er_desire") +
          " |\n";
  }

  md += "\n## Confidence calibration\n\n";
  md += "| Condition | Bin | n | Accuracy |\n|---|---|---|---|\n";
  for (const auto& [label, section] : report.at("conditions").items()) {
    for (const auto& bin : section.at("confidence_bins")) {
      const std::string hi =
          bin.at("hi").is_null() ? "+" : "-" + fixed3(bin.at("hi").get<double>());
      md += "| " + label + " | " + fixed3(bin.at("lo").get<double>()) + hi + " | " +
            std::to_string(bin.at("n").get<int>()) + " | " +
            fixed3(bin.at("mean_accuracy").get<double>()) + " |\n";
    }
  }

  md += "\n## Tool usage\n\n";
  md += "| Condition | Mean calls | Most used |\n|---|---|---|\n";
  for (const auto& [label, section] : report.at("conditions").items()) {
    const auto& usage = section.at("tool_usage");
    std::string top = "none";
    double best = 0;
    for (const auto& [tool, freq] : usage.at("tool_frequency").items()) {
      if (freq.get<double>() > best) {
        best = freq.get<double>();
        top = tool;
      }
    }
    md += "| " + label + " | " + fixed3(usage.at("mean_calls").get<double>()) + " | " + top +
          " |\n";
  }

  if (report.contains("pairwise") && !report.at("pairwise").empty()) {
    md += "\n## Pairwise comparisons\n\n";
    md += "| A | B | Target | Delta | p (one-sided) | 95% CI |\n|---|---|---|---|---|---|\n";
    for (const auto& row : report.at("pairwise")) {
      md += "| " + row.at("a").get<std::string>() + " | " + row.at("b").get<std::string>() +
            " | " + row.at("target").get<std::string>() + " | " +
            fixed3(row.at("delta").get<double>()) + " | " +
            pvalue(row.at("p_one_sided").get<double>()) + " | [" +
            fixed3(row.at("lo95").get<double>()) + ", " + fixed3(row.at("hi95").get<double>()) +
            "] |\n";
    }
  }
  return md;
}

}  // namespace pulse
