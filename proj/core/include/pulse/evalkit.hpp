#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "pulse/model.hpp"
#include "pulse/runtime.hpp"
#include "pulse/stats.hpp"
#include "pulse/timestore.hpp"

namespace pulse {

// ---------------------------------------------------------------------------
// Rows
// ---------------------------------------------------------------------------

// One scored prediction for one survey entry under one run condition. Rows
// are joinable across conditions by (user_id, entry_index).
struct EvalRow {
  std::string user_id;
  int entry_index = 0;
  std::string condition;  // RunCondition label
  BinaryTargets pred_binary{};
  BinaryTargets actual_binary{};
  double pred_pa = 0, pred_na = 0, pred_er = 0;
  double actual_pa = 0, actual_na = 0, actual_er = 0;
  double confidence = 0;
  int turns_used = 0;
  std::vector<std::string> tools_called;  // tool names in call order
  std::string trace_digest;               // content hash of the full tool trace

  json to_json() const;
  static EvalRow from_json(const json& j);
};

void save_eval_rows_jsonl(const std::string& path, const std::vector<EvalRow>& rows);
std::vector<EvalRow> load_eval_rows_jsonl(const std::string& path);

// Joins run results against ground truth held in the store. Aborted users
// contribute the entries they completed before aborting.
std::vector<EvalRow> make_eval_rows(const Store& store,
                                    const std::vector<UserRunResult>& results,
                                    const RunCondition& condition);

// ---------------------------------------------------------------------------
// Point metrics
// ---------------------------------------------------------------------------

// A classification metric plus a flag for the single-class edge case.
struct BinaryMetric {
  double value = 0;
  bool degenerate = false;  // one class absent from the actuals
};

// Mean of sensitivity and specificity. When the actuals contain a single
// class the value is the recall of that class and the flag is set. Empty
// input or length mismatch raises invalid_argument.
BinaryMetric balanced_accuracy(const std::vector<bool>& pred, const std::vector<bool>& actual);

// Unweighted mean of the per-class F1 scores; a class absent from the actuals
// contributes F1 = 0 and sets the flag.
BinaryMetric macro_f1(const std::vector<bool>& pred, const std::vector<bool>& actual);

struct ContinuousMetrics {
  double mae = 0;
  double pearson_r = 0;
  bool r_undefined = false;  // either side has zero variance
  double pred_mean = 0, pred_sd = 0;  // population standard deviations
  double actual_mean = 0, actual_sd = 0;
};
ContinuousMetrics continuous_metrics(const std::vector<double>& pred,
                                     const std::vector<double>& actual);

// ---------------------------------------------------------------------------
// Bootstrap
// ---------------------------------------------------------------------------

constexpr int kDefaultBootstrapB = 10000;

// Metric over a row subset; returns NaN when undefined on that subset (e.g.
// single-class actuals), which bootstrap_ci counts as a degenerate resample.
using RowMetric = std::function<double(const std::vector<const EvalRow*>&)>;

// Balanced accuracy for one binary target; NaN on single-class subsets.
RowMetric target_ba_metric(std::string_view target_name);
// Mean balanced accuracy over the four focus targets; NaN if any is degenerate.
RowMetric mean_focus_ba_metric();

struct BootstrapCi {
  double point = 0;
  double lo95 = 0, hi95 = 0;  // percentile interval (2.5 / 97.5)
  bool degenerate = false;    // metric undefined in more than half the resamples
};

// Percentile bootstrap over entry rows: B resamples with replacement, the
// metric recomputed per resample. Each resample draws from its own
// deterministically derived generator, so results are independent of
// evaluation order and of row order (rows are sorted internally).
BootstrapCi bootstrap_ci(const std::vector<EvalRow>& rows, const RowMetric& metric,
                         int B = kDefaultBootstrapB, std::uint64_t seed = 0);

struct DiffTest {
  double delta = 0;        // BA_a - BA_b on the full paired data
  double p_one_sided = 1;  // (#{resampled delta <= 0} + 1) / (B + 1)
  double lo95 = 0, hi95 = 0;
};

// Paired bootstrap for the advantage of rows_a over rows_b on one binary
// target. Both row sets must cover exactly the same (user, entry) keys
// (pairing_error otherwise); resampling draws entry pairs. Single-class
// resamples fall back to the recall value rather than being dropped, so the
// resample count is always B.
DiffTest bootstrap_diff_test(const std::vector<EvalRow>& rows_a,
                             const std::vector<EvalRow>& rows_b,
                             std::string_view target_name, int B = kDefaultBootstrapB,
                             std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Calibration and usage analytics
// ---------------------------------------------------------------------------

// Edges {e1, .., ek} produce k+1 bins: [0, e1), [e1, e2), .., [ek, +inf).
// Accuracy is the mean over rows of the row's focus-target correctness (the
// fraction of the four focus targets predicted correctly). Bin accuracies
// weighted by n recompose the overall mean exactly.
struct ConfidenceBin {
  double lo = 0, hi = 0;  // hi is +infinity for the top bin
  int n = 0;
  double mean_accuracy = 0;  // 0 when the bin is empty
};
std::vector<ConfidenceBin> confidence_bins(const std::vector<EvalRow>& rows,
                                           const std::vector<double>& edges = {0.65, 0.80});

// Usage patterns over tool traces, bucketed by each user's entry number
// (1-based) in buckets of five entries.
struct ToolUsageBucket {
  int first_entry = 0, last_entry = 0;  // 1-based, inclusive
  int n = 0;
  double mean_calls = 0;
  double mean_confidence = 0;
};
struct ToolUsageStats {
  double mean_calls = 0;
  std::map<std::string, double> tool_frequency;  // fraction of rows invoking it
  std::vector<ToolUsageBucket> buckets;
};
ToolUsageStats tool_usage_stats(const std::vector<EvalRow>& rows);

// ---------------------------------------------------------------------------
// Factorial runner
// ---------------------------------------------------------------------------

struct FactorialOptions {
  int bootstrap_B = kDefaultBootstrapB;
  std::uint64_t seed = 0;
  int concurrency = kDefaultConcurrency;
  std::vector<double> confidence_edges{0.65, 0.80};
  RuntimeConfig runtime;
};

struct FactorialReport {
  json report;
  std::vector<EvalRow> rows;  // all conditions pooled
};

// Runs every condition over every evaluation user's entries and assembles the
// per-condition metric tables plus pairwise focus-target comparisons. The
// peer index, when present, must come from a fold disjoint from the
// evaluation users (fold_leakage otherwise). The backend must be safe to call
// concurrently.
FactorialReport run_factorial(const Store& store, const std::vector<std::string>& eval_user_ids,
                              const std::vector<RunCondition>& conditions, const PeerIndex* peers,
                              InferenceBackend& backend, const FactorialOptions& options = {});

// Metric tables over precomputed rows (the `evaluate` path); conditions are
// discovered from the rows. aborted_users lists, per condition, users whose
// sequences ended early.
json report_from_rows(const std::vector<EvalRow>& rows, const FactorialOptions& options = {},
                      const std::map<std::string, std::vector<std::string>>& aborted_users = {});

// Human-readable tables for a report produced above.
std::string render_factorial_markdown(const json& report);

}  // namespace pulse
