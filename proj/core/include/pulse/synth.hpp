#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <random>
#include <string>
#include <vector>

#include "pulse/model.hpp"
#include "pulse/time.hpp"

namespace pulse {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Deterministic synthetic cohort. Every emitted behavior is shaped so that
// the held-out truth is recoverable by construction:
//   * a per-entry context drives availability ground truth (free <=> available)
//     and is observable only through behavior: driving injects vehicle motion
//     into the preceding hour, sleeping ends a sleep episode minutes before
//     the survey, sleeping/meeting silence the phone screen beforehand, and a
//     free context guarantees a recent screen session (minus a small noise
//     rate that bounds any detector away from perfection);
//   * latent affect follows per-user AR(1) series that leave visible traces
//     (more stationary time and late screen under high negative affect, less
//     walking and travel), feed the diary phrase banks, and decide the
//     missing-not-at-random diary dropout.
// Latents are written to a separate artifact consumed only by evaluation.
// ---------------------------------------------------------------------------

enum class SynthContext { free_time, sleeping, driving, meeting };
std::string_view to_string(SynthContext c);
SynthContext synth_context_from_string(std::string_view s);

struct GeneratorConfig {
  std::uint64_t seed = 7;

  // Cohort shape. Evaluation users are named u###, training-fold (peer)
  // users p###; the folds are disjoint by construction.
  int n_users = 50;
  int n_peer_users = 25;
  int min_entries_per_user = 74;
  int max_entries_per_user = 96;
  int emas_per_day = 3;  // at most 3 daily survey slots are defined
  std::string start_date = "2024-03-01";
  int tz_offset_min = 0;
  double android_frac = 0.36;

  // Latent affect dynamics (AR(1) around per-user baselines).
  double rho = 0.75;
  double pa_base_mean = 30.0, pa_base_sd = 5.0;
  double na_base_mean = 15.0, na_base_sd = 5.0;
  double innovation_sd = 4.0;
  double episode_rate = 0.05;       // chance of an acute negative spike
  double episode_magnitude = 8.0;
  double na_er_gain = 0.15;         // desire-to-regulate tracks negative affect
  double er_base_min = 3.0, er_base_max = 7.0;
  double er_noise_sd = 1.2;

  // Behavior coupling (per unit of negative-affect deviation).
  double na_stationary_gain = 2.0;   // extra stationary minutes per hour
  double na_walk_gain = 1.0;         // walking minutes removed per hour
  double na_distance_gain = 0.03;    // fractional travel shrink
  double na_late_screen_gain = 0.02; // extra late-evening screen probability

  // Context schedule and the availability machinery.
  double p_free = 0.55, p_sleeping = 0.15, p_driving = 0.15, p_meeting = 0.15;
  double screen_guarantee_noise = 0.03;  // free slots left without the session
  double suppress_slack_min = 10.0;      // silence extends past the 2 h window

  // Missing-not-at-random diary dropout: P(missing) = logistic(a + b * na).
  double dropout_a = -2.6;
  double dropout_b = 0.12;

  TargetSchema schema;

  void validate() const;  // config_error on violations
  json to_json() const;
  // Defaults overridden by any keys present (unknown keys -> config_error).
  static GeneratorConfig from_json(const json& j);
};

// Held-out truth per (user, entry); never part of the agent-visible dataset.
struct LatentRow {
  std::string user_id;
  int entry_index = 0;
  Timestamp timestamp;
  double pa_latent = 0, na_latent = 0, er_desire_latent = 0;
  SynthContext context = SynthContext::free_time;

  json to_json() const;
  static LatentRow from_json(const json& j);
};

struct CohortData {
  GeneratorConfig config;
  std::vector<UserProfile> profiles;
  std::vector<SensingEvent> events;
  std::vector<EmaEntry> entries;
  std::vector<LatentRow> latents;
  std::vector<std::string> eval_user_ids;
  std::vector<std::string> training_user_ids;
};

CohortData generate_cohort(const GeneratorConfig& config);

// Writes profiles.jsonl, events.jsonl, ema.jsonl, latents.jsonl and a
// manifest.json carrying the config echo, row counts, fold membership and
// per-file content checksums. Returns the manifest.
json save_cohort(const CohortData& data, const std::string& dir);

std::vector<LatentRow> load_latents_jsonl(const std::string& path);

// The deterministic tool-loop policy used as the scripted baseline
// (see backend: kind "rule_agent").
json reference_rule_agent_policy();

// Diary phrase banks, one per negative-affect quartile band
// (0 = calmest .. 3 = most distressed), ~40 phrases each. Entries compose
// two distinct phrases from the band matching the entry's latent quartile.
const std::vector<std::string>& diary_phrase_bank(int band);
constexpr int kNumDiaryBands = 4;

// ---------------------------------------------------------------------------
// Seeded RNG: mt19937_64 (standard-defined, byte-stable) with hand-rolled
// transforms, so streams are identical on every platform (std::distribution
// implementations vary; they are deliberately not used).
// ---------------------------------------------------------------------------

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform01();                    // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  int uniform_int(int lo, int hi);       // inclusive bounds
  double normal(double mean = 0.0, double sd = 1.0);  // Box-Muller
  bool bernoulli(double p);

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace pulse
