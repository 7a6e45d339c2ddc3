#include "pulse/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "pulse/backend.hpp"
#include "pulse/error.hpp"
#include "pulse/jsonl.hpp"
#include "pulse/timestore.hpp"

namespace pulse {

// ---------------------------------------------------------------------------
// Rng
// ---------------------------------------------------------------------------

double Rng::uniform01() {
  // 53-bit mantissa from the top bits of the raw draw.
  return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

int Rng::uniform_int(int lo, int hi) {
  if (hi < lo) raise(ErrorCode::invalid_argument, "uniform_int bounds inverted");
  const auto span = static_cast<double>(hi) - static_cast<double>(lo) + 1.0;
  const int offset = static_cast<int>(std::floor(uniform01() * span));
  return lo + std::min(offset, hi - lo);
}

double Rng::normal(double mean, double sd) {
  if (has_spare_) {
    has_spare_ = false;
    return mean + sd * spare_;
  }
  // Box-Muller; u clamped away from zero for a finite log.
  double u = uniform01();
  if (u < 1e-300) u = 1e-300;
  const double v = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u));
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  spare_ = r * std::sin(kTwoPi * v);
  has_spare_ = true;
  return mean + sd * r * std::cos(kTwoPi * v);
}

bool Rng::bernoulli(double p) { return uniform01() < p; }

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

std::string_view to_string(SynthContext c) {
  switch (c) {
    case SynthContext::free_time: return "free";
    case SynthContext::sleeping: return "sleeping";
    case SynthContext::driving: return "driving";
    case SynthContext::meeting: return "meeting";
  }
  return "free";
}

SynthContext synth_context_from_string(std::string_view s) {
  if (s == "free") return SynthContext::free_time;
  if (s == "sleeping") return SynthContext::sleeping;
  if (s == "driving") return SynthContext::driving;
  if (s == "meeting") return SynthContext::meeting;
  raise(ErrorCode::parse_error, "unknown context: " + std::string(s));
}

void GeneratorConfig::validate() const {
  auto check = [](bool ok, const char* what) {
    if (!ok) raise(ErrorCode::config_error, what);
  };
  check(n_users >= 1, "n_users must be >= 1");
  check(n_peer_users >= 1, "n_peer_users must be >= 1");
  check(min_entries_per_user >= 2, "min_entries_per_user must be >= 2");
  check(max_entries_per_user >= min_entries_per_user, "entry count bounds inverted");
  check(emas_per_day >= 1 && emas_per_day <= 3, "emas_per_day must be in [1, 3]");
  check(android_frac >= 0.0 && android_frac <= 1.0, "android_frac must be a probability");
  check(rho >= 0.0 && rho < 1.0, "rho must be in [0, 1)");
  check(innovation_sd >= 0.0 && pa_base_sd >= 0.0 && na_base_sd >= 0.0 && er_noise_sd >= 0.0,
        "spreads must be non-negative");
  check(episode_rate >= 0.0 && episode_rate <= 1.0, "episode_rate must be a probability");
  check(p_free >= 0.0 && p_sleeping >= 0.0 && p_driving >= 0.0 && p_meeting >= 0.0,
        "context weights must be non-negative");
  check(std::abs(p_free + p_sleeping + p_driving + p_meeting - 1.0) < 1e-9,
        "context weights must sum to 1");
  check(screen_guarantee_noise >= 0.0 && screen_guarantee_noise <= 1.0,
        "screen_guarantee_noise must be a probability");
  check(suppress_slack_min >= 0.0, "suppress_slack_min must be non-negative");
  check(er_base_min <= er_base_max, "er base bounds inverted");
  (void)parse_date_string(start_date);  // parse_error when malformed
}

json GeneratorConfig::to_json() const {
  return {{"seed", seed},
          {"n_users", n_users},
          {"n_peer_users", n_peer_users},
          {"min_entries_per_user", min_entries_per_user},
          {"max_entries_per_user", max_entries_per_user},
          {"emas_per_day", emas_per_day},
          {"start_date", start_date},
          {"tz_offset_min", tz_offset_min},
          {"android_frac", android_frac},
          {"rho", rho},
          {"pa_base_mean", pa_base_mean},
          {"pa_base_sd", pa_base_sd},
          {"na_base_mean", na_base_mean},
          {"na_base_sd", na_base_sd},
          {"innovation_sd", innovation_sd},
          {"episode_rate", episode_rate},
          {"episode_magnitude", episode_magnitude},
          {"na_er_gain", na_er_gain},
          {"er_base_min", er_base_min},
          {"er_base_max", er_base_max},
          {"er_noise_sd", er_noise_sd},
          {"na_stationary_gain", na_stationary_gain},
          {"na_walk_gain", na_walk_gain},
          {"na_distance_gain", na_distance_gain},
          {"na_late_screen_gain", na_late_screen_gain},
          {"p_free", p_free},
          {"p_sleeping", p_sleeping},
          {"p_driving", p_driving},
          {"p_meeting", p_meeting},
          {"screen_guarantee_noise", screen_guarantee_noise},
          {"suppress_slack_min", suppress_slack_min},
          {"dropout_a", dropout_a},
          {"dropout_b", dropout_b}};
}

GeneratorConfig GeneratorConfig::from_json(const json& j) {
  GeneratorConfig c;
  if (!j.is_object()) raise(ErrorCode::config_error, "generator config must be a JSON object");
  const json defaults = c.to_json();
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!defaults.contains(it.key())) {
      raise(ErrorCode::config_error, "unknown generator config key: " + it.key());
    }
  }
  auto num = [&](const char* key, double fallback) { return j.value(key, fallback); };
  c.seed = j.value("seed", c.seed);
  c.n_users = j.value("n_users", c.n_users);
  c.n_peer_users = j.value("n_peer_users", c.n_peer_users);
  c.min_entries_per_user = j.value("min_entries_per_user", c.min_entries_per_user);
  c.max_entries_per_user = j.value("max_entries_per_user", c.max_entries_per_user);
  c.emas_per_day = j.value("emas_per_day", c.emas_per_day);
  c.start_date = j.value("start_date", c.start_date);
  c.tz_offset_min = j.value("tz_offset_min", c.tz_offset_min);
  c.android_frac = num("android_frac", c.android_frac);
  c.rho = num("rho", c.rho);
  c.pa_base_mean = num("pa_base_mean", c.pa_base_mean);
  c.pa_base_sd = num("pa_base_sd", c.pa_base_sd);
  c.na_base_mean = num("na_base_mean", c.na_base_mean);
  c.na_base_sd = num("na_base_sd", c.na_base_sd);
  c.innovation_sd = num("innovation_sd", c.innovation_sd);
  c.episode_rate = num("episode_rate", c.episode_rate);
  c.episode_magnitude = num("episode_magnitude", c.episode_magnitude);
  c.na_er_gain = num("na_er_gain", c.na_er_gain);
  c.er_base_min = num("er_base_min", c.er_base_min);
  c.er_base_max = num("er_base_max", c.er_base_max);
  c.er_noise_sd = num("er_noise_sd", c.er_noise_sd);
  c.na_stationary_gain = num("na_stationary_gain", c.na_stationary_gain);
  c.na_walk_gain = num("na_walk_gain", c.na_walk_gain);
  c.na_distance_gain = num("na_distance_gain", c.na_distance_gain);
  c.na_late_screen_gain = num("na_late_screen_gain", c.na_late_screen_gain);
  c.p_free = num("p_free", c.p_free);
  c.p_sleeping = num("p_sleeping", c.p_sleeping);
  c.p_driving = num("p_driving", c.p_driving);
  c.p_meeting = num("p_meeting", c.p_meeting);
  c.screen_guarantee_noise = num("screen_guarantee_noise", c.screen_guarantee_noise);
  c.suppress_slack_min = num("suppress_slack_min", c.suppress_slack_min);
  c.dropout_a = num("dropout_a", c.dropout_a);
  c.dropout_b = num("dropout_b", c.dropout_b);
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// LatentRow
// ---------------------------------------------------------------------------

json LatentRow::to_json() const {
  return {{"user_id", user_id},
          {"entry_index", entry_index},
          {"timestamp", to_iso8601(timestamp)},
          {"pa_latent", pa_latent},
          {"na_latent", na_latent},
          {"er_desire_latent", er_desire_latent},
          {"context", std::string(to_string(context))}};
}

LatentRow LatentRow::from_json(const json& j) {
  LatentRow r;
  r.user_id = j.at("user_id").get<std::string>();
  r.entry_index = j.at("entry_index").get<int>();
  r.timestamp = parse_iso8601(j.at("timestamp").get<std::string>());
  r.pa_latent = j.at("pa_latent").get<double>();
  r.na_latent = j.at("na_latent").get<double>();
  r.er_desire_latent = j.at("er_desire_latent").get<double>();
  r.context = synth_context_from_string(j.at("context").get<std::string>());
  return r;
}

std::vector<LatentRow> load_latents_jsonl(const std::string& path) {
  std::vector<LatentRow> rows;
  for (const auto& j : load_jsonl(path)) rows.push_back(LatentRow::from_json(j));
  return rows;
}

json reference_rule_agent_policy() { return default_rule_agent_policy_json(); }

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

namespace {

constexpr double kSlotWindows[3][2] = {{8.5, 11.0}, {13.0, 16.5}, {18.5, 21.5}};

struct SlotDraw {
  Timestamp t;
  SynthContext context = SynthContext::free_time;
  double pa = 0, na = 0, er = 0;
  bool screen_noise = false;  // free slot left without its guaranteed session
};

Timestamp at_hour(LocalDate date, double hour, int tz) {
  return day_start(date, tz) + static_cast<std::int64_t>(std::llround(hour * 60.0)) * 60;
}

SynthContext draw_context(Rng& rng, const GeneratorConfig& cfg) {
  const double u = rng.uniform01();
  if (u < cfg.p_free) return SynthContext::free_time;
  if (u < cfg.p_free + cfg.p_sleeping) return SynthContext::sleeping;
  if (u < cfg.p_free + cfg.p_sleeping + cfg.p_driving) return SynthContext::driving;
  return SynthContext::meeting;
}

std::string pick(Rng& rng, const std::vector<std::string>& options) {
  return options[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(options.size()) - 1))];
}

struct UserScratch {
  std::vector<SensingEvent> events;
  std::vector<SlotDraw> slots;  // chronological, one per entry
};

void emit(UserScratch& s, const std::string& user, Timestamp t, Modality m, SensingPayload p) {
  SensingEvent e;
  e.user_id = user;
  e.timestamp = t;
  e.modality = m;
  e.payload = std::move(p);
  s.events.push_back(std::move(e));
}

void generate_user(const GeneratorConfig& cfg, const std::string& user_id, Rng& rng,
                   CohortData& out) {
  UserProfile profile;
  profile.user_id = user_id;
  profile.platform = rng.bernoulli(cfg.android_frac) ? Platform::android : Platform::ios;
  profile.tz_offset_min = cfg.tz_offset_min;
  profile.demographics = pick(rng, {"woman in her fifties", "woman in her sixties",
                                    "man in his fifties", "man in his sixties",
                                    "woman in her forties", "man in his seventies"}) +
                         ", " +
                         pick(rng, {"lives with family", "lives alone", "lives with a partner"});
  profile.cancer_history =
      pick(rng, {"breast cancer survivor, past the active-treatment phase",
                 "colon cancer survivor, in routine follow-up",
                 "prostate cancer survivor, in routine follow-up",
                 "lymphoma survivor, several years post-remission",
                 "melanoma survivor, on periodic surveillance"});
  profile.traits = {{"openness", std::round(rng.normal(0, 1) * 100) / 100},
                    {"conscientiousness", std::round(rng.normal(0, 1) * 100) / 100},
                    {"extraversion", std::round(rng.normal(0, 1) * 100) / 100}};

  const int n_entries = rng.uniform_int(cfg.min_entries_per_user, cfg.max_entries_per_user);
  const int n_days = (n_entries + cfg.emas_per_day - 1) / cfg.emas_per_day;
  const LocalDate first_date = parse_date_string(cfg.start_date);
  const int tz = cfg.tz_offset_min;

  double mu_pa = std::clamp(rng.normal(cfg.pa_base_mean, cfg.pa_base_sd), 12.0, 45.0);
  double mu_na = std::clamp(rng.normal(cfg.na_base_mean, cfg.na_base_sd), 5.0, 38.0);
  const double er_base = rng.uniform(cfg.er_base_min, cfg.er_base_max);

  UserScratch scratch;
  double pa_prev = mu_pa, na_prev = mu_na;
  int entries_left = n_entries;

  for (int d = 0; d < n_days; ++d) {
    const LocalDate date = first_date + d;
    const int slots_today = std::min(cfg.emas_per_day, entries_left);
    entries_left -= slots_today;

    // --- pass 1: the day's frame (wake, night sleep, survey slots) --------
    const double wake_hour = rng.uniform(6.3, 7.5);
    const double night_start_hour = rng.uniform(22.3, 23.8);  // previous evening

    std::vector<SlotDraw> today;
    for (int s = 0; s < slots_today; ++s) {
      SlotDraw slot;
      slot.t = at_hour(date, rng.uniform(kSlotWindows[s][0], kSlotWindows[s][1]), tz);
      slot.context = draw_context(rng, cfg);
      double pa = mu_pa + cfg.rho * (pa_prev - mu_pa) + rng.normal(0, cfg.innovation_sd);
      double na = mu_na + cfg.rho * (na_prev - mu_na) + rng.normal(0, cfg.innovation_sd);
      if (rng.bernoulli(cfg.episode_rate)) {
        na += cfg.episode_magnitude;
        pa -= cfg.episode_magnitude / 2.0;
      }
      pa = std::clamp(pa, cfg.schema.pa_min, cfg.schema.pa_max);
      na = std::clamp(na, cfg.schema.na_min, cfg.schema.na_max);
      slot.pa = pa;
      slot.na = na;
      slot.er = std::clamp(er_base + cfg.na_er_gain * (na - mu_na) + rng.normal(0, cfg.er_noise_sd),
                           cfg.schema.er_min, cfg.schema.er_max);
      if (slot.context == SynthContext::free_time) {
        slot.screen_noise = rng.bernoulli(cfg.screen_guarantee_noise);
      }
      pa_prev = pa;
      na_prev = na;
      today.push_back(slot);
    }

    double na_day = mu_na;
    if (!today.empty()) {
      na_day = 0;
      for (const auto& s : today) na_day += s.na;
      na_day /= static_cast<double>(today.size());
    }
    const double na_dev = na_day - mu_na;

    // --- pass 2: baseline behavior --------------------------------------
    const std::size_t day_events_begin = scratch.events.size();

    // Night sleep ending this morning; stamped at the wake moment.
    {
      SleepPayload p;
      p.start = at_hour(date - 1, night_start_hour, tz);
      p.end = at_hour(date, wake_hour, tz);
      emit(scratch, user_id, p.end, Modality::sleep, p);
    }

    const int first_hour = static_cast<int>(std::ceil(wake_hour));
    for (int h = first_hour; h <= 23; ++h) {
      // Screen: most waking hours see one unlock + session; negative days
      // push extra use into the late evening.
      double p_screen = 0.55;
      if (h >= 21) p_screen = std::clamp(p_screen + cfg.na_late_screen_gain * na_dev, 0.05, 0.95);
      if (rng.bernoulli(p_screen)) {
        const double offset_min = rng.uniform(0, 40);
        const Timestamp unlock = at_hour(date, h + offset_min / 60.0, tz);
        emit(scratch, user_id, unlock, Modality::screen, ScreenPayload{ScreenKind::unlock, 0.0});
        emit(scratch, user_id, unlock + 60, Modality::screen,
             ScreenPayload{ScreenKind::session, rng.uniform(3, 25)});
      }

      // Motion: stationary swells and walking shrinks with negative affect.
      const double stationary =
          std::clamp(38.0 + cfg.na_stationary_gain * na_dev + rng.normal(0, 4), 5.0, 60.0);
      emit(scratch, user_id, at_hour(date, h + 10.0 / 60.0, tz), Modality::motion,
           MotionPayload{MotionActivity::stationary, stationary});
      const double walking =
          std::clamp(8.0 - cfg.na_walk_gain * na_dev / 2.0 + rng.normal(0, 3), 0.0, 25.0);
      if (walking > 0.5) {
        emit(scratch, user_id, at_hour(date, h + 35.0 / 60.0, tz), Modality::motion,
             MotionPayload{MotionActivity::walking, walking});
      }
      if (rng.bernoulli(0.08)) {
        emit(scratch, user_id, at_hour(date, h + 50.0 / 60.0, tz), Modality::motion,
             MotionPayload{MotionActivity::running, rng.uniform(5, 20)});
      }

      // Ambient light every other hour.
      if ((h - first_hour) % 2 == 0 && h <= 22) {
        const double lux = (h >= 8 && h <= 18) ? rng.uniform(150, 900) : rng.uniform(5, 120);
        emit(scratch, user_id, at_hour(date, h + rng.uniform(0, 0.5), tz), Modality::light,
             LightPayload{lux});
      }
    }

    // Location fixes through the day; travel shrinks on negative days.
    const double mobility = std::max(0.15, 1.0 - cfg.na_distance_gain * na_dev);
    for (int h = 9; h <= 21; h += 2) {
      GpsPayload p;
      const double p_home = std::clamp(0.45 + 0.02 * na_dev, 0.05, 0.95);
      p.at_home = rng.bernoulli(p_home);
      if (p.at_home) {
        p.displacement_km = rng.uniform(0, 0.3);
        p.cluster_id = 0;
      } else {
        p.displacement_km = rng.uniform(0.5, 4.0) * mobility;
        p.cluster_id = rng.uniform_int(1, 4);
      }
      emit(scratch, user_id, at_hour(date, h + 5.0 / 60.0, tz), Modality::gps, p);
    }

    // App usage exists only on android handsets.
    if (profile.platform == Platform::android) {
      const int n_apps = rng.uniform_int(4, 9);
      for (int k = 0; k < n_apps; ++k) {
        AppUsagePayload p;
        p.category = pick(rng, {"social", "communication", "entertainment", "health",
                                "productivity"});
        p.duration_min = rng.uniform(2, 30);
        emit(scratch, user_id,
             at_hour(date, rng.uniform(static_cast<double>(first_hour), 23.5), tz),
             Modality::app_usage, p);
      }
    }

    // Typing bursts.
    const int n_keyboard = rng.uniform_int(2, 6);
    for (int k = 0; k < n_keyboard; ++k) {
      KeyboardPayload p;
      p.chars = rng.uniform_int(10, 280);
      p.duration_min = rng.uniform(0.5, 4.0);
      emit(scratch, user_id,
           at_hour(date, rng.uniform(static_cast<double>(first_hour), 23.5), tz),
           Modality::keyboard, p);
    }

    // --- pass 3: context injections around each survey -------------------
    for (const auto& slot : today) {
      switch (slot.context) {
        case SynthContext::driving: {
          // Vehicle chunks filling most of the preceding hour, plus a hop in
          // location. Vehicle motion exists nowhere else in the generator.
          for (const int back_min : {40, 32, 24, 16, 10}) {
            emit(scratch, user_id, slot.t - back_min * 60, Modality::motion,
                 MotionPayload{MotionActivity::automotive, 7.0});
          }
          GpsPayload hop;
          hop.at_home = false;
          hop.displacement_km = rng.uniform(6, 18);
          hop.cluster_id = rng.uniform_int(1, 4);
          emit(scratch, user_id, slot.t - 20 * 60, Modality::gps, hop);
          break;
        }
        case SynthContext::sleeping: {
          // A nap that ends minutes before the survey (so the wake is fresh).
          SleepPayload nap;
          nap.end = slot.t - 5 * 60;
          nap.start = nap.end - static_cast<std::int64_t>(rng.uniform(1.2, 2.5) * 3600.0);
          emit(scratch, user_id, nap.end, Modality::sleep, nap);
          break;
        }
        case SynthContext::meeting:
        case SynthContext::free_time:
          break;
      }
    }

    // Phone silence before sleeping/meeting surveys (and the noisy free
    // slots), slightly wider than the detector window so rounding can never
    // bleed an event back inside it.
    const auto suppressed = [&](Timestamp t) {
      for (const auto& slot : today) {
        const bool silent = slot.context == SynthContext::sleeping ||
                            slot.context == SynthContext::meeting || slot.screen_noise;
        if (!silent) continue;
        const Timestamp lo =
            slot.t - static_cast<std::int64_t>((120.0 + cfg.suppress_slack_min) * 60.0);
        if (lo <= t && t < slot.t) return true;
      }
      return false;
    };
    scratch.events.erase(
        std::remove_if(scratch.events.begin() + static_cast<std::ptrdiff_t>(day_events_begin),
                       scratch.events.end(),
                       [&](const SensingEvent& e) {
                         return (e.modality == Modality::screen ||
                                 e.modality == Modality::app_usage ||
                                 e.modality == Modality::keyboard) &&
                                suppressed(e.timestamp);
                       }),
        scratch.events.end());

    // The guaranteed pre-survey session for (non-noisy) free slots, added
    // after suppression so a later silent slot the same day cannot erase it.
    for (const auto& slot : today) {
      if (slot.context != SynthContext::free_time || slot.screen_noise) continue;
      emit(scratch, user_id, slot.t - 26 * 60, Modality::screen,
           ScreenPayload{ScreenKind::unlock, 0.0});
      emit(scratch, user_id, slot.t - 25 * 60, Modality::screen,
           ScreenPayload{ScreenKind::session, rng.uniform(4, 9)});
    }

    for (const auto& slot : today) scratch.slots.push_back(slot);
  }

  // --- labels and entries -------------------------------------------------
  std::vector<double> pa_scores, na_scores, er_scores;
  for (const auto& slot : scratch.slots) {
    pa_scores.push_back(std::round(slot.pa));
    na_scores.push_back(std::round(slot.na));
    er_scores.push_back(std::round(slot.er));
  }
  const std::vector<bool> pa_labels = derive_state_labels(pa_scores);
  const std::vector<bool> na_labels = derive_state_labels(na_scores);
  const std::vector<bool> er_labels = derive_state_labels(er_scores);

  // Negative-affect quartile band per entry (for diary tone and dropout).
  std::vector<double> na_sorted;
  for (const auto& slot : scratch.slots) na_sorted.push_back(slot.na);
  std::sort(na_sorted.begin(), na_sorted.end());
  auto quartile = [&](double q) {
    const auto idx = static_cast<std::size_t>(
        std::floor(q * static_cast<double>(na_sorted.size() - 1)));
    return na_sorted[idx];
  };
  const double q25 = quartile(0.25), q50 = quartile(0.50), q75 = quartile(0.75);

  for (int i = 0; i < static_cast<int>(scratch.slots.size()); ++i) {
    const SlotDraw& slot = scratch.slots[static_cast<std::size_t>(i)];
    EmaEntry entry;
    entry.user_id = user_id;
    entry.timestamp = slot.t;
    entry.pa_score = pa_scores[static_cast<std::size_t>(i)];
    entry.na_score = na_scores[static_cast<std::size_t>(i)];
    entry.er_desire_score = er_scores[static_cast<std::size_t>(i)];

    auto set = [&](std::string_view name, bool value) {
      entry.binary_targets[static_cast<std::size_t>(binary_target_index(name))] = value;
    };
    set("PA_State", pa_labels[static_cast<std::size_t>(i)]);
    set("NA_State", na_labels[static_cast<std::size_t>(i)]);
    set("ER_desire_State", er_labels[static_cast<std::size_t>(i)]);
    set("INT_availability", slot.context == SynthContext::free_time);
    set("happy", slot.pa + rng.normal(0, 2.5) > mu_pa);
    set("cheerful", slot.pa + rng.normal(0, 2.5) > mu_pa + 1.0);
    set("pleased", slot.pa + rng.normal(0, 2.5) > mu_pa - 1.0);
    set("grateful", slot.pa + rng.normal(0, 3.0) > mu_pa - 2.0);
    set("future_outlook", slot.pa - 0.3 * (slot.na - mu_na) + rng.normal(0, 3.0) > mu_pa - 1.0);
    set("interaction_quality",
        (slot.pa - slot.na) + rng.normal(0, 3.0) > (mu_pa - mu_na));
    set("sad", slot.na + rng.normal(0, 2.5) > mu_na + 1.0);
    set("worried", slot.na + rng.normal(0, 2.5) > mu_na);
    set("lonely", slot.na + rng.normal(0, 3.0) > mu_na + 2.0);
    set("afraid", slot.na + rng.normal(0, 3.0) > mu_na + 4.0);
    set("miserable", slot.na + rng.normal(0, 3.0) > mu_na + 5.0);
    set("physical_pain", slot.na + rng.normal(0, 4.0) > mu_na + 6.0);

    // Diary: band by quartile, dropped missing-not-at-random (more negative
    // entries are more likely to skip writing).
    const int band = slot.na <= q25 ? 0 : slot.na <= q50 ? 1 : slot.na <= q75 ? 2 : 3;
    const double p_missing = 1.0 / (1.0 + std::exp(-(cfg.dropout_a + cfg.dropout_b * slot.na)));
    if (!rng.bernoulli(p_missing)) {
      const auto& bank = diary_phrase_bank(band);
      const int a = rng.uniform_int(0, static_cast<int>(bank.size()) - 1);
      int b = rng.uniform_int(0, static_cast<int>(bank.size()) - 2);
      if (b >= a) ++b;
      entry.diary = bank[static_cast<std::size_t>(a)] + " " + bank[static_cast<std::size_t>(b)];
    }

    LatentRow latent;
    latent.user_id = user_id;
    latent.entry_index = i;
    latent.timestamp = slot.t;
    latent.pa_latent = slot.pa;
    latent.na_latent = slot.na;
    latent.er_desire_latent = slot.er;
    latent.context = slot.context;

    out.entries.push_back(std::move(entry));
    out.latents.push_back(std::move(latent));
  }

  std::stable_sort(scratch.events.begin(), scratch.events.end(),
                   [](const SensingEvent& a, const SensingEvent& b) {
                     return a.timestamp < b.timestamp;
                   });
  out.profiles.push_back(std::move(profile));
  out.events.insert(out.events.end(), scratch.events.begin(), scratch.events.end());
}

std::string numbered_id(const char* prefix, int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%s%03d", prefix, i + 1);
  return buf;
}

}  // namespace

CohortData generate_cohort(const GeneratorConfig& config) {
  config.validate();
  CohortData data;
  data.config = config;

  for (int i = 0; i < config.n_users; ++i) {
    data.eval_user_ids.push_back(numbered_id("u", i));
  }
  for (int i = 0; i < config.n_peer_users; ++i) {
    data.training_user_ids.push_back(numbered_id("p", i));
  }
  for (const auto& user_id : data.eval_user_ids) {
    Rng rng(fnv1a64(std::to_string(config.seed) + "/" + user_id));
    generate_user(config, user_id, rng, data);
  }
  for (const auto& user_id : data.training_user_ids) {
    Rng rng(fnv1a64(std::to_string(config.seed) + "/" + user_id));
    generate_user(config, user_id, rng, data);
  }
  return data;
}

json save_cohort(const CohortData& data, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::string profiles_path = dir + "/profiles.jsonl";
  const std::string events_path = dir + "/events.jsonl";
  const std::string ema_path = dir + "/ema.jsonl";
  const std::string latents_path = dir + "/latents.jsonl";

  save_profiles_jsonl(profiles_path, data.profiles);
  save_events_jsonl(events_path, data.events);
  save_ema_jsonl(ema_path, data.entries);
  std::vector<json> latent_rows;
  latent_rows.reserve(data.latents.size());
  for (const auto& r : data.latents) latent_rows.push_back(r.to_json());
  save_jsonl(latents_path, latent_rows);

  int with_diary = 0;
  for (const auto& e : data.entries) {
    if (e.diary) ++with_diary;
  }

  json manifest;
  manifest["format_version"] = 1;
  manifest["config"] = data.config.to_json();
  manifest["counts"] = {{"users", data.profiles.size()},
                        {"events", data.events.size()},
                        {"entries", data.entries.size()},
                        {"entries_with_diary", with_diary},
                        {"latents", data.latents.size()}};
  manifest["eval_user_ids"] = data.eval_user_ids;
  manifest["training_user_ids"] = data.training_user_ids;
  manifest["checksums"] = {{"profiles.jsonl", fnv1a_hex_file(profiles_path)},
                           {"events.jsonl", fnv1a_hex_file(events_path)},
                           {"ema.jsonl", fnv1a_hex_file(ema_path)},
                           {"latents.jsonl", fnv1a_hex_file(latents_path)}};

  std::ofstream out(dir + "/manifest.json");
  if (!out) raise(ErrorCode::config_error, "cannot write manifest in " + dir);
  out << manifest.dump(2) << "\n";
  return manifest;
}

}  // namespace pulse
