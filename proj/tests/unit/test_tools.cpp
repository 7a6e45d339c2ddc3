// Tool surface: per-tool structured payloads against hand-computed fixture
// values, argument validation, dispatch errors, and schema layout.
#include <algorithm>
#include <string>
#include <vector>

#include "checks.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "pulse/retrieval.hpp"
#include "pulse/timestore.hpp"
#include "pulse/tools.hpp"

using namespace pulse;
using fixtures::ts;
using testutil::raises;

namespace {

ToolKit kit_for(const Store& store, const std::string& user, const std::string& iso,
                const PeerIndex* peers = nullptr, ToolConfig cfg = {}) {
  return ToolKit(store, store.open_context(user, ts(iso)), peers, cfg);
}

std::vector<std::string> notes_of(const json& structured) {
  return structured.at("data_notes").get<std::vector<std::string>>();
}

}  // namespace

TEST_CASE("daily summary: single partial day with recency block") {
  Store store = fixtures::mini_store();
  ToolKit kit = kit_for(store, "u001", "2025-03-01T14:00:00Z");
  ToolResponse r = kit.get_daily_summary(1);
  const json& s = r.structured;

  CHECK(s.at("boundary") == "2025-03-01T14:00:00Z");
  CHECK(s.at("boundary_local_hour") == 14.0);
  CHECK(s.at("lookback_days") == 1);
  REQUIRE(s.at("days").size() == 1);
  const json& day = s.at("days")[0];
  CHECK(day.at("date") == "2025-03-01");
  CHECK(day.at("partial") == true);

  const json& agg = day.at("aggregates");
  CHECK(agg.at("sleep_duration_h") == 7.5);
  CHECK(agg.at("sleep_onset_hour") == 23.0);
  CHECK(agg.at("stationary_min") == 42.0);
  CHECK(agg.at("walking_min") == 11.0);
  CHECK(agg.at("running_min") == 8.0);
  CHECK(agg.at("automotive_min") == 0.0);  // 15:40 event is after the boundary
  CHECK(agg.at("screen_total_min") == 35.5);
  CHECK(agg.at("screen_sessions") == 2.0);
  CHECK(agg.at("first_unlock_hour") == 8.08);
  CHECK(agg.at("distance_km") == 2.6);
  CHECK(agg.at("time_at_home_frac") == 0.5);
  CHECK(agg.at("keyboard_chars") == 120.0);
  CHECK(agg.at("light_mean_lux") == 350.0);
  CHECK_FALSE(agg.contains("app_total_min"));
  CHECK_FALSE(agg.contains("app_min_by_category"));

  // Cross-check every emitted metric against the store's own aggregation.
  DailyAggregates direct = store.daily_aggregates(store.open_context("u001", ts("2025-03-01T14:00:00Z")),
                                                  parse_date_string("2025-03-01"));
  for (int f = 0; f < kNumDailyFeatures; ++f) {
    const std::string name(daily_feature_names()[static_cast<std::size_t>(f)]);
    auto v = direct.feature(f);
    if (v) {
      REQUIRE(agg.contains(name));
      CHECK(agg.at(name).get<double>() == doctest::Approx(*v).epsilon(1e-9));
    } else {
      CHECK_FALSE(agg.contains(name));
    }
  }

  const json& rec = day.at("recency");
  CHECK(rec.at("minutes_since_last_screen_event") == 49.0);  // 13:11 -> 14:00
  CHECK(rec.at("minutes_since_last_unlock") == 50.0);        // 13:10 -> 14:00
  CHECK(rec.at("automotive_min_last_60") == 0.0);
  CHECK(rec.at("minutes_since_last_sleep_end") == 450.0);  // 06:30 -> 14:00

  CHECK(s.at("trends").empty());
  auto notes = notes_of(s);
  REQUIRE(notes.size() == 2);
  CHECK(notes[0] == "day 2025-03-01 covers only hours before the survey");
  CHECK(notes[1] == "app_usage: unavailable_platform");
  CHECK(r.data_notes == notes);
  CHECK(r.tool_name == "get_daily_summary");
  CHECK_FALSE(r.rendered.empty());
}

TEST_CASE("daily summary: empty prior day yields no trend rows") {
  Store store = fixtures::mini_store();
  ToolResponse r = kit_for(store, "u001", "2025-03-01T14:00:00Z").get_daily_summary(2);
  REQUIRE(r.structured.at("days").size() == 2);
  const json& prior = r.structured.at("days")[1];
  CHECK(prior.at("date") == "2025-02-28");
  CHECK(prior.at("partial") == false);
  CHECK(prior.at("aggregates").empty());
  CHECK_FALSE(prior.contains("recency"));  // only the most recent day carries it
  CHECK(r.structured.at("trends").empty());
}

TEST_CASE("daily summary: trends compare today against the prior-day mean") {
  Store store = fixtures::multiday_store();
  ToolResponse r = kit_for(store, "m001", "2025-03-01T14:00:00Z").get_daily_summary(3);
  const json& s = r.structured;
  REQUIRE(s.at("days").size() == 3);
  CHECK(s.at("days")[0].at("date") == "2025-03-01");
  CHECK(s.at("days")[1].at("date") == "2025-02-28");
  CHECK(s.at("days")[2].at("date") == "2025-02-27");

  // No sleep stream at all, so only screen and distance produce trend rows.
  REQUIRE(s.at("trends").size() == 2);
  const json& screen = s.at("trends")[0];
  CHECK(screen.at("metric") == "screen_total_min");
  CHECK(screen.at("current") == 20.0);
  CHECK(screen.at("prior_mean") == 20.0);
  CHECK(screen.at("pct_change") == 0.0);
  const json& dist = s.at("trends")[1];
  CHECK(dist.at("metric") == "distance_km");
  CHECK(dist.at("current") == 0.2);
  CHECK(dist.at("prior_mean") == 2.6);  // quiet 0.2 and active 5.0
  CHECK(dist.at("pct_change") == -92.31);

  auto notes = notes_of(s);
  REQUIRE(notes.size() == 5);
  CHECK(notes[0] == "day 2025-03-01 covers only hours before the survey");
  CHECK(notes[1] == "app_usage: unavailable_platform");
  CHECK(notes[2] == "keyboard: unavailable_sparse");
  CHECK(notes[3] == "sleep: unavailable_sparse");
  CHECK(notes[4] == "light: unavailable_sparse");
}

TEST_CASE("daily summary: lookback bounds") {
  Store store = fixtures::mini_store();
  ToolKit kit = kit_for(store, "u001", "2025-03-01T14:00:00Z");
  CHECK(raises(ErrorCode::invalid_argument, [&] { kit.get_daily_summary(0); }));
  CHECK(raises(ErrorCode::invalid_argument, [&] { kit.get_daily_summary(8); }));
  try {
    kit.get_daily_summary(0);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("lookback_days must be in [1, 7], got 0") != std::string::npos);
  }
}

TEST_CASE("timeline: segments clip at the survey moment") {
  Store store = fixtures::mini_store();
  ToolResponse r = kit_for(store, "u001", "2025-03-01T14:00:00Z").get_behavioral_timeline(6);
  const json& s = r.structured;
  CHECK(s.at("date") == "2025-03-01");
  CHECK(s.at("segment_hours") == 6);
  CHECK(s.at("boundary_local_hour") == 14.0);
  REQUIRE(s.at("segments").size() == 3);

  const json& s0 = s.at("segments")[0];
  CHECK(s0.at("start_hour") == 0.0);
  CHECK(s0.at("end_hour") == 6.0);
  CHECK(s0.at("clipped") == false);
  CHECK(s0.at("dominant_activity") == "none");
  CHECK(s0.at("motion_min").is_object());
  CHECK(s0.at("motion_min").empty());
  CHECK(s0.at("screen_min") == 0.0);
  CHECK(s0.at("screen_sessions") == 0);
  CHECK(s0.at("unlocks") == 0);
  CHECK(s0.at("highlights").empty());

  const json& s1 = s.at("segments")[1];
  CHECK(s1.at("start_hour") == 6.0);
  CHECK(s1.at("end_hour") == 12.0);
  CHECK(s1.at("dominant_activity") == "stationary");  // 42 min vs 11 walking
  CHECK(s1.at("motion_min").at("stationary") == 42.0);
  CHECK(s1.at("motion_min").at("walking") == 11.0);
  CHECK(s1.at("motion_min").at("running") == 0.0);
  CHECK(s1.at("motion_min").at("automotive") == 0.0);
  CHECK(s1.at("screen_min") == 12.5);
  CHECK(s1.at("screen_sessions") == 1);
  CHECK(s1.at("unlocks") == 1);
  REQUIRE(s1.at("highlights").size() == 3);
  CHECK(s1.at("highlights")[0].at("kind") == "sleep_end");
  CHECK(s1.at("highlights")[0].at("hour") == 6.5);
  CHECK(s1.at("highlights")[0].at("sleep_h") == 7.5);
  CHECK(s1.at("highlights")[1].at("kind") == "first_unlock");
  CHECK(s1.at("highlights")[1].at("hour") == 8.08);
  CHECK(s1.at("highlights")[2].at("kind") == "travel");
  CHECK(s1.at("highlights")[2].at("km") == 0.2);

  const json& s2 = s.at("segments")[2];
  CHECK(s2.at("start_hour") == 12.0);
  CHECK(s2.at("end_hour") == 14.0);
  CHECK(s2.at("clipped") == true);
  CHECK(s2.at("dominant_activity") == "running");
  CHECK(s2.at("screen_min") == 23.0);
  CHECK(s2.at("unlocks") == 1);
  REQUIRE(s2.at("highlights").size() == 2);
  CHECK(s2.at("highlights")[0].at("kind") == "first_unlock");
  CHECK(s2.at("highlights")[0].at("hour") == 13.17);
  CHECK(s2.at("highlights")[1].at("kind") == "travel");
  CHECK(s2.at("highlights")[1].at("km") == 2.4);
}

TEST_CASE("timeline: hours are expressed in the user's local clock") {
  Store store = fixtures::mini_store();
  // 18:00 UTC at offset -300 is 13:00 local, so five 3h segments.
  ToolResponse r = kit_for(store, "a001", "2025-03-01T18:00:00Z").get_behavioral_timeline(3);
  const json& s = r.structured;
  CHECK(s.at("boundary_local_hour") == 13.0);
  REQUIRE(s.at("segments").size() == 5);
  CHECK(s.at("segments")[4].at("end_hour") == 13.0);
  CHECK(s.at("segments")[4].at("clipped") == true);

  const json& seg = s.at("segments")[3];  // local [9, 12)
  CHECK(seg.at("unlocks") == 1);
  CHECK(seg.at("screen_min") == 10.0);
  CHECK(seg.at("dominant_activity") == "stationary");
  REQUIRE(seg.at("highlights").size() == 1);
  CHECK(seg.at("highlights")[0].at("kind") == "first_unlock");
  CHECK(seg.at("highlights")[0].at("hour") == 9.92);
}

TEST_CASE("timeline: segment width bounds") {
  Store store = fixtures::mini_store();
  ToolKit kit = kit_for(store, "u001", "2025-03-01T14:00:00Z");
  CHECK(raises(ErrorCode::invalid_argument, [&] { kit.get_behavioral_timeline(0); }));
  CHECK(raises(ErrorCode::invalid_argument, [&] { kit.get_behavioral_timeline(7); }));
}

TEST_CASE("sensing query: hourly motion buckets with boundary clipping") {
  Store store = fixtures::mini_store();
  ToolResponse r = kit_for(store, "u001", "2025-03-01T14:00:00Z")
                       .query_sensing(Modality::motion, 6, 24, Granularity::hourly);
  const json& s = r.structured;
  CHECK(s.at("modality") == "motion");
  CHECK(s.at("granularity") == "hourly");
  CHECK(s.at("window").at("start") == "2025-03-01T08:00:00Z");
  CHECK(s.at("window").at("end") == "2025-03-01T14:00:00Z");
  CHECK(s.at("window").at("requested_end") == "2025-03-02T08:00:00Z");
  CHECK(s.at("window").at("clipped") == true);
  CHECK(s.at("status") == "available");
  auto notes = notes_of(s);
  REQUIRE(notes.size() == 1);
  CHECK(notes[0] == "window clipped at the survey boundary");

  REQUIRE(s.at("buckets").size() == 6);
  const json& b1 = s.at("buckets")[1];  // [09:00, 10:00)
  CHECK(b1.at("start") == "2025-03-01T09:00:00Z");
  CHECK(b1.at("end") == "2025-03-01T10:00:00Z");
  CHECK(b1.at("n_events") == 2);
  CHECK(b1.at("stationary_min") == 42.0);
  CHECK(b1.at("walking_min") == 11.0);
  CHECK(b1.at("running_min") == 0.0);
  CHECK(b1.at("automotive_min") == 0.0);
  CHECK(s.at("buckets")[4].at("running_min") == 8.0);  // [12:00, 13:00)
  CHECK(s.at("buckets")[0].at("n_events") == 0);
  CHECK(s.at("buckets")[5].at("n_events") == 0);
}

TEST_CASE("sensing query: daily buckets split on local midnight") {
  Store store = fixtures::mini_store();
  ToolResponse r = kit_for(store, "a001", "2025-03-01T18:00:00Z")
                       .query_sensing(Modality::app_usage, 24, 24, Granularity::daily);
  const json& s = r.structured;
  CHECK(s.at("window").at("clipped") == false);  // requested end equals the boundary
  CHECK(s.at("status") == "available");
  REQUIRE(s.at("buckets").size() == 2);

  const json& feb = s.at("buckets")[0];
  CHECK(feb.at("date") == "2025-02-28");
  CHECK(feb.at("start") == "2025-02-28T18:00:00Z");
  CHECK(feb.at("end") == "2025-03-01T05:00:00Z");  // local midnight at UTC-5
  CHECK(feb.at("n_events") == 0);
  CHECK(feb.at("app_min") == 0.0);
  CHECK_FALSE(feb.contains("top_category"));

  const json& mar = s.at("buckets")[1];
  CHECK(mar.at("date") == "2025-03-01");
  CHECK(mar.at("n_events") == 2);
  CHECK(mar.at("app_min") == 37.0);
  CHECK(mar.at("top_category") == "social");
}

TEST_CASE("sensing query: per-modality bucket fields") {
  Store store = fixtures::mini_store();
  ToolKit kit = kit_for(store, "u001", "2025-03-01T14:00:00Z");

  ToolResponse gps = kit.query_sensing(Modality::gps, 6, 6, Granularity::hourly);
  CHECK(gps.structured.at("buckets")[1].at("distance_km") == 0.2);
  CHECK(gps.structured.at("buckets")[1].at("at_home_frac") == 1.0);
  CHECK(gps.structured.at("buckets")[5].at("distance_km") == 2.4);
  CHECK(gps.structured.at("buckets")[5].at("at_home_frac") == 0.0);
  CHECK_FALSE(gps.structured.at("buckets")[0].contains("at_home_frac"));

  ToolResponse sleep = kit.query_sensing(Modality::sleep, 8, 2, Granularity::hourly);
  CHECK(sleep.structured.at("buckets")[0].at("episodes") == 1);
  CHECK(sleep.structured.at("buckets")[0].at("sleep_h") == 7.5);
  CHECK(sleep.structured.at("buckets")[1].at("episodes") == 0);

  ToolResponse key = kit.query_sensing(Modality::keyboard, 4, 1, Granularity::hourly);
  CHECK(key.structured.at("buckets")[0].at("chars") == 120.0);

  ToolResponse light = kit.query_sensing(Modality::light, 4, 1, Granularity::hourly);
  CHECK(light.structured.at("buckets")[0].at("mean_lux") == 350.0);
}

TEST_CASE("sensing query: unavailable modality reports status and no buckets") {
  Store store = fixtures::mini_store();
  ToolResponse r = kit_for(store, "u001", "2025-03-01T14:00:00Z")
                       .query_sensing(Modality::app_usage, 6, 6, Granularity::hourly);
  CHECK(r.structured.at("status") == "unavailable_platform");
  CHECK(r.structured.at("buckets").empty());
  auto notes = notes_of(r.structured);
  CHECK(std::find(notes.begin(), notes.end(), "app_usage: unavailable_platform") != notes.end());
}

TEST_CASE("sensing query: window bounds") {
  Store store = fixtures::mini_store();
  ToolKit kit = kit_for(store, "u001", "2025-03-01T14:00:00Z");
  auto q = [&](int before, int dur) {
    kit.query_sensing(Modality::motion, before, dur, Granularity::hourly);
  };
  CHECK(raises(ErrorCode::invalid_argument, [&] { q(0, 6); }));
  CHECK(raises(ErrorCode::invalid_argument, [&] { q(49, 6); }));
  CHECK(raises(ErrorCode::invalid_argument, [&] { q(6, 0); }));
  CHECK(raises(ErrorCode::invalid_argument, [&] { q(6, 25); }));
  try {
    q(0, 6);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("hours_before must be in [1, 48], got 0") != std::string::npos);
  }
}

TEST_CASE("raw events: chronological, user id stripped") {
  Store store = fixtures::mini_store();
  ToolResponse r =
      kit_for(store, "u001", "2025-03-01T14:00:00Z").query_raw_events(Modality::motion, 6, 6);
  const json& s = r.structured;
  CHECK(s.at("n_total") == 3);
  CHECK(s.at("truncated") == false);
  REQUIRE(s.at("events").size() == 3);
  CHECK(s.at("events")[0].at("timestamp") == "2025-03-01T09:10:00Z");
  CHECK(s.at("events")[0].at("activity") == "stationary");
  CHECK(s.at("events")[2].at("timestamp") == "2025-03-01T12:50:00Z");
  for (const auto& ev : s.at("events")) CHECK_FALSE(ev.contains("user_id"));
}

TEST_CASE("raw events: cap keeps the earliest events and says so") {
  Store store = fixtures::mini_store();
  ToolConfig cfg;
  cfg.max_raw_events = 2;
  ToolResponse r = kit_for(store, "u001", "2025-03-01T14:00:00Z", nullptr, cfg)
                       .query_raw_events(Modality::motion, 6, 6);
  CHECK(r.structured.at("n_total") == 3);
  CHECK(r.structured.at("truncated") == true);
  REQUIRE(r.structured.at("events").size() == 2);
  CHECK(r.structured.at("events")[1].at("timestamp") == "2025-03-01T09:35:00Z");
  auto notes = notes_of(r.structured);
  CHECK(std::find(notes.begin(), notes.end(), "truncated to first 2 of 3 events") != notes.end());
}

TEST_CASE("raw events: unavailable modality") {
  Store store = fixtures::mini_store();
  ToolResponse r =
      kit_for(store, "u001", "2025-03-01T14:00:00Z").query_raw_events(Modality::app_usage, 6, 6);
  CHECK(r.structured.at("status") == "unavailable_platform");
  CHECK(r.structured.at("n_total") == 0);
  CHECK(r.structured.at("events").empty());
}

TEST_CASE("baseline comparison: z against the user's prior days") {
  Store store = fixtures::multiday_store();
  ToolKit kit = kit_for(store, "m001", "2025-03-01T14:00:00Z");

  SUBCASE("alternating metric gives mean 35, sd 25") {
    ToolResponse r = kit.compare_to_baseline("walking_min", std::nullopt);
    const json& s = r.structured;
    CHECK(s.at("metric") == "walking_min");
    CHECK(s.at("date") == "2025-03-01");
    CHECK(s.at("current") == 10.0);
    CHECK(s.at("baseline").at("n_days") == 4);
    CHECK(s.at("baseline").at("mean") == 35.0);
    CHECK(s.at("baseline").at("sd") == 25.0);
    CHECK(s.at("insufficient_baseline") == false);
    CHECK(s.at("no_variation") == false);
    CHECK(s.at("z") == -1.0);
  }
  SUBCASE("constant metric flags no_variation and omits z") {
    ToolResponse r = kit.compare_to_baseline("stationary_min", std::nullopt);
    CHECK(r.structured.at("current") == 60.0);
    CHECK(r.structured.at("no_variation") == true);
    CHECK_FALSE(r.structured.contains("z"));
    auto notes = notes_of(r.structured);
    CHECK(std::find(notes.begin(), notes.end(),
                    "baseline has no variation; deviation is undefined") != notes.end());
  }
  SUBCASE("absent metric: null current, zero baseline days") {
    ToolResponse r = kit.compare_to_baseline("keyboard_chars", std::nullopt);
    CHECK(r.structured.at("current").is_null());
    CHECK(r.structured.at("baseline").at("n_days") == 0);
    CHECK(r.structured.at("insufficient_baseline") == true);
    CHECK_FALSE(r.structured.at("baseline").contains("mean"));
  }
  SUBCASE("explicit earlier date shrinks the baseline below the minimum") {
    ToolResponse r = kit.compare_to_baseline("walking_min", parse_date_string("2025-02-27"));
    CHECK(r.structured.at("current") == 60.0);
    CHECK(r.structured.at("baseline").at("n_days") == 2);
    CHECK(r.structured.at("insufficient_baseline") == true);
    CHECK_FALSE(r.structured.contains("z"));
  }
  SUBCASE("date after the survey day is refused") {
    CHECK(raises(ErrorCode::boundary_violation,
                 [&] { kit.compare_to_baseline("walking_min", parse_date_string("2025-03-02")); }));
  }
  SUBCASE("unknown metric name") {
    CHECK(raises(ErrorCode::not_found, [&] { kit.compare_to_baseline("bogus", std::nullopt); }));
  }
}

TEST_CASE("receptivity history: availability outcomes only, no emotion fields") {
  Store store = fixtures::multiday_store();
  ToolKit kit = kit_for(store, "m001", "2025-03-01T14:00:00Z");

  SUBCASE("full lookback covers the nine prior surveys") {
    ToolResponse r = kit.get_receptivity_history(14);
    const json& s = r.structured;
    CHECK(s.at("lookback_days") == 14);
    CHECK(s.at("window").at("start") == "2025-02-15T14:00:00Z");
    CHECK(s.at("window").at("end") == "2025-03-01T14:00:00Z");
    CHECK(s.at("n") == 9);
    CHECK(s.at("availability_rate") == 0.44);  // entries 1,3,5,7 of 9
    REQUIRE(s.at("entries").size() == 9);

    const json& first = s.at("entries")[0];
    CHECK(first.at("timestamp") == "2025-02-25T09:00:00Z");
    CHECK(first.at("available") == false);
    CHECK(first.at("activity_index") == 0.5);  // active day: 60 of 120 min moving
    CHECK(first.size() == 3);                  // nothing else leaks into the row

    CHECK(s.at("entries")[2].at("activity_index") == 0.14);  // quiet day: 10 of 70
    CHECK(s.at("entries")[1].at("available") == true);
    for (const auto& row : s.at("entries")) {
      CHECK_FALSE(row.contains("pa_score"));
      CHECK_FALSE(row.contains("na_score"));
      CHECK_FALSE(row.contains("er_desire_score"));
    }
  }
  SUBCASE("window start is inclusive") {
    ToolResponse r = kit.get_receptivity_history(1);
    CHECK(r.structured.at("n") == 2);  // Feb 28 14:00 sits exactly on the start
    CHECK(r.structured.at("entries")[0].at("timestamp") == "2025-02-28T14:00:00Z");
    CHECK(r.structured.at("availability_rate") == 0.5);
  }
  SUBCASE("no prior surveys in window") {
    Store mini = fixtures::mini_store();
    ToolResponse r = kit_for(mini, "u001", "2025-03-01T09:00:00Z").get_receptivity_history(7);
    CHECK(r.structured.at("n") == 0);
    CHECK(r.structured.at("availability_rate").is_null());
    auto notes = notes_of(r.structured);
    CHECK(std::find(notes.begin(), notes.end(), "no prior surveys in the lookback window") !=
          notes.end());
  }
  SUBCASE("lookback bounds") {
    CHECK(raises(ErrorCode::invalid_argument, [&] { kit.get_receptivity_history(0); }));
    CHECK(raises(ErrorCode::invalid_argument, [&] { kit.get_receptivity_history(15); }));
  }
}

TEST_CASE("similar days: matching regime days rank first, newest breaking ties") {
  Store store = fixtures::multiday_store();
  ToolKit kit = kit_for(store, "m001", "2025-03-01T14:00:00Z");
  ToolResponse r = kit.find_similar_days(2);
  const json& s = r.structured;
  CHECK(s.at("query_date") == "2025-03-01");
  CHECK(s.at("k") == 2);
  CHECK(s.at("n_eligible") == 4);
  REQUIRE(s.at("results").size() == 2);

  // Today is a quiet day; both quiet prior days match it exactly, so the
  // newer one wins the tie.
  const json& top = s.at("results")[0];
  CHECK(top.at("date") == "2025-02-28");
  CHECK(top.at("similarity") == 1.0);
  CHECK(top.at("n_emas") == 2);
  CHECK(top.at("outcomes").at("pa_mean") == 26.5);
  CHECK(top.at("outcomes").at("na_mean") == 16.5);
  CHECK(top.at("outcomes").at("er_desire_mean") == 6.5);
  // Consecutive alternating label patterns never agree, so no majority.
  for (const auto& name : binary_target_names()) {
    CHECK(top.at("outcomes").at("binary_targets").at(std::string(name)) == false);
  }
  CHECK(s.at("results")[1].at("date") == "2025-02-26");
  CHECK(s.at("results")[1].at("similarity") == 1.0);

  SUBCASE("k larger than the pool returns everything, opposite regime last") {
    ToolResponse all = kit.find_similar_days(10);
    REQUIRE(all.structured.at("results").size() == 4);
    CHECK(all.structured.at("results")[2].at("similarity") == -1.0);
    CHECK(all.structured.at("results")[3].at("similarity") == -1.0);
    CHECK(all.structured.at("results")[2].at("date") == "2025-02-27");
    CHECK(all.structured.at("results")[3].at("date") == "2025-02-25");
  }
  SUBCASE("k must be positive") {
    CHECK(raises(ErrorCode::invalid_argument, [&] { kit.find_similar_days(0); }));
  }
}

TEST_CASE("similar days: first instrumented day has no eligible history") {
  Store store = fixtures::mini_store();
  ToolResponse r = kit_for(store, "u001", "2025-03-01T14:00:00Z").find_similar_days(3);
  CHECK(r.structured.at("n_eligible") == 0);
  CHECK(r.structured.at("results").empty());
  auto notes = notes_of(r.structured);
  CHECK(std::find(notes.begin(), notes.end(), "no eligible prior days") != notes.end());
}

TEST_CASE("peer cases: text and sensing spaces") {
  Store store = fixtures::mini_store();
  PeerIndex index = build_peer_index(store, {"p001", "p002"}, {"u001", "a001"});
  ToolKit kit = kit_for(store, "u001", "2025-03-01T14:00:00Z", &index);

  SUBCASE("text query surfaces the overlapping diary") {
    ToolResponse r = kit.find_peer_cases(PeerSpace::text, "calm morning walk in the park", 3);
    const json& s = r.structured;
    CHECK(s.at("space") == "text");
    CHECK(s.at("k") == 3);
    CHECK(s.at("n_candidates") == 6);
    REQUIRE(s.at("results").size() == 3);
    const json& top = s.at("results")[0];
    CHECK(top.at("user_id") == "p001");
    CHECK(top.at("entry_ref") == "p001#0");
    CHECK(top.at("similarity").get<double>() > s.at("results")[1].at("similarity").get<double>());
    CHECK(top.at("outcomes").at("pa_score") == 32.0);
    CHECK(top.at("outcomes").at("na_score") == 8.0);
    CHECK(top.at("outcomes").at("er_desire_score") == 3.0);
    CHECK(top.at("outcomes").at("binary_targets").at("PA_State") == true);
    const std::string snippet = top.at("diary_snippet").get<std::string>();
    CHECK(snippet.rfind("calm walk in the park", 0) == 0);
  }
  SUBCASE("sensing ranking matches the retrieval layer directly") {
    ToolResponse r = kit.find_peer_cases(PeerSpace::sensing, std::nullopt, 2);
    AccessContext ctx = store.open_context("u001", ts("2025-03-01T14:00:00Z"));
    Fingerprint q = make_fingerprint(store.daily_aggregates(ctx, parse_date_string("2025-03-01")),
                                     index.stats);
    auto ranked = rank_peers(index, q, "u001", 2);
    REQUIRE(r.structured.at("results").size() == ranked.size());
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      const json& row = r.structured.at("results")[i];
      CHECK(row.at("entry_ref") == ranked[i].entry->entry_ref);
      CHECK(row.at("similarity").get<double>() ==
            doctest::Approx(ranked[i].similarity).epsilon(1e-6));
      CHECK_FALSE(row.contains("diary_snippet"));  // sensing mode carries no text
    }
  }
  SUBCASE("query sharing no vocabulary still answers, with a note") {
    ToolResponse r = kit.find_peer_cases(PeerSpace::text, "zzzz qqqq", 2);
    auto notes = notes_of(r.structured);
    CHECK(std::find(notes.begin(), notes.end(),
                    "query shares no vocabulary with the peer corpus") != notes.end());
    REQUIRE(r.structured.at("results").size() == 2);
    CHECK(r.structured.at("results")[0].at("similarity") == 0.0);
    CHECK(r.structured.at("results")[0].at("entry_ref") == "p001#0");  // tie -> ref order
  }
  SUBCASE("text mode requires query text") {
    CHECK(raises(ErrorCode::invalid_argument,
                 [&] { kit.find_peer_cases(PeerSpace::text, std::nullopt, 3); }));
    CHECK(raises(ErrorCode::invalid_argument,
                 [&] { kit.find_peer_cases(PeerSpace::text, std::string(), 3); }));
  }
  SUBCASE("k must be positive") {
    CHECK(raises(ErrorCode::invalid_argument,
                 [&] { kit.find_peer_cases(PeerSpace::sensing, std::nullopt, 0); }));
  }
}

TEST_CASE("peer cases: without a mounted index the tool is unavailable") {
  Store store = fixtures::mini_store();
  ToolKit kit = kit_for(store, "u001", "2025-03-01T14:00:00Z");
  CHECK(raises(ErrorCode::unavailable,
               [&] { kit.find_peer_cases(PeerSpace::text, std::string("calm"), 3); }));
}

TEST_CASE("schemas: eight tools in a fixed order with validation metadata") {
  ToolConfig cfg;
  auto schemas = ToolKit::schemas(cfg);
  REQUIRE(schemas.size() == 8);
  const char* expected[] = {"get_daily_summary",    "get_behavioral_timeline",
                            "query_sensing",        "query_raw_events",
                            "compare_to_baseline",  "get_receptivity_history",
                            "find_similar_days",    "find_peer_cases"};
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(schemas[i].name == expected[i]);
    CHECK(schemas[i].input_schema.at("type") == "object");
    CHECK(schemas[i].input_schema.contains("properties"));
    CHECK(schemas[i].input_schema.contains("required"));
    CHECK_FALSE(schemas[i].description.empty());
  }

  auto required_of = [&](std::size_t i) {
    return schemas[i].input_schema.at("required").get<std::vector<std::string>>();
  };
  CHECK(required_of(0).empty());
  CHECK(required_of(2) ==
        std::vector<std::string>{"modality", "hours_before", "duration_hours", "granularity"});
  CHECK(required_of(3) == std::vector<std::string>{"modality", "hours_before", "duration_hours"});
  CHECK(required_of(4) == std::vector<std::string>{"metric"});
  CHECK(required_of(7) == std::vector<std::string>{"space"});

  const json& lookback = schemas[0].input_schema.at("properties").at("lookback_days");
  CHECK(lookback.at("type") == "integer");
  CHECK(lookback.at("minimum") == 1);
  CHECK(lookback.at("maximum") == 7);
  CHECK(lookback.at("default") == 1);
  CHECK(schemas[5].input_schema.at("properties").at("lookback_days").at("maximum") == 14);
  CHECK(schemas[5].input_schema.at("properties").at("lookback_days").at("default") == 7);

  const json& modality = schemas[2].input_schema.at("properties").at("modality");
  CHECK(modality.at("enum").size() == kNumModalities);
  CHECK(modality.at("enum")[0] == "motion");

  // Config values surface in the schema text and defaults.
  CHECK(schemas[3].description.find("capped at 200") != std::string::npos);
  CHECK(schemas[7].input_schema.at("properties").at("k").at("default") == 5);
  ToolConfig custom;
  custom.max_raw_events = 2;
  custom.default_k = 9;
  auto custom_schemas = ToolKit::schemas(custom);
  CHECK(custom_schemas[3].description.find("capped at 2") != std::string::npos);
  CHECK(custom_schemas[7].input_schema.at("properties").at("k").at("default") == 9);
}

TEST_CASE("dispatch: named calls route with defaults applied") {
  Store store = fixtures::mini_store();
  PeerIndex index = build_peer_index(store, {"p001", "p002"}, {"u001", "a001"});
  ToolKit kit = kit_for(store, "u001", "2025-03-01T14:00:00Z", &index);

  CHECK(kit.call("get_daily_summary", json::object()).structured.dump() ==
        kit.get_daily_summary(1).structured.dump());
  CHECK(kit.call("get_daily_summary", json()).structured.dump() ==
        kit.get_daily_summary(1).structured.dump());
  CHECK(kit.call("get_behavioral_timeline", json::object()).structured.dump() ==
        kit.get_behavioral_timeline(3).structured.dump());
  CHECK(kit.call("get_receptivity_history", json::object()).structured.dump() ==
        kit.get_receptivity_history(7).structured.dump());
  CHECK(kit.call("find_similar_days", json::object()).structured.dump() ==
        kit.find_similar_days(3).structured.dump());
  // Peer search defaults k to the configured value.
  CHECK(kit.call("find_peer_cases", {{"space", "sensing"}}).structured.at("k") == 5);

  json args = {{"modality", "motion"},
               {"hours_before", 6},
               {"duration_hours", 6},
               {"granularity", "hourly"}};
  CHECK(kit.call("query_sensing", args).structured.dump() ==
        kit.query_sensing(Modality::motion, 6, 6, Granularity::hourly).structured.dump());
  CHECK(kit.call("query_raw_events", {{"modality", "motion"}, {"hours_before", 6}, {"duration_hours", 6}})
            .structured.dump() ==
        kit.query_raw_events(Modality::motion, 6, 6).structured.dump());
  CHECK(kit.call("compare_to_baseline", {{"metric", "walking_min"}}).structured.dump() ==
        kit.compare_to_baseline("walking_min", std::nullopt).structured.dump());
  CHECK(kit.call("compare_to_baseline", {{"metric", "walking_min"}, {"date", "2025-03-01"}})
            .structured.at("date") == "2025-03-01");
}

TEST_CASE("dispatch: argument validation") {
  Store store = fixtures::mini_store();
  ToolKit kit = kit_for(store, "u001", "2025-03-01T14:00:00Z");
  auto msg_of = [](auto fn) {
    try {
      fn();
    } catch (const Error& e) {
      return std::string(e.what());
    }
    return std::string();
  };

  CHECK(raises(ErrorCode::not_found, [&] { kit.call("no_such_tool", json::object()); }));
  CHECK(msg_of([&] { kit.call("no_such_tool", json::object()); }).find("unknown tool") !=
        std::string::npos);

  CHECK(raises(ErrorCode::invalid_argument, [&] { kit.call("get_daily_summary", json::array()); }));
  CHECK(raises(ErrorCode::invalid_argument, [&] { kit.call("get_daily_summary", json("x")); }));

  CHECK(raises(ErrorCode::invalid_argument,
               [&] { kit.call("get_daily_summary", {{"bogus", 1}}); }));
  CHECK(msg_of([&] { kit.call("get_daily_summary", {{"bogus", 1}}); }).find("unknown argument 'bogus'") !=
        std::string::npos);

  CHECK(raises(ErrorCode::invalid_argument,
               [&] { kit.call("get_daily_summary", {{"lookback_days", "3"}}); }));
  CHECK(raises(ErrorCode::invalid_argument,
               [&] { kit.call("get_daily_summary", {{"lookback_days", 2.5}}); }));
  CHECK(raises(ErrorCode::invalid_argument,
               [&] { kit.call("get_daily_summary", {{"lookback_days", true}}); }));

  // Missing required arguments.
  CHECK(raises(ErrorCode::invalid_argument, [&] {
    kit.call("query_sensing", {{"modality", "motion"}, {"duration_hours", 6}, {"granularity", "hourly"}});
  }));
  CHECK(msg_of([&] {
          kit.call("query_sensing",
                   {{"modality", "motion"}, {"duration_hours", 6}, {"granularity", "hourly"}});
        }).find("missing required argument 'hours_before'") != std::string::npos);

  // Enum-like string arguments.
  CHECK(raises(ErrorCode::invalid_argument, [&] {
    kit.call("query_sensing",
             {{"modality", "foo"}, {"hours_before", 6}, {"duration_hours", 6}, {"granularity", "hourly"}});
  }));
  CHECK(raises(ErrorCode::invalid_argument, [&] {
    kit.call("query_sensing", {{"modality", "motion"},
                               {"hours_before", 6},
                               {"duration_hours", 6},
                               {"granularity", "weekly"}});
  }));
  CHECK(raises(ErrorCode::invalid_argument,
               [&] { kit.call("compare_to_baseline", {{"metric", "bogus"}}); }));
  CHECK(msg_of([&] { kit.call("compare_to_baseline", {{"metric", "bogus"}}); })
            .find("unknown metric 'bogus'") != std::string::npos);
  CHECK(raises(ErrorCode::parse_error,
               [&] { kit.call("compare_to_baseline", {{"metric", "walking_min"}, {"date", "03/01"}}); }));
  CHECK(raises(ErrorCode::invalid_argument,
               [&] { kit.call("find_peer_cases", {{"space", "both"}}); }));
}

TEST_CASE("tool responses serialize losslessly and mirror their notes") {
  Store store = fixtures::mini_store();
  ToolKit kit = kit_for(store, "u001", "2025-03-01T14:00:00Z");
  ToolResponse r = kit.get_daily_summary(2);

  ToolResponse back = ToolResponse::from_json(r.to_json());
  CHECK(back.tool_name == r.tool_name);
  CHECK(back.rendered == r.rendered);
  CHECK(back.structured.dump() == r.structured.dump());
  CHECK(back.data_notes == r.data_notes);
  CHECK(r.data_notes == notes_of(r.structured));

  // Same question, same answer.
  CHECK(kit.get_daily_summary(2).to_json().dump() == r.to_json().dump());
}
