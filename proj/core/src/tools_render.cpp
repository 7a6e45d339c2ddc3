// Text rendering for tool responses. The templates are versioned
// (kRenderTemplateVersion) and deliberately compute nothing: every numeric
// token in the output is fmt_num() applied to a leaf already present in the
// structured payload, and every other token comes from string leaves or from
// digit-free template text. Tests enforce this by token scan.
#include <cmath>
#include <cstdio>
#include <sstream>

#include "pulse/error.hpp"
#include "pulse/tools.hpp"

namespace pulse {

std::string fmt_num(double v) {
  if (!std::isfinite(v)) return "n/a";
  if (v == 0.0) return "0";
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.0f", v);
    return buf;
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  std::string s = buf;
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

namespace {

std::string num(const json& j) { return fmt_num(j.get<double>()); }

// Missing or null leaves render as "n/a".
std::string opt_num(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return "n/a";
  return num(j.at(key));
}

void append_notes(std::ostringstream& out, const json& structured) {
  if (!structured.contains("data_notes")) return;
  for (const auto& n : structured.at("data_notes")) {
    out << "Note: " << n.get<std::string>() << "\n";
  }
}

// ---- per-tool templates ----------------------------------------------------

std::string render_daily_summary(const json& s) {
  std::ostringstream out;
  out << "Daily summary up to " << s.at("boundary").get<std::string>() << " (local hour "
      << num(s.at("boundary_local_hour")) << "), lookback " << num(s.at("lookback_days"))
      << " day(s).\n";
  for (const auto& day : s.at("days")) {
    out << day.at("date").get<std::string>();
    if (day.at("partial").get<bool>()) out << " (partial day)";
    out << ":";
    const json& agg = day.at("aggregates");
    if (agg.empty()) {
      out << " no sensing data.";
    } else {
      bool first = true;
      auto item = [&](const char* key, const char* label, const char* unit) {
        if (!agg.contains(key)) return;
        out << (first ? " " : ", ") << label << " " << num(agg.at(key)) << unit;
        first = false;
      };
      item("sleep_duration_h", "slept", " h");
      item("sleep_onset_hour", "onset at hour", "");
      item("stationary_min", "stationary", " min");
      item("walking_min", "walking", " min");
      item("running_min", "running", " min");
      item("automotive_min", "in vehicle", " min");
      item("screen_total_min", "screen", " min");
      item("screen_sessions", "sessions", "");
      item("first_unlock_hour", "first unlock at hour", "");
      item("distance_km", "moved", " km");
      item("time_at_home_frac", "home fraction", "");
      item("location_variance", "location spread", "");
      item("app_total_min", "app use", " min");
      item("keyboard_chars", "typed chars", "");
      item("light_mean_lux", "mean lux", "");
      out << ".";
    }
    out << "\n";
    if (day.contains("recency")) {
      const json& r = day.at("recency");
      out << "Right now: last screen event " << opt_num(r, "minutes_since_last_screen_event")
          << " min ago, last unlock " << opt_num(r, "minutes_since_last_unlock")
          << " min ago, vehicle minutes in the last hour " << opt_num(r, "automotive_min_last_60")
          << ", last sleep ended " << opt_num(r, "minutes_since_last_sleep_end") << " min ago.\n";
    }
  }
  for (const auto& t : s.at("trends")) {
    out << "Trend " << t.at("metric").get<std::string>() << ": " << num(t.at("current"))
        << " today vs " << num(t.at("prior_mean")) << " prior-day mean ("
        << num(t.at("pct_change")) << "% change).\n";
  }
  append_notes(out, s);
  return out.str();
}

std::string render_timeline(const json& s) {
  std::ostringstream out;
  out << "Timeline for " << s.at("date").get<std::string>() << " in "
      << num(s.at("segment_hours")) << "-hour segments, up to local hour "
      << num(s.at("boundary_local_hour")) << ".\n";
  for (const auto& seg : s.at("segments")) {
    out << "Hours " << num(seg.at("start_hour")) << " to " << num(seg.at("end_hour")) << ": ";
    const std::string dom = seg.at("dominant_activity").get<std::string>();
    if (dom == "none") {
      out << "no motion data";
    } else {
      out << "mostly " << dom;
      const json& mm = seg.at("motion_min");
      out << " (stationary " << num(mm.at("stationary")) << ", walking "
          << num(mm.at("walking")) << ", running " << num(mm.at("running")) << ", automotive "
          << num(mm.at("automotive")) << " min)";
    }
    out << "; screen " << num(seg.at("screen_min")) << " min in "
        << num(seg.at("screen_sessions")) << " session(s), " << num(seg.at("unlocks"))
        << " unlock(s).";
    for (const auto& h : seg.at("highlights")) {
      const std::string kind = h.at("kind").get<std::string>();
      if (kind == "sleep_end") {
        out << " Woke at hour " << num(h.at("hour")) << " after " << num(h.at("sleep_h"))
            << " h asleep.";
      } else if (kind == "first_unlock") {
        out << " First unlock at hour " << num(h.at("hour")) << ".";
      } else if (kind == "travel") {
        out << " Travelled " << num(h.at("km")) << " km.";
      }
    }
    out << "\n";
  }
  append_notes(out, s);
  return out.str();
}

void render_bucket_body(std::ostringstream& out, const std::string& modality, const json& b) {
  if (modality == "motion") {
    out << "stationary " << opt_num(b, "stationary_min") << ", walking "
        << opt_num(b, "walking_min") << ", running " << opt_num(b, "running_min")
        << ", automotive " << opt_num(b, "automotive_min") << " min";
  } else if (modality == "screen") {
    out << "screen " << opt_num(b, "screen_min") << " min, " << opt_num(b, "sessions")
        << " session(s), " << opt_num(b, "unlocks") << " unlock(s)";
  } else if (modality == "gps") {
    out << "moved " << opt_num(b, "distance_km") << " km, home fraction "
        << opt_num(b, "at_home_frac");
  } else if (modality == "app_usage") {
    out << "app use " << opt_num(b, "app_min") << " min";
    if (b.contains("top_category")) {
      out << ", mostly " << b.at("top_category").get<std::string>();
    }
  } else if (modality == "keyboard") {
    out << "typed " << opt_num(b, "chars") << " chars";
  } else if (modality == "sleep") {
    out << opt_num(b, "episodes") << " episode(s), " << opt_num(b, "sleep_h") << " h asleep";
  } else if (modality == "light") {
    out << "mean lux " << opt_num(b, "mean_lux");
  }
  out << " (" << opt_num(b, "n_events") << " event(s))";
}

std::string render_query_sensing(const json& s) {
  std::ostringstream out;
  const std::string modality = s.at("modality").get<std::string>();
  const json& w = s.at("window");
  out << "Sensing " << modality << " from " << w.at("start").get<std::string>() << " to "
      << w.at("end").get<std::string>() << " (" << s.at("granularity").get<std::string>()
      << " buckets)";
  if (w.at("clipped").get<bool>()) out << " [clipped at the survey boundary]";
  out << ".\n";
  const std::string status = s.at("status").get<std::string>();
  if (status != "available") {
    out << "Stream status: " << status << ".\n";
  }
  for (const auto& b : s.at("buckets")) {
    if (b.contains("date")) {
      out << b.at("date").get<std::string>() << ": ";
    } else {
      out << b.at("start").get<std::string>() << ": ";
    }
    render_bucket_body(out, modality, b);
    out << "\n";
  }
  append_notes(out, s);
  return out.str();
}

std::string render_raw_events(const json& s) {
  std::ostringstream out;
  const json& w = s.at("window");
  out << "Raw " << s.at("modality").get<std::string>() << " events from "
      << w.at("start").get<std::string>() << " to " << w.at("end").get<std::string>();
  if (w.at("clipped").get<bool>()) out << " [clipped at the survey boundary]";
  out << ": " << num(s.at("n_total")) << " event(s)";
  if (s.at("truncated").get<bool>()) out << " (list truncated)";
  out << ".\n";
  for (const auto& ev : s.at("events")) {
    out << ev.at("timestamp").get<std::string>() << " ";
    const std::string modality = ev.at("modality").get<std::string>();
    if (modality == "motion") {
      out << ev.at("activity").get<std::string>() << " " << num(ev.at("duration_min")) << " min";
    } else if (modality == "screen") {
      out << ev.at("kind").get<std::string>();
      if (ev.contains("duration_min")) out << " " << num(ev.at("duration_min")) << " min";
    } else if (modality == "gps") {
      out << "moved " << num(ev.at("displacement_km")) << " km, "
          << (ev.at("at_home").get<bool>() ? "at home" : "away") << ", cluster "
          << num(ev.at("cluster_id"));
    } else if (modality == "app_usage") {
      out << ev.at("category").get<std::string>() << " " << num(ev.at("duration_min")) << " min";
    } else if (modality == "keyboard") {
      out << num(ev.at("chars")) << " chars in " << num(ev.at("duration_min")) << " min";
    } else if (modality == "sleep") {
      out << "slept " << ev.at("start").get<std::string>() << " to "
          << ev.at("end").get<std::string>();
    } else if (modality == "light") {
      out << num(ev.at("lux")) << " lux";
    }
    out << "\n";
  }
  append_notes(out, s);
  return out.str();
}

std::string render_baseline(const json& s) {
  std::ostringstream out;
  out << "Baseline check for " << s.at("metric").get<std::string>() << " on "
      << s.at("date").get<std::string>() << ": value " << opt_num(s, "current") << ".\n";
  const json& b = s.at("baseline");
  out << "History: " << num(b.at("n_days")) << " prior day(s)";
  if (b.contains("mean")) {
    out << ", mean " << num(b.at("mean")) << ", sd " << num(b.at("sd"));
  }
  out << ".\n";
  if (s.at("insufficient_baseline").get<bool>()) {
    out << "Not enough history for a deviation score.\n";
  } else if (s.at("no_variation").get<bool>()) {
    out << "History shows no variation; deviation is undefined.\n";
  } else if (s.contains("z")) {
    out << "Deviation: " << num(s.at("z")) << " sd from the personal mean.\n";
  }
  append_notes(out, s);
  return out.str();
}

std::string render_receptivity(const json& s) {
  std::ostringstream out;
  const json& w = s.at("window");
  out << "Receptivity history, lookback " << num(s.at("lookback_days")) << " day(s) ("
      << w.at("start").get<std::string>() << " to " << w.at("end").get<std::string>() << "): "
      << num(s.at("n")) << " prior survey(s), availability rate "
      << opt_num(s, "availability_rate") << ".\n";
  for (const auto& e : s.at("entries")) {
    out << e.at("timestamp").get<std::string>() << ": "
        << (e.at("available").get<bool>() ? "available" : "not available")
        << ", day activity index " << opt_num(e, "activity_index") << "\n";
  }
  append_notes(out, s);
  return out.str();
}

void render_outcomes(std::ostringstream& out, const json& o, bool means) {
  if (means) {
    out << "affect balance " << num(o.at("pa_mean")) << " positive / " << num(o.at("na_mean"))
        << " negative, regulation desire " << num(o.at("er_desire_mean"));
  } else {
    out << "affect balance " << num(o.at("pa_score")) << " positive / " << num(o.at("na_score"))
        << " negative, regulation desire " << num(o.at("er_desire_score"));
  }
  std::string yes;
  for (auto it = o.at("binary_targets").begin(); it != o.at("binary_targets").end(); ++it) {
    if (it.value().get<bool>()) {
      if (!yes.empty()) yes += ", ";
      yes += it.key();
    }
  }
  out << "; reported: " << (yes.empty() ? "none of the tracked states" : yes);
}

std::string render_similar_days(const json& s) {
  std::ostringstream out;
  out << "Similar past days for " << s.at("query_date").get<std::string>() << " (top "
      << num(s.at("k")) << " of " << num(s.at("n_eligible")) << " eligible):\n";
  for (const auto& r : s.at("results")) {
    out << r.at("date").get<std::string>() << " (similarity " << num(r.at("similarity")) << ", "
        << num(r.at("n_emas")) << " survey(s)): ";
    render_outcomes(out, r.at("outcomes"), true);
    out << "\n";
  }
  append_notes(out, s);
  return out.str();
}

std::string render_peer_cases(const json& s) {
  std::ostringstream out;
  out << "Peer cases by " << s.at("space").get<std::string>() << " similarity (top "
      << num(s.at("k")) << " of " << num(s.at("n_candidates")) << " candidate entries):\n";
  for (const auto& r : s.at("results")) {
    out << r.at("entry_ref").get<std::string>() << " (similarity " << num(r.at("similarity"))
        << "): ";
    render_outcomes(out, r.at("outcomes"), false);
    if (r.contains("diary_snippet")) {
      out << "; diary: \"" << r.at("diary_snippet").get<std::string>() << "\"";
    }
    out << "\n";
  }
  append_notes(out, s);
  return out.str();
}

}  // namespace

std::string render_tool(const std::string& tool_name, const json& structured) {
  if (tool_name == "get_daily_summary") return render_daily_summary(structured);
  if (tool_name == "get_behavioral_timeline") return render_timeline(structured);
  if (tool_name == "query_sensing") return render_query_sensing(structured);
  if (tool_name == "query_raw_events") return render_raw_events(structured);
  if (tool_name == "compare_to_baseline") return render_baseline(structured);
  if (tool_name == "get_receptivity_history") return render_receptivity(structured);
  if (tool_name == "find_similar_days") return render_similar_days(structured);
  if (tool_name == "find_peer_cases") return render_peer_cases(structured);
  raise(ErrorCode::not_found, "no renderer for tool: " + tool_name);
}

}  // namespace pulse
