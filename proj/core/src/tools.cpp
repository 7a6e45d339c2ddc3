#include "pulse/tools.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "pulse/error.hpp"
#include "pulse/jsonl.hpp"

namespace pulse {

namespace {

double round2(double v) { return std::round(v * 100.0) / 100.0; }

json aggregates_to_json(const DailyAggregates& agg) {
  json j = json::object();
  const auto& names = daily_feature_names();
  for (int f = 0; f < kNumDailyFeatures; ++f) {
    if (auto v = agg.feature(f)) j[std::string(names[static_cast<std::size_t>(f)])] = round2(*v);
  }
  if (agg.has_app && !agg.app_min_by_category.empty()) {
    json cats = json::object();
    for (const auto& [cat, min] : agg.app_min_by_category) cats[cat] = round2(min);
    j["app_min_by_category"] = cats;
  }
  return j;
}

void note_unavailable_modalities(const Store& store, const AccessContext& ctx, json& notes) {
  for (int mi = 0; mi < kNumModalities; ++mi) {
    const Modality m = static_cast<Modality>(mi);
    const ModalityStatus status = store.modality_status(ctx, m);
    if (status != ModalityStatus::available) {
      notes.push_back(std::string(to_string(m)) + ": " + std::string(to_string(status)));
    }
  }
}

ToolResponse finish(const std::string& name, json structured) {
  ToolResponse r;
  r.tool_name = name;
  if (!structured.contains("data_notes")) structured["data_notes"] = json::array();
  for (const auto& n : structured["data_notes"]) r.data_notes.push_back(n.get<std::string>());
  r.rendered = render_tool(name, structured);
  r.structured = std::move(structured);
  return r;
}

void check_range(const char* what, int value, int lo, int hi) {
  if (value < lo || value > hi) {
    raise(ErrorCode::invalid_argument, std::string(what) + " must be in [" + std::to_string(lo) +
                                           ", " + std::to_string(hi) + "], got " +
                                           std::to_string(value));
  }
}

}  // namespace

json ToolResponse::to_json() const {
  return {{"tool_name", tool_name},
          {"structured", structured},
          {"rendered", rendered},
          {"data_notes", data_notes}};
}

ToolResponse ToolResponse::from_json(const json& j) {
  ToolResponse r;
  r.tool_name = j.at("tool_name").get<std::string>();
  r.structured = j.at("structured");
  r.rendered = j.at("rendered").get<std::string>();
  r.data_notes = j.at("data_notes").get<std::vector<std::string>>();
  return r;
}

json ToolSchema::to_json() const {
  return {{"name", name}, {"description", description}, {"input_schema", input_schema}};
}

std::string_view to_string(Granularity g) { return g == Granularity::hourly ? "hourly" : "daily"; }

Granularity granularity_from_string(std::string_view s) {
  if (s == "hourly") return Granularity::hourly;
  if (s == "daily") return Granularity::daily;
  raise(ErrorCode::invalid_argument, "granularity must be 'hourly' or 'daily'");
}

ToolKit::ToolKit(const Store& store, AccessContext ctx, const PeerIndex* peers, ToolConfig config)
    : store_(store), ctx_(std::move(ctx)), peers_(peers), config_(config) {}

// ---------------------------------------------------------------------------
// 1. get_daily_summary
// ---------------------------------------------------------------------------

ToolResponse ToolKit::get_daily_summary(int lookback_days) const {
  check_range("lookback_days", lookback_days, 1, kMaxSummaryLookbackDays);
  const LocalDate today = ctx_.boundary_date();
  json notes = json::array();

  json days = json::array();
  std::vector<DailyAggregates> aggs;
  for (int back = 0; back < lookback_days; ++back) {
    const LocalDate date = today - back;
    const Timestamp start = day_start(date, ctx_.tz_offset_min);
    if (!(start < ctx_.ema_timestamp)) continue;  // cannot happen for back >= 0, kept defensive
    DailyAggregates agg = store_.daily_aggregates(ctx_, date);
    json day;
    day["date"] = to_date_string(date);
    day["partial"] = agg.partial;
    day["aggregates"] = aggregates_to_json(agg);
    if (back == 0) {
      day["recency"] = recency_block();
      if (agg.partial) {
        notes.push_back("day " + to_date_string(date) + " covers only hours before the survey");
      }
    }
    days.push_back(std::move(day));
    aggs.push_back(std::move(agg));
  }
  note_unavailable_modalities(store_, ctx_, notes);

  json trends = json::array();
  if (lookback_days > 1 && aggs.size() >= 2) {
    static const char* kTrendMetrics[] = {"sleep_duration_h", "screen_total_min", "distance_km"};
    for (const char* metric : kTrendMetrics) {
      const auto current = aggs.front().feature(metric);
      double prior_sum = 0;
      int prior_n = 0;
      for (std::size_t i = 1; i < aggs.size(); ++i) {
        if (auto v = aggs[i].feature(metric)) {
          prior_sum += *v;
          ++prior_n;
        }
      }
      if (!current || prior_n == 0) continue;
      const double prior_mean = prior_sum / prior_n;
      if (prior_mean == 0.0) continue;
      json t;
      t["metric"] = metric;
      t["current"] = round2(*current);
      t["prior_mean"] = round2(prior_mean);
      t["pct_change"] = round2((*current - prior_mean) / std::abs(prior_mean) * 100.0);
      trends.push_back(std::move(t));
    }
  }

  json structured;
  structured["boundary"] = to_iso8601(ctx_.ema_timestamp);
  structured["boundary_local_hour"] = round2(local_hour_of(ctx_.ema_timestamp, ctx_.tz_offset_min));
  structured["lookback_days"] = lookback_days;
  structured["days"] = std::move(days);
  structured["trends"] = std::move(trends);
  structured["data_notes"] = std::move(notes);
  return finish("get_daily_summary", std::move(structured));
}

json ToolKit::recency_block() const {
  json block = json::object();
  const Timestamp boundary = ctx_.ema_timestamp;
  const Timestamp lookback = boundary - 48 * kSecsPerHour;

  auto minutes_ago = [&](Timestamp t) { return round2((boundary.secs - t.secs) / 60.0); };

  WindowResult screen = store_.query_window(ctx_, Modality::screen, lookback, boundary);
  block["minutes_since_last_screen_event"] = nullptr;
  block["minutes_since_last_unlock"] = nullptr;
  if (screen.status == ModalityStatus::available && !screen.events.empty()) {
    block["minutes_since_last_screen_event"] = minutes_ago(screen.events.back().timestamp);
    for (auto it = screen.events.rbegin(); it != screen.events.rend(); ++it) {
      if (std::get<ScreenPayload>(it->payload).kind == ScreenKind::unlock) {
        block["minutes_since_last_unlock"] = minutes_ago(it->timestamp);
        break;
      }
    }
  }

  double automotive_min = 0;
  WindowResult motion =
      store_.query_window(ctx_, Modality::motion, boundary - kSecsPerHour, boundary);
  if (motion.status == ModalityStatus::available) {
    for (const auto& ev : motion.events) {
      const auto& p = std::get<MotionPayload>(ev.payload);
      if (p.activity == MotionActivity::automotive) automotive_min += p.duration_min;
    }
  }
  block["automotive_min_last_60"] = round2(automotive_min);

  block["minutes_since_last_sleep_end"] = nullptr;
  WindowResult sleep = store_.query_window(ctx_, Modality::sleep, lookback, boundary);
  if (sleep.status == ModalityStatus::available && !sleep.events.empty()) {
    block["minutes_since_last_sleep_end"] =
        minutes_ago(std::get<SleepPayload>(sleep.events.back().payload).end);
  }
  return block;
}

// ---------------------------------------------------------------------------
// 2. get_behavioral_timeline
// ---------------------------------------------------------------------------

ToolResponse ToolKit::get_behavioral_timeline(int segment_hours) const {
  check_range("segment_hours", segment_hours, 1, kMaxSegmentHours);
  const LocalDate date = ctx_.boundary_date();
  const Timestamp day0 = day_start(date, ctx_.tz_offset_min);
  const double boundary_hour = (ctx_.ema_timestamp.secs - day0.secs) / 3600.0;

  json notes = json::array();
  note_unavailable_modalities(store_, ctx_, notes);

  json segments = json::array();
  for (double h = 0; h < boundary_hour; h += segment_hours) {
    const double seg_end_h = std::min({h + segment_hours, 24.0, boundary_hour});
    const Timestamp seg_start = day0 + static_cast<std::int64_t>(h * 3600);
    const Timestamp seg_end = day0 + static_cast<std::int64_t>(std::llround(seg_end_h * 3600));
    json seg;
    seg["start_hour"] = round2(h);
    seg["end_hour"] = round2(seg_end_h);
    seg["clipped"] = seg_end_h < h + segment_hours;

    // Motion minutes by class.
    json motion_min = json::object();
    double per_class[kNumMotionActivities] = {0, 0, 0, 0};
    bool any_motion = false;
    WindowResult motion = store_.query_window(ctx_, Modality::motion, seg_start, seg_end);
    if (motion.status == ModalityStatus::available) {
      for (const auto& ev : motion.events) {
        const auto& p = std::get<MotionPayload>(ev.payload);
        per_class[static_cast<std::size_t>(p.activity)] += p.duration_min;
        any_motion = true;
      }
    }
    std::string dominant = "none";
    if (any_motion) {
      int best = 0;
      for (int a = 1; a < kNumMotionActivities; ++a) {
        if (per_class[a] > per_class[best]) best = a;
      }
      dominant = std::string(to_string(static_cast<MotionActivity>(best)));
      for (int a = 0; a < kNumMotionActivities; ++a) {
        motion_min[std::string(to_string(static_cast<MotionActivity>(a)))] = round2(per_class[a]);
      }
    }
    seg["dominant_activity"] = dominant;
    seg["motion_min"] = motion_min;

    // Screen usage.
    double screen_min = 0;
    int sessions = 0, unlocks = 0;
    WindowResult screen = store_.query_window(ctx_, Modality::screen, seg_start, seg_end);
    std::optional<double> first_unlock_hour;
    if (screen.status == ModalityStatus::available) {
      for (const auto& ev : screen.events) {
        const auto& p = std::get<ScreenPayload>(ev.payload);
        if (p.kind == ScreenKind::session) {
          screen_min += p.duration_min;
          ++sessions;
        } else if (p.kind == ScreenKind::unlock) {
          ++unlocks;
          if (!first_unlock_hour) {
            first_unlock_hour = round2(local_hour_of(ev.timestamp, ctx_.tz_offset_min));
          }
        }
      }
    }
    seg["screen_min"] = round2(screen_min);
    seg["screen_sessions"] = sessions;
    seg["unlocks"] = unlocks;

    // Highlights: structured first, rendered text derives from these.
    json highlights = json::array();
    WindowResult sleep = store_.query_window(ctx_, Modality::sleep, seg_start, seg_end);
    if (sleep.status == ModalityStatus::available) {
      for (const auto& ev : sleep.events) {
        const auto& p = std::get<SleepPayload>(ev.payload);
        highlights.push_back({{"kind", "sleep_end"},
                              {"hour", round2(local_hour_of(p.end, ctx_.tz_offset_min))},
                              {"sleep_h", round2((p.end.secs - p.start.secs) / 3600.0)}});
      }
    }
    if (first_unlock_hour) {
      highlights.push_back({{"kind", "first_unlock"}, {"hour", *first_unlock_hour}});
    }
    WindowResult gps = store_.query_window(ctx_, Modality::gps, seg_start, seg_end);
    if (gps.status == ModalityStatus::available && !gps.events.empty()) {
      double km = 0;
      for (const auto& ev : gps.events) km += std::get<GpsPayload>(ev.payload).displacement_km;
      if (km > 0.05) highlights.push_back({{"kind", "travel"}, {"km", round2(km)}});
    }
    seg["highlights"] = std::move(highlights);
    segments.push_back(std::move(seg));
  }

  json structured;
  structured["date"] = to_date_string(date);
  structured["segment_hours"] = segment_hours;
  structured["boundary_local_hour"] = round2(boundary_hour);
  structured["segments"] = std::move(segments);
  structured["data_notes"] = std::move(notes);
  return finish("get_behavioral_timeline", std::move(structured));
}

// ---------------------------------------------------------------------------
// 3/4. offset windows
// ---------------------------------------------------------------------------

namespace {

struct OffsetWindow {
  Timestamp start, end, requested_end;
  bool clipped = false;
};

OffsetWindow make_window(const AccessContext& ctx, int hours_before, int duration_hours) {
  check_range("hours_before", hours_before, 1, kMaxHoursBefore);
  check_range("duration_hours", duration_hours, 1, kMaxDurationHours);
  OffsetWindow w;
  w.start = ctx.ema_timestamp - static_cast<std::int64_t>(hours_before) * kSecsPerHour;
  w.requested_end = w.start + static_cast<std::int64_t>(duration_hours) * kSecsPerHour;
  w.end = std::min(w.requested_end, ctx.ema_timestamp);
  w.clipped = w.end < w.requested_end;
  return w;
}

json window_to_json(const OffsetWindow& w) {
  json j;
  j["start"] = to_iso8601(w.start);
  j["end"] = to_iso8601(w.end);
  j["requested_end"] = to_iso8601(w.requested_end);
  j["clipped"] = w.clipped;
  return j;
}

// Aggregates one bucket's worth of events for a modality.
json bucket_fields(Modality m, const std::vector<const SensingEvent*>& events) {
  json b = json::object();
  b["n_events"] = static_cast<int>(events.size());
  switch (m) {
    case Modality::motion: {
      double per_class[kNumMotionActivities] = {0, 0, 0, 0};
      for (const auto* ev : events) {
        const auto& p = std::get<MotionPayload>(ev->payload);
        per_class[static_cast<std::size_t>(p.activity)] += p.duration_min;
      }
      b["stationary_min"] = round2(per_class[0]);
      b["walking_min"] = round2(per_class[1]);
      b["running_min"] = round2(per_class[2]);
      b["automotive_min"] = round2(per_class[3]);
      break;
    }
    case Modality::screen: {
      double total = 0;
      int sessions = 0, unlocks = 0;
      for (const auto* ev : events) {
        const auto& p = std::get<ScreenPayload>(ev->payload);
        if (p.kind == ScreenKind::session) {
          total += p.duration_min;
          ++sessions;
        } else if (p.kind == ScreenKind::unlock) {
          ++unlocks;
        }
      }
      b["screen_min"] = round2(total);
      b["sessions"] = sessions;
      b["unlocks"] = unlocks;
      break;
    }
    case Modality::gps: {
      double km = 0;
      int home = 0;
      for (const auto* ev : events) {
        const auto& p = std::get<GpsPayload>(ev->payload);
        km += p.displacement_km;
        if (p.at_home) ++home;
      }
      b["distance_km"] = round2(km);
      if (!events.empty()) {
        b["at_home_frac"] = round2(static_cast<double>(home) / static_cast<double>(events.size()));
      }
      break;
    }
    case Modality::app_usage: {
      double total = 0;
      std::map<std::string, double> by_cat;
      for (const auto* ev : events) {
        const auto& p = std::get<AppUsagePayload>(ev->payload);
        total += p.duration_min;
        by_cat[p.category] += p.duration_min;
      }
      b["app_min"] = round2(total);
      if (!by_cat.empty()) {
        auto top = by_cat.begin();
        for (auto it = by_cat.begin(); it != by_cat.end(); ++it) {
          if (it->second > top->second) top = it;
        }
        b["top_category"] = top->first;
      }
      break;
    }
    case Modality::keyboard: {
      double chars = 0;
      for (const auto* ev : events) chars += std::get<KeyboardPayload>(ev->payload).chars;
      b["chars"] = round2(chars);
      break;
    }
    case Modality::sleep: {
      double h = 0;
      for (const auto* ev : events) {
        const auto& p = std::get<SleepPayload>(ev->payload);
        h += (p.end.secs - p.start.secs) / 3600.0;
      }
      b["episodes"] = static_cast<int>(events.size());
      b["sleep_h"] = round2(h);
      break;
    }
    case Modality::light: {
      double sum = 0;
      for (const auto* ev : events) sum += std::get<LightPayload>(ev->payload).lux;
      if (!events.empty()) b["mean_lux"] = round2(sum / static_cast<double>(events.size()));
      break;
    }
  }
  return b;
}

}  // namespace

ToolResponse ToolKit::query_sensing(Modality m, int hours_before, int duration_hours,
                                    Granularity granularity) const {
  const OffsetWindow w = make_window(ctx_, hours_before, duration_hours);
  json notes = json::array();
  if (w.clipped) notes.push_back("window clipped at the survey boundary");

  json structured;
  structured["modality"] = std::string(to_string(m));
  structured["granularity"] = std::string(to_string(granularity));
  structured["window"] = window_to_json(w);

  const WindowResult result = store_.query_window(ctx_, m, w.start, w.end);
  structured["status"] = std::string(to_string(result.status));
  json buckets = json::array();
  if (result.status != ModalityStatus::available) {
    notes.push_back(std::string(to_string(m)) + ": " + std::string(to_string(result.status)));
  } else {
    if (granularity == Granularity::hourly) {
      for (Timestamp bs = w.start; bs < w.end; bs = bs + kSecsPerHour) {
        const Timestamp be = std::min(bs + kSecsPerHour, w.end);
        std::vector<const SensingEvent*> in_bucket;
        for (const auto& ev : result.events) {
          if (bs <= ev.timestamp && ev.timestamp < be) in_bucket.push_back(&ev);
        }
        json b = bucket_fields(m, in_bucket);
        b["start"] = to_iso8601(bs);
        b["end"] = to_iso8601(be);
        buckets.push_back(std::move(b));
      }
    } else {
      const LocalDate first = local_date_of(w.start, ctx_.tz_offset_min);
      const LocalDate last = local_date_of(w.end - 1, ctx_.tz_offset_min);
      for (LocalDate d = first; d <= last; d = d + 1) {
        const Timestamp bs = std::max(w.start, day_start(d, ctx_.tz_offset_min));
        const Timestamp be = std::min(w.end, day_start(d + 1, ctx_.tz_offset_min));
        std::vector<const SensingEvent*> in_bucket;
        for (const auto& ev : result.events) {
          if (bs <= ev.timestamp && ev.timestamp < be) in_bucket.push_back(&ev);
        }
        json b = bucket_fields(m, in_bucket);
        b["date"] = to_date_string(d);
        b["start"] = to_iso8601(bs);
        b["end"] = to_iso8601(be);
        buckets.push_back(std::move(b));
      }
    }
  }
  structured["buckets"] = std::move(buckets);
  structured["data_notes"] = std::move(notes);
  return finish("query_sensing", std::move(structured));
}

ToolResponse ToolKit::query_raw_events(Modality m, int hours_before, int duration_hours) const {
  const OffsetWindow w = make_window(ctx_, hours_before, duration_hours);
  json notes = json::array();
  if (w.clipped) notes.push_back("window clipped at the survey boundary");

  json structured;
  structured["modality"] = std::string(to_string(m));
  structured["window"] = window_to_json(w);

  const WindowResult result = store_.query_window(ctx_, m, w.start, w.end);
  structured["status"] = std::string(to_string(result.status));
  json events = json::array();
  int total = 0;
  bool truncated = false;
  if (result.status != ModalityStatus::available) {
    notes.push_back(std::string(to_string(m)) + ": " + std::string(to_string(result.status)));
  } else {
    total = static_cast<int>(result.events.size());
    truncated = total > config_.max_raw_events;
    const int keep = truncated ? config_.max_raw_events : total;
    for (int i = 0; i < keep; ++i) {
      json ev = to_json(result.events[static_cast<std::size_t>(i)]);
      ev.erase("user_id");  // redundant inside a bound context
      events.push_back(std::move(ev));
    }
    if (truncated) {
      notes.push_back("truncated to first " + std::to_string(config_.max_raw_events) + " of " +
                      std::to_string(total) + " events");
    }
  }
  structured["n_total"] = total;
  structured["truncated"] = truncated;
  structured["events"] = std::move(events);
  structured["data_notes"] = std::move(notes);
  return finish("query_raw_events", std::move(structured));
}

// ---------------------------------------------------------------------------
// 5. compare_to_baseline
// ---------------------------------------------------------------------------

ToolResponse ToolKit::compare_to_baseline(const std::string& metric,
                                          std::optional<LocalDate> date) const {
  const int feature = daily_feature_index(metric);  // not_found on bad name
  const LocalDate target = date.value_or(ctx_.boundary_date());
  if (target > ctx_.boundary_date()) {
    raise(ErrorCode::boundary_violation, "date " + to_date_string(target) + " is after the boundary");
  }

  json notes = json::array();
  json structured;
  structured["metric"] = metric;
  structured["date"] = to_date_string(target);

  DailyAggregates today = store_.daily_aggregates(ctx_, target);
  const auto current = today.feature(feature);
  structured["current"] = current ? json(round2(*current)) : json(nullptr);
  if (!current) notes.push_back("metric has no value on " + to_date_string(target));

  // Prior-day distribution: every local date from the first visible event
  // through the day before `target` that carries the metric.
  std::vector<double> baseline;
  if (auto first = store_.first_event_before(ctx_)) {
    const LocalDate first_date = local_date_of(*first, ctx_.tz_offset_min);
    for (LocalDate d = first_date; d < target; d = d + 1) {
      if (auto v = store_.daily_aggregates(ctx_, d).feature(feature)) baseline.push_back(*v);
    }
  }
  const int n = static_cast<int>(baseline.size());
  structured["baseline"] = {{"n_days", n}};
  structured["insufficient_baseline"] = n < config_.min_baseline_days;
  structured["no_variation"] = false;
  if (n < config_.min_baseline_days) {
    notes.push_back("only " + std::to_string(n) + " prior day(s) with this metric; need " +
                    std::to_string(config_.min_baseline_days));
  } else {
    double mean = 0;
    for (double v : baseline) mean += v;
    mean /= n;
    double ss = 0;
    for (double v : baseline) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / n);  // population sd
    structured["baseline"]["mean"] = round2(mean);
    structured["baseline"]["sd"] = round2(sd);
    if (sd == 0.0) {
      structured["no_variation"] = true;
      notes.push_back("baseline has no variation; deviation is undefined");
    } else if (current) {
      structured["z"] = round2((*current - mean) / sd);
    }
  }
  structured["data_notes"] = std::move(notes);
  return finish("compare_to_baseline", std::move(structured));
}

// ---------------------------------------------------------------------------
// 6. get_receptivity_history
// ---------------------------------------------------------------------------

ToolResponse ToolKit::get_receptivity_history(int lookback_days) const {
  check_range("lookback_days", lookback_days, 1, kMaxReceptivityLookbackDays);
  const Timestamp window_start =
      ctx_.ema_timestamp - static_cast<std::int64_t>(lookback_days) * kSecsPerDay;

  json notes = json::array();
  json rows = json::array();
  int available_n = 0, n = 0;
  const int avail_idx = binary_target_index("INT_availability");
  for (const EmaEntry* e : store_.entries_before(ctx_)) {
    if (e->timestamp < window_start) continue;
    json row;
    row["timestamp"] = to_iso8601(e->timestamp);
    const bool avail = e->binary_targets[static_cast<std::size_t>(avail_idx)];
    row["available"] = avail;
    // Coarse day-level activity: share of that day's motion minutes that were
    // non-stationary. Emotion scores are deliberately absent here.
    const LocalDate d = local_date_of(e->timestamp, ctx_.tz_offset_min);
    DailyAggregates agg = store_.daily_aggregates(ctx_, d);
    if (agg.has_motion) {
      const double active = *agg.walking_min + *agg.running_min + *agg.automotive_min;
      const double total = active + *agg.stationary_min;
      row["activity_index"] = total > 0 ? json(round2(active / total)) : json(nullptr);
    } else {
      row["activity_index"] = nullptr;
    }
    rows.push_back(std::move(row));
    ++n;
    if (avail) ++available_n;
  }
  if (n == 0) notes.push_back("no prior surveys in the lookback window");

  json structured;
  structured["lookback_days"] = lookback_days;
  structured["window"] = {{"start", to_iso8601(window_start)},
                          {"end", to_iso8601(ctx_.ema_timestamp)}};
  structured["entries"] = std::move(rows);
  structured["n"] = n;
  structured["availability_rate"] =
      n > 0 ? json(round2(static_cast<double>(available_n) / n)) : json(nullptr);
  structured["data_notes"] = std::move(notes);
  return finish("get_receptivity_history", std::move(structured));
}

// ---------------------------------------------------------------------------
// 7. find_similar_days
// ---------------------------------------------------------------------------

ToolResponse ToolKit::find_similar_days(int k) const {
  if (k < 1) raise(ErrorCode::invalid_argument, "k must be >= 1");
  const LocalDate today = ctx_.boundary_date();

  json notes = json::array();

  // Eligible: prior local dates carrying at least one EMA; the current day is
  // never eligible.
  std::set<std::int32_t> prior_dates;
  std::map<std::int32_t, std::vector<const EmaEntry*>> emas_by_date;
  for (const EmaEntry* e : store_.entries_before(ctx_)) {
    const LocalDate d = local_date_of(e->timestamp, ctx_.tz_offset_min);
    if (d < today) {
      prior_dates.insert(d.days);
      emas_by_date[d.days].push_back(e);
    }
  }

  struct Candidate {
    LocalDate date;
    DailyAggregates agg;
  };
  std::vector<Candidate> candidates;
  for (std::int32_t dd : prior_dates) {
    Candidate c{LocalDate{dd}, store_.daily_aggregates(ctx_, LocalDate{dd})};
    candidates.push_back(std::move(c));
  }

  json structured;
  structured["query_date"] = to_date_string(today);
  structured["k"] = k;
  json results = json::array();

  std::vector<DailyAggregates> prior_days;
  for (const auto& c : candidates) prior_days.push_back(c.agg);
  const FeatureStats stats = fit_feature_stats(prior_days);

  std::vector<std::pair<double, const Candidate*>> scored;
  const Fingerprint query = make_fingerprint(store_.daily_aggregates(ctx_, today), stats);
  if (query.n_present == 0) {
    notes.push_back("no sensing data for the current day; similarity undefined");
  } else {
    for (const auto& c : candidates) {
      const Fingerprint fp = make_fingerprint(c.agg, stats);
      if (fp.n_present == 0) continue;
      scored.emplace_back(cosine(query, fp), &c);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second->date > b.second->date;  // ties: newer day first
    });
    if (static_cast<int>(scored.size()) > k) scored.resize(static_cast<std::size_t>(k));
  }
  if (candidates.empty()) notes.push_back("no eligible prior days");

  const auto& names = binary_target_names();
  for (const auto& [sim, cand] : scored) {
    const auto& emas = emas_by_date[cand->date.days];
    json outcomes;
    double pa = 0, na = 0, er = 0;
    for (const EmaEntry* e : emas) {
      pa += e->pa_score;
      na += e->na_score;
      er += e->er_desire_score;
    }
    const double cnt = static_cast<double>(emas.size());
    outcomes["pa_mean"] = round2(pa / cnt);
    outcomes["na_mean"] = round2(na / cnt);
    outcomes["er_desire_mean"] = round2(er / cnt);
    json binary = json::object();
    for (int t = 0; t < kNumBinaryTargets; ++t) {
      int yes = 0;
      for (const EmaEntry* e : emas) {
        if (e->binary_targets[static_cast<std::size_t>(t)]) ++yes;
      }
      // Majority with ties -> false.
      binary[std::string(names[static_cast<std::size_t>(t)])] = yes * 2 > static_cast<int>(emas.size());
    }
    outcomes["binary_targets"] = std::move(binary);
    json row;
    row["date"] = to_date_string(cand->date);
    row["similarity"] = round2(sim);
    row["n_emas"] = static_cast<int>(emas.size());
    row["outcomes"] = std::move(outcomes);
    results.push_back(std::move(row));
  }

  structured["n_eligible"] = static_cast<int>(candidates.size());
  structured["results"] = std::move(results);
  structured["data_notes"] = std::move(notes);
  return finish("find_similar_days", std::move(structured));
}

// ---------------------------------------------------------------------------
// 8. find_peer_cases
// ---------------------------------------------------------------------------

ToolResponse ToolKit::find_peer_cases(PeerSpace space, const std::optional<std::string>& query_text,
                                      int k) const {
  if (k < 1) raise(ErrorCode::invalid_argument, "k must be >= 1");
  if (space == PeerSpace::text && (!query_text || query_text->empty())) {
    raise(ErrorCode::invalid_argument, "text mode requires query_text");
  }
  if (peers_ == nullptr) {
    raise(ErrorCode::unavailable, "no peer index mounted for this context");
  }

  json notes = json::array();
  std::vector<RankedPeer> ranked;
  if (space == PeerSpace::text) {
    const SparseVec q = embed(peers_->tfidf, *query_text);
    if (q.terms.empty()) notes.push_back("query shares no vocabulary with the peer corpus");
    ranked = rank_peers(*peers_, q, ctx_.user_id, k);
  } else {
    const Fingerprint q =
        make_fingerprint(store_.daily_aggregates(ctx_, ctx_.boundary_date()), peers_->stats);
    if (q.n_present == 0) {
      notes.push_back("no sensing data for the current day; similarity undefined");
    } else {
      ranked = rank_peers(*peers_, q, ctx_.user_id, k);
    }
  }

  const auto& names = binary_target_names();
  json results = json::array();
  for (const auto& r : ranked) {
    json row;
    row["user_id"] = r.entry->user_id;
    row["entry_ref"] = r.entry->entry_ref;
    row["similarity"] = round2(r.similarity);
    json outcomes;
    outcomes["pa_score"] = round2(r.entry->outcomes.pa_score);
    outcomes["na_score"] = round2(r.entry->outcomes.na_score);
    outcomes["er_desire_score"] = round2(r.entry->outcomes.er_desire_score);
    json binary = json::object();
    for (int t = 0; t < kNumBinaryTargets; ++t) {
      binary[std::string(names[static_cast<std::size_t>(t)])] =
          r.entry->outcomes.binary_targets[static_cast<std::size_t>(t)];
    }
    outcomes["binary_targets"] = std::move(binary);
    row["outcomes"] = std::move(outcomes);
    if (space == PeerSpace::text && !r.entry->diary_snippet.empty()) {
      row["diary_snippet"] = r.entry->diary_snippet;
    }
    results.push_back(std::move(row));
  }

  json structured;
  structured["space"] = std::string(to_string(space));
  structured["k"] = k;
  structured["n_candidates"] = static_cast<int>(peers_->entries.size());
  structured["results"] = std::move(results);
  structured["data_notes"] = std::move(notes);
  return finish("find_peer_cases", std::move(structured));
}

// ---------------------------------------------------------------------------
// registry / dispatch
// ---------------------------------------------------------------------------

namespace {

json int_param(const char* description, int lo, std::optional<int> hi,
               std::optional<int> default_value) {
  json p;
  p["type"] = "integer";
  p["description"] = description;
  p["minimum"] = lo;
  if (hi) p["maximum"] = *hi;
  if (default_value) p["default"] = *default_value;
  return p;
}

json string_param(const char* description, std::vector<std::string> allowed = {}) {
  json p;
  p["type"] = "string";
  p["description"] = description;
  if (!allowed.empty()) p["enum"] = allowed;
  return p;
}

int get_int(const json& args, const std::string& key, std::optional<int> fallback) {
  if (!args.contains(key)) {
    if (fallback) return *fallback;
    raise(ErrorCode::invalid_argument, "missing required argument '" + key + "'");
  }
  const json& v = args.at(key);
  if (!v.is_number_integer()) {
    raise(ErrorCode::invalid_argument, "argument '" + key + "' must be an integer");
  }
  return v.get<int>();
}

std::string get_string(const json& args, const std::string& key) {
  if (!args.contains(key) || !args.at(key).is_string()) {
    raise(ErrorCode::invalid_argument, "argument '" + key + "' must be a string");
  }
  return args.at(key).get<std::string>();
}

void reject_unknown_keys(const json& args, std::initializer_list<const char*> known) {
  for (auto it = args.begin(); it != args.end(); ++it) {
    bool ok = false;
    for (const char* key : known) {
      if (it.key() == key) {
        ok = true;
        break;
      }
    }
    if (!ok) raise(ErrorCode::invalid_argument, "unknown argument '" + it.key() + "'");
  }
}

std::vector<std::string> modality_names() {
  std::vector<std::string> names;
  for (int m = 0; m < kNumModalities; ++m) {
    names.emplace_back(to_string(static_cast<Modality>(m)));
  }
  return names;
}

std::vector<std::string> metric_names() {
  std::vector<std::string> names;
  for (const auto& n : daily_feature_names()) names.emplace_back(n);
  return names;
}

}  // namespace

std::vector<ToolSchema> ToolKit::schemas(const ToolConfig& config) {
  std::vector<ToolSchema> out;
  auto make = [&out](const char* name, const std::string& description, json properties,
                     json required) {
    ToolSchema s;
    s.name = name;
    s.description = description;
    s.input_schema = {{"type", "object"},
                      {"properties", std::move(properties)},
                      {"required", std::move(required)}};
    out.push_back(std::move(s));
  };

  make("get_daily_summary",
       "Natural-language overview of recent days' behavior (sleep, movement, phone use, places), "
       "most recent day first, with data-coverage notes.",
       {{"lookback_days",
         int_param("How many days back to summarize", 1, kMaxSummaryLookbackDays, 1)}},
       json::array());

  make("get_behavioral_timeline",
       "Chronological segments of the current day up to the survey moment: dominant activity, "
       "screen use and notable moments per segment.",
       {{"segment_hours", int_param("Width of each segment in hours", 1, kMaxSegmentHours, 3)}},
       json::array());

  make("query_sensing",
       "Bucketed aggregates for one sensing stream over a window positioned before the survey.",
       {{"modality", string_param("Which sensing stream", modality_names())},
        {"hours_before", int_param("Window start, hours before the survey", 1, kMaxHoursBefore,
                                   std::nullopt)},
        {"duration_hours",
         int_param("Window length in hours", 1, kMaxDurationHours, std::nullopt)},
        {"granularity", string_param("Bucket size", {"hourly", "daily"})}},
       json::array({"modality", "hours_before", "duration_hours", "granularity"}));

  make("query_raw_events",
       "Raw event records for one sensing stream over a window positioned before the survey "
       "(capped at " + std::to_string(config.max_raw_events) + " events).",
       {{"modality", string_param("Which sensing stream", modality_names())},
        {"hours_before", int_param("Window start, hours before the survey", 1, kMaxHoursBefore,
                                   std::nullopt)},
        {"duration_hours",
         int_param("Window length in hours", 1, kMaxDurationHours, std::nullopt)}},
       json::array({"modality", "hours_before", "duration_hours"}));

  make("compare_to_baseline",
       "Compare one daily metric against the user's own prior days (needs at least " +
           std::to_string(config.min_baseline_days) + " of them); reports mean, sd and z.",
       {{"metric", string_param("Daily metric name", metric_names())},
        {"date", string_param("Target date YYYY-MM-DD; defaults to the survey day")}},
       json::array({"metric"}));

  make("get_receptivity_history",
       "Availability outcomes of recent past surveys with a coarse day activity index. Never "
       "includes past emotion scores.",
       {{"lookback_days",
         int_param("How many days back to include", 1, kMaxReceptivityLookbackDays, 7)}},
       json::array());

  make("find_similar_days",
       "The user's own past days most similar to today by behavioral fingerprint, with that "
       "day's reported outcomes.",
       {{"k", int_param("How many days to return", 1, std::nullopt, 3)}},
       json::array());

  make("find_peer_cases",
       "Most similar cases from other (training-fold) users, by diary text or sensing "
       "fingerprint, with their reported outcomes.",
       {{"space", string_param("Similarity space", {"text", "sensing"})},
        {"query_text", string_param("Free-text query; required in text mode")},
        {"k", int_param("How many cases to return", 1, std::nullopt, config.default_k)}},
       json::array({"space"}));

  return out;
}

ToolResponse ToolKit::call(const std::string& name, const json& args) const {
  if (!args.is_object() && !args.is_null()) {
    raise(ErrorCode::invalid_argument, "arguments must be a JSON object");
  }
  const json a = args.is_null() ? json::object() : args;

  if (name == "get_daily_summary") {
    reject_unknown_keys(a, {"lookback_days"});
    return get_daily_summary(get_int(a, "lookback_days", 1));
  }
  if (name == "get_behavioral_timeline") {
    reject_unknown_keys(a, {"segment_hours"});
    return get_behavioral_timeline(get_int(a, "segment_hours", 3));
  }
  if (name == "query_sensing") {
    reject_unknown_keys(a, {"modality", "hours_before", "duration_hours", "granularity"});
    Modality m;
    try {
      m = modality_from_string(get_string(a, "modality"));
    } catch (const Error&) {
      raise(ErrorCode::invalid_argument, "unknown modality");
    }
    return query_sensing(m, get_int(a, "hours_before", std::nullopt),
                         get_int(a, "duration_hours", std::nullopt),
                         granularity_from_string(get_string(a, "granularity")));
  }
  if (name == "query_raw_events") {
    reject_unknown_keys(a, {"modality", "hours_before", "duration_hours"});
    Modality m;
    try {
      m = modality_from_string(get_string(a, "modality"));
    } catch (const Error&) {
      raise(ErrorCode::invalid_argument, "unknown modality");
    }
    return query_raw_events(m, get_int(a, "hours_before", std::nullopt),
                            get_int(a, "duration_hours", std::nullopt));
  }
  if (name == "compare_to_baseline") {
    reject_unknown_keys(a, {"metric", "date"});
    const std::string metric = get_string(a, "metric");
    if (std::find(metric_names().begin(), metric_names().end(), metric) == metric_names().end()) {
      raise(ErrorCode::invalid_argument, "unknown metric '" + metric + "'");
    }
    std::optional<LocalDate> date;
    if (a.contains("date")) date = parse_date_string(get_string(a, "date"));
    return compare_to_baseline(metric, date);
  }
  if (name == "get_receptivity_history") {
    reject_unknown_keys(a, {"lookback_days"});
    return get_receptivity_history(get_int(a, "lookback_days", 7));
  }
  if (name == "find_similar_days") {
    reject_unknown_keys(a, {"k"});
    return find_similar_days(get_int(a, "k", 3));
  }
  if (name == "find_peer_cases") {
    reject_unknown_keys(a, {"space", "query_text", "k"});
    std::optional<std::string> query_text;
    if (a.contains("query_text")) query_text = get_string(a, "query_text");
    return find_peer_cases(peer_space_from_string(get_string(a, "space")), query_text,
                           get_int(a, "k", config_.default_k));
  }
  raise(ErrorCode::not_found, "unknown tool: " + name);
}

}  // namespace pulse
