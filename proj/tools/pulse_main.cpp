// pulse: command line for the sensing-investigation pipeline.
//
//   synth        generate a synthetic cohort dataset
//   ingest       validate a dataset directory and report on it
//   predict      run one condition over a dataset with a chosen backend
//   evaluate     compute the metric report from saved prediction rows
//   report       render a metric report as markdown tables
//   serve-tools  answer tool calls over stdin/stdout for one context
//
// Every command accepts --config (JSON file), --seed, and --out; see
// docs/formats.md for the config schema and file formats. Outputs never
// embed wall-clock time, so byte-identical reruns are expected.

#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pulse/error.hpp"
#include "pulse/evalkit.hpp"
#include "pulse/jsonl.hpp"
#include "pulse/runtime.hpp"
#include "pulse/synth.hpp"
#include "pulse/timestore.hpp"
#include "pulse/wire.hpp"

namespace {

using pulse::json;

json load_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) pulse::raise(pulse::ErrorCode::config_error, "cannot open config file " + path);
  json cfg;
  try {
    in >> cfg;
  } catch (const json::exception& e) {
    pulse::raise(pulse::ErrorCode::config_error,
                 "config file " + path + " is not valid JSON: " + e.what());
  }
  if (!cfg.is_object()) {
    pulse::raise(pulse::ErrorCode::config_error, "config file must hold a JSON object");
  }
  for (const auto& [key, value] : cfg.items()) {
    (void)value;
    if (key != "generator" && key != "runtime" && key != "tools" && key != "eval") {
      pulse::raise(pulse::ErrorCode::config_error, "unknown config section: " + key);
    }
  }
  return cfg;
}

pulse::ToolConfig tool_config_from(const json& cfg) {
  pulse::ToolConfig tc;
  if (!cfg.contains("tools")) return tc;
  const json& t = cfg.at("tools");
  tc.max_raw_events = t.value("max_raw_events", tc.max_raw_events);
  tc.min_baseline_days = t.value("min_baseline_days", tc.min_baseline_days);
  tc.default_k = t.value("default_k", tc.default_k);
  return tc;
}

pulse::RuntimeConfig runtime_config_from(const json& cfg) {
  pulse::RuntimeConfig rc;
  rc.tools = tool_config_from(cfg);
  if (!cfg.contains("runtime")) return rc;
  const json& r = cfg.at("runtime");
  rc.max_turns = r.value("max_turns", rc.max_turns);
  rc.peer_anchor_k = r.value("peer_anchor_k", rc.peer_anchor_k);
  rc.summary_lookback_days = r.value("summary_lookback_days", rc.summary_lookback_days);
  rc.reflection_max_chars = r.value("reflection_max_chars", rc.reflection_max_chars);
  rc.memory_budget_chars = r.value("memory_budget_chars", rc.memory_budget_chars);
  return rc;
}

pulse::FactorialOptions eval_options_from(const json& cfg, std::uint64_t seed) {
  pulse::FactorialOptions opt;
  opt.seed = seed;
  opt.runtime = runtime_config_from(cfg);
  if (!cfg.contains("eval")) return opt;
  const json& e = cfg.at("eval");
  opt.bootstrap_B = e.value("bootstrap_B", opt.bootstrap_B);
  opt.concurrency = e.value("concurrency", opt.concurrency);
  if (e.contains("confidence_edges")) {
    opt.confidence_edges = e.at("confidence_edges").get<std::vector<double>>();
  }
  return opt;
}

void write_output(const std::string& out_path, const std::string& content) {
  if (out_path.empty() || out_path == "-") {
    std::cout << content;
    if (!content.empty() && content.back() != '\n') std::cout << "\n";
    return;
  }
  std::ofstream out(out_path);
  if (!out) pulse::raise(pulse::ErrorCode::config_error, "cannot write " + out_path);
  out << content;
  if (!content.empty() && content.back() != '\n') out << "\n";
}

// Fold split declared by the dataset's manifest, when one exists.
struct FoldSplit {
  std::vector<std::string> eval_users;
  std::vector<std::string> training_users;
};

FoldSplit read_folds(const std::string& dataset_dir, const pulse::Store& store) {
  FoldSplit folds;
  std::ifstream in(dataset_dir + "/manifest.json");
  if (in) {
    json manifest;
    try {
      in >> manifest;
    } catch (const json::exception& e) {
      pulse::raise(pulse::ErrorCode::parse_error,
                   "manifest.json is not valid JSON: " + std::string(e.what()));
    }
    folds.eval_users = manifest.value("eval_user_ids", std::vector<std::string>{});
    folds.training_users = manifest.value("training_user_ids", std::vector<std::string>{});
  }
  if (folds.eval_users.empty()) {
    folds.eval_users = store.user_ids();
    folds.training_users.clear();
  }
  return folds;
}

std::string normalize_backend_spec(std::string spec) {
  // `scripted` alone selects the bundled reference policy.
  if (spec == "scripted") return "rule";
  return spec;
}

int run_synth(const std::string& config_path, std::optional<std::uint64_t> seed,
              const std::string& out_dir) {
  const json cfg = load_config_file(config_path);
  pulse::GeneratorConfig gen;
  if (cfg.contains("generator")) gen = pulse::GeneratorConfig::from_json(cfg.at("generator"));
  if (seed) gen.seed = *seed;
  gen.validate();
  const pulse::CohortData data = pulse::generate_cohort(gen);
  const json manifest = pulse::save_cohort(data, out_dir);
  std::cout << manifest.dump(2) << "\n";
  return 0;
}

int run_ingest(const std::string& data_dir, const std::string& out_path) {
  const auto profiles = pulse::load_profiles_jsonl(data_dir + "/profiles.jsonl");
  const auto events = pulse::load_events_jsonl(data_dir + "/events.jsonl");
  const auto entries = pulse::load_ema_jsonl(data_dir + "/ema.jsonl");
  const pulse::ValidationReport report = pulse::validate_dataset(profiles, events, entries);

  json out = {{"users", report.n_users},
              {"entries", report.n_entries},
              {"events", report.n_events},
              {"ok", report.ok()},
              {"violations", report.violations}};
  json per_user = json::array();
  for (const auto& u : report.per_user) {
    per_user.push_back({{"user_id", u.user_id},
                        {"entries", u.n_entries},
                        {"events", u.n_events},
                        {"modalities_seen", u.modalities_seen}});
  }
  out["per_user"] = std::move(per_user);
  write_output(out_path, out.dump(2));
  if (!report.ok()) return 1;
  // Prove the dataset also passes the stricter structural checks.
  (void)pulse::Store::ingest(profiles, events, entries);
  return 0;
}

int run_predict(const std::string& data_dir, const std::string& arch,
                const std::string& modality, const std::string& backend_spec,
                const std::string& users_csv, int concurrency, const std::string& memory_dir,
                const std::string& config_path, std::uint64_t seed, const std::string& out_path) {
  const json cfg = load_config_file(config_path);
  pulse::FactorialOptions options = eval_options_from(cfg, seed);
  if (concurrency > 0) options.concurrency = concurrency;
  options.runtime.memory_dir = memory_dir;

  const pulse::Store store = pulse::Store::open_dir(data_dir);
  FoldSplit folds = read_folds(data_dir, store);
  if (!users_csv.empty()) {
    folds.eval_users.clear();
    std::stringstream ss(users_csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) folds.eval_users.push_back(item);
    }
  }
  if (folds.eval_users.empty()) {
    pulse::raise(pulse::ErrorCode::invalid_argument, "no evaluation users selected");
  }

  pulse::RunCondition condition{pulse::architecture_from_string(arch),
                                pulse::modality_condition_from_string(modality)};
  condition.validate();

  std::optional<pulse::PeerIndex> peers;
  if (!folds.training_users.empty()) {
    peers = pulse::build_peer_index(store, folds.training_users, folds.eval_users);
  }

  const auto backend = pulse::make_backend(normalize_backend_spec(backend_spec));
  const auto results =
      pulse::run_cohort(store, folds.eval_users, condition, peers ? &*peers : nullptr, *backend,
                        options.concurrency, options.runtime);
  const auto rows = pulse::make_eval_rows(store, results, condition);
  if (out_path.empty()) {
    pulse::raise(pulse::ErrorCode::invalid_argument, "predict requires --out for the rows file");
  }
  pulse::save_eval_rows_jsonl(out_path, rows);

  json aborted = json::array();
  for (const auto& r : results) {
    if (r.aborted) aborted.push_back({{"user_id", r.user_id}, {"reason", r.abort_reason}});
  }
  std::cout << json{{"condition", condition.label()},
                    {"rows", rows.size()},
                    {"users", folds.eval_users.size()},
                    {"rows_file", out_path},
                    {"aborted", aborted}}
                   .dump(2)
            << "\n";
  return 0;
}

std::vector<pulse::EvalRow> load_row_files(const std::vector<std::string>& row_files) {
  std::vector<pulse::EvalRow> rows;
  for (const auto& path : row_files) {
    auto part = pulse::load_eval_rows_jsonl(path);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return rows;
}

int run_evaluate(const std::vector<std::string>& row_files, const std::string& config_path,
                 std::uint64_t seed, int bootstrap_b, const std::string& out_path) {
  const json cfg = load_config_file(config_path);
  pulse::FactorialOptions options = eval_options_from(cfg, seed);
  if (bootstrap_b > 0) options.bootstrap_B = bootstrap_b;
  const auto rows = load_row_files(row_files);
  const json report = pulse::report_from_rows(rows, options);
  write_output(out_path, report.dump(2));
  return 0;
}

int run_report(const std::vector<std::string>& row_files, const std::string& report_file,
               const std::string& config_path, std::uint64_t seed, int bootstrap_b,
               const std::string& out_path) {
  json report;
  if (!report_file.empty()) {
    std::ifstream in(report_file);
    if (!in) pulse::raise(pulse::ErrorCode::not_found, "cannot open " + report_file);
    in >> report;
  } else {
    if (row_files.empty()) {
      pulse::raise(pulse::ErrorCode::invalid_argument,
                   "report needs --rows files or --report-json");
    }
    const json cfg = load_config_file(config_path);
    pulse::FactorialOptions options = eval_options_from(cfg, seed);
    if (bootstrap_b > 0) options.bootstrap_B = bootstrap_b;
    report = pulse::report_from_rows(load_row_files(row_files), options);
  }
  write_output(out_path, pulse::render_factorial_markdown(report));
  return 0;
}

int run_serve_tools(const std::string& data_dir, const std::string& config_path) {
  const json cfg = load_config_file(config_path);
  pulse::ToolServerOptions options;
  options.tool_config = tool_config_from(cfg);
  options.log = &std::cerr;

  if (data_dir.empty()) {
    pulse::ToolServer server(options);
    return server.run(std::cin, std::cout);
  }
  const pulse::Store store = pulse::Store::open_dir(data_dir);
  const FoldSplit folds = read_folds(data_dir, store);
  std::optional<pulse::PeerIndex> peers;
  if (!folds.training_users.empty()) {
    peers = pulse::build_peer_index(store, folds.training_users, folds.eval_users);
    options.peers = &*peers;
  }
  pulse::ToolServer server(&store, data_dir, options);
  return server.run(std::cin, std::cout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sensing-investigation pipeline"};
  app.require_subcommand(1);

  // Uniform flags, wired into every subcommand.
  struct Common {
    std::string config;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out;
  };
  auto add_common = [](CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config, "JSON config file (see docs/formats.md)");
    sub->add_option("--seed", c.seed, "seed for generation / resampling")
        ->each([&c](const std::string&) { c.seed_set = true; });
    sub->add_option("--out", c.out, "output path ('-' or empty = stdout where applicable)");
  };

  int exit_code = 0;

  Common synth_c;
  auto* synth = app.add_subcommand("synth", "generate a synthetic cohort dataset");
  add_common(synth, synth_c);
  synth->callback([&] {
    if (synth_c.out.empty()) {
      pulse::raise(pulse::ErrorCode::invalid_argument, "synth requires --out <directory>");
    }
    exit_code = run_synth(synth_c.config,
                          synth_c.seed_set ? std::optional<std::uint64_t>(synth_c.seed)
                                           : std::nullopt,
                          synth_c.out);
  });

  Common ingest_c;
  std::string ingest_data;
  auto* ingest = app.add_subcommand("ingest", "validate a dataset directory");
  add_common(ingest, ingest_c);
  ingest->add_option("--data", ingest_data, "dataset directory")->required();
  ingest->callback([&] { exit_code = run_ingest(ingest_data, ingest_c.out); });

  Common predict_c;
  std::string predict_data, predict_arch, predict_modality, predict_users, predict_memory;
  std::string predict_backend = "rule";
  int predict_concurrency = 0;
  auto* predict = app.add_subcommand("predict", "run one condition over a dataset");
  add_common(predict, predict_c);
  predict->add_option("--data", predict_data, "dataset directory")->required();
  predict->add_option("--arch", predict_arch, "structured | agentic")->required();
  predict->add_option("--modality", predict_modality, "sensing_only | multimodal | diary_only")
      ->required();
  predict->add_option("--backend", predict_backend,
                      "rule | scripted:<policy.json> | http (env-configured)");
  predict->add_option("--users", predict_users, "comma-separated evaluation users (default all)");
  predict->add_option("--concurrency", predict_concurrency, "max users in flight");
  predict->add_option("--memory-dir", predict_memory, "persist per-user reflection logs here");
  predict->callback([&] {
    exit_code = run_predict(predict_data, predict_arch, predict_modality, predict_backend,
                            predict_users, predict_concurrency, predict_memory, predict_c.config,
                            predict_c.seed, predict_c.out);
  });

  Common evaluate_c;
  std::vector<std::string> evaluate_rows;
  int evaluate_b = 0;
  auto* evaluate = app.add_subcommand("evaluate", "metric report from prediction rows");
  add_common(evaluate, evaluate_c);
  evaluate->add_option("--rows", evaluate_rows, "prediction row files (JSONL)")->required();
  evaluate->add_option("--bootstrap", evaluate_b, "bootstrap resample count");
  evaluate->callback([&] {
    exit_code =
        run_evaluate(evaluate_rows, evaluate_c.config, evaluate_c.seed, evaluate_b, evaluate_c.out);
  });

  Common report_c;
  std::vector<std::string> report_rows;
  std::string report_json;
  int report_b = 0;
  auto* report = app.add_subcommand("report", "render metric tables as markdown");
  add_common(report, report_c);
  report->add_option("--rows", report_rows, "prediction row files (JSONL)");
  report->add_option("--report-json", report_json, "precomputed report JSON");
  report->add_option("--bootstrap", report_b, "bootstrap resample count");
  report->callback([&] {
    exit_code = run_report(report_rows, report_json, report_c.config, report_c.seed, report_b,
                           report_c.out);
  });

  Common serve_c;
  std::string serve_data;
  auto* serve = app.add_subcommand("serve-tools", "answer tool calls over stdin/stdout");
  add_common(serve, serve_c);
  serve->add_option("--data", serve_data, "dataset directory to preload");
  serve->callback([&] { exit_code = run_serve_tools(serve_data, serve_c.config); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const pulse::Error& e) {
    std::cerr << "pulse: " << pulse::error_code_name(e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "pulse: " << e.what() << "\n";
    return 1;
  }
  return exit_code;
}
