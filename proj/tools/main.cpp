// tailsieve command line: generate synthetic trace workloads, run the
// streaming sampler over a corpus, score samples, and benchmark throughput.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tailsieve/evaluation.hpp"
#include "tailsieve/pipeline.hpp"
#include "tailsieve/util.hpp"
#include "tailsieve/workload_gen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tailsieve;

namespace {

constexpr const char* kVersion = "0.1.0";

void report_diags(const std::vector<ParseDiagnostic>& diags, const std::string& file) {
  for (const auto& d : diags) {
    std::cerr << file << ":" << d.line_no << ": warning: " << d.detail << "\n";
  }
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  return out;
}

void write_manifest(const fs::path& dir, const std::string& command,
                    const std::vector<std::string>& outputs,
                    const std::vector<std::string>& volatile_outputs) {
  json j;
  j["command"] = command;
  j["version"] = kVersion;
  json digests = json::object();
  for (const auto& name : outputs) digests[name] = hex64(fnv1a64_file((dir / name).string()));
  j["outputs"] = std::move(digests);
  j["volatile_outputs"] = volatile_outputs;
  auto out = open_out(dir / "run-manifest.json");
  out << j.dump(2) << "\n";
}

void write_traces_jsonl(std::ostream& out, const std::vector<Trace>& traces) {
  for (const Trace& t : traces) {
    for (const Span& s : t.spans) out << span_to_jsonl(s) << "\n";
  }
}

ScenarioConfig scenario_from_flags(const std::string& preset, const std::string& config_path,
                                   bool seed_set, uint64_t seed) {
  if (!preset.empty() && !config_path.empty()) {
    throw ConfigError("--preset and --config are mutually exclusive");
  }
  ScenarioConfig cfg;
  if (!config_path.empty()) {
    cfg = scenario_from_json(read_text_file(config_path));
  } else if (!preset.empty()) {
    cfg = preset_scenario(preset);
  } else {
    throw ConfigError("one of --preset or --config is required");
  }
  if (seed_set) cfg.seed = seed;
  return cfg;
}

int cmd_generate(const std::string& preset, const std::string& config_path, bool seed_set,
                 uint64_t seed, const std::string& out_dir) {
  ScenarioConfig cfg = scenario_from_flags(preset, config_path, seed_set, seed);
  GeneratedWorkload wl = generate_workload(cfg);

  fs::path dir(out_dir);
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "corpus.jsonl");
    write_traces_jsonl(out, wl.traces);
  }
  {
    auto out = open_out(dir / "alarms.jsonl");
    for (const auto& a : wl.alarms.windows) out << alarm_to_jsonl(a) << "\n";
  }
  {
    auto out = open_out(dir / "truth.jsonl");
    for (const auto& r : wl.truth) out << ground_truth_to_jsonl(r) << "\n";
  }
  {
    auto out = open_out(dir / "scenario.json");
    out << scenario_to_json(cfg) << "\n";
  }
  write_manifest(dir, "generate", {"corpus.jsonl", "alarms.jsonl", "truth.jsonl", "scenario.json"},
                 {});

  size_t spans = 0, anomalous = 0;
  for (const auto& t : wl.traces) spans += t.spans.size();
  for (const auto& r : wl.truth) anomalous += r.anomalous ? 1 : 0;
  std::cout << "generated " << wl.traces.size() << " traces (" << spans << " spans, " << anomalous
            << " anomalous, " << wl.alarms.windows.size() << " alarms) in " << out_dir << "\n";
  return 0;
}

int cmd_sample(const std::string& corpus_path, const std::string& alarms_path,
               const std::string& out_dir, double rate, int64_t window_sec, double epsilon,
               bool no_cache, bool no_scaling, bool debug, bool full_traces) {
  std::vector<ParseDiagnostic> diags;
  std::vector<Trace> corpus = parse_trace_file(corpus_path, &diags);
  report_diags(diags, corpus_path);
  if (corpus.empty()) throw DataError("corpus is empty: " + corpus_path);

  AlarmFeed alarms;
  if (!alarms_path.empty()) {
    diags.clear();
    alarms = parse_alarm_file(alarms_path, &diags);
    report_diags(diags, alarms_path);
  }

  PipelineConfig cfg;
  cfg.window_ns = window_sec * 1'000'000'000;
  cfg.allocator.sample_rate = rate;
  cfg.allocator.enable_scaling = !no_scaling;
  cfg.selector.epsilon = epsilon;
  cfg.selector.use_cache = !no_cache;
  cfg.collect_steps = debug;

  SampleSet result = Pipeline::run(corpus, alarms, cfg);

  fs::path dir(out_dir);
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "sampled_ids.txt");
    for (const auto& id : result.sampled_ids) out << id << "\n";
  }
  {
    auto out = open_out(dir / "windows.jsonl");
    for (const auto& w : result.windows) out << window_summary_to_jsonl(w) << "\n";
  }
  std::vector<std::string> outputs = {"sampled_ids.txt", "windows.jsonl", "summary.json"};
  if (debug) {
    auto out = open_out(dir / "debug.jsonl");
    for (const auto& w : result.windows) {
      for (const auto& e : w.plan.entries) out << quota_entry_to_jsonl(e, w.start_ns) << "\n";
      for (const auto& s : w.steps) out << selection_step_to_jsonl(s, w.start_ns) << "\n";
    }
    outputs.push_back("debug.jsonl");
  }
  if (full_traces) {
    std::unordered_map<std::string, const Trace*> by_id;
    for (const Trace& t : corpus) by_id.emplace(t.trace_id, &t);
    auto out = open_out(dir / "sampled_traces.jsonl");
    for (const auto& id : result.sampled_ids) {
      for (const Span& s : by_id.at(id)->spans) out << span_to_jsonl(s) << "\n";
    }
    outputs.push_back("sampled_traces.jsonl");
  }
  {
    json j;
    j["corpus_traces"] = result.total_traces;
    j["sampled_traces"] = result.sampled_ids.size();
    j["actual_rate"] = result.total_traces == 0
                           ? 0.0
                           : static_cast<double>(result.sampled_ids.size()) /
                                 static_cast<double>(result.total_traces);
    j["windows"] = result.windows.size();
    j["cache_hits"] = result.cache_hits;
    j["cache_misses"] = result.cache_misses;
    j["cache_hit_rate"] = result.cache_hit_rate;
    auto out = open_out(dir / "summary.json");
    out << j.dump(2) << "\n";
  }
  {
    json j;
    j["mean_ms"] = result.runtime.mean_ms;
    j["p50_ms"] = result.runtime.p50_ms;
    j["p99_ms"] = result.runtime.p99_ms;
    j["traces"] = result.runtime.traces;
    auto out = open_out(dir / "timing.json");
    out << j.dump(2) << "\n";
  }
  write_manifest(dir, "sample", outputs, {"timing.json"});

  std::cout << "sampled " << result.sampled_ids.size() << " of " << result.total_traces
            << " traces over " << result.windows.size() << " windows (cache hit rate "
            << result.cache_hit_rate << ") in " << out_dir << "\n";
  return 0;
}

int cmd_evaluate(const std::string& corpus_path, const std::string& sample_path,
                 const std::string& truth_path, const std::string& name, bool baseline_set,
                 uint64_t baseline_seed, const std::string& format, const std::string& out_dir) {
  std::vector<ParseDiagnostic> diags;
  std::vector<Trace> corpus = parse_trace_file(corpus_path, &diags);
  report_diags(diags, corpus_path);
  if (corpus.empty()) throw DataError("corpus is empty: " + corpus_path);
  CorpusIndex index = CorpusIndex::build(corpus);

  std::vector<std::string> sample_ids;
  for (const auto& line : read_lines(sample_path)) {
    if (!line.empty()) sample_ids.push_back(line);
  }

  std::unordered_map<std::string, bool> labels;
  const std::unordered_map<std::string, bool>* labels_ptr = nullptr;
  if (!truth_path.empty()) {
    diags.clear();
    for (const auto& rec : parse_ground_truth_file(truth_path, &diags)) {
      labels[rec.trace_id] = rec.anomalous;
    }
    report_diags(diags, truth_path);
    labels_ptr = &labels;
  }

  std::vector<MetricsReport> reports;
  reports.push_back(compute_metrics(index, sample_ids, labels_ptr));
  reports.back().sampler = name;

  if (baseline_set) {
    std::vector<std::string> corpus_ids;
    corpus_ids.reserve(index.size());
    for (size_t i = 0; i < index.size(); ++i) corpus_ids.push_back(index.row(i).trace_id);
    const double rate = index.size() == 0 ? 0.0
                                          : static_cast<double>(sample_ids.size()) /
                                                static_cast<double>(index.size());
    auto random_ids = random_sample(corpus_ids, rate, baseline_seed);
    reports.push_back(compute_metrics(index, random_ids, labels_ptr));
    reports.back().sampler = "random";
    reports.back().seed = baseline_seed;
  }

  std::string rendered;
  if (format == "json") {
    std::string body;
    for (const auto& r : reports) {
      if (!body.empty()) body += ",\n";
      body += metrics_to_json(r);
    }
    rendered = "[\n" + body + "\n]\n";
  } else if (format == "csv") {
    rendered = metrics_csv_header() + "\n";
    for (const auto& r : reports) rendered += metrics_csv_row(r) + "\n";
  } else {
    rendered = metrics_table(reports);
  }

  if (out_dir.empty()) {
    std::cout << rendered;
  } else {
    fs::path dir(out_dir);
    fs::create_directories(dir);
    const std::string name =
        format == "json" ? "metrics.json" : (format == "csv" ? "metrics.csv" : "metrics.txt");
    auto out = open_out(dir / name);
    out << rendered;
    out.close();
    write_manifest(dir, "evaluate", {name}, {});
    std::cout << "wrote " << (dir / name).string() << "\n";
  }
  return 0;
}

int cmd_bench(const std::string& preset, const std::string& config_path, bool seed_set,
              uint64_t seed, double rate, const std::string& out_path) {
  ScenarioConfig cfg = scenario_from_flags(preset, config_path, seed_set, seed);
  GeneratedWorkload wl = generate_workload(cfg);

  PipelineConfig pcfg;
  pcfg.allocator.sample_rate = rate;
  RuntimeStats stats = measure_per_trace_runtime(wl.traces, wl.alarms, pcfg);

  char line[160];
  std::snprintf(line, sizeof line,
                "per-trace runtime over %zu traces: mean %.4f ms, p50 %.4f ms, p99 %.4f ms\n",
                stats.traces, stats.mean_ms, stats.p50_ms, stats.p99_ms);
  std::cout << line;

  if (!out_path.empty()) {
    json j;
    j["mean_ms"] = stats.mean_ms;
    j["p50_ms"] = stats.p50_ms;
    j["p99_ms"] = stats.p99_ms;
    j["traces"] = stats.traces;
    auto out = open_out(out_path);
    out << j.dump(2) << "\n";
    std::cout << "wrote " << out_path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"diversity-aware tail sampler for distributed traces"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "produce a synthetic trace corpus");
  std::string gen_preset, gen_config, gen_out;
  uint64_t gen_seed = 1;
  gen->add_option("--preset", gen_preset, "scenario preset: steady|blindspot|outage|latency");
  gen->add_option("--config", gen_config, "scenario config JSON file");
  gen->add_option("--seed", gen_seed, "override the scenario seed");
  gen->add_option("--out", gen_out, "output directory")->required();

  // sample
  auto* smp = app.add_subcommand("sample", "run the streaming sampler over a corpus");
  std::string smp_corpus, smp_alarms, smp_out;
  double smp_rate = 0.05, smp_epsilon = 1e-3;
  int64_t smp_window_sec = 60;
  bool smp_no_cache = false, smp_no_scaling = false, smp_debug = false, smp_full = false;
  smp->add_option("--corpus", smp_corpus, "trace corpus JSONL")->required();
  smp->add_option("--alarms", smp_alarms, "alarm windows JSONL");
  smp->add_option("--out", smp_out, "output directory")->required();
  smp->add_option("--rate", smp_rate, "base sample rate");
  smp->add_option("--window-sec", smp_window_sec, "buffer window length in seconds");
  smp->add_option("--epsilon", smp_epsilon, "selection early-stop threshold");
  smp->add_flag("--no-cache", smp_no_cache, "disable the similarity cache");
  smp->add_flag("--no-scaling", smp_no_scaling, "disable traffic-drop budget scaling");
  smp->add_flag("--debug", smp_debug, "also write per-window quotas and selection steps");
  smp->add_flag("--full-traces", smp_full, "also write the sampled traces as JSONL");

  // evaluate
  auto* eva = app.add_subcommand("evaluate", "score a sample against its corpus");
  std::string eva_corpus, eva_sample, eva_truth, eva_name = "sampler", eva_out;
  std::string eva_format = "table";
  uint64_t eva_baseline_seed = 0;
  eva->add_option("--corpus", eva_corpus, "trace corpus JSONL")->required();
  eva->add_option("--sample", eva_sample, "sampled trace ids, one per line")->required();
  eva->add_option("--truth", eva_truth, "ground truth JSONL");
  eva->add_option("--name", eva_name, "label for the evaluated sample");
  auto* eva_baseline = eva->add_option("--baseline-random", eva_baseline_seed,
                                       "also score a seeded uniform sample of the same size");
  eva->add_option("--format", eva_format, "output format: table|csv|json")
      ->check(CLI::IsMember({"table", "csv", "json"}));
  eva->add_option("--out", eva_out, "write the report (plus manifest) into this directory");

  // bench
  auto* ben = app.add_subcommand("bench", "measure per-trace sampler runtime");
  std::string ben_preset, ben_config, ben_out;
  uint64_t ben_seed = 1;
  double ben_rate = 0.05;
  ben->add_option("--preset", ben_preset, "scenario preset: steady|blindspot|outage|latency");
  ben->add_option("--config", ben_config, "scenario config JSON file");
  ben->add_option("--seed", ben_seed, "override the scenario seed");
  ben->add_option("--rate", ben_rate, "base sample rate");
  ben->add_option("--out", ben_out, "write timing JSON here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) {
      return cmd_generate(gen_preset, gen_config, gen->count("--seed") > 0, gen_seed, gen_out);
    }
    if (smp->parsed()) {
      return cmd_sample(smp_corpus, smp_alarms, smp_out, smp_rate, smp_window_sec, smp_epsilon,
                        smp_no_cache, smp_no_scaling, smp_debug, smp_full);
    }
    if (eva->parsed()) {
      return cmd_evaluate(eva_corpus, eva_sample, eva_truth, eva_name, eva_baseline->count() > 0,
                          eva_baseline_seed, eva_format, eva_out);
    }
    if (ben->parsed()) {
      return cmd_bench(ben_preset, ben_config, ben->count("--seed") > 0, ben_seed, ben_rate,
                       ben_out);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
