#include "poolgraph/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "poolgraph/config.hpp"
#include "poolgraph/pipeline.hpp"

namespace poolgraph {

namespace fs = std::filesystem;

namespace {

constexpr const char* kOutEnv = "POOLGRAPH_OUT";
constexpr const char* kDefaultOut = "poolgraph_out";

struct CommonOptions {
  std::string config;
  std::string input;
  std::string synth;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string mode;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "Configuration file (key = value with sections)");
  auto* input = cmd->add_option("--input", o.input, "Stream CSV (value columns plus optional 'label')");
  auto* synth = cmd->add_option("--synth", o.synth,
                                "Generator spec, e.g. sinusoid:length=20000,rate=0.01");
  input->excludes(synth);
  cmd->add_option("--out", o.out, std::string("Output directory (default $") + kOutEnv + " or " +
                                      kDefaultOut + ")");
  cmd->add_option("--seed", o.seed, "Run seed; also seeds --synth when it has no seed key");
  cmd->add_option("--mode", o.mode, "full, single_community, centrality_only, pseudo_only, "
                                    "average_ensemble or single_best");
  cmd->add_option("--set", o.overrides, "Override a config key, e.g. --set theta_drift=0.4");
}

RunConfig resolve_config(const CommonOptions& o) {
  RunConfig rc = o.config.empty() ? RunConfig{} : load_config(o.config);
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error("--set expects key=value, got '" + kv + "'");
    set_config_value(rc.pipeline, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed) rc.pipeline.seed = *o.seed;
  if (!o.mode.empty()) rc.pipeline = ablation_mode(rc.pipeline, parse_mode(o.mode));
  rc.pipeline.validate();
  return rc;
}

LabeledStream resolve_stream(const CommonOptions& o, std::uint64_t seed) {
  if (o.input.empty() == o.synth.empty()) throw Error("give exactly one of --input or --synth");
  if (!o.input.empty()) return load_stream(o.input);
  auto spec = parse_generator_spec(o.synth);
  if (o.synth.find("seed=") == std::string::npos) spec.seed = seed;
  auto stream = synth_stream(spec);
  stream.name = format_generator_spec(spec);
  return stream;
}

fs::path resolve_out(const CommonOptions& o) {
  fs::path dir = o.out;
  if (dir.empty()) {
    const char* env = std::getenv(kOutEnv);
    dir = env && *env ? env : kDefaultOut;
  }
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  return f;
}

std::string fmt(std::optional<double> v) {
  if (!v) return "";
  std::ostringstream s;
  s << std::setprecision(10) << *v;
  return s.str();
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_run(const CommonOptions& o, bool scores, bool timing, std::ostream& out) {
  const auto rc = resolve_config(o);
  const auto stream = resolve_stream(o, rc.pipeline.seed);
  const auto dir = resolve_out(o);
  const auto report = run(stream, rc.arch_set(), rc.pipeline);

  auto jsonl = open_out(dir / "batches.jsonl");
  for (const auto& b : report.batches) write_batch_jsonl(b, jsonl, timing);
  auto summary = open_out(dir / "summary.json");
  write_summary_json(report, summary);
  if (scores) {
    auto csv = open_out(dir / "scores.csv");
    write_scores_csv(report, stream, csv);
  }
  out << "auc: " << (report.auc ? fmt(report.auc) : "n/a") << '\n'
      << "adt_ms: " << fmt(report.adt_ms) << '\n'
      << "drift_batches: " << report.drift_batches.size() << '\n'
      << "final_pool: " << report.final_pool.size() << '\n';
  return 0;
}

const std::vector<std::string>& sweep_params() {
  static const std::vector<std::string> params{"theta_drift", "resolution", "alpha",
                                               "beta",        "gamma",      "batch_size"};
  return params;
}

void check_sweep_param(const std::string& p) {
  const auto& ok = sweep_params();
  if (std::find(ok.begin(), ok.end(), p) == ok.end())
    throw Error("unknown sweep parameter '" + p + "'");
}

int cmd_sweep(const CommonOptions& o, const std::string& param, const std::vector<std::string>& values,
              const std::string& param2, const std::vector<std::string>& values2,
              std::ostream& out) {
  check_sweep_param(param);
  if (values.empty()) throw Error("--values must list at least one value");
  const auto rc = resolve_config(o);
  const auto stream = resolve_stream(o, rc.pipeline.seed);
  const auto dir = resolve_out(o);
  const auto arch = rc.arch_set();

  auto run_with = [&](const std::vector<std::pair<std::string, std::string>>& sets) {
    PipelineConfig c = rc.pipeline;
    for (const auto& [k, v] : sets) set_config_value(c, k, v);
    return run(stream, arch, c);
  };

  if (!param2.empty()) {
    check_sweep_param(param2);
    if (values2.empty()) throw Error("--values2 must list at least one value");
    const fs::path path = dir / ("grid_" + param + "_" + param2 + ".csv");
    auto csv = open_out(path);
    csv << param << '\\' << param2;
    for (const auto& v2 : values2) csv << ',' << v2;
    csv << '\n';
    for (const auto& v1 : values) {
      csv << v1;
      for (const auto& v2 : values2) csv << ',' << fmt(run_with({{param, v1}, {param2, v2}}).auc);
      csv << '\n';
    }
    out << "wrote " << path.string() << '\n';
    return 0;
  }

  const fs::path path = dir / ("sweep_" + param + ".csv");
  std::ostringstream table;
  table << "value,auc,adt_ms,drift_count\n";
  for (const auto& v : values) {
    const auto r = run_with({{param, v}});
    table << v << ',' << fmt(r.auc) << ',' << fmt(r.adt_ms) << ',' << r.drift_batches.size()
          << '\n';
  }
  auto csv = open_out(path);
  csv << table.str();
  out << table.str();
  return 0;
}

int cmd_ablate(const CommonOptions& o, bool individuals, std::ostream& out) {
  const auto rc = resolve_config(o);
  const auto stream = resolve_stream(o, rc.pipeline.seed);
  const auto dir = resolve_out(o);
  const auto arch = rc.arch_set();

  std::ostringstream table;
  table << "mode,auc,adt_ms,drift_count,mean_communities,mean_representatives\n";
  for (const auto mode : ablation_modes()) {
    const auto r = run(stream, arch, ablation_mode(rc.pipeline, mode));
    table << mode_name(mode) << ',' << fmt(r.auc) << ',' << fmt(r.adt_ms) << ','
          << r.drift_batches.size() << ',' << fmt(r.mean_communities()) << ','
          << fmt(r.mean_representatives()) << '\n';
  }
  auto csv = open_out(dir / "ablation.csv");
  csv << table.str();
  out << table.str();

  if (individuals) {
    auto ind = open_out(dir / "individuals.csv");
    ind << "spec,auc\n";
    for (const auto& r : run_individuals(stream, arch, rc.pipeline))
      ind << '"' << r.spec << "\"," << fmt(r.auc) << '\n';
  }
  return 0;
}

int cmd_synth(const std::string& spec_text, const std::string& path, std::optional<std::uint64_t> seed,
              std::ostream& out) {
  auto spec = parse_generator_spec(spec_text);
  if (seed && spec_text.find("seed=") == std::string::npos) spec.seed = *seed;
  const auto stream = synth_stream(spec);
  if (path.empty()) {
    write_stream_csv(stream, out);
    return 0;
  }
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  auto f = open_out(p);
  write_stream_csv(stream, f);
  return 0;
}

int cmd_report(const CommonOptions& o, std::ostream& out) {
  const auto rc = resolve_config(o);
  const auto stream = resolve_stream(o, rc.pipeline.seed);
  const auto dir = resolve_out(o);
  const auto report = run(stream, rc.arch_set(), rc.pipeline);

  fs::create_directories(dir / "graphs");
  auto comm = open_out(dir / "communities.csv");
  comm << "t,community,model_id,representative\n";
  auto drift = open_out(dir / "drift.csv");
  drift << "t,d_cent,d_comm,D,drifted,update,pool_size,alarm\n";
  for (const auto& b : report.batches) {
    std::ostringstream name;
    name << "batch_" << std::setw(5) << std::setfill('0') << b.batch_index << ".edges";
    auto edges = open_out(dir / "graphs" / name.str());
    write_edge_list(b.graph, edges);
    for (std::size_t c = 0; c < b.communities.size(); ++c)
      for (ModelId id : b.communities[c]) {
        const bool rep = std::binary_search(b.representatives.begin(), b.representatives.end(), id);
        comm << b.batch_index << ',' << c << ',' << id << ',' << (rep ? 1 : 0) << '\n';
      }
    drift << b.batch_index << ',' << fmt(b.drift.d_cent) << ',' << fmt(b.drift.d_comm) << ','
          << fmt(b.drift.combined) << ',' << (b.drift.drifted ? 1 : 0) << ','
          << (b.update.kind == UpdateKind::major ? "major" : "minor") << ',' << b.pool_size << ','
          << (b.alarm ? 1 : 0) << '\n';
  }
  out << "wrote " << report.batches.size() << " graphs to " << (dir / "graphs").string() << '\n';
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Graph-based online anomaly detection over a dynamic detector pool"};
  app.require_subcommand(1);

  CommonOptions run_opts, sweep_opts, ablate_opts, report_opts;
  bool write_scores = false;
  bool no_timing = false;
  auto* run_cmd = app.add_subcommand("run", "Detect anomalies in one stream");
  add_common(run_cmd, run_opts);
  run_cmd->add_flag("--scores", write_scores, "Also write scores.csv");
  run_cmd->add_flag("--no-timing", no_timing, "Omit elapsed_ms from batches.jsonl");

  std::string param, param2;
  std::vector<std::string> values, values2;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run once per parameter value");
  add_common(sweep_cmd, sweep_opts);
  sweep_cmd->add_option("--param", param, "theta_drift, resolution, alpha, beta, gamma or batch_size")
      ->required();
  sweep_cmd->add_option("--values", values, "Comma-separated values")->required()->delimiter(',');
  sweep_cmd->add_option("--param2", param2, "Second parameter for a grid (matrix CSV of AUC)");
  sweep_cmd->add_option("--values2", values2, "Comma-separated values of --param2")->delimiter(',');

  bool individuals = false;
  auto* ablate_cmd = app.add_subcommand("ablate", "Compare the ablation modes on one stream");
  add_common(ablate_cmd, ablate_opts);
  ablate_cmd->add_flag("--individuals", individuals, "Also score each architecture alone");

  std::string synth_spec, synth_out;
  std::optional<std::uint64_t> synth_seed;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic labeled stream as CSV");
  synth_cmd->add_option("--synth", synth_spec, "Generator spec")->required();
  synth_cmd->add_option("--out", synth_out, "Output CSV path (default standard output)");
  synth_cmd->add_option("--seed", synth_seed, "Seed when the spec has none");

  auto* report_cmd = app.add_subcommand("report", "Write per-batch graphs, communities and drift");
  add_common(report_cmd, report_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (run_cmd->parsed()) return cmd_run(run_opts, write_scores, !no_timing, out);
    if (sweep_cmd->parsed()) return cmd_sweep(sweep_opts, param, values, param2, values2, out);
    if (ablate_cmd->parsed()) return cmd_ablate(ablate_opts, individuals, out);
    if (synth_cmd->parsed()) return cmd_synth(synth_spec, synth_out, synth_seed, out);
    if (report_cmd->parsed()) return cmd_report(report_opts, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace poolgraph
