// Command-line front end: topology and dataset generation, labeling,
// training, single-instance solves and benchmarks.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "edgecache/bench.hpp"
#include "edgecache/error.hpp"
#include "edgecache/greedy.hpp"
#include "edgecache/neural.hpp"
#include "edgecache/pipeline.hpp"
#include "edgecache/scenario.hpp"
#include "edgecache/solver.hpp"
#include "edgecache/topology.hpp"

using namespace edgecache;
using nlohmann::json;

namespace {

struct Config {
  TopologyConfig topology;
  ScenarioParams scenario;
  Architecture architecture;
  TrainOptions training;
  PipelineOptions pipeline;
  SolveLimits milp_limits;
  LabelLimits label_limits;
};

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_failure, "cannot read " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::malformed_file, path + ": " + e.what());
  }
}

void write_json(const std::string& path, const json& j) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io_failure, "cannot write " + path);
  out << j.dump(2) << '\n';
}

int env_threads() {
  if (const char* v = std::getenv("EDGECACHE_THREADS")) {
    const int n = std::atoi(v);
    if (n > 0) return n;
  }
  return 1;
}

Config load_config(const std::string& path) {
  Config c;
  c.label_limits.threads = c.training.threads = env_threads();
  if (path.empty()) return c;
  const auto j = read_json(path);
  try {
    if (j.contains("topology")) {
      const auto& t = j["topology"];
      c.topology.node_count = t.value("nodes", c.topology.node_count);
      if (t.contains("degree")) {
        c.topology.min_degree = t["degree"].at(0).get<int>();
        c.topology.max_degree = t["degree"].at(1).get<int>();
      }
      c.topology.link_count = t.value("links", c.topology.link_count);
      c.topology.access_routers = t.value("access_routers", c.topology.access_routers);
      c.topology.edge_clouds = t.value("edge_clouds", c.topology.edge_clouds);
      c.topology.overlap = t.value("overlap", c.topology.overlap);
      c.topology.seed = t.value("seed", c.topology.seed);
    }
    if (j.contains("scenario")) c.scenario = scenario_params_from_json(j["scenario"]);
    if (j.contains("architecture")) c.architecture = architecture_from_json(j["architecture"]);
    if (j.contains("training")) {
      const auto& t = j["training"];
      c.training.learning_rate = t.value("learning_rate", c.training.learning_rate);
      c.training.momentum = t.value("momentum", c.training.momentum);
      c.training.batch = t.value("batch", c.training.batch);
      c.training.epochs = t.value("epochs", c.training.epochs);
      c.training.seed = t.value("seed", c.training.seed);
    }
    c.pipeline.infer.delta = j.value("delta", c.pipeline.infer.delta);
    if (j.contains("o_mode")) c.pipeline.infer.o_mode = omode_from_string(j["o_mode"].get<std::string>());
    if (j.contains("penalty") && !j["penalty"].is_null()) c.pipeline.penalty.per_violation = j["penalty"].get<double>();
    c.pipeline.model.epsilon_cap = j.value("epsilon_cap", c.pipeline.model.epsilon_cap);
    c.pipeline.model.strengthen = j.value("strengthen", c.pipeline.model.strengthen);
    if (j.contains("solver")) {
      const auto& s = j["solver"];
      c.milp_limits.time_limit_s = s.value("time_limit_s", c.milp_limits.time_limit_s);
      c.milp_limits.node_limit = s.value("node_limit", c.milp_limits.node_limit);
      c.pipeline.limits.time_limit_s = s.value("cnn_time_limit_s", c.milp_limits.time_limit_s);
      c.pipeline.limits.node_limit = s.value("cnn_node_limit", c.milp_limits.node_limit);
      c.label_limits.time_limit_s = s.value("label_time_limit_s", c.label_limits.time_limit_s);
      c.label_limits.max_resamples = s.value("max_resamples", c.label_limits.max_resamples);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::malformed_file, path + ": " + e.what());
  }
  return c;
}

std::pair<Topology, PathTables> load_topology_or_build(const std::string& path, const Config& c) {
  if (!path.empty()) return load_topology(path);
  auto t = build_topology(c.topology);
  auto pt = shortest_paths(t);
  return {std::move(t), std::move(pt)};
}

void progress_line(const char* what, int done, int total) {
  if (done == total || done % std::max(1, total / 20) == 0)
    std::cerr << what << ' ' << done << '/' << total << '\n';
}

Instance load_instance(const std::string& path, int index) {
  const auto j = read_json(path);
  if (j.contains("format") && j["format"] == "edgecache.dataset") {
    const auto d = dataset_from_json(j);
    if (index < 0 || index >= static_cast<int>(d.samples.size()))
      throw Error(ErrorCode::invalid_argument, "sample index out of range");
    return d.samples[index].instance;
  }
  return instance_from_json(j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Proactive edge caching: exact MILP, CNN-reduced MILP and greedy baseline"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON configuration file");

  std::string topology_path, out_path, data_path, bank_path, instance_path, method = "milp", o_mode;
  int flows = 5, samples = 1000, index = 0, epochs = -1;
  std::uint64_t seed = 1;
  double delta = -1.0, time_limit = -1.0;
  bool no_label = false;

  auto* gen_topology = app.add_subcommand("gen-topology", "Generate a random topology");
  gen_topology->add_option("--seed", seed, "Topology seed");
  gen_topology->add_option("--out", out_path, "Output JSON")->required();

  auto* gen = app.add_subcommand("gen", "Sample and label a dataset");
  gen->add_option("--topology", topology_path, "Topology JSON (default: generated from config)");
  gen->add_option("--flows", flows, "Flows per instance");
  gen->add_option("--samples", samples, "Number of samples");
  gen->add_option("--seed", seed, "Dataset seed");
  gen->add_flag("--no-label", no_label, "Skip exact labeling");
  gen->add_option("--out", out_path, "Output dataset JSON")->required();

  auto* label = app.add_subcommand("label", "Label every unlabeled sample with the exact solver");
  label->add_option("--topology", topology_path, "Topology JSON");
  label->add_option("--data", data_path, "Dataset JSON")->required();
  label->add_option("--out", out_path, "Output dataset JSON (default: overwrite)");

  auto* train = app.add_subcommand("train", "Train the per-flow CNN bank");
  train->add_option("--data", data_path, "Labeled dataset JSON")->required();
  train->add_option("--epochs", epochs, "Training epochs");
  train->add_option("--seed", seed, "Weight seed");
  train->add_option("--out", out_path, "Output checkpoint")->required();
  std::string report_path;
  train->add_option("--report", report_path, "Training report JSON");

  auto* solve = app.add_subcommand("solve", "Solve one instance");
  solve->add_option("--topology", topology_path, "Topology JSON");
  solve->add_option("--instance", instance_path, "Instance or dataset JSON")->required();
  solve->add_option("--index", index, "Sample index when --instance is a dataset");
  solve->add_option("--method", method, "milp | oracle | gca | cnn")
      ->check(CLI::IsMember({"milp", "oracle", "gca", "cnn"}));
  solve->add_option("--bank", bank_path, "Checkpoint for --method cnn");
  solve->add_option("--delta", delta, "Prediction threshold");
  solve->add_option("--o-mode", o_mode, "threshold | argmax")->check(CLI::IsMember({"threshold", "argmax"}));
  solve->add_option("--time-limit", time_limit, "Seconds");
  solve->add_option("--out", out_path, "Output JSON (default: stdout)");

  auto* bench = app.add_subcommand("bench", "Run the MILP / CNN / GCA comparison");
  bench->add_option("--topology", topology_path, "Topology JSON");
  bench->add_option("--bank", bank_path, "Checkpoint")->required();
  std::vector<int> flow_list{5, 10, 15, 20};
  bench->add_option("--flows", flow_list, "Flow counts")->delimiter(',');
  bench->add_option("--samples", samples, "Samples per flow count");
  bench->add_option("--seed", seed, "Benchmark seed");
  bench->add_option("--data", data_path, "Dataset whose test split replaces sampling at its flow count");
  bench->add_option("--delta", delta, "Prediction threshold");
  bench->add_option("--o-mode", o_mode, "threshold | argmax")->check(CLI::IsMember({"threshold", "argmax"}));
  bench->add_option("--time-limit", time_limit, "MILP seconds per sample");
  bench->add_option("--out", out_path, "Output stem (writes .csv and .json)")->required();

  auto* report = app.add_subcommand("report", "Print a benchmark report as CSV");
  std::string in_path;
  report->add_option("--in", in_path, "Report JSON")->required();
  report->add_option("--out", out_path, "CSV output (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = load_config(config_path);
    if (delta > 0) cfg.pipeline.infer.delta = delta;
    if (!o_mode.empty()) cfg.pipeline.infer.o_mode = omode_from_string(o_mode);
    if (time_limit > 0) cfg.milp_limits.time_limit_s = cfg.pipeline.limits.time_limit_s = time_limit;

    if (*gen_topology) {
      if (gen_topology->count("--seed")) cfg.topology.seed = seed;
      const auto t = build_topology(cfg.topology);
      save_topology(out_path, t, shortest_paths(t));
    } else if (*gen) {
      const auto [t, pt] = load_topology_or_build(topology_path, cfg);
      Dataset d;
      if (no_label) {
        d.seed = seed;
        d.params = cfg.scenario;
        for (int i = 0; i < samples; ++i)
          d.samples.push_back({sample_instance(t, cfg.scenario, flows, derive_seed(seed, i, 0)), std::nullopt});
        split_dataset(d);
      } else {
        d = generate_dataset(t, pt, samples, flows, cfg.scenario, cfg.label_limits, seed,
                             [](int done, int total) { progress_line("labeled", done, total); });
      }
      save_dataset(out_path, d);
    } else if (*label) {
      const auto [t, pt] = load_topology_or_build(topology_path, cfg);
      auto d = load_dataset(data_path);
      const int n = label_dataset(d, pt, cfg.label_limits,
                                  [](int done, int total) { progress_line("labeled", done, total); });
      std::cerr << "labeled " << n << " samples\n";
      save_dataset(out_path.empty() ? data_path : out_path, d);
    } else if (*train) {
      const auto d = load_dataset(data_path);
      if (d.samples.empty()) throw Error(ErrorCode::empty_dataset, "dataset is empty");
      const auto& first = d.samples.front().instance;
      auto arch = cfg.architecture;
      arch.input_rows = first.num_flows();
      arch.input_cols = first.num_access_routers + first.num_edge_clouds + first.num_links;
      arch.outputs = first.num_edge_clouds;
      if (epochs >= 0) cfg.training.epochs = epochs;
      if (train->count("--seed")) cfg.training.seed = seed;
      auto bank = init_bank(arch, first.num_flows(), first.num_edge_clouds, cfg.training.seed);
      const auto rep = train_bank(bank, d, cfg.training, [](int model, int epoch, double loss) {
        if (epoch % 10 == 0) std::cerr << "model " << model << " epoch " << epoch << " loss " << loss << '\n';
      });
      save_bank(out_path, bank);
      if (!report_path.empty()) write_json(report_path, train_report_to_json(rep));
    } else if (*solve) {
      const auto [t, pt] = load_topology_or_build(topology_path, cfg);
      const auto inst = load_instance(instance_path, index);
      json result;
      if (method == "gca") {
        result = evaluated_to_json(gca(inst, pt, cfg.pipeline.penalty, cfg.pipeline.model.epsilon_cap));
      } else if (method == "oracle") {
        result = evaluated_to_json(evaluate_solution(inst, pt, enumerate_optimal(inst, pt, 1e6, cfg.pipeline.model),
                                                     cfg.pipeline.penalty, cfg.pipeline.model.epsilon_cap));
      } else if (method == "milp") {
        const auto m = build_milp(inst, pt, cfg.pipeline.model);
        BnbOptions opts;
        opts.limits = cfg.milp_limits;
        opts.warm_start = gca_warm_start(m, inst, pt);
        const auto s = solve_bnb(m, opts);
        if (!s.has_solution) throw Error(ErrorCode::solver_budget_exhausted, "no assignment found");
        result = evaluated_to_json(evaluate_solution(inst, pt, s, cfg.pipeline.penalty, m.epsilon_cap));
        result["variables"] = count_variables(m).total;
      } else {
        if (bank_path.empty()) throw Error(ErrorCode::missing_bank, "--bank is required for --method cnn");
        const auto bank = load_bank(bank_path);
        const auto r = solve_with_cnn(inst, pt, bank, cfg.pipeline);
        result = evaluated_to_json(r.solution);
        result["variables"] = r.reduced_variables;
        result["predict_s"] = r.predict_s;
        result["solve_s"] = r.solve_s;
        result["total_s"] = r.total_s;
      }
      write_json(out_path, result);
    } else if (*bench) {
      const auto [t, pt] = load_topology_or_build(topology_path, cfg);
      const auto bank = load_bank(bank_path);
      BenchConfig bc;
      bc.topology = t;
      bc.flows = flow_list;
      bc.samples_per_k = samples;
      bc.bank = &bank;
      bc.pipeline = cfg.pipeline;
      bc.milp_limits = cfg.milp_limits;
      bc.params = cfg.scenario;
      bc.seed = seed;
      bc.threads = env_threads();
      if (!data_path.empty()) {
        const auto d = load_dataset(data_path);
        std::vector<Instance> test;
        for (int i : d.test) test.push_back(d.samples[i].instance);
        if (!test.empty()) bc.instances[test.front().num_flows()] = std::move(test);
      }
      const auto r = run_benchmark(bc, [](int k, int done, int total) {
        std::ostringstream what;
        what << "K=" << k;
        progress_line(what.str().c_str(), done, total);
      });
      emit_report(r, out_path);
      std::cout << report_csv(r);
    } else if (*report) {
      const auto r = report_from_json(read_json(in_path));
      if (out_path.empty()) {
        std::cout << report_csv(r);
      } else {
        std::ofstream out(out_path);
        if (!out) throw Error(ErrorCode::io_failure, "cannot write " + out_path);
        out << report_csv(r);
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
