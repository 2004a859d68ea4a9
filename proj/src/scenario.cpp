#include "edgecache/scenario.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <random>

#include "edgecache/error.hpp"
#include "edgecache/features.hpp"
#include "edgecache/greedy.hpp"
#include "edgecache/model.hpp"
#include "edgecache/parallel.hpp"
#include "edgecache/solver.hpp"

namespace edgecache {

namespace {

constexpr int kDatasetVersion = 1;

// splitmix64 finalizer
std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

nlohmann::json range_json(const Range& r) { return {r.lo, r.hi}; }

Range range_from(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

// Labels one instance; nullopt when the solver hit its limits.
std::optional<Label> solve_label(const Instance& inst, const PathTables& pt, const LabelLimits& limits) {
  const auto model = build_milp(inst, pt);
  BnbOptions opts;
  opts.limits = {limits.time_limit_s, limits.node_limit};
  opts.warm_start = gca_warm_start(model, inst, pt);
  const auto sol = solve_bnb(model, opts);
  if (sol.status != SolveStatus::optimal) return std::nullopt;
  return Label{sol.placement(), sol.objective};
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) {
  return mix(mix(mix(base) ^ stream) ^ index);
}

ScenarioParams scenario_params_from_json(const nlohmann::json& j) {
  ScenarioParams p;
  try {
    if (j.contains("storage_mb")) p.storage = range_from(j["storage_mb"]);
    if (j.contains("bandwidth_mbps")) p.bandwidth = range_from(j["bandwidth_mbps"]);
    if (j.contains("ec_capacity_mb")) p.ec_capacity = range_from(j["ec_capacity_mb"]);
    if (j.contains("link_capacity_mbps")) p.link_capacity = range_from(j["link_capacity_mbps"]);
    if (j.contains("alpha")) p.alpha = j["alpha"].get<double>();
    if (j.contains("beta")) p.beta = j["beta"].get<double>();
    if (j.contains("sample_weights")) p.sample_weights = j["sample_weights"].get<bool>();
    if (j.contains("alpha_range")) p.alpha_range = range_from(j["alpha_range"]);
    if (j.contains("beta_range")) p.beta_range = range_from(j["beta_range"]);
    if (j.contains("hops_to_datacenter")) p.hops_to_datacenter = j["hops_to_datacenter"].get<int>();
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::malformed_file, ex.what());
  }
  return p;
}

nlohmann::json scenario_params_to_json(const ScenarioParams& p) {
  return {{"storage_mb", range_json(p.storage)},
          {"bandwidth_mbps", range_json(p.bandwidth)},
          {"ec_capacity_mb", range_json(p.ec_capacity)},
          {"link_capacity_mbps", range_json(p.link_capacity)},
          {"alpha", p.alpha},
          {"beta", p.beta},
          {"sample_weights", p.sample_weights},
          {"alpha_range", range_json(p.alpha_range)},
          {"beta_range", range_json(p.beta_range)},
          {"hops_to_datacenter", p.hops_to_datacenter}};
}

void validate_instance(const Instance& inst) {
  auto fail = [](const std::string& why) { throw Error(ErrorCode::invalid_argument, why); };
  if (static_cast<int>(inst.ec_capacity.size()) != inst.num_edge_clouds) fail("w_e size");
  if (static_cast<int>(inst.link_capacity.size()) != inst.num_links) fail("c_l size");
  for (const auto& f : inst.flows) {
    if (static_cast<int>(f.mobility.size()) != inst.num_access_routers) fail("p_k size");
    double sum = 0.0;
    for (double p : f.mobility) {
      if (p < 0.0) fail("negative mobility probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) fail("mobility does not sum to 1");
    if (!(f.storage > 0.0) || !(f.bandwidth > 0.0)) fail("flow demands must be positive");
  }
  for (double w : inst.ec_capacity)
    if (!(w > 0.0)) fail("EC capacity must be positive");
  for (double c : inst.link_capacity)
    if (!(c > 0.0)) fail("link capacity must be positive");
  if (inst.alpha < 0.0 || inst.alpha > 1.0 || inst.beta < 0.0 || inst.beta > 1.0) fail("weights outside [0,1]");
  if (inst.hops_to_datacenter < 1) fail("N^T must be a positive integer");
}

Instance sample_instance(const Topology& t, const ScenarioParams& params, int num_flows, std::uint64_t seed) {
  for (const Range* r : {&params.storage, &params.bandwidth, &params.ec_capacity, &params.link_capacity})
    if (!(r->lo > 0.0) || r->hi < r->lo) throw Error(ErrorCode::invalid_argument, "sampling ranges must be positive");
  std::mt19937_64 rng(seed);
  auto draw = [&](const Range& r) { return std::uniform_real_distribution<double>(r.lo, r.hi)(rng); };
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Instance inst;
  inst.topology_seed = t.seed;
  inst.num_access_routers = t.num_access_routers();
  inst.num_edge_clouds = t.num_edge_clouds();
  inst.num_links = t.num_links();
  inst.hops_to_datacenter = params.hops_to_datacenter;
  for (int k = 0; k < num_flows; ++k) {
    Flow f;
    f.storage = draw(params.storage);
    f.bandwidth = draw(params.bandwidth);
    f.mobility.resize(inst.num_access_routers);
    double sum = 0.0;
    for (auto& p : f.mobility) {
      // Open at zero so every router keeps positive mass.
      do p = unit(rng);
      while (p <= 0.0);
      sum += p;
    }
    for (auto& p : f.mobility) p /= sum;
    inst.flows.push_back(std::move(f));
  }
  for (int e = 0; e < inst.num_edge_clouds; ++e) inst.ec_capacity.push_back(draw(params.ec_capacity));
  for (int l = 0; l < inst.num_links; ++l) inst.link_capacity.push_back(draw(params.link_capacity));
  if (params.sample_weights) {
    inst.alpha = draw(params.alpha_range);
    inst.beta = draw(params.beta_range);
  } else {
    inst.alpha = params.alpha;
    inst.beta = params.beta;
  }
  return inst;
}

void split_dataset(Dataset& d, double test_fraction) {
  const int n = static_cast<int>(d.samples.size());
  const int test = std::min(n, static_cast<int>(std::ceil(n * test_fraction - 1e-9)));
  d.train.clear();
  d.test.clear();
  for (int i = 0; i < n - test; ++i) d.train.push_back(i);
  for (int i = n - test; i < n; ++i) d.test.push_back(i);
}

Dataset generate_dataset(const Topology& t, const PathTables& pt, int n, int num_flows,
                         const ScenarioParams& params, const LabelLimits& limits, std::uint64_t seed,
                         const ProgressFn& progress) {
  if (n < 2) throw Error(ErrorCode::invalid_argument, "a dataset needs at least two samples");
  Dataset d;
  d.seed = seed;
  d.params = params;
  d.samples.resize(n);
  std::atomic<int> resampled{0}, done{0};
  std::mutex progress_mutex;
  parallel_for(n, limits.threads, [&](int i) {
    for (std::uint64_t attempt = 0;; ++attempt) {
      auto inst = sample_instance(t, params, num_flows, derive_seed(seed, static_cast<std::uint64_t>(i), attempt));
      auto label = solve_label(inst, pt, limits);
      if (label) {
        d.samples[i] = Sample{std::move(inst), std::move(label)};
        break;
      }
      if (++resampled > limits.max_resamples)
        throw Error(ErrorCode::solver_budget_exhausted,
                    std::to_string(resampled.load()) + " samples timed out during labeling");
    }
    const int finished = ++done;
    if (progress) {
      std::lock_guard lock(progress_mutex);
      progress(finished, n);
    }
  });
  d.resampled = resampled;
  split_dataset(d);
  return d;
}

int label_dataset(Dataset& d, const PathTables& pt, const LabelLimits& limits, const ProgressFn& progress) {
  std::vector<int> todo;
  for (int i = 0; i < static_cast<int>(d.samples.size()); ++i)
    if (!d.samples[i].label) todo.push_back(i);
  std::atomic<int> labeled{0}, done{0};
  std::mutex progress_mutex;
  parallel_for(static_cast<int>(todo.size()), limits.threads, [&](int idx) {
    auto& s = d.samples[todo[idx]];
    s.label = solve_label(s.instance, pt, limits);
    if (s.label) ++labeled;
    const int finished = ++done;
    if (progress) {
      std::lock_guard lock(progress_mutex);
      progress(finished, static_cast<int>(todo.size()));
    }
  });
  return labeled;
}

nlohmann::json instance_to_json(const Instance& inst) {
  auto flows = nlohmann::json::array();
  for (const auto& f : inst.flows)
    flows.push_back({{"storage_mb", f.storage}, {"bandwidth_mbps", f.bandwidth}, {"mobility", f.mobility}});
  return {{"topology_seed", inst.topology_seed},
          {"access_routers", inst.num_access_routers},
          {"edge_clouds", inst.num_edge_clouds},
          {"links", inst.num_links},
          {"flows", flows},
          {"ec_capacity_mb", inst.ec_capacity},
          {"link_capacity_mbps", inst.link_capacity},
          {"alpha", inst.alpha},
          {"beta", inst.beta},
          {"hops_to_datacenter", inst.hops_to_datacenter}};
}

Instance instance_from_json(const nlohmann::json& j) {
  try {
    Instance inst;
    inst.topology_seed = j.at("topology_seed").get<std::uint64_t>();
    inst.num_access_routers = j.at("access_routers").get<int>();
    inst.num_edge_clouds = j.at("edge_clouds").get<int>();
    inst.num_links = j.at("links").get<int>();
    for (const auto& f : j.at("flows"))
      inst.flows.push_back({f.at("storage_mb").get<double>(), f.at("bandwidth_mbps").get<double>(),
                            f.at("mobility").get<std::vector<double>>()});
    inst.ec_capacity = j.at("ec_capacity_mb").get<std::vector<double>>();
    inst.link_capacity = j.at("link_capacity_mbps").get<std::vector<double>>();
    inst.alpha = j.at("alpha").get<double>();
    inst.beta = j.at("beta").get<double>();
    inst.hops_to_datacenter = j.at("hops_to_datacenter").get<int>();
    return inst;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::malformed_file, ex.what());
  }
}

nlohmann::json dataset_to_json(const Dataset& d, bool embed_images) {
  nlohmann::json j;
  j["format"] = "edgecache.dataset";
  j["version"] = kDatasetVersion;
  j["seed"] = d.seed;
  j["resampled"] = d.resampled;
  j["params"] = scenario_params_to_json(d.params);
  j["train"] = d.train;
  j["test"] = d.test;
  auto samples = nlohmann::json::array();
  for (const auto& s : d.samples) {
    nlohmann::json js;
    js["instance"] = instance_to_json(s.instance);
    if (s.label) js["label"] = {{"placement", s.label->placement}, {"total_cost", s.label->total_cost}};
    if (embed_images) js["image"] = encode_image(s.instance).pixels;
    samples.push_back(std::move(js));
  }
  j["samples"] = std::move(samples);
  return j;
}

Dataset dataset_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "edgecache.dataset")
      throw Error(ErrorCode::malformed_file, "not a dataset document");
    const int version = j.at("version").get<int>();
    if (version != kDatasetVersion)
      throw Error(ErrorCode::version_mismatch, "dataset version " + std::to_string(version));
    Dataset d;
    d.seed = j.at("seed").get<std::uint64_t>();
    d.resampled = j.at("resampled").get<int>();
    d.params = scenario_params_from_json(j.at("params"));
    d.train = j.at("train").get<std::vector<int>>();
    d.test = j.at("test").get<std::vector<int>>();
    for (const auto& js : j.at("samples")) {
      Sample s;
      s.instance = instance_from_json(js.at("instance"));
      if (js.contains("label"))
        s.label = Label{js["label"].at("placement").get<std::vector<int>>(),
                        js["label"].at("total_cost").get<double>()};
      d.samples.push_back(std::move(s));
    }
    const int n = static_cast<int>(d.samples.size());
    for (int i : d.train)
      if (i < 0 || i >= n) throw Error(ErrorCode::malformed_file, "train index out of range");
    for (int i : d.test)
      if (i < 0 || i >= n) throw Error(ErrorCode::malformed_file, "test index out of range");
    return d;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::malformed_file, ex.what());
  }
}

void save_dataset(const std::string& path, const Dataset& d, bool embed_images) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io_failure, "cannot open " + path);
  out << dataset_to_json(d, embed_images).dump() << '\n';
  if (!out) throw Error(ErrorCode::io_failure, "write failed for " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_failure, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::malformed_file, ex.what());
  }
  return dataset_from_json(j);
}

}  // namespace edgecache
