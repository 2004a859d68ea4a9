#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "edgecache/topology.hpp"

namespace edgecache {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return v >= lo && v <= hi; }
};

/// Per-flow demand: storage s_k (MB), bandwidth b_k (Mbps) and the
/// probability p_ka of attaching to each access router.
struct Flow {
  double storage = 0.0;
  double bandwidth = 0.0;
  std::vector<double> mobility;

  bool operator==(const Flow&) const = default;
};

/// One caching problem on a fixed topology.
struct Instance {
  // Topology reference: dimensions plus the generator seed.
  std::uint64_t topology_seed = 0;
  int num_access_routers = 0;
  int num_edge_clouds = 0;
  int num_links = 0;

  std::vector<Flow> flows;
  std::vector<double> ec_capacity;    // w_e, MB
  std::vector<double> link_capacity;  // c_l, Mbps
  double alpha = 0.5;                 // hosting-cost weight
  double beta = 0.5;                  // transmission-cost weight
  int hops_to_datacenter = 12;        // N^T

  int num_flows() const { return static_cast<int>(flows.size()); }
  /// q_ke = s_k / w_e
  double storage_ratio(int k, int e) const { return flows[k].storage / ec_capacity[e]; }

  bool operator==(const Instance&) const = default;
};

/// Sampling ranges; defaults are the reference network parameters.
struct ScenarioParams {
  Range storage{10.0, 50.0};
  Range bandwidth{1.0, 10.0};
  Range ec_capacity{100.0, 500.0};
  Range link_capacity{50.0, 100.0};
  double alpha = 0.5;
  double beta = 0.5;
  // When set, alpha and beta are drawn per instance from the ranges below.
  bool sample_weights = false;
  Range alpha_range{0.0, 1.0};
  Range beta_range{0.0, 1.0};
  int hops_to_datacenter = 12;
};

/// Independent seed for (stream, index) derived from a base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index = 0);

ScenarioParams scenario_params_from_json(const nlohmann::json& j);
nlohmann::json scenario_params_to_json(const ScenarioParams& p);

/// Throws Error(invalid_argument) if the instance breaks its invariants.
void validate_instance(const Instance& inst);

Instance sample_instance(const Topology& t, const ScenarioParams& params, int num_flows,
                         std::uint64_t seed);

/// Optimal cache placement: per flow, the EC index or -1 when uncached.
struct Label {
  std::vector<int> placement;
  double total_cost = 0.0;

  bool operator==(const Label&) const = default;
};

struct Sample {
  Instance instance;
  std::optional<Label> label;

  bool operator==(const Sample&) const = default;
};

struct Dataset {
  std::vector<Sample> samples;
  std::vector<int> train;
  std::vector<int> test;
  // Bookkeeping from generation.
  std::uint64_t seed = 0;
  int resampled = 0;
  ScenarioParams params;

  bool operator==(const Dataset& o) const {
    return samples == o.samples && train == o.train && test == o.test && seed == o.seed &&
           resampled == o.resampled;
  }
};

struct LabelLimits {
  double time_limit_s = 60.0;
  long node_limit = 2'000'000;
  // Samples that time out are resampled; more than this many in total is an error.
  int max_resamples = 100;
  int threads = 1;
};

/// Test split size: ceil(n * test_fraction), remainder for training.
void split_dataset(Dataset& d, double test_fraction = 0.1);

using ProgressFn = std::function<void(int done, int total)>;

/// Samples and labels `n` instances with the exact solver.
Dataset generate_dataset(const Topology& t, const PathTables& pt, int n, int num_flows,
                         const ScenarioParams& params, const LabelLimits& limits,
                         std::uint64_t seed, const ProgressFn& progress = {});

/// Solves every unlabeled sample in place. Returns how many were labeled.
int label_dataset(Dataset& d, const PathTables& pt, const LabelLimits& limits,
                  const ProgressFn& progress = {});

nlohmann::json instance_to_json(const Instance& inst);
Instance instance_from_json(const nlohmann::json& j);
nlohmann::json dataset_to_json(const Dataset& d, bool embed_images = true);
Dataset dataset_from_json(const nlohmann::json& j);

void save_dataset(const std::string& path, const Dataset& d, bool embed_images = true);
Dataset load_dataset(const std::string& path);

}  // namespace edgecache
