#include <doctest.h>

#include <cmath>
#include <map>

#include "edgecache/greedy.hpp"
#include "edgecache/solver.hpp"
#include "support.hpp"

using namespace edgecache;
using fixture::code_of;

namespace {

struct Case {
  Topology topology;
  PathTables paths;
  Instance instance;
};

Case tiny_case(std::mt19937_64& rng, std::uint64_t seed) {
  const int ars = std::uniform_int_distribution<int>(1, 3)(rng);
  const int ecs = std::uniform_int_distribution<int>(1, 2)(rng);
  const int nodes = std::uniform_int_distribution<int>(std::max(ars, ecs), 5)(rng);
  const int extra = std::uniform_int_distribution<int>(0, 2)(rng);
  Case c;
  c.topology = fixture::random_graph(rng, std::max(nodes, 2), extra, ars, ecs);
  c.paths = shortest_paths(c.topology);
  const int flows = std::uniform_int_distribution<int>(1, 3)(rng);
  c.instance = sample_instance(c.topology, fixture::tight_params(), flows, seed);
  return c;
}

// Cost and feasibility written out from the definitions, independent of the
// library evaluator.
struct Brute {
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> placement;
};

Brute brute_force(const Instance& inst, const PathTables& pt, double eps) {
  const int K = inst.num_flows(), A = inst.num_access_routers, E = inst.num_edge_clouds, L = inst.num_links;
  Brute out;
  std::vector<int> host(K, -1);
  std::function<void(int)> place = [&](int k) {
    if (k < K) {
      for (int e = -1; e < E; ++e) {
        host[k] = e;
        place(k + 1);
      }
      return;
    }
    std::vector<double> used(E, 0.0), util(E, 0.0);
    for (int j = 0; j < K; ++j)
      if (host[j] >= 0) {
        used[host[j]] += inst.flows[j].storage;
        util[host[j]] += inst.storage_ratio(j, host[j]);
      }
    for (int e = 0; e < E; ++e)
      if (used[e] > (1.0 - eps) * inst.ec_capacity[e] + 1e-9) return;
    double hosting = 0.0;
    for (int j = 0; j < K; ++j)
      if (host[j] >= 0) hosting += 1.0 / (1.0 - util[host[j]]);
    // Every (flow, router) pair is a hit or a miss.
    const int bits = K * A;
    for (long mask = 0; mask < (1L << bits); ++mask) {
      bool ok = true;
      std::vector<double> load(L, 0.0);
      double transmission = 0.0;
      for (int j = 0; j < K && ok; ++j) {
        std::vector<char> link_used(L, 0);
        for (int a = 0; a < A; ++a) {
          const bool hit = (mask >> (j * A + a)) & 1;
          const double p = inst.flows[j].mobility[a];
          if (!hit) {
            transmission += p * inst.hops_to_datacenter;
            continue;
          }
          if (host[j] < 0) {
            ok = false;
            break;
          }
          transmission += p * pt.hop(a, host[j]);
          for (int l = 0; l < L; ++l)
            if (pt.on_path(l, a, host[j])) link_used[l] = 1;
        }
        for (int l = 0; l < L; ++l)
          if (link_used[l]) load[l] += inst.flows[j].bandwidth;
      }
      for (int l = 0; l < L && ok; ++l) ok = load[l] <= inst.link_capacity[l] + 1e-9;
      if (!ok) continue;
      const double tc = inst.alpha * hosting + inst.beta * transmission;
      if (tc < out.best) {
        out.best = tc;
        out.placement = host;
      }
    }
  };
  place(0);
  return out;
}

Instance cache_hit_fixture(Topology& t) {
  t = fixture::line(2, {0}, {1});
  auto inst = fixture::instance(t, {{10.0, 1.0, {1.0}}}, 100.0, 100.0);
  inst.alpha = 1.0;
  inst.beta = 1.0;
  inst.hops_to_datacenter = 12;
  return inst;
}

}  // namespace

TEST_SUITE("solver") {
  TEST_CASE("cache-hit fixture") {
    Topology t;
    const auto inst = cache_hit_fixture(t);
    const auto pt = shortest_paths(t);
    const double expected = 1.0 / 0.9 + 1.0;

    const auto oracle = enumerate_optimal(inst, pt);
    CHECK(oracle.objective == doctest::Approx(expected).epsilon(1e-9));
    CHECK(oracle.placement() == std::vector<int>{0});

    const auto s = solve_bnb(build_milp(inst, pt));
    CHECK(s.status == SolveStatus::optimal);
    CHECK(s.objective == doctest::Approx(expected).epsilon(1e-9));

    const auto eval = evaluate_assignment(inst, pt, {1}, {1});
    CHECK(eval.objective == doctest::Approx(2.1111111111).epsilon(1e-9));
    CHECK(eval.feasible());
    CHECK(eval.penalty == 0.0);
    CHECK(eval.total_with_penalty == eval.objective);
    CHECK(eval.utilization[0] == doctest::Approx(0.1));
  }

  TEST_CASE("hosting too dear: nothing is cached") {
    Topology t;
    auto inst = cache_hit_fixture(t);
    inst.beta = 0.05;  // 0.05 * (12 - 1) < 1 / 0.9
    const auto pt = shortest_paths(t);
    const auto oracle = enumerate_optimal(inst, pt);
    CHECK(oracle.placement() == std::vector<int>{-1});
    CHECK(oracle.objective == doctest::Approx(0.05 * 12).epsilon(1e-9));
    CHECK(solve_bnb(build_milp(inst, pt)).objective == doctest::Approx(0.6).epsilon(1e-9));
  }

  TEST_CASE("nearest of two edge clouds") {
    const auto t = fixture::line(4, {0}, {1, 3});
    const auto pt = shortest_paths(t);
    auto inst = fixture::instance(t, {{10.0, 1.0, {1.0}}});
    inst.alpha = inst.beta = 1.0;
    CHECK(pt.hop(0, 0) == 1);
    CHECK(pt.hop(0, 1) == 3);
    const auto oracle = enumerate_optimal(inst, pt);
    CHECK(oracle.placement() == std::vector<int>{0});
    const auto s = solve_bnb(build_milp(inst, pt));
    CHECK(s.placement() == std::vector<int>{0});
    CHECK(s.objective == doctest::Approx(oracle.objective).epsilon(1e-9));
  }

  TEST_CASE("all-miss assignment") {
    const auto t = fixture::reference_topology();
    const auto pt = shortest_paths(t);
    const auto inst = sample_instance(t, {}, 5, 4);
    const auto eval = evaluate_assignment(inst, pt, std::vector<std::uint8_t>(30, 0), std::vector<std::uint8_t>(210, 0));
    CHECK(eval.feasible());
    CHECK(eval.objective == doctest::Approx(inst.beta * 5 * 12).epsilon(1e-12));
    CHECK(eval.hosting_cost == 0.0);
  }

  TEST_CASE("penalty accounting") {
    const auto t = fixture::line(2, {0}, {1});
    const auto pt = shortest_paths(t);
    auto inst = fixture::instance(t, {{10.0, 10.0, {1.0}}}, 100.0, 5.0);
    inst.alpha = inst.beta = 1.0;
    const auto eval = evaluate_assignment(inst, pt, {1}, {1});
    REQUIRE(eval.violations.size() == 1);
    CHECK(eval.violations[0].family == RowFamily::link_capacity);
    CHECK(eval.violations[0].link == 0);
    CHECK_FALSE(eval.feasible());
    CHECK(eval.penalty == doctest::Approx(1.0 * 12 * 1));
    CHECK(eval.total_with_penalty == doctest::Approx(eval.objective + 12.0));

    PenaltyConfig custom;
    custom.per_violation = 3.5;
    const auto priced = evaluate_assignment(inst, pt, {1}, {1}, custom);
    CHECK(priced.penalty == doctest::Approx(3.5));

    // A route without its host and a storage overflow count separately.
    auto crowded = fixture::instance(t, {{60.0, 1.0, {1.0}}, {60.0, 1.0, {1.0}}}, 100.0, 100.0);
    const auto both = evaluate_assignment(crowded, pt, {1, 1}, {1, 0}, custom);
    CHECK(both.violations.size() == 1);
    CHECK(both.violations[0].family == RowFamily::storage);
    CHECK(both.overloaded == std::vector<int>{0});
    const auto orphan = evaluate_assignment(crowded, pt, {0, 0}, {1, 0}, custom);
    CHECK(orphan.violations.size() == 1);
    CHECK(orphan.violations[0].family == RowFamily::route_needs_host);
    CHECK(orphan.penalty == doctest::Approx(3.5));
  }

  TEST_CASE("branch-and-bound equals enumeration on tiny instances") {
    std::mt19937_64 rng(77);
    int cached = 0, disagreements = 0;
    for (int trial = 0; trial < 80; ++trial) {
      const auto c = tiny_case(rng, static_cast<std::uint64_t>(trial));
      const auto oracle = enumerate_optimal(c.instance, c.paths);
      const auto brute = brute_force(c.instance, c.paths, 0.01);
      BnbOptions opts;
      opts.record_trace = true;
      const auto s = solve_bnb(build_milp(c.instance, c.paths), opts);
      REQUIRE(s.status == SolveStatus::optimal);
      CHECK(s.objective == doctest::Approx(oracle.objective).epsilon(1e-6));
      CHECK(oracle.objective == doctest::Approx(brute.best).epsilon(1e-9));
      const auto eval = evaluate_solution(c.instance, c.paths, s);
      CHECK(eval.objective == doctest::Approx(s.objective).epsilon(1e-6));
      if (!eval.feasible()) ++disagreements;
      for (const auto& node : s.trace)
        if (node.parent >= 0) CHECK(node.bound >= node.parent_bound - 1e-9);
      for (int k : s.placement()) cached += k >= 0;
    }
    CHECK(disagreements == 0);
    CHECK(cached > 20);
  }

  TEST_CASE("oracle refuses oversized instances") {
    const auto t = fixture::reference_topology();
    const auto pt = shortest_paths(t);
    CHECK(code_of([&] { enumerate_optimal(sample_instance(t, {}, 5, 1), pt); }) == ErrorCode::instance_too_large);
  }

  TEST_CASE("reference instances: evaluator agrees and the relaxation bounds") {
    const auto t = fixture::reference_topology();
    const auto pt = shortest_paths(t);
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      const auto inst = sample_instance(t, {}, 5, seed);
      const auto m = build_milp(inst, pt);
      BnbOptions opts;
      opts.record_trace = true;
      opts.warm_start = gca_warm_start(m, inst, pt);
      const auto s = solve_bnb(m, opts);
      REQUIRE(s.status == SolveStatus::optimal);
      const auto eval = evaluate_solution(inst, pt, s);
      CHECK(eval.feasible());
      CHECK(eval.objective == doctest::Approx(s.objective).epsilon(1e-6));
      CHECK(m.max_violation(s.values) < 1e-6);
      const auto root = solve_lp_relaxation(m, model_bounds(m));
      REQUIRE(root.status == lp::Status::optimal);
      CHECK(root.objective <= s.objective + 1e-9);
      for (const auto& node : s.trace)
        if (node.parent >= 0) CHECK(node.bound >= node.parent_bound - 1e-9);

      // Pinning every binary leaves the LP no freedom.
      auto pinned = model_bounds(m);
      for (int j = 0; j < m.num_vars(); ++j)
        if (m.vars[j].integer) pinned.lower[j] = pinned.upper[j] = s.values[j];
      const auto fixed = solve_lp_relaxation(m, pinned);
      REQUIRE(fixed.status == lp::Status::optimal);
      CHECK(fixed.objective == doctest::Approx(eval.objective).epsilon(1e-7));
    }
  }

  TEST_CASE("all-zero reduction relaxes to the all-miss cost") {
    const auto t = fixture::reference_topology();
    const auto pt = shortest_paths(t);
    const auto inst = sample_instance(t, {}, 5, 3);
    const auto m = apply_reduction(build_milp(inst, pt), PredictionMatrix::zeros(5, 6));
    const auto lp = solve_lp_relaxation(m, model_bounds(m));
    REQUIRE(lp.status == lp::Status::optimal);
    CHECK(lp.objective == doctest::Approx(inst.beta * 5 * 12).epsilon(1e-12));
  }

  TEST_CASE("determinism and limits") {
    const auto t = fixture::reference_topology();
    const auto pt = shortest_paths(t);
    const auto inst = sample_instance(t, {}, 5, 12);
    const auto m = build_milp(inst, pt);
    const auto a = solve_bnb(m), b = solve_bnb(m);
    CHECK(a.objective == b.objective);
    CHECK(a.stats.nodes == b.stats.nodes);
    CHECK(a.x == b.x);

    const auto big = build_milp(sample_instance(t, {}, 10, 12), pt);
    BnbOptions opts;
    opts.limits.node_limit = 2;
    opts.warm_start = gca_warm_start(big, sample_instance(t, {}, 10, 12), pt);
    const auto capped = solve_bnb(big, opts);
    CHECK(capped.status == SolveStatus::timeout_incumbent);
    CHECK(capped.has_solution);
    CHECK(big.max_violation(capped.values) < 1e-6);
  }

  TEST_CASE("infeasible when the model is mutated") {
    const auto t = fixture::line(2, {0}, {1});
    const auto pt = shortest_paths(t);
    auto m = build_milp(fixture::instance(t, {{10.0, 1.0, {1.0}}}), pt);
    m.rows.push_back({RowFamily::one_host, {{m.x(0, 0), 1.0}}, Sense::ge, 2.0});
    const auto s = solve_bnb(m);
    CHECK(s.status == SolveStatus::infeasible);
    CHECK_FALSE(s.has_solution);
  }

  TEST_CASE("solution json") {
    Topology t;
    const auto inst = cache_hit_fixture(t);
    const auto pt = shortest_paths(t);
    const auto eval = evaluate_solution(inst, pt, solve_bnb(build_milp(inst, pt)));
    const auto j = evaluated_to_json(eval);
    CHECK(j.at("placement") == nlohmann::json::array({0}));
    CHECK(j.at("violations").empty());
  }
}
