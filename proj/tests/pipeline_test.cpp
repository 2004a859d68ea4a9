#include <doctest.h>

#include <numeric>

#include "edgecache/greedy.hpp"
#include "edgecache/pipeline.hpp"
#include "support.hpp"

using namespace edgecache;
using fixture::code_of;

namespace {

struct Setup {
  Topology topology = fixture::reference_topology();
  PathTables paths = shortest_paths(topology);
  CnnBank bank = init_bank(small(), 5, 6, 3);

  static Architecture small() {
    Architecture a;
    a.conv_maps = {4};
    a.hidden = {16};
    return a;
  }
};

const Setup& setup() {
  static const Setup s;
  return s;
}

Predictions row(std::vector<double> p) { return {1, static_cast<int>(p.size()), std::move(p)}; }

double exact_optimum(const Instance& inst, const PathTables& pt) {
  const auto m = build_milp(inst, pt);
  BnbOptions opts;
  opts.warm_start = gca_warm_start(m, inst, pt);
  const auto s = solve_bnb(m, opts);
  REQUIRE(s.status == SolveStatus::optimal);
  return s.objective;
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("threshold examples") {
    const auto p = row({0.8, 0, 0.2, 0, 0, 0});
    CHECK(threshold_filter(p, 0.001).allowed == std::vector<std::uint8_t>{1, 0, 1, 0, 0, 0});
    CHECK(threshold_filter(p, 0.5).allowed == std::vector<std::uint8_t>{1, 0, 0, 0, 0, 0});
    CHECK(threshold_filter(row(std::vector<double>(6, 1.0 / 6.0)), 0.001).allowed ==
          std::vector<std::uint8_t>(6, 1));
    CHECK(threshold_filter(row({0.001, 0.999}), 0.001).allowed == std::vector<std::uint8_t>{1, 1});
    CHECK(p.argmax(0) == 0);
    CHECK(row({0.5, 0.5}).argmax(0) == 0);
  }

  TEST_CASE("lower thresholds only add ones") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
      Predictions p{4, 6, std::vector<double>(24)};
      for (auto& v : p.probs) v = std::pow(u(rng), 6.0);
      const double lo = u(rng) * 0.5, hi = lo + u(rng) * 0.5;
      const auto a = threshold_filter(p, lo), b = threshold_filter(p, hi);
      for (std::size_t i = 0; i < a.allowed.size(); ++i) CHECK(a.allowed[i] >= b.allowed[i]);
    }
  }

  TEST_CASE("mode names") {
    CHECK(omode_from_string("argmax") == OMode::argmax);
    CHECK(to_string(OMode::threshold) == "threshold");
    CHECK(code_of([] { omode_from_string("beam"); }) == ErrorCode::invalid_argument);
  }

  TEST_CASE("single block equals the plain bank prediction") {
    const auto& s = setup();
    const auto inst = sample_instance(s.topology, {}, 5, 1);
    const auto r = infer_blocks(s.bank, inst, s.paths);
    CHECK(r.blocks == 1);
    CHECK(r.block_images.size() == 1);
    const auto img = encode_image(inst);
    for (int k = 0; k < 5; ++k) {
      const auto p = forward(s.bank.models[k], img);
      for (int e = 0; e < 6; ++e) CHECK(r.predictions.at(k, e) == p[e]);
      CHECK(r.commitments[k].cloud == r.predictions.argmax(k));
    }
  }

  TEST_CASE("fifteen flows run as three blocks with two updates") {
    const auto& s = setup();
    const auto inst = sample_instance(s.topology, {}, 15, 4);
    const auto r = infer_blocks(s.bank, inst, s.paths);
    CHECK(r.blocks == 3);
    REQUIRE(r.block_images.size() == 3);
    CHECK(r.commitments.size() == 15);
    CHECK(r.block_images[0].pixels == encode_image(inst).pixels);
    CHECK(r.block_images[1].pixels != r.block_images[0].pixels);
    CHECK(r.block_images[2].pixels != r.block_images[1].pixels);
    for (int k = 0; k < 5; ++k) CHECK(r.block_images[1].committed[k] == 1);
    for (int k = 5; k < 15; ++k) CHECK(r.block_images[1].committed[k] == 0);
  }

  TEST_CASE("second block sees the storage taken by the first") {
    const auto& s = setup();
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto inst = sample_instance(s.topology, {}, 10, seed);
      const auto r = infer_blocks(s.bank, inst, s.paths);
      REQUIRE(r.blocks == 2);
      const auto& before = r.block_images[0];
      const auto& after = r.block_images[1];
      std::vector<double> taken(6, 0.0);
      for (int k = 0; k < 5; ++k) taken[r.commitments[k].cloud] += inst.flows[k].storage;
      for (int k = 5; k < 10; ++k)
        for (int e = 0; e < 6; ++e) {
          if (taken[e] == 0.0) {
            CHECK(after.q(k, e) == before.q(k, e));
          } else if (before.q(k, e) < 1.0) {
            CHECK(after.q(k, e) > before.q(k, e));
            const double residual = inst.ec_capacity[e] - taken[e];
            CHECK(after.q(k, e) == doctest::Approx(residual > 0 ? std::min(1.0, inst.flows[k].storage / residual) : 1.0));
          }
        }
    }
  }

  TEST_CASE("partial last block is padded") {
    const auto& s = setup();
    const auto inst = sample_instance(s.topology, {}, 7, 2);
    const auto r = infer_blocks(s.bank, inst, s.paths);
    CHECK(r.blocks == 2);
    CHECK(r.o.flows == 7);
    const auto pixels = r.block_images[1].block(5, 5);
    for (int k = 0; k < 2; ++k) {
      const auto p = forward(s.bank.models[k], pixels);
      for (int e = 0; e < 6; ++e) CHECK(r.predictions.at(5 + k, e) == p[e]);
    }
  }

  TEST_CASE("argmax mode keeps one edge cloud per later flow") {
    const auto& s = setup();
    const auto inst = sample_instance(s.topology, {}, 10, 8);
    InferOptions opts;
    opts.o_mode = OMode::argmax;
    const auto r = infer_blocks(s.bank, inst, s.paths, opts);
    const auto plain = infer_blocks(s.bank, inst, s.paths);
    for (int k = 0; k < 10; ++k) {
      int ones = 0;
      for (int e = 0; e < 6; ++e) ones += r.o.at(k, e);
      if (k < 5) {
        for (int e = 0; e < 6; ++e) CHECK(r.o.at(k, e) == plain.o.at(k, e));
      } else {
        CHECK(ones == 1);
        CHECK(r.o.at(k, r.predictions.argmax(k)));
      }
    }
  }

  TEST_CASE("empty rows keep their argmax") {
    const auto& s = setup();
    const auto inst = sample_instance(s.topology, {}, 5, 1);
    InferOptions opts;
    opts.delta = 0.99;
    const auto r = infer_blocks(s.bank, inst, s.paths, opts);
    for (int k = 0; k < 5; ++k) {
      int ones = 0;
      for (int e = 0; e < 6; ++e) ones += r.o.at(k, e);
      CHECK(ones == 1);
      CHECK(r.o.at(k, r.predictions.argmax(k)));
    }
  }

  TEST_CASE("inference errors") {
    const auto& s = setup();
    const auto inst = sample_instance(s.topology, {}, 5, 1);
    CHECK(code_of([&] { infer_blocks(CnnBank{}, inst, s.paths); }) == ErrorCode::missing_bank);
    InferOptions bad;
    bad.delta = 0.0;
    CHECK(code_of([&] { infer_blocks(s.bank, inst, s.paths, bad); }) == ErrorCode::invalid_argument);
    const auto t = fixture::line(3, {0}, {1, 2});
    const auto other = fixture::instance(t, {{10.0, 1.0, {1.0}}});
    CHECK(code_of([&] { infer_blocks(s.bank, other, shortest_paths(t)); }) == ErrorCode::shape_mismatch);
    auto narrow = s.bank;
    narrow.models.pop_back();
    CHECK(code_of([&] { infer_blocks(narrow, inst, s.paths); }) == ErrorCode::shape_mismatch);
  }

  TEST_CASE("no-op reduction reproduces the exact optimum") {
    const auto& s = setup();
    PipelineOptions opts;
    opts.infer.delta = 1e-300;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto inst = sample_instance(s.topology, {}, 5, seed);
      const auto r = solve_with_cnn(inst, s.paths, s.bank, opts);
      CHECK(r.reduced_variables == 376);
      CHECK(r.solution.objective == doctest::Approx(exact_optimum(inst, s.paths)).epsilon(1e-6));
    }
  }

  TEST_CASE("optimal support survives the reduction") {
    const auto& s = setup();
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto inst = sample_instance(s.topology, {}, 5, seed);
      const auto full = build_milp(inst, s.paths);
      const auto exact = solve_bnb(full);
      auto o = PredictionMatrix::zeros(5, 6);
      for (int k = 0; k < 5; ++k)
        if (int e = exact.placement()[k]; e >= 0) o.allowed[k * 6 + e] = 1;
      const auto reduced = solve_bnb(apply_reduction(full, o));
      CHECK(reduced.objective == doctest::Approx(exact.objective).epsilon(1e-9));
    }
  }

  TEST_CASE("lower thresholds never raise the reduced optimum") {
    const auto& s = setup();
    const auto inst = sample_instance(s.topology, {}, 5, 6);
    double previous = std::numeric_limits<double>::infinity();
    int last_count = 0;
    for (double delta : {0.3, 0.2, 0.15, 0.1, 1e-3}) {
      PipelineOptions opts;
      opts.infer.delta = delta;
      const auto r = solve_with_cnn(inst, s.paths, s.bank, opts);
      CHECK(r.solution.objective <= previous + 1e-9);
      CHECK(r.reduced_variables >= last_count);
      CHECK(r.reduced_variables <= 376);
      previous = r.solution.objective;
      last_count = r.reduced_variables;
    }
  }

  TEST_CASE("pipeline answers are always feasible") {
    const auto& s = setup();
    PipelineOptions opts;
    opts.limits.time_limit_s = 2.0;
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
      const int flows = seed < 8 ? 5 : 10;
      const auto inst = sample_instance(s.topology, {}, flows, 100 + seed);
      for (double delta : {0.001, 0.2, 0.9}) {
        opts.infer.delta = delta;
        const auto r = solve_with_cnn(inst, s.paths, s.bank, opts);
        CHECK(r.solution.feasible());
        CHECK(r.solution.has_solution);
        CHECK(r.reduced_variables <= full_variable_count(build_milp(inst, s.paths).dims));
        CHECK(r.total_s >= r.predict_s + r.solve_s - 1e-9);
        for (int k = 0; k < flows; ++k)
          for (int e = 0; e < 6; ++e)
            if (!r.o.at(k, e)) CHECK(r.solution.x[k * 6 + e] == 0);
      }
    }
  }
}
