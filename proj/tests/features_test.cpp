#include <doctest.h>

#include <numeric>

#include "edgecache/features.hpp"
#include "support.hpp"

using namespace edgecache;
using fixture::code_of;

TEST_SUITE("features") {
  TEST_CASE("encoding of ratios") {
    const auto t = fixture::line(3, {0}, {2});
    auto inst = fixture::instance(t, {{10.0, 1.0, {1.0}}, {50.0, 200.0, {1.0}}}, 100.0, 100.0);
    const auto img = encode_image(inst);
    CHECK(img.width() == 1 + 1 + 2);
    CHECK(img.p(0, 0) == 1.0);
    CHECK(img.q(0, 0) == doctest::Approx(0.1));
    CHECK(img.r(0, 0) == doctest::Approx(0.01));
    CHECK(img.r(0, 1) == doctest::Approx(0.01));
    CHECK(img.q(1, 0) == doctest::Approx(0.5));
    CHECK(img.r(1, 0) == 1.0);  // 200 / 100 clamps
  }

  TEST_CASE("reference image shape and range") {
    const auto t = fixture::reference_topology();
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const auto inst = sample_instance(t, {}, 5, seed);
      const auto img = encode_image(inst);
      CHECK(img.width() == 33);
      CHECK(img.pixels.size() == 5u * 33u);
      for (double v : img.pixels) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
      for (int k = 0; k < 5; ++k) {
        double sum = 0.0;
        for (int a = 0; a < 7; ++a) sum += img.p(k, a);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("storage commitment rescales q") {
    const auto t = fixture::line(3, {0}, {2});
    const auto pt = shortest_paths(t);
    auto inst = fixture::instance(t, {{20.0, 1.0, {1.0}}, {10.0, 1.0, {1.0}}}, 100.0, 100.0);
    const auto img = update_image(encode_image(inst), pt, {{0, 0, 0}});
    CHECK(img.q(1, 0) == doctest::Approx(10.0 / 80.0));
    CHECK(img.q(0, 0) == doctest::Approx(0.2));  // committed row untouched
    CHECK(img.residual_storage[0] == doctest::Approx(80.0));
  }

  TEST_CASE("bandwidth commitment along a two-link path") {
    const auto t = fixture::line(3, {0}, {2});
    const auto pt = shortest_paths(t);
    auto inst = fixture::instance(t, {{10.0, 10.0, {1.0}}, {10.0, 4.0, {1.0}}}, 100.0, 50.0);
    const auto img = update_image(encode_image(inst), pt, {{0, 0, 0}});
    CHECK(img.r(1, 0) == doctest::Approx(4.0 / 40.0));
    CHECK(img.r(1, 1) == doctest::Approx(4.0 / 40.0));
    CHECK(img.r(0, 0) == doctest::Approx(10.0 / 50.0));
  }

  TEST_CASE("overdrawn residuals saturate") {
    const auto t = fixture::line(3, {0}, {2});
    const auto pt = shortest_paths(t);
    auto inst = fixture::instance(t, {{75.0, 1.0, {1.0}}, {50.0, 1.0, {1.0}}, {40.0, 1.0, {1.0}}}, 100.0, 100.0);
    auto img = update_image(encode_image(inst), pt, {{0, 0, 0}});
    CHECK(img.q(1, 0) == 1.0);  // 50 / 25 clamps
    img = update_image(img, pt, {{1, 0, 0}});
    CHECK(img.residual_storage[0] < 0.0);
    CHECK(img.q(2, 0) == 1.0);
  }

  TEST_CASE("empty commitment list is the identity") {
    const auto t = fixture::reference_topology();
    const auto pt = shortest_paths(t);
    const auto img = encode_image(sample_instance(t, {}, 5, 2));
    const auto same = update_image(img, pt, {});
    CHECK(same.pixels == img.pixels);
    CHECK(same.residual_storage == img.residual_storage);
  }

  TEST_CASE("commitments never lower q and keep entries in range") {
    const auto t = fixture::reference_topology();
    const auto pt = shortest_paths(t);
    std::mt19937_64 rng(6);
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      const auto inst = sample_instance(t, {}, 20, seed);
      auto img = encode_image(inst);
      std::vector<int> order(20);
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      for (int step = 0; step < 4; ++step) {
        std::vector<Commitment> batch;
        for (int i = 0; i < 5; ++i)
          batch.push_back({order[step * 5 + i], static_cast<int>(rng() % 6), static_cast<int>(rng() % 7)});
        const auto next = update_image(img, pt, batch);
        for (int k = 0; k < 20; ++k) {
          if (next.committed[k]) continue;
          for (int e = 0; e < 6; ++e) CHECK(next.q(k, e) >= img.q(k, e));
          for (int l = 0; l < 20; ++l) CHECK(next.r(k, l) >= img.r(k, l));
        }
        for (double v : next.pixels) {
          CHECK(v >= 0.0);
          CHECK(v <= 1.0);
        }
        img = next;
      }
    }
  }

  TEST_CASE("invalid commitments") {
    const auto t = fixture::line(3, {0}, {2});
    const auto pt = shortest_paths(t);
    const auto img = encode_image(fixture::instance(t, {{10.0, 1.0, {1.0}}}));
    CHECK(code_of([&] { update_image(img, pt, {{3, 0, 0}}); }) == ErrorCode::unknown_flow);
    CHECK(code_of([&] { update_image(img, pt, {{0, 1, 0}}); }) == ErrorCode::unknown_edge_cloud);
    CHECK(code_of([&] { update_image(img, pt, {{0, 0, 0}, {0, 0, 0}}); }) == ErrorCode::invalid_argument);
    const auto once = update_image(img, pt, {{0, 0, 0}});
    CHECK(code_of([&] { update_image(once, pt, {{0, 0, 0}}); }) == ErrorCode::invalid_argument);
  }

  TEST_CASE("blocks pad with zero rows") {
    const auto t = fixture::reference_topology();
    const auto img = encode_image(sample_instance(t, {}, 7, 1));
    const auto tail = img.block(5, 5);
    CHECK(tail.size() == 5u * 33u);
    for (int c = 0; c < 33; ++c) {
      CHECK(tail[c] == img.at(5, c));
      CHECK(tail[33 + c] == img.at(6, c));
      CHECK(tail[2 * 33 + c] == 0.0);
    }
  }

  TEST_CASE("pgm export") {
    const auto t = fixture::reference_topology();
    auto img = encode_image(sample_instance(t, {}, 5, 1));
    img.pixels[0] = 1.0;
    img.pixels[1] = 0.0;
    const auto pgm = export_pgm(img);
    const std::string header = "P5 33 5 255\n";
    REQUIRE(pgm.size() == header.size() + 165);
    CHECK(pgm.substr(0, header.size()) == header);
    CHECK(static_cast<unsigned char>(pgm[header.size()]) == 255);
    CHECK(static_cast<unsigned char>(pgm[header.size() + 1]) == 0);
  }
}
