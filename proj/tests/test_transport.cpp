#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "hmdetect/errors.hpp"
#include "hmdetect/transport.hpp"
#include "oracles.hpp"

using namespace hmdetect;

namespace {

PointCloud cloud(std::initializer_list<std::initializer_list<double>> xs) {
  Points p(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(xs.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : xs) {
    Eigen::Index j = 0;
    for (double v : r) p(i, j++) = v;
    ++i;
  }
  return {p};
}

oracle::Mat to_mat(const Points& p) {
  oracle::Mat m(static_cast<std::size_t>(p.rows()));
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index j = 0; j < p.cols(); ++j) m[static_cast<std::size_t>(i)].push_back(p(i, j));
  return m;
}

}  // namespace

TEST_CASE("W1 examples") {
  const auto a = PointCloud{fixtures::gaussian(20, 3, 1)};
  CHECK(w1_exact(a, a) == 0.0);
  CHECK(w1_exact(cloud({{0, 0}}), cloud({{3, 4}})) == 5.0);
  CHECK(w1_exact(cloud({{0}, {1}}), cloud({{2}, {3}})) == 2.0);
  CHECK(oracle::w1_permutations({{0}, {1}}, {{2}, {3}}) == 2.0);
}

TEST_CASE("assignment solver finds the known optimum") {
  Matrix cost(3, 3);
  cost << 4, 1, 3, 2, 0, 5, 3, 2, 2;
  const auto a = solve_assignment(cost);
  double total = 0;
  for (int i = 0; i < 3; ++i) total += cost(i, a[static_cast<std::size_t>(i)]);
  CHECK(total == 5.0);
}

TEST_CASE("W1 equals brute-force permutation search for n <= 7") {
  Rng rng(3);
  for (int trial = 0; trial < 60; ++trial) {
    const auto n = 1 + rng.below(7);
    const auto d = 1 + rng.below(4);
    const Points a = fixtures::gaussian(n, d, rng.next());
    const Points b = fixtures::gaussian(n, d, rng.next(), 0.5, 2.0);
    const double expected = oracle::w1_permutations(to_mat(a), to_mat(b));
    CHECK(std::abs(w1_exact({a}, {b}) - expected) < 1e-12);
  }
}

TEST_CASE("W1 metric axioms on random triples") {
  Rng rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const auto n = 1 + rng.below(50);
    const PointCloud a{fixtures::gaussian(n, 3, rng.next())};
    const PointCloud b{fixtures::gaussian(n, 3, rng.next(), 1.0)};
    const PointCloud c{fixtures::gaussian(n, 3, rng.next(), -0.5, 1.5)};
    CHECK(w1_exact(a, a) == 0.0);
    CHECK(std::abs(w1_exact(a, b) - w1_exact(b, a)) < 1e-9);
    CHECK(w1_exact(a, c) <= w1_exact(a, b) + w1_exact(b, c) + 1e-9);
  }
}

TEST_CASE("translation of a cloud moves it by exactly the shift norm") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Points a = fixtures::gaussian(1 + rng.below(60), 4, rng.next());
    Vector v(4);
    for (auto& x : v) x = rng.normal() * 3;
    const Points b = a.rowwise() + v.transpose();
    CHECK(std::abs(w1_exact({a}, {b}) - v.norm()) < 1e-9);
  }
}

TEST_CASE("layer discrimination keeps order and tracks shifts") {
  const Points base = fixtures::gaussian(40, 5, 9);
  std::vector<LayerClouds> layers;
  for (int shift = 0; shift <= 2; ++shift) {
    Points adv = base;
    adv.col(0).array() += shift;
    layers.push_back({"layer" + std::to_string(shift), {base}, {adv}});
  }
  const auto out = layer_discrimination(layers, 2);
  REQUIRE(out.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(out[static_cast<std::size_t>(i)].layer_tag == "layer" + std::to_string(i));
    CHECK(std::abs(out[static_cast<std::size_t>(i)].w1 - i) < 1e-9);
  }
}

TEST_CASE("mismatched clouds are rejected") {
  CHECK_THROWS_AS(w1_exact(cloud({{0}, {1}}), cloud({{0}})), ValidationError);
  CHECK_THROWS_AS(w1_exact(cloud({{0, 1}}), cloud({{0}})), ValidationError);
  CHECK_THROWS_AS(layer_discrimination({{"x", cloud({{0}}), cloud({{0}, {1}})}}), ValidationError);
}
