#include "doctest.h"

#include <random>
#include <vector>

#include "compsem/error.hpp"
#include "compsem/pooling.hpp"
#include "oracles.hpp"

using namespace compsem;
using Rows = std::vector<std::vector<double>>;

TEST_CASE("nospec is the mean of the word tokens") {
  Rows toks{{1, 0}, {0, 1}};
  TokenizedInstance inst{toks, {0, 2}, std::nullopt, std::nullopt};
  CHECK(pool_nc(inst, NcVariant::nospec) == std::vector<double>{0.5, 0.5});
}

TEST_CASE("withcls adds the begin marker") {
  Rows toks{{1, 1}, {1, 0}, {0, 1}};
  TokenizedInstance inst{toks, {1, 3}, 0, std::nullopt};
  auto v = pool_nc(inst, NcVariant::withcls);
  CHECK(v[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(v[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("all adds both markers") {
  Rows toks{{3, 0}, {1, 0}, {0, 1}, {0, 3}};
  TokenizedInstance inst{toks, {1, 3}, 0, 3};
  CHECK(pool_nc(inst, NcVariant::all) == std::vector<double>{1.0, 1.0});
}

TEST_CASE("missing markers and bad spans are rejected") {
  Rows toks{{1, 0}, {0, 1}, {1, 1}};
  CHECK_THROWS_AS(pool_nc({toks, {0, 2}, std::nullopt, std::nullopt}, NcVariant::withcls), DataError);
  CHECK_THROWS_AS(pool_nc({toks, {0, 2}, 2, std::nullopt}, NcVariant::all), DataError);
  CHECK_THROWS_AS(pool_nc({toks, {1, 1}, std::nullopt, std::nullopt}, NcVariant::nospec), DataError);
  CHECK_THROWS_AS(pool_nc({toks, {1, 4}, std::nullopt, std::nullopt}, NcVariant::nospec), DataError);
  CHECK_THROWS_AS(pool_nc({toks, {0, 2}, 1, std::nullopt}, NcVariant::withcls), DataError);
}

TEST_CASE("random all-variant instances match the brute-force mean") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 4 + rep % 9, dim = 8 + rep;
    Rows toks(n, std::vector<double>(dim));
    for (auto& r : toks)
      for (auto& x : r) x = u(rng);
    TokenizedInstance inst{toks, {1, n - 1}, 0, n - 1};
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i) idx.push_back(i);
    auto got = pool_nc(inst, NcVariant::all);
    auto want = oracle::naive_mean(toks, idx);
    for (std::size_t d = 0; d < dim; ++d) CHECK(std::fabs(got[d] - want[d]) <= 1e-12);
  }
}

TEST_CASE("in-context mean") {
  Rows one{{2, 0}};
  auto r1 = pool_in_context(one);
  CHECK(r1.vector == std::vector<double>{2, 0});
  CHECK(r1.n_instances == 1);

  Rows sym{{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  auto r4 = pool_in_context(sym);
  CHECK(r4.vector == std::vector<double>{0, 0});
  CHECK(r4.n_instances == 4);

  CHECK_THROWS_AS(pool_in_context(Rows{}), DataError);
  CHECK_THROWS_AS(pool_in_context(Rows{{1, 2}, {1}}), DataError);
}

TEST_CASE("89 random instances match the summation oracle") {
  std::mt19937_64 rng(89);
  std::normal_distribution<double> g;
  Rows vs(89, std::vector<double>(64));
  for (auto& r : vs)
    for (auto& x : r) x = g(rng);
  std::vector<std::size_t> idx(89);
  for (std::size_t i = 0; i < 89; ++i) idx[i] = i;
  auto got = pool_in_context(vs);
  auto want = oracle::naive_mean(vs, idx);
  CHECK(got.n_instances == 89);
  for (std::size_t d = 0; d < 64; ++d) CHECK(std::fabs(got.vector[d] - want[d]) <= 1e-12);
}

TEST_CASE("copies of one vector pool to that vector exactly") {
  std::vector<double> v{0.1, -1.0 / 3.0, 7.7, 1e-5};
  for (std::size_t n : {1u, 3u, 7u, 8u, 9u, 100u}) {
    Rows copies(n, v);
    CHECK(pool_in_context(copies).vector == v);
  }
}

TEST_CASE("templated pooling") {
  Rows single{{0, 0}, {4, 5}, {1, 1}};
  TokenizedInstance one{single, {1, 2}, 0, 2};
  CHECK(pool_templated(one) == std::vector<double>{4, 5});

  Rows two{{9, 9}, {2, 0}, {0, 2}, {9, 9}};
  TokenizedInstance sub{two, {1, 3}, 0, 3};
  CHECK(pool_templated(sub) == std::vector<double>{1, 1});

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  Rows rnd(6, std::vector<double>(16));
  for (auto& r : rnd)
    for (auto& x : r) x = u(rng);
  TokenizedInstance inst{rnd, {2, 5}, 0, 5};
  Rows nested{pool_nc(inst, NcVariant::nospec)};
  CHECK(pool_templated(inst) == pool_in_context(nested).vector);
}

TEST_CASE("single-token nospec is the identity") {
  Rows toks{{0, 0, 0}, {0.3, -2.5, 1e10}, {0, 0, 0}};
  CHECK(pool_nc({toks, {1, 2}, 0, 2}, NcVariant::nospec) == toks[1]);
}
