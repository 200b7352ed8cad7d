#include "doctest.h"

#include <random>

#include "compsem/error.hpp"
#include "compsem/measures.hpp"
#include "oracles.hpp"

using namespace compsem;

namespace {

LayeredEmbedding emb(const std::string& w, std::vector<float> v) {
  const std::size_t d = v.size();
  return LayeredEmbedding(w, d, 1, false, std::move(v), 1);
}

EmbeddingStore nc_store(std::vector<LayeredEmbedding> es) {
  const std::size_t d = es.front().dim();
  return EmbeddingStore(RepresentationSetting{}, d, 1, false, "t", std::move(es));
}

}  // namespace

TEST_CASE("cosine basics") {
  std::vector<double> a{3, 4}, b{1, 0}, c{0, 1}, z{0, 0};
  CHECK(cosine(a, a) == 1.0);
  CHECK(cosine(b, c) == 0.0);
  CHECK_THROWS_AS(cosine(a, z), DataError);
  CHECK_THROWS_AS(cosine(a, std::vector<double>{1, 2, 3}), DataError);
  std::vector<float> fa{1e-20f, 1e-20f}, fb{2e-20f, 2e-20f};
  CHECK(cosine(fa, fb) == doctest::Approx(1.0));
}

TEST_CASE("cosine against the extended-precision oracle") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g;
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> u(300), v(300);
    for (auto& x : u) x = g(rng);
    for (auto& x : v) x = g(rng);
    CHECK(std::fabs(cosine(u, v) - oracle::cosine(u, v)) <= 1e-12);
  }
}

TEST_CASE("measure boundary values") {
  CHECK(lmd({0, 1}) == 10.0);
  CHECK(lmd({1, 0}) == 0.0);
  CHECK(lmd({0.37, 0.37}) == 5.0);
  CHECK(st({1, 1}) == 7.0);
  CHECK(st({0, 0}) == 1.0);
  CHECK(st({0.5, 0.5}) == 4.0);
  CHECK(st_weighted({0.123, 1.0}, 0.0) == 7.0);
  CHECK(st_weighted({1.0, 0.77}, 1.0) == 7.0);
  CHECK_THROWS_AS(st_weighted({0.5, 0.5}, 1.5), DataError);
  CHECK_THROWS_AS(st_weighted({0.5, 0.5}, -0.1), DataError);
}

TEST_CASE("weighted ST reduces to ST, exchange antisymmetry, monotonicity") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 2000; ++i) {
    SimilarityPair p{u(rng), u(rng)};
    SimilarityPair s{p.right, p.left};
    CHECK(st_weighted(p, 0.5) == st(p));
    CHECK(std::fabs(lmd(s) - (10.0 - lmd(p))) <= 1e-12);
    CHECK(st(s) == st(p));
    SimilarityPair up_r{p.left, p.right + 0.01}, up_l{p.left + 0.01, p.right};
    CHECK(lmd(up_r) > lmd(p));
    CHECK(lmd(up_l) < lmd(p));
    CHECK(st(up_r) > st(p));
    CHECK(st(up_l) > st(p));
  }
}

TEST_CASE("weight grid") {
  auto g = WeightGrid::standard();
  REQUIRE(g.weights.size() == 11);
  CHECK(g.weights.front() == 0.0);
  CHECK(g.weights[5] == 0.5);
  CHECK(g.weights.back() == 1.0);
  CHECK_THROWS_AS((WeightGrid{{0.2, 1.2}}.validate()), UsageError);
  CHECK_THROWS_AS((WeightGrid{{}}.validate()), UsageError);
}

TEST_CASE("compound equal to left gives L=1") {
  Dataset ds({Triplet{"handgun", "hand", "gun", 8.13, 6.29}}, {}, {});
  auto store = nc_store({emb("hand", {1, 2, 0}), emb("handgun", {1, 2, 0}), emb("gun", {2, 0, 1})});
  MeasureTable t = compute_table(ds, store, RepresentationSetting{}, 1);
  const MeasureRow& r = t.rows.at("handgun");
  CHECK(r.left_sim == 1.0);
  CHECK(r.lmd_pred == doctest::Approx(5 * r.right_sim).epsilon(1e-15));
  CHECK(r.st_pred == doctest::Approx(3 * (1 + r.right_sim) + 1).epsilon(1e-15));
}

TEST_CASE("scale invariance of the measures") {
  Dataset ds({Triplet{"handgun", "hand", "gun", 8.13, 6.29}}, {}, {});
  auto a = nc_store({emb("hand", {1, 2, 3}), emb("handgun", {2, -1, 1}), emb("gun", {0.5f, 0.5f, 4})});
  auto b = nc_store({emb("hand", {4, 8, 12}), emb("handgun", {0.5f, -0.25f, 0.25f}), emb("gun", {8, 8, 64})});
  auto ra = compute_table(ds, a, {}, 1).rows.at("handgun");
  auto rb = compute_table(ds, b, {}, 1).rows.at("handgun");
  CHECK(ra.lmd_pred == doctest::Approx(rb.lmd_pred).epsilon(1e-14));
  CHECK(ra.st_pred == doctest::Approx(rb.st_pred).epsilon(1e-14));
}

TEST_CASE("missing words shrink the table and are itemized") {
  Dataset ds({Triplet{"handgun", "hand", "gun", 8.13, 6.29}, Triplet{"wartime", "war", "time", 3.47, 6.31},
              Triplet{"sunlamp", "sun", "lamp", 5, 5}},
             {}, {});
  auto store = nc_store({emb("hand", {1, 0}), emb("gun", {0, 1}), emb("handgun", {1, 1}), emb("war", {1, 0}),
                         emb("time", {1, 1}), emb("sun", {1, 0}), emb("lamp", {0, 1})});
  MeasureTable t = compute_table(ds, store, {}, 1);
  CHECK(t.effective_n() == 1);
  REQUIRE(t.misses.size() == 2);
  CHECK(t.misses[0] == TableMiss{"wartime", {"wartime"}});
  CHECK(t.misses[1] == TableMiss{"sunlamp", {"sunlamp"}});
  CHECK(t.setting_label == "nc-nospec");
  CHECK_THROWS_AS(compute_table(ds, store, {}, 2), DataError);
  CHECK_THROWS_AS(compute_table(ds, store, RepresentationSetting::parse("context"), 1), DataError);
  Dataset none({Triplet{"sunlight", "sun", "light", 5, 5}}, {}, {});
  CHECK_THROWS_AS(compute_table(none, store, {}, 1), DataError);
}

TEST_CASE("negative cosines are counted and optionally clamped") {
  Dataset ds({Triplet{"handgun", "hand", "gun", 8.13, 6.29}}, {}, {});
  auto store = nc_store({emb("hand", {-1, 0}), emb("gun", {0, 1}), emb("handgun", {1, 1})});
  MeasureTable raw = compute_table(ds, store, {}, 1);
  CHECK(raw.range_violations == 1);
  CHECK(raw.rows.at("handgun").left_sim < 0);
  CHECK(raw.rows.at("handgun").lmd_pred > 5 * (1 + std::sqrt(0.5)) - 1e-12);
  MeasureTable clamped = compute_table(ds, store, {}, 1, {true});
  CHECK(clamped.rows.at("handgun").left_sim == 0.0);
  CHECK(clamped.range_violations == 1);
}

TEST_CASE("tables do not depend on dataset row order") {
  Triplet a{"handgun", "hand", "gun", 8.13, 6.29}, b{"wartime", "war", "time", 3.47, 6.31};
  auto store = nc_store({emb("hand", {1, 0}), emb("gun", {0, 1}), emb("handgun", {1, 2}), emb("war", {1, 3}),
                         emb("time", {2, 1}), emb("wartime", {1, 1})});
  CHECK(compute_table(Dataset({a, b}, {}, {}), store, {}, 1).rows ==
        compute_table(Dataset({b, a}, {}, {}), store, {}, 1).rows);
}

TEST_CASE("static store tables use layer 0 and label static") {
  Dataset ds({Triplet{"handgun", "hand", "gun", 8.13, 6.29}}, {}, {});
  StaticStore s(2, {{"hand", {1, 0}}, {"gun", {0, 1}}, {"handgun", {1, 1}}});
  MeasureTable t = compute_table(ds, s);
  CHECK(t.layer == 0);
  CHECK(t.setting_label == "static");
  CHECK(t.rows.at("handgun").lmd_pred == doctest::Approx(5.0));
}

TEST_CASE("reversal") {
  Dataset ds({Triplet{"wartime", "war", "time", 3.47, 6.31}, Triplet{"bodyguard", "body", "guard", 7.27, 5.64},
              Triplet{"skillful", "skill", "full", 4, 5, true}},
             {}, {});
  ReversedDataset r = reverse_compounds(ds);
  REQUIRE(r.dataset.size() == 2);
  CHECK(r.dataset.triplets()[0].compound == "timewar");
  CHECK(r.dataset.triplets()[0].left == "war");
  CHECK(r.dataset.triplets()[0].human_lmd == 3.47);
  CHECK(r.dataset.triplets()[1].compound == "guardbody");
  CHECK(r.skipped == std::vector<std::string>{"skillful"});
  Dataset concat({ds.triplets()[0], ds.triplets()[1]}, {}, {});
  CHECK(reverse_compounds(reverse_compounds(concat).dataset).dataset == concat);
}

TEST_CASE("measure CSV round-trip") {
  Dataset ds({Triplet{"handgun", "hand", "gun", 8.13, 6.29}, Triplet{"wartime", "war", "time", 3.47, 6.31}}, {}, {});
  std::vector<LayeredEmbedding> es;
  std::mt19937 rng(1);
  std::normal_distribution<float> g;
  for (const std::string& w : ds.words()) {
    std::vector<float> v(6);
    for (float& x : v) x = g(rng);
    es.emplace_back(w, 3, 2, false, std::move(v), 1);
  }
  EmbeddingStore store(RepresentationSetting{}, 3, 2, false, "", std::move(es));
  std::vector<MeasureTable> tables{compute_table(ds, store, {}, 1), compute_table(ds, store, {}, 2)};
  std::string csv = measure_tables_csv(tables);
  CHECK(csv.rfind("compound,layer,setting,L,R,lmd_pred,st_pred\n", 0) == 0);
  auto back = parse_measure_tables_csv("# manifest_sha256=x\n" + csv);
  REQUIRE(back.size() == 2);
  CHECK(back[0].layer == 1);
  CHECK(back[1].rows == tables[1].rows);
}
