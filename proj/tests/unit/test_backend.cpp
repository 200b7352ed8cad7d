#include "doctest.h"

#include <cstring>
#include <map>

#include "compsem/backend.hpp"
#include "compsem/error.hpp"
#include "compsem/measures.hpp"
#include "compsem/stats.hpp"
#include "test_support.hpp"

using namespace compsem;
using testing::TempDir;

namespace {

// Whitespace tokenizer; each word maps to a fixed list of subword vectors.
class TableBackend final : public InferenceBackend {
public:
  std::map<std::string, std::vector<std::vector<float>>> pieces;  // word -> per-piece vector (all layers equal)
  std::size_t layers = 2;
  bool constant = false;
  int calls = 0;

  Encoding encode(std::string_view text) override {
    ++calls;
    Encoding enc;
    enc.has_layer0 = false;
    enc.tokens.push_back("[CLS]");
    enc.spans.emplace_back(0, 0);
    std::vector<std::vector<float>> vecs{{9, 9}};
    std::size_t i = 0;
    const std::string s(text);
    while (i < s.size()) {
      if (s[i] == ' ') {
        ++i;
        continue;
      }
      std::size_t j = s.find(' ', i);
      if (j == std::string::npos) j = s.size();
      const std::string w = s.substr(i, j - i);
      auto it = pieces.find(w);
      const std::vector<std::vector<float>> vs = it != pieces.end() ? it->second : std::vector<std::vector<float>>{{1, 1}};
      const std::size_t step = (j - i) / vs.size();
      for (std::size_t k = 0; k < vs.size(); ++k) {
        const std::size_t b = i + k * step, e = k + 1 == vs.size() ? j : b + step;
        enc.tokens.push_back(s.substr(b, e - b));
        enc.spans.emplace_back(b, e);
        vecs.push_back(vs[k]);
      }
      i = j;
    }
    enc.tokens.push_back("[SEP]");
    enc.spans.emplace_back(0, 0);
    vecs.push_back({-9, 9});
    if (constant) {
      for (auto& v : vecs) v = {0.25f, 0.75f};
    }
    for (std::size_t l = 0; l < layers; ++l) {
      auto copy = vecs;
      for (auto& v : copy)
        for (float& x : v) x *= static_cast<float>(l + 1);
      enc.layers.push_back(std::move(copy));
    }
    return enc;
  }
  std::string describe() const override { return "table"; }
};

std::string fake_command(const std::string& extra = {}) {
  return std::string("'") + FAKE_BACKEND_PATH + "'" + (extra.empty() ? "" : " " + extra);
}

}  // namespace

TEST_CASE("two-subword word: mean of the subword vectors per layer") {
  TableBackend be;
  be.pieces["snowboard"] = {{2, 0}, {0, 4}};
  std::vector<EmbedRequest> req{{"snowboard", {}}};
  EmbedResult r = embed_via_backend(req, RepresentationSetting::parse("nc-nospec"), be);
  const LayeredEmbedding* e = r.store.find("snowboard");
  REQUIRE(e);
  CHECK(e->n_instances() == 1);
  CHECK(e->layer(1)[0] == 1.0f);
  CHECK(e->layer(1)[1] == 2.0f);
  CHECK(e->layer(2)[0] == 2.0f);
  CHECK(e->layer(2)[1] == 4.0f);
  CHECK(r.token_counts.at("snowboard") == 2);

  auto withcls = embed_via_backend(req, RepresentationSetting::parse("nc-withcls"), be);
  CHECK(withcls.store.find("snowboard")->layer(1)[0] == doctest::Approx(11.0 / 3.0));
  auto all = embed_via_backend(req, RepresentationSetting::parse("nc-all"), be);
  CHECK(all.store.find("snowboard")->layer(1)[0] == doctest::Approx(2.0 / 4.0));
  CHECK(all.store.find("snowboard")->layer(1)[1] == doctest::Approx(22.0 / 4.0));
}

TEST_CASE("single-sentence context equals that sentence's pooled vector") {
  TableBackend be;
  be.pieces["snowboard"] = {{2, 0}, {0, 4}};
  std::vector<EmbedRequest> req{{"snowboard", {"my snowboard broke"}}};
  EmbedResult r = embed_via_backend(req, RepresentationSetting::parse("context"), be);
  const LayeredEmbedding* e = r.store.find("snowboard");
  REQUIRE(e);
  CHECK(e->n_instances() == 1);
  CHECK(e->layer(1)[0] == 1.0f);
  CHECK(e->layer(1)[1] == 2.0f);
}

TEST_CASE("constant backend yields constant vectors") {
  TableBackend be;
  be.constant = true;
  std::vector<EmbedRequest> req{{"hand", {}}, {"gun", {}}, {"handgun", {}}};
  EmbedResult r = embed_via_backend(req, RepresentationSetting::parse("nc-all"), be);
  CHECK(r.store.size() == 3);
  for (const auto& [w, e] : r.store.entries()) {
    for (std::size_t l = 1; l <= e.n_layers(); ++l) {
      CHECK(e.layer(l)[0] == 0.25f * static_cast<float>(l));
      CHECK(e.layer(l)[1] == 0.75f * static_cast<float>(l));
    }
  }
}

TEST_CASE("context sentences without a resolvable span are skipped and counted") {
  TableBackend be;
  std::vector<EmbedRequest> req{{"gun", {"a gun here", "no match", "gun again"}}, {"moon", {"sunlight only"}},
                                {"star", {}}};
  EmbedResult r = embed_via_backend(req, RepresentationSetting::parse("context"), be);
  CHECK(r.store.find("gun")->n_instances() == 2);
  CHECK(r.skipped_sentences == 2);
  REQUIRE(r.misses.size() == 2);
  CHECK(r.misses[0].word == "moon");
  CHECK(r.misses[1].word == "star");
  CHECK(r.store.find("moon") == nullptr);
}

TEST_CASE("span resolution requires an exact token tiling") {
  Encoding enc;
  enc.tokens = {"[CLS]", "sno", "wboard", "[SEP]"};
  enc.spans = {{0, 0}, {0, 3}, {3, 9}, {0, 0}};
  CHECK(resolve_word_span(enc, 0, 9) == TokenRange{1, 3});
  CHECK_FALSE(resolve_word_span(enc, 0, 4).has_value());
  CHECK_FALSE(resolve_word_span(enc, 1, 9).has_value());
  enc.spans = {{0, 0}, {0, 3}, {4, 9}, {0, 0}};
  CHECK_FALSE(resolve_word_span(enc, 0, 9).has_value());
  CHECK_FALSE(resolve_word_span(enc, 20, 25).has_value());
}

TEST_CASE("response parsing") {
  Encoding e = parse_encoding(R"({"id":3,"tokens":["a"],"spans":[[0,1]],"layers":[[[1,2]],[[3,4]]]})", 3);
  CHECK(e.has_layer0);
  CHECK(e.n_layers() == 1);
  CHECK(e.dim() == 2);
  CHECK_THROWS_AS(parse_encoding(R"({"id":4,"tokens":[],"spans":[],"layers":[]})", 3), BackendError);
  CHECK_THROWS_AS(parse_encoding(R"({"id":3,"error":"boom"})", 3), BackendError);
  CHECK_THROWS_AS(parse_encoding("not json", 3), BackendError);
  CHECK_THROWS_AS(parse_encoding(R"({"id":3,"tokens":["a"],"spans":[[0,1]],"layers":[[[1,2]],[[3]]]})", 3),
                  BackendError);
}

TEST_CASE("pipe backend round-trip through the fake encoder") {
  PipeBackend be(fake_command());
  Encoding e = be.encode("a snowboard");
  CHECK(e.tokens.size() == 5);
  CHECK(e.tokens[2] == "snow");
  CHECK(e.tokens[3] == "##board");
  CHECK(e.n_layers() == 3);
  CHECK(e.dim() == 6);
  CHECK(resolve_word_span(e, 2, 11) == TokenRange{2, 4});
  Encoding again = be.encode("a snowboard");
  CHECK(again.layers == e.layers);
}

TEST_CASE("pipe backend failures surface as backend errors") {
  {
    PipeBackend be(fake_command("--fail-on bad"));
    CHECK_NOTHROW(be.encode("good"));
    CHECK_THROWS_AS(be.encode("bad word"), BackendError);
  }
  {
    PipeBackend be(fake_command("--die-after 1"));
    CHECK_NOTHROW(be.encode("one"));
    CHECK_THROWS_AS(be.encode("two"), BackendError);
  }
  {
    PipeBackend be("exit 0");
    CHECK_THROWS_AS(be.encode("x"), BackendError);
  }
}

TEST_CASE("in-memory store and dumped store give identical measures") {
  PipeBackend be(fake_command());
  Dataset ds({Triplet{"snowboard", "snow", "board", 6.85, 5.75}, Triplet{"handgun", "hand", "gun", 8.13, 6.29},
              Triplet{"wartime", "war", "time", 3.47, 6.31}},
             {}, {});
  std::vector<EmbedRequest> req;
  for (const std::string& w : ds.words()) req.push_back({w, {"the " + w + " is here", w + " again, " + w}});
  for (const char* name : {"nc-nospec", "nc-all", "context", "templated"}) {
    const auto setting = RepresentationSetting::parse(name);
    EmbedResult r = embed_via_backend(req, setting, be, "fake");
    CHECK(r.misses.empty());
    TempDir tmp;
    write_dump(r.store, tmp.path(), {DumpEncoding::binary});
    EmbeddingStore back = load_dump(tmp.path());
    CHECK(back == r.store);
    for (std::size_t l = 1; l <= back.n_layers(); ++l) {
      MeasureTable a = compute_table(ds, r.store, setting, l);
      MeasureTable b = compute_table(ds, back, setting, l);
      CHECK(a.rows == b.rows);
    }
    CHECK(sweep(ds, r.store, setting) == sweep(ds, back, setting));
  }
}
