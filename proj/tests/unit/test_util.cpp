#include "doctest.h"

#include "compsem/util.hpp"

using namespace compsem;

TEST_CASE("sha256 of known inputs") {
  CHECK(sha256_hex(std::string_view{}) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex(std::string_view{"abc"}) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("csv splitting handles quotes") {
  auto f = split_csv_line(R"(a,"b,c","d""e",)");
  REQUIRE(f.size() == 4);
  CHECK(f[0] == "a");
  CHECK(f[1] == "b,c");
  CHECK(f[2] == "d\"e");
  CHECK(f[3].empty());
  CHECK(csv_escape("x,y") == "\"x,y\"");
  CHECK(csv_escape("plain") == "plain");
}

TEST_CASE("number formatting round-trips") {
  for (double v : {0.1, 1.0 / 3.0, 8.13, -2.5e-300, 6.02214076e23}) {
    double back = 0;
    REQUIRE(parse_double(format_full(v), back));
    CHECK(back == v);
  }
  CHECK(format_sig6(0.58612345) == "0.586123");
  CHECK(format_sig6(3.0) == "3");
}

TEST_CASE("strict parsing rejects trailing junk") {
  double d = 0;
  std::int64_t i = 0;
  CHECK_FALSE(parse_double("1.5x", d));
  CHECK_FALSE(parse_double("", d));
  CHECK(parse_double("+2", d));
  CHECK(d == 2.0);
  CHECK(parse_int64("42", i));
  CHECK(i == 42);
  CHECK_FALSE(parse_int64("4.2", i));
}

TEST_CASE("trim and lowercase") {
  CHECK(trim("  a b \t") == "a b");
  CHECK(to_lower_ascii("HandGun") == "handgun");
}
