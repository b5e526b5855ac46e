#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "afs/errors.hpp"
#include "afs/text_format.hpp"

using namespace afs::text;

TEST_CASE("fmt17 round-trips doubles bit-exactly") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-308, 6.02214076e23, 0.0, -0.0,
                   0.30000000000000004}) {
    CHECK(parse_double(fmt17(v), false) == v);
  }
  CHECK(fmt17(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(fmt17(std::numeric_limits<double>::infinity()) == "inf");
}

TEST_CASE("parse_double is strict") {
  CHECK(parse_double("2.5") == 2.5);
  CHECK(parse_double("-1e3") == -1000.0);
  CHECK_THROWS_AS(parse_double(""), afs::InvalidArgument);
  CHECK_THROWS_AS(parse_double("1.5x"), afs::InvalidArgument);
  CHECK_THROWS_AS(parse_double("x1.5"), afs::InvalidArgument);
  CHECK_THROWS_AS(parse_double("1.5 "), afs::InvalidArgument);
  SUBCASE("finiteness enforcement") {
    CHECK_THROWS_AS(parse_double("inf"), afs::InvalidArgument);
    CHECK_THROWS_AS(parse_double("nan"), afs::InvalidArgument);
    CHECK(std::isinf(parse_double("inf", false)));
    CHECK(std::isnan(parse_double("nan", false)));
  }
}

TEST_CASE("parse_size is strict and non-negative") {
  CHECK(parse_size("0") == 0);
  CHECK(parse_size("117") == 117);
  CHECK_THROWS_AS(parse_size("-1"), afs::InvalidArgument);
  CHECK_THROWS_AS(parse_size("1.5"), afs::InvalidArgument);
  CHECK_THROWS_AS(parse_size(""), afs::InvalidArgument);
  CHECK_THROWS_AS(parse_size("12a"), afs::InvalidArgument);
}

TEST_CASE("split keeps empty fields, split_ws drops them") {
  CHECK(split("a,b,,c", ',') ==
        std::vector<std::string>{"a", "b", "", "c"});
  CHECK(split("", ',') == std::vector<std::string>{""});
  CHECK(split_ws("  a \t b  ") == std::vector<std::string>{"a", "b"});
  CHECK(split_ws("").empty());
}

TEST_CASE("expect_kv validates the key") {
  CHECK(expect_kv("dim=4", "dim") == "4");
  CHECK(expect_kv("name=", "name").empty());
  CHECK_THROWS_AS(expect_kv("dim:4", "dim"), afs::InvalidArgument);
  CHECK_THROWS_AS(expect_kv("dmi=4", "dim"), afs::InvalidArgument);
}

TEST_CASE("double lists round-trip through join17") {
  const std::vector<double> v = {0.8, 0.6, 1.0 / 3.0};
  CHECK(parse_double_list(join17(v)) == v);
  CHECK(parse_double_list("1,2,3") == std::vector<double>{1.0, 2.0, 3.0});
  CHECK_THROWS_AS(parse_double_list("1,,3"), afs::InvalidArgument);
  CHECK_THROWS_AS(parse_double_list("1;3"), afs::InvalidArgument);
}
