#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "resloco/config.hpp"

using namespace resloco;

TEST_CASE("parses sections, comments and scalar types") {
  const auto cfg = Config::from_string(R"(
# velocity task
name = demo
duration = 12.5

[plant]
mass = 12      ; trailing comment
payload = -1.5
enabled = true

[plant.payload]
offset = 0.15, 0, 0.05
)");
  CHECK(cfg.get_string("name") == "demo");
  CHECK(cfg.get_double("duration") == doctest::Approx(12.5));
  CHECK(cfg.get_double("plant.mass") == doctest::Approx(12.0));
  CHECK(cfg.get_double("plant.payload") == doctest::Approx(-1.5));
  CHECK(cfg.get_bool("plant.enabled"));
  const auto v = cfg.get_vector("plant.payload.offset");
  REQUIRE(v.size() == 3);
  CHECK(v[0] == doctest::Approx(0.15));
  CHECK(v[2] == doctest::Approx(0.05));
}

TEST_CASE("missing keys fall back or throw") {
  const auto cfg = Config::from_string("a = 1\n");
  CHECK(cfg.get_double("a") == 1.0);
  CHECK(cfg.get_double("b", 7.0) == 7.0);
  CHECK_THROWS(cfg.get_double("b"));
  CHECK_THROWS(cfg.get_int("a.b"));
}

TEST_CASE("malformed lines are rejected") {
  CHECK_THROWS(Config::from_string("novalue\n"));
  CHECK_THROWS(Config::from_string("[unterminated\n"));
  CHECK_THROWS(Config::from_string(" = 3\n"));
  CHECK_THROWS(Config::from_string("a = xyz\n").get_double("a"));
}

TEST_CASE("emit round-trips exactly") {
  const auto cfg = Config::from_string(R"(
top = 1
zlast = hello

[b.section]
k = 0.25
[a]
x = 1, 2, 3
y = -5
)");
  const Config again = Config::from_string(cfg.emit());
  CHECK(again == cfg);
  const Config third = Config::from_string(again.emit());
  CHECK(third == again);
}

TEST_CASE("repeated keys overwrite, repeated sections merge") {
  const auto cfg = Config::from_string(R"(
[s]
a = 1
[t]
b = 2
[s]
a = 3
c = 4
)");
  CHECK(cfg.get_int("s.a") == 3);
  CHECK(cfg.get_int("s.c") == 4);
  CHECK(cfg.get_int("t.b") == 2);
}
