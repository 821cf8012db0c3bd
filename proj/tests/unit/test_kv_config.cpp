#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "isac_atr/errors.hpp"
#include "isac_atr/kv_config.hpp"

using namespace isac_atr;

TEST_CASE("key/value parsing with comments and repeats") {
  const auto cfg = KeyValueConfig::parse(
      "# header\n"
      "alpha = 1.5   # trailing\n"
      "\n"
      "name=desk\n"
      "item = 1\n"
      "item = 2\n");
  CHECK(cfg.get_double("alpha") == 1.5);
  CHECK(cfg.get_string("name") == "desk");
  CHECK(cfg.get_all("item") == std::vector<std::string>{"1", "2"});
  CHECK(cfg.get_int("item") == 2);
  CHECK(cfg.get_uint("missing", 7) == 7);
  CHECK_FALSE(cfg.has("missing"));
  CHECK_THROWS_AS(cfg.get_string("missing"), ConfigError);
}

TEST_CASE("malformed lines and values are config errors") {
  CHECK_THROWS_AS(KeyValueConfig::parse("no equals sign\n"), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::parse(" = 3\n"), ConfigError);
  const auto cfg = KeyValueConfig::parse("x = abc\nn = -3\n");
  CHECK_THROWS_AS(cfg.get_double("x"), ConfigError);
  CHECK_THROWS_AS(cfg.get_uint("n"), ConfigError);
}

TEST_CASE("infinity parses for SNR sentinels") {
  CHECK(std::isinf(parse_double("inf", "snr")));
  CHECK(parse_double("-inf", "snr") < 0);
  CHECK(parse_double("1e-3", "x") == 1e-3);
}

TEST_CASE("unknown keys are rejected") {
  const auto cfg = KeyValueConfig::parse("a = 1\nb = 2\n");
  CHECK_NOTHROW(cfg.require_known({"a", "b"}));
  CHECK_THROWS_AS(cfg.require_known({"a"}), ConfigError);
}

TEST_CASE("set replaces, merge overrides, save/load round trips") {
  auto cfg = KeyValueConfig::parse("a = 1\na = 2\nb = x\n");
  cfg.set("a", "9");
  CHECK(cfg.get_all("a") == std::vector<std::string>{"9"});
  cfg.merge(KeyValueConfig::parse("b = y\nc = z\n"));
  CHECK(cfg.get_string("b") == "y");
  CHECK(cfg.get_string("c") == "z");

  const auto path = std::filesystem::temp_directory_path() / "isac_atr_kv_test.cfg";
  cfg.save(path);
  const auto back = KeyValueConfig::load(path);
  CHECK(back.entries() == cfg.entries());
  std::filesystem::remove(path);
  CHECK_THROWS_AS(KeyValueConfig::load(path), IoError);
}

TEST_CASE("split_list trims items") {
  CHECK(split_list(" 1, 2 ,3") == std::vector<std::string>{"1", "2", "3"});
}
