#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include "stflow/config.hpp"

using namespace stflow;

namespace {

bool throws_mentioning(const std::function<void()>& f, const std::string& needle) {
  try {
    f();
  } catch (const ConfigError& e) {
    return std::string(e.what()).find(needle) != std::string::npos;
  }
  return false;
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("sections flatten and comments strip") {
  std::string text =
      "# a header comment\n"
      "scenario = demo   # trailing note\n"
      "\n"
      "[grid]\n"
      "h = 0.125\n"
      "half_width = 1.5\n"
      "[time]\n"
      "times = 0.1, 0.2, 0.4\n"
      "h = 7\n";
  ExperimentConfig cfg = parse_config(text, "/tmp", "mem");
  CHECK(cfg.get_str("scenario") == "demo");
  CHECK(cfg.get_num("grid.h") == doctest::Approx(0.125));
  CHECK(cfg.get_num("grid.half_width") == doctest::Approx(1.5));
  // the second section prefixes its own keys; no bleed between sections
  CHECK(cfg.get_num("time.h") == doctest::Approx(7.0));
  CHECK(!cfg.has("h"));
  auto xs = cfg.get_list("time.times");
  REQUIRE(xs.size() == 3);
  CHECK(xs[0] == doctest::Approx(0.1));
  CHECK(xs[2] == doctest::Approx(0.4));
}

TEST_CASE("later assignments win") {
  ExperimentConfig cfg = parse_config("a = 1\na = 2\n[s]\nk = 3\n[s]\nk = 4\n", "", "");
  CHECK(cfg.get_num("a") == 2.0);
  CHECK(cfg.get_num("s.k") == 4.0);
}

TEST_CASE("parse errors carry the line number") {
  CHECK(throws_mentioning([] { parse_config("ok = 1\nbroken line\n", "", ""); },
                          "line 2"));
  CHECK(throws_mentioning([] { parse_config("\n\n= 5\n", "", ""); }, "line 3"));
  CHECK(throws_mentioning([] { parse_config("[grid\nh = 1\n", "", ""); }, "line 1"));
  CHECK(throws_mentioning([] { parse_config("[]\n", "", ""); }, "line 1"));
}

TEST_CASE("typed getters enforce their shapes") {
  ExperimentConfig cfg = parse_config(
      "n = 12\nx = 1.5\nbadnum = 1.5abc\nflagy = yes\nflagn = 0\nflagbad = maybe\n"
      "list1 = 1,2,3\nlist2 = 4 5  6\nlistbad = 1 2 q\nempty =\n",
      "", "");
  CHECK(cfg.get_int("n", -1) == 12);
  CHECK_THROWS_AS(cfg.get_int("x", -1), ConfigError);
  CHECK(cfg.get_int("absent", 9) == 9);
  CHECK_THROWS_AS(cfg.get_num("badnum"), ConfigError);
  CHECK(cfg.get_num("absent", 2.5) == 2.5);
  CHECK(cfg.get_bool("flagy", false));
  CHECK(!cfg.get_bool("flagn", true));
  CHECK(cfg.get_bool("absent", true));
  CHECK_THROWS_AS(cfg.get_bool("flagbad", false), ConfigError);
  CHECK(cfg.get_list("list1") == std::vector<double>{1.0, 2.0, 3.0});
  CHECK(cfg.get_list("list2") == std::vector<double>{4.0, 5.0, 6.0});
  CHECK_THROWS_AS(cfg.get_list("listbad"), ConfigError);
  CHECK_THROWS_AS(cfg.get_list("empty"), ConfigError);
  CHECK_THROWS_AS(cfg.get_num("empty"), ConfigError);
  CHECK_THROWS_AS(cfg.get_str("absent"), ConfigError);
  CHECK(cfg.get_str("absent", "dflt") == "dflt");
}

TEST_CASE("relative paths resolve against the config directory") {
  ExperimentConfig cfg =
      parse_config("f = data/in.field\nabs = /var/x.field\n", "/opt/run", "mem");
  CHECK(cfg.path("f") == "/opt/run/data/in.field");
  CHECK(cfg.path("abs") == "/var/x.field");
  CHECK(cfg.resolve("y.txt") == "/opt/run/y.txt");
  ExperimentConfig bare = parse_config("f = data/in.field\n", "", "");
  CHECK(bare.path("f") == "data/in.field");
}

TEST_CASE("loading from disk records provenance") {
  namespace fs = std::filesystem;
  fs::path p = fs::temp_directory_path() / "stflow_cfg_test.cfg";
  {
    std::ofstream os(p);
    os << "[grid]\nh = 0.25\nmesh = sub/m.mask\n";
  }
  ExperimentConfig cfg = load_config(p.string());
  fs::remove(p);
  CHECK(cfg.source_path == p.string());
  CHECK(cfg.get_num("grid.h") == 0.25);
  CHECK(cfg.path("grid.mesh") == (p.parent_path() / "sub/m.mask").string());
  CHECK_THROWS_AS(load_config("/nonexistent/nowhere.cfg"), ConfigError);
}

}  // TEST_SUITE("config")
