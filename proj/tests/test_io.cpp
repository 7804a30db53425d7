#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "helpers.hpp"
#include "vda/config.hpp"
#include "vda/io.hpp"

using namespace vda;
namespace fs = std::filesystem;

TEST_SUITE_BEGIN("io");

namespace {

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "vda_io_tests";
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("snapshot round trip is bit-identical") {
  const PfGrid grid(17, 9, 0.5);
  GridSnapshot snap;
  snap.nx = grid.nx;
  snap.ny = grid.ny;
  snap.spacing = grid.spacing;
  snap.time = 12.5;
  snap.data = test::random_vector(grid.cells(), -3.0, 7.0, 600);
  snap.data(3) = 0.1 + 0.2;  // not exactly representable
  const fs::path path = temp_dir() / "roundtrip.grid";
  write_snapshot(path, snap);

  const GridSnapshot back = read_snapshot(path);
  CHECK(back.nx == snap.nx);
  CHECK(back.ny == snap.ny);
  CHECK(back.spacing == snap.spacing);
  CHECK(back.time == snap.time);
  CHECK(back.data == snap.data);
  CHECK_FALSE(fs::exists(path.string() + ".partial"));
}

TEST_CASE("snapshot corruption is detected") {
  GridSnapshot snap;
  snap.nx = 4;
  snap.ny = 4;
  snap.data = test::random_vector(16, 0.0, 1.0, 601);
  const fs::path path = temp_dir() / "corrupt.grid";
  write_snapshot(path, snap);

  SUBCASE("flipped payload byte") {
    std::fstream file(path, std::ios::in | std::ios::out | std::ios::binary);
    file.seekp(-1, std::ios::end);
    file.put('\x7f');
    file.close();
    CHECK_THROWS_AS(read_snapshot(path), IoError);
  }
  SUBCASE("truncated payload") {
    const auto size = fs::file_size(path);
    fs::resize_file(path, size - 8);
    CHECK_THROWS_AS(read_snapshot(path), IoError);
  }
}

TEST_CASE("csv output formats reals to round-trip precision") {
  CsvWriter csv({"a", "b"});
  csv.row({1.0 / 3.0, 1e-300});
  const std::string text = csv.str();
  CHECK(text.find("a,b\n") == 0);
  CHECK(text.find("0.33333333333333331") != std::string::npos);
}

TEST_CASE("config parsing") {
  SUBCASE("defaults") {
    const RunConfig cfg = parse_config("{}");
    CHECK(cfg.model_kind == "phasefield");
    CHECK(cfg.grid.nx == 75);
    CHECK(cfg.grid.ny == 50);
    CHECK(cfg.dt == 0.1);
    CHECK(cfg.sigma == 0.01);
    CHECK(cfg.optimizer.memory == 10);
    CHECK(cfg.optimizer.grad_tol == 1e-8);
    CHECK(cfg.solver.rel_tol == 1e-8);
    CHECK(cfg.n_trials == 20);
  }
  SUBCASE("unknown keys are rejected everywhere") {
    CHECK_THROWS_AS(parse_config(R"({"grid": {"nx": 8, "bogus": 1}})"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"bogus": {}})"), ConfigError);
    CHECK_THROWS_AS(
        parse_config(R"({"optimizer": {"memory": 10, "extra": true}})"),
        ConfigError);
  }
  SUBCASE("malformed json") {
    CHECK_THROWS_AS(parse_config("{"), ConfigError);
  }
  SUBCASE("schema violations") {
    CHECK_THROWS_AS(parse_config(R"({"grid": {"dt": -0.1}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"model": {"kind": "magic"}})"),
                    ConfigError);
    CHECK_THROWS_AS(
        parse_config(R"({"observation": {"sigma": -1.0}})"), ConfigError);
    CHECK_THROWS_AS(
        parse_config(R"({"harness": {"experiment": 9}})"), ConfigError);
  }
  SUBCASE("content hash differs across configs") {
    const RunConfig a = parse_config(R"({"grid": {"nx": 8, "ny": 8}})");
    const RunConfig b = parse_config(R"({"grid": {"nx": 9, "ny": 8}})");
    CHECK(a.content_hash != b.content_hash);
  }
  SUBCASE("linear model round trip") {
    const RunConfig cfg = parse_config(R"({
      "model": {"kind": "linear", "dynamics": [[-0.5, 0.0], [0.0, -0.25]]},
      "observation": {"times": [0.2, 0.4], "sigma": 0.0},
      "harness": {"truth_state": [0.4, 0.6], "theta_guess": [0.5, 0.5]}
    })");
    const auto model = cfg.make_model();
    CHECK(model->size() == 2);
    const Vector truth = cfg.make_truth_state();
    CHECK(truth(0) == 0.4);
    const auto op = cfg.make_observation_operator();
    CHECK(op->obs_dim() == 2);
  }
}

TEST_SUITE_END();
