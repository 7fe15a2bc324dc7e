#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "biwave/io.hpp"
#include "doctest.h"

using namespace biwave;
namespace fs = std::filesystem;

namespace {

// Fresh scratch directory per test case, removed on destruction.
struct TempDir {
  fs::path path;
  TempDir() {
    static std::mt19937_64 rng(std::random_device{}());
    path = fs::temp_directory_path() / ("biwave_io_" + std::to_string(rng()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::vector<std::vector<double>> read_csv_body(const fs::path& file, std::string* header) {
  std::ifstream is(file);
  REQUIRE(bool(is));
  std::string line;
  REQUIRE(bool(std::getline(is, line)));
  if (header) *header = line;
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    // strtod, not stod: stod throws out_of_range on subnormals, which are
    // legitimate table entries.
    while (std::getline(ss, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

TEST_CASE("snapshots round-trip through disk exactly") {
  TempDir tmp;
  auto g = build_grid_shared(2, {1.0, 2.0}, {9, 17}, {0.5, 1.0});

  Trajectory traj;
  traj.dt = 0.05;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int k = 0; k < 3; ++k) {
    traj.times.push_back(0.05 * k);
    Eigen::VectorXd u(g->n_nodes), v(g->n_nodes);
    for (int i = 0; i < g->n_nodes; ++i) {
      u[i] = dist(rng);
      v[i] = dist(rng);
    }
    traj.u.push_back(u);
    traj.v.push_back(v);
  }

  const auto names = write_snapshots(tmp.path, *g, traj, "frame");
  REQUIRE(names.size() == 4);
  CHECK(names[0] == "frame_index.json");
  CHECK(names[1] == "frame_000000.bin");
  CHECK(names[3] == "frame_000002.bin");
  for (const auto& n : names) CHECK(fs::exists(tmp.path / n));

  // The index must describe the grid and list every frame with its time.
  const json index = load_config(tmp.path / names[0]);
  CHECK(index["dim"] == 2);
  CHECK(index["n"][0] == 9);
  CHECK(index["n"][1] == 17);
  CHECK(index["count"] == 3);
  REQUIRE(index["files"].size() == 3);
  CHECK(index["files"][1]["file"] == "frame_000001.bin");
  CHECK(index["files"][1]["time"].get<double>() == traj.times[1]);

  // Every frame reads back bit-exactly.
  for (int k = 0; k < 3; ++k) {
    const Snapshot snap = read_snapshot(tmp.path / names[size_t(k) + 1]);
    CHECK(snap.dim == 2);
    CHECK(snap.n[0] == 9);
    CHECK(snap.n[1] == 17);
    CHECK(snap.time == traj.times[size_t(k)]);
    CHECK((snap.u - traj.u[size_t(k)]).norm() == 0.0);
    CHECK((snap.v - traj.v[size_t(k)]).norm() == 0.0);
  }
}

TEST_CASE("1d snapshots carry the flat second axis") {
  TempDir tmp;
  auto g = build_grid_shared(1, {1.0, 0.0}, {33, 1}, {0.5, 0.0});
  Trajectory traj;
  traj.dt = 0.1;
  traj.times = {0.0};
  traj.u = {Eigen::VectorXd::LinSpaced(33, 0.0, 1.0)};
  traj.v = {Eigen::VectorXd::Zero(33)};
  const auto names = write_snapshots(tmp.path, *g, traj);
  const Snapshot snap = read_snapshot(tmp.path / names[1]);
  CHECK(snap.dim == 1);
  CHECK(snap.n[0] == 33);
  CHECK(snap.n[1] == 1);
  CHECK((snap.u - traj.u[0]).norm() == 0.0);
}

TEST_CASE("snapshot reader rejects broken files") {
  TempDir tmp;
  CHECK_THROWS_AS(read_snapshot(tmp.path / "missing.bin"), std::runtime_error);

  // Bad header: dimension out of range.
  {
    std::ofstream os(tmp.path / "bad_header.bin", std::ios::binary);
    const std::int32_t head[3] = {7, 4, 4};
    const double t = 0.0;
    os.write(reinterpret_cast<const char*>(head), sizeof(head));
    os.write(reinterpret_cast<const char*>(&t), sizeof(t));
  }
  CHECK_THROWS_AS(read_snapshot(tmp.path / "bad_header.bin"), std::runtime_error);

  // Valid header but truncated payload.
  {
    std::ofstream os(tmp.path / "short.bin", std::ios::binary);
    const std::int32_t head[3] = {2, 5, 5};
    const double t = 0.25;
    os.write(reinterpret_cast<const char*>(head), sizeof(head));
    os.write(reinterpret_cast<const char*>(&t), sizeof(t));
    const double few[4] = {1, 2, 3, 4};
    os.write(reinterpret_cast<const char*>(few), sizeof(few));
  }
  CHECK_THROWS_AS(read_snapshot(tmp.path / "short.bin"), std::runtime_error);

  // Ragged trajectories are refused before anything is written.
  auto g = build_grid_shared(2, {1.0, 1.0}, {5, 5}, {0.5, 0.5});
  Trajectory ragged;
  ragged.times = {0.0, 0.1};
  ragged.u = {Eigen::VectorXd::Zero(25)};
  ragged.v = {Eigen::VectorXd::Zero(25)};
  CHECK_THROWS_AS(write_snapshots(tmp.path, *g, ragged), std::invalid_argument);
}

TEST_CASE("csv values survive a write/read cycle exactly") {
  TempDir tmp;
  std::vector<std::vector<double>> rows = {
      {0.1, 1.0 / 3.0, 3.141592653589793},
      {-1e-300, 6.02214076e23, 5e-324},
      {0.0, -7.25, 1e308},
  };
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> dist(-10.0, 10.0);
  for (int k = 0; k < 20; ++k) rows.push_back({dist(rng), dist(rng) * 1e-9, dist(rng) * 1e9});

  const fs::path file = tmp.path / "table.csv";
  write_csv(file, {"a", "b", "c"}, rows);

  std::string header;
  const auto back = read_csv_body(file, &header);
  CHECK(header == "a,b,c");
  REQUIRE(back.size() == rows.size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < 3; ++j) CHECK(back[i][j] == rows[i][j]);

  // Row width must match the header.
  CHECK_THROWS_AS(write_csv(tmp.path / "bad.csv", {"a", "b"}, {{1.0, 2.0, 3.0}}),
                  std::invalid_argument);
}

TEST_CASE("config loader accepts comments") {
  TempDir tmp;
  const fs::path file = tmp.path / "config.json";
  {
    std::ofstream os(file);
    os << "{\n"
          "  // line comment\n"
          "  \"grid\": {\"nodes\": [17, 17]},\n"
          "  /* block comment */\n"
          "  \"gamma\": 0.5\n"
          "}\n";
  }
  const json cfg = load_config(file);
  CHECK(cfg["grid"]["nodes"][0] == 17);
  CHECK(cfg["gamma"].get<double>() == 0.5);

  CHECK_THROWS(load_config(tmp.path / "absent.json"));
  {
    std::ofstream os(tmp.path / "broken.json");
    os << "{ not json";
  }
  CHECK_THROWS(load_config(tmp.path / "broken.json"));
}

TEST_CASE("manifest skeleton carries the run provenance") {
  json cfg;
  cfg["grid"]["nodes"] = {9, 9};
  const json m = make_manifest("simulate", 42, 4, cfg);
  CHECK(m["command"] == "simulate");
  CHECK(m["seed"] == 42);
  CHECK(m["threads"] == 4);
  CHECK(m["config"]["grid"]["nodes"][0] == 9);
  CHECK(m["version"].is_string());
  CHECK(!m["version"].get<std::string>().empty());
  CHECK(m["warnings"].is_array());
  CHECK(m["warnings"].empty());
  CHECK(m["outputs"].is_array());
  CHECK(m["outputs"].empty());
}

TEST_CASE("json writer round-trips through the loader") {
  TempDir tmp;
  json j;
  j["alpha"] = 0.125;
  j["names"] = {"a", "b"};
  j["nested"]["flag"] = true;
  write_json(tmp.path / "out.json", j);
  const json back = load_config(tmp.path / "out.json");
  CHECK(back == j);
}
