#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "biwave/evolution.hpp"
#include "json.hpp"

namespace biwave {

using json = nlohmann::json;

// One snapshot as stored on disk: a small header (dimension, nodes per axis,
// time) followed by u then v as flat float64 arrays in node order.
struct Snapshot {
  int dim = 0;
  std::array<int, 2> n{0, 1};
  double time = 0;
  Eigen::VectorXd u, v;
};

// Writes one binary file per stored frame plus a JSON index listing them.
// Returns the names of all written files, relative to `dir`, index first.
std::vector<std::string> write_snapshots(const std::filesystem::path& dir, const Grid& grid,
                                         const Trajectory& traj,
                                         const std::string& prefix = "snapshot");

Snapshot read_snapshot(const std::filesystem::path& file);

// Plain CSV with a header row; values are printed with %.17g so rereading
// reproduces the doubles exactly.
void write_csv(const std::filesystem::path& file, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

// JSON config with // and /* */ comments allowed.
json load_config(const std::filesystem::path& file);

void write_json(const std::filesystem::path& file, const json& j);

// Skeleton manifest every CLI run writes next to its outputs; the caller
// appends per-run warnings and the list of produced files.
json make_manifest(const std::string& command, std::uint64_t seed, int threads,
                   const json& config);

}  // namespace biwave
