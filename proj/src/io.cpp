#include "biwave/io.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "biwave/version.hpp"

namespace biwave {

namespace {

void write_doubles(std::ofstream& os, const Eigen::VectorXd& v) {
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::string frame_name(const std::string& prefix, int k) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%06d.bin", prefix.c_str(), k);
  return buf;
}

}  // namespace

std::vector<std::string> write_snapshots(const std::filesystem::path& dir, const Grid& grid,
                                         const Trajectory& traj, const std::string& prefix) {
  if (traj.u.size() != traj.times.size() || traj.v.size() != traj.times.size())
    throw std::invalid_argument("write_snapshots: ragged trajectory");
  std::filesystem::create_directories(dir);

  std::vector<std::string> written;
  json index;
  index["dim"] = grid.dim;
  index["n"] = {grid.n[0], grid.n[1]};
  index["extents"] = {grid.extents[0], grid.extents[1]};
  index["snapshot_dt"] = traj.dt;
  index["count"] = traj.times.size();
  index["files"] = json::array();

  for (size_t k = 0; k < traj.times.size(); ++k) {
    const std::string name = frame_name(prefix, static_cast<int>(k));
    std::ofstream os(dir / name, std::ios::binary);
    if (!os) throw std::runtime_error("write_snapshots: cannot open " + (dir / name).string());
    const std::int32_t head[3] = {grid.dim, grid.n[0], grid.n[1]};
    os.write(reinterpret_cast<const char*>(head), sizeof(head));
    const double t = traj.times[k];
    os.write(reinterpret_cast<const char*>(&t), sizeof(t));
    write_doubles(os, traj.u[k]);
    write_doubles(os, traj.v[k]);
    if (!os) throw std::runtime_error("write_snapshots: short write on " + name);
    index["files"].push_back({{"file", name}, {"time", t}});
    written.push_back(name);
  }

  const std::string index_name = prefix + "_index.json";
  write_json(dir / index_name, index);
  written.insert(written.begin(), index_name);
  return written;
}

Snapshot read_snapshot(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw std::runtime_error("read_snapshot: cannot open " + file.string());
  std::int32_t head[3];
  is.read(reinterpret_cast<char*>(head), sizeof(head));
  Snapshot snap;
  snap.dim = head[0];
  snap.n = {head[1], head[2]};
  is.read(reinterpret_cast<char*>(&snap.time), sizeof(snap.time));
  if (!is || snap.dim < 1 || snap.dim > 2 || head[1] < 1 || head[2] < 1)
    throw std::runtime_error("read_snapshot: bad header in " + file.string());
  const Eigen::Index nodes = static_cast<Eigen::Index>(head[1]) * head[2];
  snap.u.resize(nodes);
  snap.v.resize(nodes);
  is.read(reinterpret_cast<char*>(snap.u.data()),
          static_cast<std::streamsize>(nodes * sizeof(double)));
  is.read(reinterpret_cast<char*>(snap.v.data()),
          static_cast<std::streamsize>(nodes * sizeof(double)));
  if (!is) throw std::runtime_error("read_snapshot: truncated file " + file.string());
  return snap;
}

void write_csv(const std::filesystem::path& file, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream os(file);
  if (!os) throw std::runtime_error("write_csv: cannot open " + file.string());
  for (size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << "\n";
  char buf[40];
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw std::invalid_argument("write_csv: row width does not match the header");
    for (size_t i = 0; i < row.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", row[i]);
      os << (i ? "," : "") << buf;
    }
    os << "\n";
  }
  if (!os) throw std::runtime_error("write_csv: short write on " + file.string());
}

json load_config(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw std::runtime_error("load_config: cannot open " + file.string());
  return json::parse(is, nullptr, /*allow_exceptions=*/true, /*ignore_comments=*/true);
}

void write_json(const std::filesystem::path& file, const json& j) {
  std::ofstream os(file);
  if (!os) throw std::runtime_error("write_json: cannot open " + file.string());
  os << j.dump(2) << "\n";
}

json make_manifest(const std::string& command, std::uint64_t seed, int threads,
                   const json& config) {
  json m;
  m["command"] = command;
  m["version"] = BIWAVE_VERSION;
  m["seed"] = seed;
  m["threads"] = threads;
  m["config"] = config;
  m["warnings"] = json::array();
  m["outputs"] = json::array();
  return m;
}

}  // namespace biwave
