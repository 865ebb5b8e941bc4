#pragma once

// Helpers shared by the CLI tests and the acceptance runner: file comparison, tool
// invocation, and semantic mutations of stored artifacts.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "density/artifact_io.hpp"

namespace clitest {

namespace fs = std::filesystem;
using density::io::Json;

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

/// Every regular file below a and b, compared byte for byte by relative path.
inline bool same_tree(const fs::path& a, const fs::path& b, std::string* why = nullptr) {
  std::vector<fs::path> ra, rb;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) ra.push_back(fs::relative(e.path(), a));
  for (const auto& e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file()) rb.push_back(fs::relative(e.path(), b));
  std::sort(ra.begin(), ra.end());
  std::sort(rb.begin(), rb.end());
  if (ra != rb) {
    if (why) *why = "file lists differ";
    return false;
  }
  for (const auto& r : ra)
    if (slurp(a / r) != slurp(b / r)) {
      if (why) *why = r.string() + " differs";
      return false;
    }
  return !ra.empty();
}

/// Exit status of `tool args`, output discarded.
inline int run_tool(const std::string& tool, const std::string& args) {
  std::string cmd = "\"" + tool + "\" " + args + " >/dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

/// The membership bit vector behind a document's artifact ("bits" for subsets, "entry" otherwise).
inline Json& membership_node(Json& doc) {
  auto& art = doc["artifact"];
  if (doc["artifact_kind"] == "split") return art["a1"]["entry"];
  return art.contains("bits") ? art["bits"] : art["entry"];
}

/// Toggles membership of x and re-encodes the artifact.
inline void flip_member(Json& doc, std::uint64_t x) {
  namespace io = density::io;
  auto& node = membership_node(doc);
  if (doc["artifact"].contains("bits")) {
    auto bits = io::bits_from(node);
    bits[x] = !bits[x];
    node = io::bits_json(bits);
  } else {
    auto entry = io::values_from(node);
    entry[x] = entry[x] == density::kNever ? 0 : density::kNever;
    node = io::values_json(entry);
  }
}

/// Positions inside a certified region: [0, determined_prefix) for subsets, [0, n_max) otherwise.
inline std::uint64_t certified_extent(const Json& doc) {
  const auto& art = doc["artifact_kind"] == "split" ? doc["artifact"]["a1"] : doc["artifact"];
  if (art.contains("determined_prefix")) return art["determined_prefix"].get<std::uint64_t>();
  return art["n_max"].get<std::uint64_t>();
}

/// Bumps one stored checkpoint value: a subset checkpoint s, a checkpoint/block mark where the
/// construction's marks are checkpoints, or else a certificate lhs.
inline void edit_checkpoint(Json& doc, std::size_t i) {
  auto& art = doc["artifact_kind"] == "split" ? doc["artifact"]["a1"] : doc["artifact"];
  const auto kind = art["construction"].get<std::string>();
  const bool marks_are_checkpoints = kind == "infsup" || kind == "double" || kind == "pi2_density" || kind == "sigma3_transfer";
  if (art.contains("checkpoints") && art["checkpoints"].size() > 1) {
    auto& cp = art["checkpoints"][1 + i % (art["checkpoints"].size() - 1)];
    cp[0] = cp[0].get<std::uint64_t>() + 1;
  } else if (marks_are_checkpoints && !art["marks"].empty()) {
    auto& m = art["marks"][i % art["marks"].size()];
    m = m.get<std::uint64_t>() + 1;
  } else {
    auto& c = art["certificates"][i % art["certificates"].size()];
    c["lhs"] = density::to_string(density::io::rational_from(c["lhs"]) + 1);
  }
}

}  // namespace clitest
