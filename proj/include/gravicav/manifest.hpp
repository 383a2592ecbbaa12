// Run manifests: what a CLI run did, enough to replay it bit for bit, plus a
// tolerance-aware comparison of two output directories.
#ifndef GRAVICAV_MANIFEST_HPP
#define GRAVICAV_MANIFEST_HPP

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "gravicav/config.hpp"

namespace gravicav {

std::string code_version();

struct Manifest {
  std::string command;           // subcommand name
  nlohmann::json options;        // subcommand options, as resolved
  RunConfig config;
  std::string version;
  std::vector<std::string> outputs;  // relative to the run directory, sorted
};

nlohmann::json to_json(const Manifest& m);
Manifest manifest_from_json(const nlohmann::json& j);

/// Writes `dir/manifest.json` atomically.
void write_manifest(const std::filesystem::path& dir, const Manifest& m);
Manifest read_manifest(const std::filesystem::path& file);

struct OutputDiff {
  std::string file;
  std::string reason;
};

/// Compares `files` under two run directories. CSV and JSON numbers must
/// agree to |a - b| <= tol * max(1, |a|, |b|); text fields and every other
/// file type must match byte for byte.
std::vector<OutputDiff> compare_outputs(const std::filesystem::path& a,
                                        const std::filesystem::path& b,
                                        const std::vector<std::string>& files,
                                        double tol = 1e-12);

}  // namespace gravicav

#endif  // GRAVICAV_MANIFEST_HPP
