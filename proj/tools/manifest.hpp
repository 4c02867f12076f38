#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace constest::cli {

// One invocation as recorded in its output directory's manifest.json.
struct RunRecord {
  std::string command;
  std::vector<std::string> argv;  // arguments after the program name
  nlohmann::ordered_json flags = nlohmann::ordered_json::object();
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string cwd;
  std::string tool_version;
  std::string started_at;
  std::string finished_at;
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();
};

nlohmann::ordered_json to_json(const RunRecord& run);
RunRecord run_from_json(const nlohmann::ordered_json& j);

// UTC, second resolution, e.g. 2024-01-31T12:00:00Z.
std::string utc_now();

// manifest.json lives next to the outputs. It maps each output file name to
// the run that produced it; a later run writing the same file replaces its
// entry. Written via rename so readers never see a partial file.
std::string manifest_path_for(const std::string& output_path);
void record_run(const RunRecord& run);

// Entries of a manifest file, in file-name order.
std::vector<std::pair<std::string, RunRecord>> read_manifest(const std::string& path);

}  // namespace constest::cli
