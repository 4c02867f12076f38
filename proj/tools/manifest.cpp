#include "manifest.hpp"

#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>

#include "constest/error.hpp"
#include "constest/io.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace constest::cli {

namespace {

constexpr int kManifestVersion = 1;

ordered_json load_or_empty(const fs::path& path) {
  if (!fs::exists(path)) return ordered_json{{"manifest_version", kManifestVersion}, {"runs", ordered_json::object()}};
  try {
    auto j = ordered_json::parse(read_file(path.string()));
    if (!j.contains("runs") || !j["runs"].is_object()) throw DataError(path.string() + ": no runs object");
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace

ordered_json to_json(const RunRecord& run) {
  return ordered_json{{"command", run.command},   {"argv", run.argv},
                      {"flags", run.flags},       {"seed", run.seed},
                      {"inputs", run.inputs},     {"outputs", run.outputs},
                      {"cwd", run.cwd},           {"tool_version", run.tool_version},
                      {"started_at", run.started_at}, {"finished_at", run.finished_at},
                      {"extra", run.extra}};
}

RunRecord run_from_json(const ordered_json& j) {
  try {
    RunRecord run;
    run.command = j.at("command").get<std::string>();
    run.argv = j.at("argv").get<std::vector<std::string>>();
    run.flags = j.value("flags", ordered_json::object());
    run.seed = j.value("seed", std::uint64_t{0});
    run.inputs = j.value("inputs", std::vector<std::string>{});
    run.outputs = j.value("outputs", std::vector<std::string>{});
    run.cwd = j.value("cwd", std::string{});
    run.tool_version = j.value("tool_version", std::string{});
    run.started_at = j.value("started_at", std::string{});
    run.finished_at = j.value("finished_at", std::string{});
    run.extra = j.value("extra", ordered_json::object());
    return run;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("manifest entry: ") + e.what());
  }
}

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string manifest_path_for(const std::string& output_path) {
  return (fs::absolute(output_path).parent_path() / "manifest.json").string();
}

void record_run(const RunRecord& run) {
  std::map<fs::path, std::vector<std::string>> by_dir;
  for (const auto& out : run.outputs) {
    const fs::path abs = fs::absolute(out);
    by_dir[abs.parent_path()].push_back(abs.filename().string());
  }
  const ordered_json entry = to_json(run);
  for (const auto& [dir, names] : by_dir) {
    const fs::path path = dir / "manifest.json";
    auto j = load_or_empty(path);
    for (const auto& name : names) j["runs"][name] = entry;
    const fs::path tmp = dir / ".manifest.json.tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw DataError("cannot write " + tmp.string());
      out << j.dump(2) << '\n';
    }
    fs::rename(tmp, path);
  }
}

std::vector<std::pair<std::string, RunRecord>> read_manifest(const std::string& path) {
  if (!fs::exists(path)) throw DataError(path + ": no such manifest");
  const auto j = load_or_empty(path);
  std::vector<std::pair<std::string, RunRecord>> out;
  for (const auto& [name, entry] : j["runs"].items()) out.emplace_back(name, run_from_json(entry));
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

}  // namespace constest::cli
