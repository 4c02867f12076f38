// Test double for the grammaticality-scorer/1 protocol. The --mode flag picks
// a conforming or deliberately broken behavior.

#include <algorithm>
#include <chrono>
#include <csignal>
#include <cstdint>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "constest/external_scorer.hpp"
#include "constest/ngram_model.hpp"
#include "constest/rng.hpp"

using nlohmann::json;

namespace {

double fnv_score(const std::vector<std::string>& tokens) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : tokens) {
    for (unsigned char c : t) h = (h ^ c) * 0x100000001b3ULL;
    h = (h ^ 0x1f) * 0x100000001b3ULL;
  }
  return static_cast<double>(h % 1000) / 1000.0;
}

void emit(std::uint64_t id, double score) {
  json r;
  r["id"] = id;
  r["score"] = score;
  std::cout << r.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"protocol stub scorer"};
  std::string mode = "constant";
  double value = 0.5;
  std::string model_path;
  std::size_t group = 1;
  std::uint64_t shuffle_seed = 0;
  app.add_option("--mode", mode);
  app.add_option("--value", value);
  app.add_option("--model", model_path);
  app.add_option("--group", group);
  app.add_option("--shuffle-seed", shuffle_seed);
  CLI11_PARSE(app, argc, argv);

  if (mode == "exit") return 3;
  if (mode == "garbage") {
    std::cout << "hello there\n" << std::flush;
    std::this_thread::sleep_for(std::chrono::seconds(30));
    return 0;
  }
  if (mode == "wrong-protocol") {
    std::cout << R"({"protocol":"grammaticality-scorer/2"})" << "\n" << std::flush;
    std::this_thread::sleep_for(std::chrono::seconds(30));
    return 0;
  }
  if (mode == "silent") {
    std::this_thread::sleep_for(std::chrono::seconds(30));
    return 0;
  }
  if (mode == "hang") std::signal(SIGTERM, SIG_IGN);

  std::optional<constest::NGramModel> model;
  if (mode == "model") model = constest::load_model(model_path);

  std::cout << constest::kHandshakeLine << "\n" << std::flush;

  constest::Rng rng(shuffle_seed);
  std::vector<std::pair<std::uint64_t, double>> held;
  std::string line;
  while (std::getline(std::cin, line)) {
    json msg = json::parse(line, nullptr, false);
    if (msg.is_discarded()) {
      std::cout << R"({"error":"malformed request"})" << "\n" << std::flush;
      continue;
    }
    if (msg.contains("cmd")) {
      if (mode == "hang") {
        for (;;) std::this_thread::sleep_for(std::chrono::seconds(1));
      }
      return 0;
    }
    if (mode == "hang" || mode == "mute") continue;

    const auto id = msg.at("id").get<std::uint64_t>();
    const auto tokens = msg.at("tokens").get<std::vector<std::string>>();
    double score = value;
    if (mode == "tokmod") score = static_cast<double>(tokens.size() % 10) / 10.0;
    else if (mode == "hash") score = fnv_score(tokens);
    else if (mode == "model") score = model->score(tokens);
    else if (mode == "out-of-range") score = 1.5;
    else if (mode == "error-response") {
      std::cout << R"({"id":)" << id << R"(,"error":"model not loaded"})" << "\n" << std::flush;
      continue;
    } else if (mode == "bad-id") {
      emit(id + 1000, 0.5);
      std::cout << std::flush;
      continue;
    }

    held.emplace_back(id, score);
    if (held.size() >= group) {
      if (shuffle_seed != 0) rng.shuffle(held);
      else if (group > 1) std::reverse(held.begin(), held.end());
      for (const auto& [i, s] : held) emit(i, s);
      std::cout << std::flush;
      held.clear();
    }
  }
  return 0;
}
