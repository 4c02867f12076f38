#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <sys/types.h>
#include <vector>

#include "constest/scorer.hpp"

namespace constest {

inline constexpr std::string_view kScorerProtocol = "grammaticality-scorer/1";
inline constexpr std::string_view kHandshakeLine = R"({"protocol":"grammaticality-scorer/1"})";
inline constexpr std::string_view kShutdownLine = R"({"cmd":"shutdown"})";

struct ExternalScorerOptions {
  std::chrono::milliseconds handshake_timeout{60'000};
  std::chrono::milliseconds batch_timeout{300'000};
  std::chrono::milliseconds shutdown_grace{5'000};
};

struct ShutdownResult {
  int exit_code = -1;       // -1 if the child died from a signal
  bool forced = false;      // true if the grace period ran out
};

// A child process speaking grammaticality-scorer/1 on its stdin/stdout:
//   child -> {"protocol":"grammaticality-scorer/1"}     (first line)
//   parent -> {"id":N,"tokens":[...]}                  (one per input)
//   child -> {"id":N,"score":S}                         (any order)
//   parent -> {"cmd":"shutdown"}
// Tokens are passed through verbatim, markers included. The child's stderr
// is inherited.
class ExternalScorer final : public Scorer {
 public:
  // Spawns argv (argv[0] looked up in PATH) and validates the handshake.
  static ExternalScorer connect(const std::vector<std::string>& argv,
                                const ExternalScorerOptions& options = {});
  // Runs `command` through /bin/sh -c.
  static ExternalScorer connect_shell(const std::string& command,
                                      const ExternalScorerOptions& options = {});

  ExternalScorer(ExternalScorer&& other) noexcept;
  ExternalScorer& operator=(ExternalScorer&& other) noexcept;
  ExternalScorer(const ExternalScorer&) = delete;
  ExternalScorer& operator=(const ExternalScorer&) = delete;
  ~ExternalScorer() override;

  double score(const Tokens& tokens) override;
  std::vector<double> score_batch(std::span<const Tokens> inputs) override;

  // Sends the shutdown command, waits up to the grace period, then kills the
  // child. Later calls return the first result.
  ShutdownResult shutdown();

  bool connected() const noexcept { return pid_ > 0; }
  std::uint64_t requests_sent() const noexcept { return next_id_ - 1; }
  pid_t pid() const noexcept { return pid_; }

 private:
  ExternalScorer(pid_t pid, int to_child, int from_child, ExternalScorerOptions options);

  std::optional<std::string> read_line(std::chrono::steady_clock::time_point deadline);
  void close_fds() noexcept;

  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  ExternalScorerOptions options_;
  std::uint64_t next_id_ = 1;
  std::string read_buffer_;
  std::optional<ShutdownResult> shutdown_result_;
};

}  // namespace constest
