#include "constest/external_scorer.hpp"

#include <cerrno>
#include <csignal>
#include <cmath>
#include <cstring>
#include <fcntl.h>
#include <mutex>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>
#include <unordered_map>

#include <json.hpp>

#include "constest/error.hpp"

extern char** environ;

namespace constest {

namespace {

using Clock = std::chrono::steady_clock;

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { std::signal(SIGPIPE, SIG_IGN); });
}

int remaining_ms(Clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
  return left.count() <= 0 ? 0 : static_cast<int>(std::min<long long>(left.count(), 1 << 30));
}

std::string errno_text(const char* what) {
  return std::string(what) + ": " + std::strerror(errno);
}

std::string describe_status(int status) {
  if (WIFEXITED(status)) return "exit code " + std::to_string(WEXITSTATUS(status));
  if (WIFSIGNALED(status)) return "signal " + std::to_string(WTERMSIG(status));
  return "unknown status";
}

void kill_and_reap(pid_t pid) {
  if (pid <= 0) return;
  ::kill(pid, SIGKILL);
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
}

}  // namespace

ExternalScorer::ExternalScorer(pid_t pid, int to_child, int from_child,
                               ExternalScorerOptions options)
    : pid_(pid), to_child_(to_child), from_child_(from_child), options_(options) {}

ExternalScorer ExternalScorer::connect(const std::vector<std::string>& argv,
                                       const ExternalScorerOptions& options) {
  if (argv.empty()) throw SpawnError("empty scorer command line");
  ignore_sigpipe();

  int in_pipe[2];   // parent writes, child reads
  int out_pipe[2];  // child writes, parent reads
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw SpawnError(errno_text("pipe"));
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw SpawnError(errno_text("pipe"));
  }

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);

  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);

  pid_t pid = -1;
  const int rc = ::posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  if (rc != 0) {
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    throw SpawnError("cannot start '" + argv[0] + "': " + std::strerror(rc));
  }
  ::fcntl(in_pipe[1], F_SETFL, ::fcntl(in_pipe[1], F_GETFL) | O_NONBLOCK);
  ::fcntl(out_pipe[0], F_SETFL, ::fcntl(out_pipe[0], F_GETFL) | O_NONBLOCK);

  ExternalScorer scorer(pid, in_pipe[1], out_pipe[0], options);
  try {
    const auto line = scorer.read_line(Clock::now() + options.handshake_timeout);
    if (!line) {
      int status = 0;
      ::waitpid(pid, &status, 0);
      scorer.pid_ = -1;
      scorer.close_fds();
      throw SpawnError("scorer '" + argv[0] + "' exited before the handshake (" +
                       describe_status(status) + ")");
    }
    if (*line != kHandshakeLine) {
      std::string detail = "expected " + std::string(kHandshakeLine) + ", got '" + *line + "'";
      throw ProtocolError("bad handshake from '" + argv[0] + "': " + detail);
    }
  } catch (const ProtocolError&) {
    kill_and_reap(scorer.pid_);
    scorer.pid_ = -1;
    scorer.close_fds();
    throw;
  } catch (const TimeoutError&) {
    kill_and_reap(scorer.pid_);
    scorer.pid_ = -1;
    scorer.close_fds();
    throw TimeoutError("no handshake from '" + argv[0] + "' within " +
                       std::to_string(options.handshake_timeout.count()) + " ms");
  }
  return scorer;
}

ExternalScorer ExternalScorer::connect_shell(const std::string& command,
                                             const ExternalScorerOptions& options) {
  return connect({"/bin/sh", "-c", command}, options);
}

ExternalScorer::ExternalScorer(ExternalScorer&& other) noexcept
    : pid_(std::exchange(other.pid_, -1)),
      to_child_(std::exchange(other.to_child_, -1)),
      from_child_(std::exchange(other.from_child_, -1)),
      options_(other.options_),
      next_id_(other.next_id_),
      read_buffer_(std::move(other.read_buffer_)),
      shutdown_result_(std::move(other.shutdown_result_)) {}

ExternalScorer& ExternalScorer::operator=(ExternalScorer&& other) noexcept {
  if (this != &other) {
    try {
      shutdown();
    } catch (...) {
    }
    pid_ = std::exchange(other.pid_, -1);
    to_child_ = std::exchange(other.to_child_, -1);
    from_child_ = std::exchange(other.from_child_, -1);
    options_ = other.options_;
    next_id_ = other.next_id_;
    read_buffer_ = std::move(other.read_buffer_);
    shutdown_result_ = std::move(other.shutdown_result_);
  }
  return *this;
}

ExternalScorer::~ExternalScorer() {
  try {
    shutdown();
  } catch (...) {
  }
}

void ExternalScorer::close_fds() noexcept {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  to_child_ = from_child_ = -1;
}

std::optional<std::string> ExternalScorer::read_line(Clock::time_point deadline) {
  for (;;) {
    const auto nl = read_buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = read_buffer_.substr(0, nl);
      read_buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    pollfd pfd{from_child_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, remaining_ms(deadline));
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw ProtocolError(errno_text("poll"));
    }
    if (ready == 0) throw TimeoutError("timed out waiting for the scorer");
    char chunk[4096];
    const ssize_t got = ::read(from_child_, chunk, sizeof chunk);
    if (got == 0) return std::nullopt;
    if (got < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw ProtocolError(errno_text("read"));
    }
    read_buffer_.append(chunk, static_cast<std::size_t>(got));
  }
}

double ExternalScorer::score(const Tokens& tokens) {
  return score_batch(std::span<const Tokens>(&tokens, 1)).front();
}

std::vector<double> ExternalScorer::score_batch(std::span<const Tokens> inputs) {
  if (!connected()) throw ProtocolError("external scorer is not connected");
  std::vector<double> results(inputs.size(), 0.0);
  if (inputs.empty()) return results;

  std::string outgoing;
  std::unordered_map<std::uint64_t, std::size_t> pending;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const std::uint64_t id = next_id_++;
    nlohmann::ordered_json request;
    request["id"] = id;
    request["tokens"] = inputs[i];
    outgoing += request.dump();
    outgoing += '\n';
    pending.emplace(id, i);
  }

  const auto deadline = Clock::now() + options_.batch_timeout;
  std::size_t written = 0;

  const auto handle_line = [&](const std::string& line) {
    nlohmann::json msg;
    try {
      msg = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw ProtocolError("malformed response line: " + line);
    }
    if (!msg.is_object()) throw ProtocolError("malformed response line: " + line);
    if (msg.contains("error")) {
      throw ProtocolError("scorer reported an error: " + msg["error"].dump());
    }
    if (!msg.contains("id") || !msg["id"].is_number_unsigned() || !msg.contains("score") ||
        !msg["score"].is_number()) {
      throw ProtocolError("malformed response line: " + line);
    }
    const auto id = msg["id"].get<std::uint64_t>();
    const auto it = pending.find(id);
    if (it == pending.end()) {
      throw ProtocolError("response for unknown request id " + std::to_string(id));
    }
    const double s = msg["score"].get<double>();
    if (!std::isfinite(s) || s < 0.0 || s > 1.0) {
      throw ProtocolError("score out of range [0,1] for request " + std::to_string(id) +
                          ": " + msg["score"].dump());
    }
    results[it->second] = s;
    pending.erase(it);
  };

  try {
    while (!pending.empty()) {
      // Drain complete lines already buffered.
      for (auto nl = read_buffer_.find('\n'); nl != std::string::npos && !pending.empty();
           nl = read_buffer_.find('\n')) {
        std::string line = read_buffer_.substr(0, nl);
        read_buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        handle_line(line);
      }
      if (pending.empty()) break;

      pollfd fds[2] = {{from_child_, POLLIN, 0}, {to_child_, POLLOUT, 0}};
      const nfds_t nfds = written < outgoing.size() ? 2 : 1;
      const int ready = ::poll(fds, nfds, remaining_ms(deadline));
      if (ready < 0) {
        if (errno == EINTR) continue;
        throw ProtocolError(errno_text("poll"));
      }
      if (ready == 0) {
        throw TimeoutError("scorer did not answer " + std::to_string(pending.size()) + " of " +
                           std::to_string(inputs.size()) + " requests within " +
                           std::to_string(options_.batch_timeout.count()) + " ms");
      }
      if (nfds == 2 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
        const ssize_t n = ::write(to_child_, outgoing.data() + written, outgoing.size() - written);
        if (n < 0 && errno != EAGAIN && errno != EINTR) {
          throw ProtocolError(errno_text("write to scorer"));
        }
        if (n > 0) written += static_cast<std::size_t>(n);
      }
      if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
        char chunk[65536];
        const ssize_t got = ::read(from_child_, chunk, sizeof chunk);
        if (got == 0) {
          throw ProtocolError("scorer exited with " + std::to_string(pending.size()) +
                              " requests unanswered");
        }
        if (got < 0 && errno != EAGAIN && errno != EINTR) {
          throw ProtocolError(errno_text("read from scorer"));
        }
        if (got > 0) read_buffer_.append(chunk, static_cast<std::size_t>(got));
      }
    }
  } catch (...) {
    // The stream is out of sync; the handle cannot be reused.
    kill_and_reap(pid_);
    shutdown_result_ = ShutdownResult{-1, true};
    pid_ = -1;
    close_fds();
    throw;
  }
  return results;
}

ShutdownResult ExternalScorer::shutdown() {
  if (shutdown_result_) return *shutdown_result_;
  if (pid_ <= 0) return ShutdownResult{};

  if (to_child_ >= 0) {
    std::string line(kShutdownLine);
    line += '\n';
    pollfd pfd{to_child_, POLLOUT, 0};
    if (::poll(&pfd, 1, 1000) > 0) {
      [[maybe_unused]] const ssize_t n = ::write(to_child_, line.data(), line.size());
    }
    ::close(to_child_);
    to_child_ = -1;
  }

  ShutdownResult result;
  const auto deadline = Clock::now() + options_.shutdown_grace;
  int status = 0;
  bool exited = false;
  for (;;) {
    const pid_t r = ::waitpid(pid_, &status, WNOHANG);
    if (r == pid_) {
      exited = true;
      break;
    }
    if (r < 0 && errno != EINTR) break;
    if (Clock::now() >= deadline) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  if (!exited) {
    ::kill(pid_, SIGKILL);
    while (::waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
    }
    result.forced = true;
  }
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  pid_ = -1;
  close_fds();
  shutdown_result_ = result;
  return result;
}

}  // namespace constest
