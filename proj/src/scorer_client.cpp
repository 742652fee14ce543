#include "nctk/scorer_client.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <thread>

#include "json.hpp"

namespace nctk {

using json = nlohmann::json;

namespace {

// Raised internally for conditions worth a restart.
struct Transient {
  std::string what;
};

std::string excerpt(const std::string& line) {
  return line.size() > 200 ? line.substr(0, 200) + "..." : line;
}

}  // namespace

struct ScorerClient::Process {
  pid_t pid = -1;
  int fd = -1;
  std::string buffer;
};

ScorerClient::ScorerClient(ScorerConfig config) : config_(std::move(config)) {
  if (config_.command.empty()) throw UsageError("scorer command is empty");
  if (config_.max_retries < 0) throw UsageError("scorer retries must be non-negative");
  std::string last;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    try {
      start();
      return;
    } catch (const Transient& t) {
      last = t.what;
      stop();
    } catch (...) {
      stop();
      throw;
    }
  }
  throw ScorerUnavailable("scorer '" + config_.command[0] + "' unavailable: " + last);
}

ScorerClient::~ScorerClient() { stop(); }

void ScorerClient::start() {
  int sv[2];
  if (socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0)
    throw Transient{std::string("socketpair: ") + std::strerror(errno)};

  std::vector<char*> argv;
  for (auto& a : config_.command) argv.push_back(a.data());
  argv.push_back(nullptr);

  const pid_t pid = fork();
  if (pid < 0) {
    close(sv[0]);
    close(sv[1]);
    throw Transient{std::string("fork: ") + std::strerror(errno)};
  }
  if (pid == 0) {
    dup2(sv[1], STDIN_FILENO);
    dup2(sv[1], STDOUT_FILENO);
    execvp(argv[0], argv.data());
    _exit(127);
  }
  close(sv[1]);
  proc_ = std::make_unique<Process>();
  proc_->pid = pid;
  proc_->fd = sv[0];

  const std::string line = read_line();
  json hello;
  try {
    hello = json::parse(line);
  } catch (const json::exception&) {
    throw ProtocolError("scorer handshake is not JSON: " + excerpt(line));
  }
  const auto bad = [&] { return ProtocolError("malformed scorer handshake: " + excerpt(line)); };
  if (!hello.is_object() || !hello.contains("hello") || !hello["hello"].is_object()) throw bad();
  const auto& h = hello["hello"];
  if (!h.contains("name") || !h["name"].is_string() || !h.contains("version") ||
      !h["version"].is_string() || !h.contains("range") || !h["range"].is_array() ||
      h["range"].size() != 2 || !h["range"][0].is_number() || !h["range"][1].is_number())
    throw bad();
  if (h["range"][0].get<double>() != 0.0 || h["range"][1].get<double>() != 1.0)
    throw ProtocolError("scorer declares range " + h["range"].dump() + ", expected [0,1]");
  info_.name = h["name"].get<std::string>();
  info_.version = h["version"].get<std::string>();
}

void ScorerClient::stop() {
  if (!proc_) return;
  if (proc_->fd >= 0) close(proc_->fd);
  if (proc_->pid > 0) {
    // Closing the socket is the shutdown signal; give the process a moment.
    bool reaped = false;
    for (int i = 0; i < 50 && !reaped; ++i) {
      int status = 0;
      const pid_t r = waitpid(proc_->pid, &status, WNOHANG);
      if (r == proc_->pid || r < 0) {
        reaped = true;
      } else {
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
      }
    }
    if (!reaped) {
      kill(proc_->pid, SIGKILL);
      waitpid(proc_->pid, nullptr, 0);
    }
  }
  proc_.reset();
}

std::string ScorerClient::read_line() {
  auto& p = *proc_;
  const auto deadline = std::chrono::steady_clock::now() + config_.timeout;
  for (;;) {
    const auto nl = p.buffer.find('\n');
    if (nl != std::string::npos) {
      std::string line = p.buffer.substr(0, nl);
      p.buffer.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) throw Transient{"timed out after " + std::to_string(config_.timeout.count()) + " ms"};
    pollfd pfd{p.fd, POLLIN, 0};
    const int r = poll(&pfd, 1, static_cast<int>(left.count()));
    if (r < 0) {
      if (errno == EINTR) continue;
      throw Transient{std::string("poll: ") + std::strerror(errno)};
    }
    if (r == 0) continue;
    char chunk[4096];
    const ssize_t n = recv(p.fd, chunk, sizeof chunk, 0);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw Transient{std::string("read: ") + std::strerror(errno)};
    }
    if (n == 0) throw Transient{"scorer exited"};
    p.buffer.append(chunk, static_cast<std::size_t>(n));
  }
}

void ScorerClient::write_line(const std::string& line) {
  std::string msg = line + "\n";
  std::size_t off = 0;
  while (off < msg.size()) {
    const ssize_t n = send(proc_->fd, msg.data() + off, msg.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Transient{std::string("write: ") + std::strerror(errno)};
    }
    off += static_cast<std::size_t>(n);
  }
}

double ScorerClient::score(const std::string& candidate, const std::string& reference) {
  std::lock_guard lock(mu_);
  const long long id = next_id_++;
  const std::string request =
      json{{"id", id}, {"candidate", candidate}, {"reference", reference}}.dump(
          -1, ' ', false, json::error_handler_t::replace);
  std::string last;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    try {
      if (!proc_) {
        ++restarts_;
        start();
      }
      write_line(request);
      const std::string line = read_line();
      json resp;
      try {
        resp = json::parse(line);
      } catch (const json::exception&) {
        throw ProtocolError("scorer response is not JSON: " + excerpt(line));
      }
      if (!resp.is_object() || !resp.contains("id") || !resp["id"].is_number_integer() ||
          !resp.contains("score") || !resp["score"].is_number())
        throw ProtocolError("malformed scorer response: " + excerpt(line));
      if (resp["id"].get<long long>() != id)
        throw ProtocolError("scorer answered id " + resp["id"].dump() + " to request " +
                            std::to_string(id) + ": " + excerpt(line));
      const double s = resp["score"].get<double>();
      if (!std::isfinite(s) || s < 0.0 || s > 1.0)
        throw ProtocolError("scorer score outside [0,1]: " + excerpt(line));
      return s;
    } catch (const Transient& t) {
      last = t.what;
      stop();
    } catch (const ProtocolError&) {
      stop();
      throw;
    }
  }
  throw ScorerUnavailable("scorer '" + config_.command[0] + "' failed after " +
                          std::to_string(config_.max_retries + 1) + " attempts: " + last);
}

std::vector<MetricScore> external_score(std::span<const TextPair> pairs, ScorerClient& scorer) {
  std::vector<MetricScore> out;
  out.reserve(pairs.size());
  for (const auto& [c, r] : pairs) out.push_back({scorer.score(c, r), MetricId::kExternal});
  return out;
}

}  // namespace nctk
