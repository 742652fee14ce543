#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nctk/errors.hpp"
#include "nctk/metrics.hpp"

namespace nctk {

// The scorer process died, stalled, or could not be started, and retries ran out.
class ScorerUnavailable : public DataError {
 public:
  using DataError::DataError;
};

struct ScorerConfig {
  std::vector<std::string> command;  // argv; command[0] is looked up on PATH
  std::chrono::milliseconds timeout{30000};  // per message
  int max_retries = 2;  // restarts allowed per request
};

struct ScorerInfo {
  std::string name;
  std::string version;
};

// Client for an external similarity scorer speaking line-delimited JSON over
// its stdin/stdout:
//   <- {"hello":{"name":..,"version":..,"range":[0,1]}}
//   -> {"id":N,"candidate":..,"reference":..}
//   <- {"id":N,"score":x}
// One request is in flight at a time; calls are serialized by a mutex.
class ScorerClient {
 public:
  // Starts the process and reads the handshake. Throws ScorerUnavailable or
  // ProtocolError.
  explicit ScorerClient(ScorerConfig config);
  ~ScorerClient();

  ScorerClient(const ScorerClient&) = delete;
  ScorerClient& operator=(const ScorerClient&) = delete;

  const ScorerInfo& info() const { return info_; }
  int restarts() const { return restarts_; }

  double score(const std::string& candidate, const std::string& reference);

 private:
  struct Process;

  void start();
  void stop();
  std::string read_line();
  void write_line(const std::string& line);

  ScorerConfig config_;
  ScorerInfo info_;
  std::unique_ptr<Process> proc_;
  std::mutex mu_;
  long long next_id_ = 0;
  int restarts_ = 0;
};

using TextPair = std::pair<std::string, std::string>;  // (candidate, reference)

// One score per pair, in input order.
std::vector<MetricScore> external_score(std::span<const TextPair> pairs, ScorerClient& scorer);

}  // namespace nctk
