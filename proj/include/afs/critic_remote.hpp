#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "afs/critic.hpp"

// HTTP client side of the critic wire protocol.  Endpoints (all POST, JSON
// bodies, JSON replies):
//
//   /diagnose  {"preview":[...], "prompt":  "..."}   -> diagnosis object
//   /score     {"preview":[...], "instruction":"..."} -> {"score":x,"reason":"..."}
//   /refine    {"preview":[...], "instruction":"..."} -> refinement proposal
//
// Transport failures (no response, 5xx) are retried up to `retries` times
// and then surface as afs::TransportError carrying the attempt count.
// Malformed replies — unparsable JSON, missing/ill-typed fields, a score
// outside [-10, 10], any non-5xx error status — are never retried and throw
// afs::ProtocolError naming the offending field.

namespace afs {

struct RemoteConfig {
  std::string base_url;  // e.g. "http://127.0.0.1:8080"
  int timeout_ms = 5000;
  int retries = 2;

  // Reads CRITIC_URL (required), CRITIC_TIMEOUT_MS, CRITIC_RETRIES.
  // Throws InvalidArgument when CRITIC_URL is unset or a value is malformed.
  static RemoteConfig from_env();
};

Diagnosis remote_diagnose(const RemoteConfig& config,
                          const std::vector<double>& preview,
                          const std::string& prompt);

// Returns (score, reason); the score is validated to lie in [-10, 10].
std::pair<double, std::string> remote_score(const RemoteConfig& config,
                                            const std::vector<double>& preview,
                                            const std::string& instruction);

// Returns the raw proposal JSON (validated to be an object; the redesign
// loop applies the stricter schema).
json remote_refine(const RemoteConfig& config,
                   const std::vector<double>& preview,
                   const std::string& instruction);

class RemoteCritic final : public Critic {
 public:
  explicit RemoteCritic(RemoteConfig config) : config_(std::move(config)) {}

  ScoreBreakdown score(const DecodedPreview& preview,
                       const SceneSpec& spec) override;
  Diagnosis diagnose(const DecodedPreview& preview,
                     const SceneSpec& spec) override;
  std::optional<json> propose_refinement(const DecodedPreview& preview,
                                         const SceneSpec& spec) override;
  std::string name() const override { return "remote:" + config_.base_url; }

  const RemoteConfig& config() const { return config_; }

 private:
  RemoteConfig config_;
};

}  // namespace afs
