#include "afs/critic_remote.hpp"

#include <chrono>
#include <cstdlib>

#include <httplib.h>

#include "afs/errors.hpp"
#include "afs/text_format.hpp"

namespace afs {
namespace {

json post_json(const RemoteConfig& config, const std::string& path,
               const json& body) {
  const std::string payload = body.dump();
  std::string last_error = "no attempt made";

  const int attempts = 1 + (config.retries > 0 ? config.retries : 0);
  for (int attempt = 0; attempt < attempts; ++attempt) {
    httplib::Client client(config.base_url);
    const auto timeout = std::chrono::milliseconds(config.timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    httplib::Result res = client.Post(path, payload, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;  // transport: retry
    }
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;  // server-side failure: retry
    }
    if (res->status != 200) {
      throw ProtocolError("POST " + path + " rejected with HTTP " +
                              std::to_string(res->status),
                          "(status)");
    }
    json parsed;
    try {
      parsed = json::parse(res->body);
    } catch (const json::parse_error& e) {
      throw ProtocolError(
          "POST " + path + " returned unparsable JSON: " + e.what(), "(body)");
    }
    if (!parsed.is_object()) {
      throw ProtocolError("POST " + path + " must return a JSON object",
                          "(body)");
    }
    return parsed;
  }
  throw TransportError("POST " + config.base_url + path + " failed after " +
                           std::to_string(attempts) + " attempt(s): " +
                           last_error,
                       attempts - 1);
}

int env_int(const char* key, int fallback) {
  const char* raw = std::getenv(key);
  if (!raw || *raw == '\0') return fallback;
  try {
    return static_cast<int>(text::parse_size(raw));
  } catch (const Error&) {
    throw InvalidArgument(std::string(key) + " must be a non-negative integer, got '" +
                          raw + "'");
  }
}

}  // namespace

RemoteConfig RemoteConfig::from_env() {
  RemoteConfig config;
  const char* url = std::getenv("CRITIC_URL");
  if (!url || *url == '\0') {
    throw InvalidArgument(
        "CRITIC_URL is not set (remote critic mode needs an endpoint)");
  }
  config.base_url = url;
  config.timeout_ms = env_int("CRITIC_TIMEOUT_MS", config.timeout_ms);
  config.retries = env_int("CRITIC_RETRIES", config.retries);
  return config;
}

Diagnosis remote_diagnose(const RemoteConfig& config,
                          const std::vector<double>& preview,
                          const std::string& prompt) {
  const json reply = post_json(
      config, "/diagnose", json{{"preview", preview}, {"prompt", prompt}});
  return diagnosis_from_json(reply);
}

std::pair<double, std::string> remote_score(const RemoteConfig& config,
                                            const std::vector<double>& preview,
                                            const std::string& instruction) {
  const json reply = post_json(
      config, "/score",
      json{{"preview", preview}, {"instruction", instruction}});
  if (!reply.contains("score") || !reply["score"].is_number()) {
    throw ProtocolError("score reply needs a numeric 'score'", "score");
  }
  const double score = reply["score"].get<double>();
  if (!(score >= -10.0 && score <= 10.0)) {
    throw ProtocolError(
        "score " + text::fmt17(score) + " is outside [-10, 10]", "score");
  }
  if (!reply.contains("reason") || !reply["reason"].is_string()) {
    throw ProtocolError("score reply needs a string 'reason'", "reason");
  }
  return {score, reply["reason"].get<std::string>()};
}

json remote_refine(const RemoteConfig& config,
                   const std::vector<double>& preview,
                   const std::string& instruction) {
  return post_json(config, "/refine",
                   json{{"preview", preview}, {"instruction", instruction}});
}

ScoreBreakdown RemoteCritic::score(const DecodedPreview& preview,
                                   const SceneSpec& spec) {
  const auto [total, reason] =
      remote_score(config_, preview.values, spec.instruction);
  (void)reason;
  return score_breakdown_from_total(total);
}

Diagnosis RemoteCritic::diagnose(const DecodedPreview& preview,
                                 const SceneSpec& spec) {
  return remote_diagnose(config_, preview.values, spec.instruction);
}

std::optional<json> RemoteCritic::propose_refinement(
    const DecodedPreview& preview, const SceneSpec& spec) {
  return remote_refine(config_, preview.values, spec.instruction);
}

}  // namespace afs
