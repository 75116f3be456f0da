#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>

#include "vigil/backends.hpp"
#include "vigil/monitoring.hpp"
#include "vigil/serialization.hpp"

namespace vigil {

struct RemoteEndpointConfig {
  /// Scheme, host and port, for example `http://127.0.0.1:8080`.
  std::string base_url;
  std::string path = "/v1/chat/completions";
  std::string model;
  std::chrono::milliseconds timeout{30000};
  std::uint32_t retries = 3;
  std::chrono::milliseconds backoff{200};
  /// Name of the environment variable holding a bearer token. The token is
  /// read per request and never logged.
  std::string credential_env;
  std::size_t max_in_flight = 4;
  double temperature = 0.0;

  /// Throws on an empty base URL or non-positive timeout.
  void validate() const;
};

class RemoteError : public Error {
 public:
  RemoteError(const std::string& what, std::uint32_t attempts)
      : Error(what), attempts_(attempts) {}
  std::uint32_t attempts() const { return attempts_; }

 private:
  std::uint32_t attempts_;
};

struct ChatRequest {
  std::string system;
  std::string prompt;
  double temperature = 0.0;
  std::optional<std::uint64_t> seed;
};

struct ChatResponse {
  std::string content;
  std::uint32_t retries = 0;
};

/// Request body: {model, messages[{role, content}], temperature, seed?}.
/// Keys are emitted in sorted order so identical requests serialize
/// identically.
std::string serialize_chat_request(const RemoteEndpointConfig& config, const ChatRequest& request);

/// Accepts `{"content": ...}` or the `choices[0].message.content` shape.
std::string parse_chat_response(const std::string& body);

/// Chat-style client with exponential backoff and a bound on concurrent
/// requests.
class RemoteClient {
 public:
  explicit RemoteClient(RemoteEndpointConfig config);

  /// Throws RemoteError once every attempt failed.
  ChatResponse complete(const ChatRequest& request);

  const RemoteEndpointConfig& config() const { return config_; }

 private:
  RemoteEndpointConfig config_;
  std::counting_semaphore<1024> slots_;
};

/// The prompt is sent as the user message; the reply text becomes the
/// payload content.
class RemoteAgentBackend final : public AgentBackend {
 public:
  explicit RemoteAgentBackend(RemoteEndpointConfig config);
  GenerateResult generate(const GenerateRequest& request) override;

 private:
  RemoteClient client_;
};

/// Asks the endpoint to grade an output and expects a JSON object with the
/// three dimension scores and a rationale in the reply.
class RemoteMonitorBackend final : public MonitorBackend {
 public:
  explicit RemoteMonitorBackend(RemoteEndpointConfig config);
  JudgeResult judge(const Payload& output, const AssessmentContext& context,
                    std::uint64_t seed) override;

 private:
  RemoteClient client_;
};

}  // namespace vigil
