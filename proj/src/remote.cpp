#include "vigil/remote.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

#include <httplib.h>

namespace vigil {

void RemoteEndpointConfig::validate() const {
  if (base_url.empty()) throw Error("remote endpoint needs a base address");
  if (timeout.count() <= 0) throw Error("remote endpoint timeout must be positive");
  if (max_in_flight == 0) throw Error("remote endpoint needs at least one request slot");
}

std::string serialize_chat_request(const RemoteEndpointConfig& config, const ChatRequest& request) {
  json messages = json::array();
  if (!request.system.empty()) messages.push_back({{"role", "system"}, {"content", request.system}});
  messages.push_back({{"role", "user"}, {"content", request.prompt}});
  json body{{"model", config.model}, {"messages", messages}, {"temperature", request.temperature}};
  if (request.seed) body["seed"] = *request.seed;
  return body.dump();
}

std::string parse_chat_response(const std::string& body) {
  json j = json::parse(body);
  if (j.contains("content") && j["content"].is_string()) return j["content"].get<std::string>();
  if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
    const auto& message = j["choices"][0].at("message");
    return message.at("content").get<std::string>();
  }
  throw Error("response carries no content");
}

namespace {

class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<1024>& slots) : slots_(slots) { slots_.acquire(); }
  ~SlotGuard() { slots_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<1024>& slots_;
};

}  // namespace

RemoteClient::RemoteClient(RemoteEndpointConfig config)
    : config_(std::move(config)),
      slots_(static_cast<std::ptrdiff_t>(std::min<std::size_t>(config_.max_in_flight, 1024))) {
  config_.validate();
}

ChatResponse RemoteClient::complete(const ChatRequest& request) {
  const std::string body = serialize_chat_request(config_, request);
  SlotGuard slot(slots_);

  httplib::Client client(config_.base_url);
  const auto seconds = config_.timeout.count() / 1000;
  const auto micros = (config_.timeout.count() % 1000) * 1000;
  client.set_connection_timeout(seconds, micros);
  client.set_read_timeout(seconds, micros);
  client.set_write_timeout(seconds, micros);

  httplib::Headers headers;
  if (!config_.credential_env.empty()) {
    if (const char* token = std::getenv(config_.credential_env.c_str()))
      headers.emplace("Authorization", std::string("Bearer ") + token);
  }

  std::string last_error;
  const std::uint32_t attempts = config_.retries + 1;
  for (std::uint32_t attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(config_.backoff * (1LL << std::min(attempt - 1, 10u)));
    auto result = client.Post(config_.path, headers, body, "application/json");
    if (!result) {
      last_error = "transport error: " + httplib::to_string(result.error());
      continue;
    }
    if (result->status != 200) {
      last_error = "HTTP status " + std::to_string(result->status);
      continue;
    }
    try {
      return ChatResponse{parse_chat_response(result->body), attempt};
    } catch (const std::exception& e) {
      last_error = std::string("malformed response: ") + e.what();
    }
  }
  throw RemoteError("remote request failed after " + std::to_string(attempts) +
                        " attempts: " + last_error,
                    attempts);
}

RemoteAgentBackend::RemoteAgentBackend(RemoteEndpointConfig config) : client_(std::move(config)) {}

GenerateResult RemoteAgentBackend::generate(const GenerateRequest& request) {
  ChatRequest chat;
  chat.prompt = request.prompt;
  chat.temperature = client_.config().temperature + request.perturbation.temperature_delta;
  chat.seed = request.seed + request.perturbation.seed_offset;
  try {
    auto response = client_.complete(chat);
    GenerateResult result;
    result.output.content = response.content;
    result.reasoning_trace = "remote retries=" + std::to_string(response.retries);
    return result;
  } catch (const Error& e) {
    throw BackendFailure(request.node, e.what());
  }
}

RemoteMonitorBackend::RemoteMonitorBackend(RemoteEndpointConfig config)
    : client_(std::move(config)) {}

JudgeResult RemoteMonitorBackend::judge(const Payload& output, const AssessmentContext& context,
                                        std::uint64_t seed) {
  ChatRequest chat;
  chat.system =
      "Grade the answer. Reply with a JSON object with numeric fields logical_consistency, "
      "format_compliance and content_completeness in [0, 1] and a string field rationale.";
  chat.prompt = "Input:\n" + context.input.content + "\n\nAnswer:\n" + output.content;
  chat.temperature = 0.0;
  chat.seed = seed;
  auto response = client_.complete(chat);
  const std::string& text = response.content;
  const auto open = text.find('{');
  const auto close = text.rfind('}');
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw Error("remote monitor reply holds no JSON object");
  json j;
  try {
    j = json::parse(text.substr(open, close - open + 1));
  } catch (const json::parse_error& e) {
    throw Error(std::string("remote monitor reply is not valid JSON: ") + e.what());
  }
  JudgeResult result;
  result.scores.logical_consistency = j.at("logical_consistency").get<double>();
  result.scores.format_compliance = j.at("format_compliance").get<double>();
  result.scores.content_completeness = j.at("content_completeness").get<double>();
  result.rationale = j.value("rationale", std::string("no rationale"));
  if (!result.scores.valid()) throw Error("remote monitor returned scores outside [0, 1]");
  return result;
}

}  // namespace vigil
