#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vigil/cross_validation.hpp"
#include "vigil/monitoring.hpp"
#include "vigil/perturbation.hpp"
#include "vigil/types.hpp"

namespace vigil {

struct GenerateRequest {
  NodeId node;
  std::string prompt;
  Payload input;
  std::uint64_t seed = 0;
  std::uint32_t attempt = 0;
  PerturbationDirective perturbation;
  /// Set on re-dispatch after structured feedback; reflective backends assess
  /// the feedback before regenerating.
  bool reflection = false;
  /// Parent outputs in parent order; empty for source nodes.
  std::vector<Payload> upstream;
  /// Parents whose payload never arrived (dropped in transit).
  std::vector<NodeId> missing_inputs;
};

struct GenerateResult {
  Payload output;
  std::string reasoning_trace;
};

/// Raised when an agent backend cannot produce output after its own retries.
class BackendFailure : public Error {
 public:
  BackendFailure(NodeId node, const std::string& what)
      : Error("backend failure at node " + node + ": " + what), node_(std::move(node)) {}
  const NodeId& node() const { return node_; }

 private:
  NodeId node_;
};

class AgentBackend {
 public:
  virtual ~AgentBackend() = default;
  virtual GenerateResult generate(const GenerateRequest& request) = 0;
};

/// Named agent backends, monitor backends and ensembles. Populated before a
/// run and read-only while it executes.
class BackendRegistry {
 public:
  void add_agent(const std::string& name, std::shared_ptr<AgentBackend> backend);
  void add_monitor(const std::string& name, std::shared_ptr<MonitorBackend> backend);
  void add_ensemble(const std::string& name, EnsembleConfig ensemble);

  std::shared_ptr<AgentBackend> agent(const std::string& name) const;
  std::shared_ptr<MonitorBackend> monitor(const std::string& name) const;
  const EnsembleConfig* ensemble(const std::string& name) const;

  bool has_agent(const std::string& name) const { return agents_.count(name) != 0; }
  bool has_monitor(const std::string& name) const { return monitors_.count(name) != 0; }

 private:
  std::map<std::string, std::shared_ptr<AgentBackend>> agents_;
  std::map<std::string, std::shared_ptr<MonitorBackend>> monitors_;
  std::map<std::string, EnsembleConfig> ensembles_;
};

}  // namespace vigil
