#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "vigil/backends.hpp"
#include "vigil/executor.hpp"
#include "vigil/graph.hpp"
#include "vigil/serialization.hpp"
#include "vigil/sim.hpp"

namespace vigil {

/// Malformed workflow document. The message names the offending path, for
/// example `nodes[2].monitor.threshold`.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Everything a workflow file declares, resolved into runnable objects.
struct Workflow {
  std::string name;
  WorkflowGraph graph;
  BackendRegistry backends;
  RunConfig run;
  Payload input;
  /// Present when the document has a `sim` section.
  std::shared_ptr<const SimTaskSpec> sim;
  /// Directory for the on-disk snapshot log, if configured.
  std::optional<std::filesystem::path> snapshot_dir;
};

/// Reads JSON, or YAML when the extension is `.yaml` or `.yml`, into a JSON
/// document.
json load_document(const std::filesystem::path& path);
json parse_yaml(const std::string& text);

/// Builds a workflow from a document. Relative paths resolve against
/// `base_dir`. Throws ConfigError on malformed sections; graph-level problems
/// are left for validate_graph.
Workflow parse_workflow(const json& document, const std::filesystem::path& base_dir = {});
Workflow load_workflow(const std::filesystem::path& path);

}  // namespace vigil
