#include "vigil/backends.hpp"

namespace vigil {

void BackendRegistry::add_agent(const std::string& name, std::shared_ptr<AgentBackend> backend) {
  agents_[name] = std::move(backend);
}

void BackendRegistry::add_monitor(const std::string& name,
                                  std::shared_ptr<MonitorBackend> backend) {
  monitors_[name] = std::move(backend);
}

void BackendRegistry::add_ensemble(const std::string& name, EnsembleConfig ensemble) {
  ensembles_[name] = std::move(ensemble);
}

std::shared_ptr<AgentBackend> BackendRegistry::agent(const std::string& name) const {
  auto it = agents_.find(name);
  return it == agents_.end() ? nullptr : it->second;
}

std::shared_ptr<MonitorBackend> BackendRegistry::monitor(const std::string& name) const {
  auto it = monitors_.find(name);
  return it == monitors_.end() ? nullptr : it->second;
}

const EnsembleConfig* BackendRegistry::ensemble(const std::string& name) const {
  auto it = ensembles_.find(name);
  return it == ensembles_.end() ? nullptr : &it->second;
}

}  // namespace vigil
