#pragma once

#include "core/jsonio.hpp"
#include "core/manifold.hpp"

namespace rsnf {

struct Artifact {
  std::string name;
  std::string mime;
  std::string body;
};

struct EngineResult {
  json body;
  std::vector<Artifact> artifacts;
};

// Dispatches one CLI-level command. Throws InputError for malformed requests
// (exit code 2) and std::domain_error / std::logic_error for mathematical
// failures (exit code 1).
EngineResult run_command(const std::string& command, const json& request);

std::vector<std::string> command_names();

}  // namespace rsnf
