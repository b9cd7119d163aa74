#pragma once

#include "cholera/config.hpp"

#include <ostream>

namespace cholera {

/// Executes one configured run, writing artifacts and a manifest under
/// config.output. Returns the process exit status.
int run(const RunConfig& config, std::ostream& log);

}  // namespace cholera
