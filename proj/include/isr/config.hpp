// Plain-text scenario configuration: `key = value [unit]` lines grouped under
// `[section]` headers. The grammar is documented in docs/config.md.
#pragma once

#include <string>

#include "isr/scenarios.hpp"

namespace isr {

/// Parses a configuration text. Omitted keys keep the scenario defaults.
/// Throws ConfigError ("<source>:<line>: ...") on unknown keys, unit
/// mismatches, malformed values, a missing `scenario` line or an
/// inconsistent result.
SimulationConfig parse_config(const std::string& text, const std::string& source = "<config>");

/// Reads and parses a file. Throws IoError when it cannot be read.
SimulationConfig load_config(const std::string& path);

/// Applies a single `section.key` assignment (for instance "structural.kappa"
/// or "species.media.eta_E") to an existing configuration and re-validates.
/// The value may carry a unit suffix like in a file.
void set_config_value(SimulationConfig& config, const std::string& dotted_key,
                      const std::string& value);

}  // namespace isr
