#pragma once

#include <map>
#include <string>

#include "disagg/model.hpp"

namespace disagg {

// Bundled device and model specs used by the CLI and the planner.
// Device numbers follow the public datasheets / cloud list prices; the H20
// hourly price is an estimate (see its price_note).
struct Catalog {
  std::map<std::string, DeviceSpec> devices;
  std::map<std::string, LlmSpec> models;

  const DeviceSpec& device(const std::string& name) const;  // throws LookupError
  const LlmSpec& model(const std::string& name) const;      // throws LookupError
};

const Catalog& builtin_catalog();

}  // namespace disagg
