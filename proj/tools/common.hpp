#pragma once

#include <string>

#include "disagg/catalog.hpp"
#include "disagg/model.hpp"

namespace disagg::cli {

// Name from the catalog (plus any DISAGG_CATALOG extension file), or a path
// to a JSON document.
LlmSpec resolve_model(const std::string& arg);
DeviceSpec resolve_device(const std::string& arg);

// Writes to the path ("" or "-" mean stdout). Relative paths are placed
// under $DISAGG_OUT_DIR when that is set.
void write_text(const std::string& path, const std::string& content);
void write_json(const std::string& path, const ojson& doc);

// Parses "a,b" pairs such as --dop 2,4.
std::pair<std::int64_t, std::int64_t> parse_pair(const std::string& arg);

}  // namespace disagg::cli
