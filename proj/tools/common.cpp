#include "common.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace disagg::cli {

namespace {

bool looks_like_path(const std::string& arg) {
  return arg.find('/') != std::string::npos ||
         (arg.size() > 5 && arg.compare(arg.size() - 5, 5, ".json") == 0);
}

// Optional catalog extension file: {"devices": [...], "models": [...]}.
const Catalog& effective_catalog() {
  static const Catalog catalog = [] {
    Catalog c = builtin_catalog();
    if (const char* path = std::getenv("DISAGG_CATALOG")) {
      std::ifstream in(path);
      if (!in) throw Error(std::string("cannot open DISAGG_CATALOG file ") + path);
      json doc;
      in >> doc;
      if (doc.contains("devices"))
        for (const auto& jd : doc.at("devices")) {
          DeviceSpec d = load_device_spec(jd);
          c.devices[d.name] = std::move(d);
        }
      if (doc.contains("models"))
        for (const auto& jm : doc.at("models")) {
          LlmSpec m = load_llm_spec(jm);
          c.models[m.name] = std::move(m);
        }
    }
    return c;
  }();
  return catalog;
}

}  // namespace

LlmSpec resolve_model(const std::string& arg) {
  if (looks_like_path(arg) || std::filesystem::exists(arg)) return load_llm_spec_file(arg);
  return effective_catalog().model(arg);
}

DeviceSpec resolve_device(const std::string& arg) {
  if (looks_like_path(arg) || std::filesystem::exists(arg)) return load_device_spec_file(arg);
  return effective_catalog().device(arg);
}

void write_text(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::filesystem::path target(path);
  if (target.is_relative()) {
    if (const char* dir = std::getenv("DISAGG_OUT_DIR")) target = std::filesystem::path(dir) / target;
  }
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  std::ofstream out(target, std::ios::binary);
  if (!out) throw Error("cannot write " + target.string());
  out << content;
}

void write_json(const std::string& path, const ojson& doc) {
  write_text(path, doc.dump(2) + "\n");
}

std::pair<std::int64_t, std::int64_t> parse_pair(const std::string& arg) {
  const auto comma = arg.find(',');
  if (comma == std::string::npos)
    throw ValidationError("expected 'a,b', got '" + arg + "'");
  try {
    return {std::stoll(arg.substr(0, comma)), std::stoll(arg.substr(comma + 1))};
  } catch (const std::exception&) {
    throw ValidationError("expected 'a,b', got '" + arg + "'");
  }
}

}  // namespace disagg::cli
