#pragma once

#include <string>

namespace critforms {

/// SHA-1 hex digest (content hashing of resolved configs).
std::string sha1_hex(const std::string& data);

void write_text_file(const std::string& path, const std::string& content);

/// Deterministic human-readable rendering of a JSON report: sorted keys,
/// one "key: value" line per scalar, nested keys dotted.
std::string report_render(const std::string& report_json);

}  // namespace critforms
