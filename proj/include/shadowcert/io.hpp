#pragma once

// Output plumbing shared by the command-line driver: atomic writes and the
// provenance header every artifact carries.

#include <filesystem>
#include <string>
#include <string_view>

#include "shadowcert/models.hpp"

namespace shadowcert {

inline constexpr int kSchemaVersion = 1;

// 16 hex digits over the compact serialization of `config`.
std::string config_digest(const Json& config);

// Writes to a sibling temporary file, then renames over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view content);

// "# schema_version=1", "# config_digest=...", "# config=<json>" lines.
std::string csv_preamble(const Json& config);
// Lines of `text` that do not start with '#'.
std::string strip_preamble(std::string_view text);

// {"schema_version", "config_digest", "config", "result"}.
Json wrap_result(const Json& config, Json result);

}  // namespace shadowcert
