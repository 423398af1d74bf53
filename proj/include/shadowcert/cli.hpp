#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace shadowcert {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

// args excludes the program name. Output directory: --out, then
// $SHADOWCERT_OUT_DIR, then the working directory.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace shadowcert
