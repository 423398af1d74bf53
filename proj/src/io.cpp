#include "shadowcert/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include "shadowcert/error.hpp"
#include "shadowcert/random.hpp"

namespace shadowcert {

std::string config_digest(const Json& config) {
  std::uint64_t h = 0x5348414457ULL;
  for (unsigned char c : config.dump()) h = hash64(h, c);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::invalid_config, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error(ErrorKind::invalid_config, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(ErrorKind::invalid_config, "cannot replace " + path.string() + ": " + ec.message());
  }
}

std::string csv_preamble(const Json& config) {
  std::ostringstream s;
  s << "# schema_version=" << kSchemaVersion << '\n'
    << "# config_digest=" << config_digest(config) << '\n'
    << "# config=" << config.dump() << '\n';
  return s.str();
}

std::string strip_preamble(std::string_view text) {
  std::string out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    end = end == std::string_view::npos ? text.size() : end + 1;
    if (text[pos] != '#') out.append(text.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

Json wrap_result(const Json& config, Json result) {
  return {{"schema_version", kSchemaVersion},
          {"config_digest", config_digest(config)},
          {"config", config},
          {"result", std::move(result)}};
}

}  // namespace shadowcert
