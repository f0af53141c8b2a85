#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tcsim::cli {

inline constexpr const char* tool_version = "0.1.0";

// Sidecar written next to every artifact set; lists exactly the files the
// invocation produced. The digest is byte-exact over the input config.
struct RunManifest {
  std::string subcommand;
  std::string config_digest;
  std::uint64_t seed = 0;
  std::string version;
  std::vector<std::string> outputs;
};

// argv-style entry point; returns the process exit status.
// 0 ok; 65 config/validation; 66 missing input file; 70 integration;
// 75 fit did not converge; CLI11 codes for usage errors.
int dispatch(const std::vector<std::string>& args);
int dispatch(int argc, const char* const* argv);

}  // namespace tcsim::cli
