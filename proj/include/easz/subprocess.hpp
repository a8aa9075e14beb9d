#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace easz {

struct ProcessResult {
  int exit_code = 0;  // 128 + signal number when killed by a signal
  std::vector<std::uint8_t> out;
  std::string err;
};

// Runs `command` through /bin/sh -c, feeding `input` on stdin and collecting
// stdout and stderr. Never throws for a nonzero exit; throws CodecError when
// the process cannot be started.
ProcessResult run_process(const std::string& command, std::span<const std::uint8_t> input);

// Replaces every "{key}" in `tmpl` with `value`.
std::string substitute(std::string tmpl, const std::string& key, const std::string& value);

}  // namespace easz
