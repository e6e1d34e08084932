#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace rdq {

// Command-line values that override the corresponding config fields.
struct CliOverrides {
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out;
  std::optional<std::string> format;
};

// Runs one task against its config: writes the report artifact, prints a
// one-line summary per row to `lines`, and returns the exit status: 0 when
// every row passes, 2 when any check fails, 1 on config or usage errors
// (reported on `errs`). Identical (config, seed) runs produce byte-identical
// artifacts, for any worker count.
int run_task(const std::string& task, const CliOverrides& flags,
             std::ostream& lines, std::ostream& errs);

}  // namespace rdq
