#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "sfpe/config.hpp"

namespace sfpe {

/// Exit statuses of run_command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitVerification = 2;

const std::vector<std::string>& command_names();

/// Runs one command. Artifacts go to "<output>_<name>.csv" plus
/// "<output>_report.txt"; the report is also written to `report`.
/// `threads` only affects speed.
int run_command(const RunConfig& config, const std::string& command, std::ostream& report,
                unsigned threads = 1);

}  // namespace sfpe
