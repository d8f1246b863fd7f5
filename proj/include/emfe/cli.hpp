#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "emfe/error.hpp"

namespace emfe::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitData = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitUsage = 64;

int exit_code_for(ErrorCode code);

/// Entry point behind the `emfe` executable. `args` includes the program name.
/// Human-readable progress goes to `out`; failures are reported on `err` as a
/// single JSON object and mapped to the exit codes above.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace emfe::cli
