#pragma once

#include <string>
#include <vector>

namespace binreg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

//! Entry point of the binreg tool. Returns the process exit code: 0 on
//! success, 1 for invalid arguments or configuration (no outputs written),
//! 2 when the pipeline fails at run time. Errors are reported as a single
//! JSON line on stderr.
int run(int argc, const char* const* argv);
//! Arguments without the program name.
int run(const std::vector<std::string>& args);

} // namespace binreg::cli
