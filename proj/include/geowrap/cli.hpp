#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace geowrap::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kVerificationFailed = 3 };

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

// GEOWRAP_THREADS when set to a positive integer, else the hardware count.
int thread_cap();

}  // namespace geowrap::cli
