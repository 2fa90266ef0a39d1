#pragma once

#include <stdexcept>
#include <string>

namespace odrepair {

/* Error taxonomy shared by the library and the CLI.
 *
 * config_error     -> bad invocation or config file (CLI exit code 2)
 * data_error       -> input fails validation (CLI exit code 3)
 * infeasible_error -> constraints cannot be satisfied (CLI exit code 4)
 */

class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

class data_error : public std::runtime_error {
 public:
  explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

class infeasible_error : public std::runtime_error {
 public:
  explicit infeasible_error(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitInfeasible = 4;

}  // namespace odrepair
