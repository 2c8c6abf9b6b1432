#ifndef TASKGEMM_ERRORS_HPP
#define TASKGEMM_ERRORS_HPP

#include <stdexcept>

namespace taskgemm {

/// Invalid user-facing configuration (CLI exits 2 on these).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace taskgemm

#endif
