#include "adgen/errors.hpp"

namespace adgen {

Error::Error(std::string kind, const std::string& message)
    : std::runtime_error(message), kind_(std::move(kind)) {}

}  // namespace adgen
