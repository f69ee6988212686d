#pragma once

#include <stdexcept>
#include <string>

namespace geoling {

/// Unrecoverable pipeline error. The message is a single line; the CLI prints
/// it verbatim on stderr and exits nonzero.
class FatalError : public std::runtime_error {
  public:
    explicit FatalError(const std::string& reason) : std::runtime_error(reason) {}
};

} // namespace geoling
