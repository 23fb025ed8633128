#include "rubricrl/errors.hpp"

namespace rubricrl {

ParseError::ParseError(std::size_t line, const std::string& what)
    : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

TransportError::TransportError(const std::string& what, int attempts)
    : BackendError(what + " (after " + std::to_string(attempts) + " attempt" +
                   (attempts == 1 ? "" : "s") + ")"),
      attempts_(attempts) {}

ProtocolError::ProtocolError(const std::string& what, int status, int attempts)
    : TransportError(what + ": HTTP " + std::to_string(status), attempts), status_(status) {}

} // namespace rubricrl
