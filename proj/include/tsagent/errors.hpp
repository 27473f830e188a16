#ifndef TSAGENT_ERRORS_HPP
#define TSAGENT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace tsa {

// Every failure surfaced to callers derives from EngineError so the CLI can
// map error categories onto stable exit codes.
struct EngineError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ShapeError : EngineError { using EngineError::EngineError; };
struct NumericError : EngineError { using EngineError::EngineError; };
struct ContractError : EngineError { using EngineError::EngineError; };
struct ParseError : EngineError { using EngineError::EngineError; };
struct SchemaError : EngineError { using EngineError::EngineError; };
struct ConfigError : EngineError { using EngineError::EngineError; };
struct InsufficientDataError : EngineError { using EngineError::EngineError; };
struct ChannelEmptyError : EngineError { using EngineError::EngineError; };
struct FullyMaskedError : EngineError { using EngineError::EngineError; };
struct TransportError : EngineError { using EngineError::EngineError; };
struct EndpointError : EngineError { using EngineError::EngineError; };
struct RegistryError : EngineError { using EngineError::EngineError; };

// Not an error in the usual sense: raised when a parsed anchor response is
// valid but its confidence is below the acceptance threshold. Callers catch
// it and fall back to the offline oracle.
struct LowConfidenceError : EngineError { using EngineError::EngineError; };

} // namespace tsa

#endif // TSAGENT_ERRORS_HPP
