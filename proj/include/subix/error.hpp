#pragma once

#include <stdexcept>
#include <string>

namespace subix {

/// Process exit codes shared by every command.
enum class ExitCode : int {
    ok = 0,
    validation = 1,
    transport = 2,
    invariant = 3,
};

/// Bad input: malformed files, violated preconditions, bad flags.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Network failures talking to an LLM endpoint (timeouts, exhausted retries).
class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The endpoint answered, but not in the chat-completion shape we expect.
class ProtocolError : public TransportError {
public:
    using TransportError::TransportError;
};

/// A condition the code itself guarantees did not hold.
class InvariantError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace subix
