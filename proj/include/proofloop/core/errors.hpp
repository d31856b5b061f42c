#pragma once

#include <stdexcept>
#include <string>

namespace proofloop {

// Root of every error the library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error { using Error::Error; };
class InvalidTask : public Error { using Error::Error; };

// Proposer output that does not contain a usable updated_theorem.
class ParseError : public Error { using Error::Error; };

class TargetNotFound : public Error { using Error::Error; };
class MalformedTheorem : public Error { using Error::Error; };

// The build command could not be spawned or the workspace is unusable.
class WorkspaceError : public Error { using Error::Error; };

// Retryable transport failure (connection reset, 5xx, timeout).
class TransportError : public Error { using Error::Error; };

// LLM client gave up after its retry budget.
class LlmUnavailable : public Error { using Error::Error; };

class ToolUnavailable : public Error { using Error::Error; };

class DomainError : public Error { using Error::Error; };
class MismatchedRuns : public Error { using Error::Error; };

class MissingPrice : public Error {
public:
    explicit MissingPrice(std::string model)
        : Error("no price configured for model '" + model + "'"), model_(std::move(model)) {}
    const std::string& model() const { return model_; }

private:
    std::string model_;
};

class LedgerError : public Error { using Error::Error; };

}  // namespace proofloop
