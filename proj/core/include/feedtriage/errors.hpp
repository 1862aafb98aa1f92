#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace feedtriage {

// Base for every error the library throws. `code()` is the stable,
// machine-readable identifier used in CLI and API error payloads.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    [[nodiscard]] const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

class ContractViolation : public Error {
public:
    explicit ContractViolation(const std::string& message) : Error("contract_violation", message) {}
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& message) : Error("invalid_argument", message) {}
};

// A backend reply that does not contain the expected structured output.
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::string raw)
        : Error("parse_error", message), raw_(std::move(raw)) {}

    [[nodiscard]] const std::string& raw() const noexcept { return raw_; }

private:
    std::string raw_;
};

// Network or protocol failure talking to a backend or webhook.
class TransportError : public Error {
public:
    explicit TransportError(const std::string& message) : Error("transport_error", message) {}
};

class ClassificationError : public Error {
public:
    explicit ClassificationError(const std::string& message) : Error("classification_error", message) {}
};

class TrainError : public Error {
public:
    explicit TrainError(const std::string& message) : Error("train_error", message) {}
};

class DegenerateInput : public Error {
public:
    explicit DegenerateInput(const std::string& message) : Error("degenerate_input", message) {}
};

class NotFound : public Error {
public:
    explicit NotFound(const std::string& message) : Error("not_found", message) {}
};

class Conflict : public Error {
public:
    Conflict(std::string code, const std::string& message) : Error(std::move(code), message) {}
};

class StoreError : public Error {
public:
    explicit StoreError(const std::string& message) : Error("store_error", message) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& message) : Error("config_error", message) {}
};

}  // namespace feedtriage
