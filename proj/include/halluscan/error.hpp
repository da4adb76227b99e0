#pragma once

#include <stdexcept>
#include <string>

namespace halluscan {

/// Broad failure classes. Each maps onto one CLI exit code.
enum class ErrorKind {
    usage = 2,
    input = 3,
    gateway = 4,
    validation = 5,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }
    int exit_code() const noexcept { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
};

/// Violated precondition of a library call (programming or configuration error).
class ContractError : public Error {
public:
    explicit ContractError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

class InputError : public Error {
public:
    explicit InputError(const std::string& what) : Error(ErrorKind::input, what) {}
};

class EmptyInputError : public InputError {
public:
    explicit EmptyInputError(const std::string& what) : InputError(what) {}
};

class GatewayError : public Error {
public:
    explicit GatewayError(const std::string& what) : Error(ErrorKind::gateway, what) {}
};

class FixtureMissingError : public GatewayError {
public:
    explicit FixtureMissingError(const std::string& request_hash)
        : GatewayError("no replay fixture for request " + request_hash), request_hash_(request_hash) {}

    const std::string& request_hash() const noexcept { return request_hash_; }

private:
    std::string request_hash_;
};

class GatewayParseError : public GatewayError {
public:
    using GatewayError::GatewayError;
};

class GatewayTransportError : public GatewayError {
public:
    using GatewayError::GatewayError;
};

class GatewayConfigError : public GatewayError {
public:
    using GatewayError::GatewayError;
};

/// Static KG extraction failed for one frame after all retries.
class KgExtractionError : public GatewayError {
public:
    KgExtractionError(int frame_index, const std::string& what)
        : GatewayError("kg extraction failed for frame " + std::to_string(frame_index) + ": " + what),
          frame_index_(frame_index) {}

    int frame_index() const noexcept { return frame_index_; }

private:
    int frame_index_;
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

}  // namespace halluscan
