#pragma once

#include <stdexcept>
#include <string>

namespace fairprice {

/// Argument outside the domain of a link function or model.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A computation would exceed a configured size cap.
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent configuration input.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

} // namespace fairprice
