#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace soliton {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent physical/numerical configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Argument outside the domain of an operation (off-grid point, index outside window, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A computed object violates one of its structural invariants.
class IntegrityError : public Error {
public:
    using Error::Error;
};

/// Persisted artifact is malformed, truncated or of the wrong version.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// File could not be opened, read or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// Should-not-happen condition inside the diagram engine.
class InternalError : public Error {
public:
    using Error::Error;
};

using WarningSink = std::function<void(const std::string&)>;

// Warnings go to stderr unless a sink is installed. Returns the previous sink.
WarningSink set_warning_sink(WarningSink sink);
void warn(const std::string& message);

} // namespace soliton
