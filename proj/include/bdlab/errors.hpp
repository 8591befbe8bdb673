#pragma once

#include <stdexcept>
#include <string>

namespace bdlab {

/// Base class for all toolkit errors.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A malformed record in an input file. Carries the 1-based line number.
class parse_error : public error {
public:
    parse_error(const std::string& what, std::size_t line)
        : error(what), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Input violates a file or request schema.
class schema_error : public error {
public:
    using error::error;
};

/// A plan or request asks for more items than are available.
class capacity_error : public error {
public:
    using error::error;
};

/// An argument is outside its mathematical domain.
class domain_error : public error {
public:
    using error::error;
};

/// A metric has an empty denominator or no qualifying records.
class undefined_metric_error : public error {
public:
    using error::error;
};

/// A remote backend could not be reached.
class transport_error : public error {
public:
    transport_error(const std::string& what, int attempts)
        : error(what), attempts_(attempts) {}

    int attempts() const { return attempts_; }

private:
    int attempts_ = 0;
};

/// A remote backend answered with something other than the wire contract.
class protocol_error : public error {
public:
    using error::error;
};

/// Filesystem failure. Carries the offending path.
class io_error : public error {
public:
    io_error(const std::string& what, std::string path)
        : error(what + ": " + path), path_(std::move(path)) {}

    const std::string& path() const { return path_; }

private:
    std::string path_;
};

}  // namespace bdlab
