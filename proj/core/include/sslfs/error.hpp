#ifndef SSLFS_ERROR_HPP
#define SSLFS_ERROR_HPP

#include <stdexcept>
#include <string>

namespace sslfs {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape disagreement between tensor operands.
struct DimensionError : Error {
    using Error::Error;
};

// A documented precondition was violated by the caller.
struct ContractError : Error {
    using Error::Error;
};

// Class or element index out of range.
struct IndexError : Error {
    using Error::Error;
};

// Not enough classes or samples to satisfy a sampling request.
struct CapacityError : Error {
    using Error::Error;
};

// Malformed input file; carries the 1-based line number when known.
struct ParseError : Error {
    ParseError(const std::string& msg, std::size_t line)
        : Error(msg + " (line " + std::to_string(line) + ")"), line_number(line) {}
    explicit ParseError(const std::string& msg) : Error(msg), line_number(0) {}
    std::size_t line_number;
};

// Filesystem failure; message names the offending path.
struct IoError : Error {
    using Error::Error;
};

}  // namespace sslfs

#endif
