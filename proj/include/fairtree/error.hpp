#pragma once

#include <stdexcept>
#include <string>

namespace fairtree {

// Mirrors the ft_status codes of the C API (capi.h).
enum class ErrorCode {
    contract = 1,   // precondition violated by the caller
    schema = 2,     // input file/spec does not match the declared schema
    structure = 3,  // malformed tree / unknown node id
    domain = 4,     // value outside the mathematical domain (non-finite, arity)
    parse = 5,      // unparseable CSV/JSON/TOML
    io = 6,         // filesystem failure
    internal = 7,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline Error contract_error(const std::string& msg)  { return Error(ErrorCode::contract, msg); }
inline Error schema_error(const std::string& msg)    { return Error(ErrorCode::schema, msg); }
inline Error structure_error(const std::string& msg) { return Error(ErrorCode::structure, msg); }
inline Error domain_error(const std::string& msg)    { return Error(ErrorCode::domain, msg); }
inline Error parse_error(const std::string& msg)     { return Error(ErrorCode::parse, msg); }
inline Error io_error(const std::string& msg)        { return Error(ErrorCode::io, msg); }

}  // namespace fairtree
