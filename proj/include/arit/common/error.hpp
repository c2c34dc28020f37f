#pragma once

#include <stdexcept>
#include <string>

namespace arit {

// Error categories map 1:1 onto CLI exit codes.
enum class ExitCode : int {
    ok = 0,
    usage = 2,
    config = 3,
    data = 4,
    numeric = 5,
};

class Error : public std::runtime_error {
public:
    Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ExitCode code() const { return code_; }

private:
    ExitCode code_;
};

struct UsageError : Error {
    explicit UsageError(const std::string& what) : Error(ExitCode::usage, what) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(ExitCode::config, what) {}
};

struct DataError : Error {
    explicit DataError(const std::string& what) : Error(ExitCode::data, what) {}
};

struct NumericError : Error {
    explicit NumericError(const std::string& what) : Error(ExitCode::numeric, what) {}
};

} // namespace arit
