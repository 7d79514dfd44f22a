#pragma once
#include <stdexcept>
#include <string>

namespace pointdc {

// Error categories map 1:1 to the CLI's machine-readable failure line.
class Error : public std::runtime_error {
public:
    Error(std::string category, const std::string& msg)
        : std::runtime_error(msg), category_(std::move(category)) {}
    const std::string& category() const { return category_; }

private:
    std::string category_;
};

struct ShapeError : Error {
    explicit ShapeError(const std::string& msg) : Error("shape", msg) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error("config", msg) {}
};

struct IoError : Error {
    explicit IoError(const std::string& msg) : Error("io", msg) {}
};

struct DataError : Error {
    explicit DataError(const std::string& msg) : Error("data", msg) {}
};

struct UsageError : Error {
    explicit UsageError(const std::string& msg) : Error("usage", msg) {}
};

}  // namespace pointdc
