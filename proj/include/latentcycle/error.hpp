#pragma once
#include <stdexcept>
#include <string>

namespace lc {

enum class ErrorKind { validation, resource, numeric, io };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

inline void require(bool cond, const std::string& msg) {
    if (!cond) fail(ErrorKind::validation, msg);
}

}  // namespace lc
