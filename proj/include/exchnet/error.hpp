#ifndef EXCHNET_ERROR_HPP
#define EXCHNET_ERROR_HPP

#include <stdexcept>
#include <string>

namespace exchnet {

/// Error categories, mapped one-to-one onto CLI exit codes.
enum class ErrorKind {
    Data,        // malformed/inconsistent input (exit 1)
    Estimation,  // non-convergence, degenerate estimate (exit 2)
    Internal     // logic or numeric failure that should not happen (exit 3)
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline Error data_error(const std::string& msg) { return Error(ErrorKind::Data, msg); }
inline Error estimation_error(const std::string& msg) { return Error(ErrorKind::Estimation, msg); }
inline Error internal_error(const std::string& msg) { return Error(ErrorKind::Internal, msg); }

} // namespace exchnet

#endif
