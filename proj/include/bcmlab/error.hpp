#pragma once

#include <stdexcept>
#include <string>

namespace bcmlab {

/// Base class for every error raised by the library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A documented precondition of an operation was violated.
class precondition_error : public error {
public:
    using error::error;
};

/// Input data is internally inconsistent (bad matching, malformed trace).
class structural_error : public error {
public:
    using error::error;
};

/// Degree sequences violate the non-degeneracy condition on third moments.
class degeneracy_error : public error {
public:
    using error::error;
};

/// Critical tuning could not reach the requested criticality parameter.
class tuning_error : public error {
public:
    tuning_error(const std::string& what, double achieved_nu)
        : error(what), achieved_nu_(achieved_nu) {}

    double achieved_nu() const noexcept { return achieved_nu_; }

private:
    double achieved_nu_;
};

/// Malformed file or unreadable input.
class io_error : public error {
public:
    using error::error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw precondition_error(msg);
}

} // namespace bcmlab
