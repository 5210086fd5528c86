#ifndef MS_ERRORS_HPP
#define MS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ms {

// Bad or missing input data (file contents, argument domains). CLI exit code 2.
struct InputError : std::runtime_error {
    explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

// A solve does not have enough constraints to proceed. CLI exit code 3.
struct UnderConstrainedError : std::runtime_error {
    explicit UnderConstrainedError(const std::string& msg) : std::runtime_error(msg) {}
};

// An internal invariant was violated; indicates a bug, not bad input. CLI exit code 4.
struct InvariantError : std::runtime_error {
    explicit InvariantError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ms

#endif
