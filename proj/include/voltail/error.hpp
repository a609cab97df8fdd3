// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace voltail {

/// Failure categories surfaced by the library. The CLI maps these onto exit codes.
enum class ErrorKind {
    domain,                    // argument outside the operation's domain
    dimension,                 // inconsistent dimensions / list lengths
    no_inverse_time,           // reduce_parameters found no T^-1 combination
    condition_violated,        // f(0)=0, f'(0)<=0, g(0)>0 conditions
    negative_diffusion,        // g evaluated <= 0
    scheme_unstable,           // too many cap hits during simulation
    not_normalizable,          // closed form requested for k = 0
    non_integrable,            // stationary density diverges at a grid end
    quadrature,                // adaptive quadrature failed to converge
    insufficient_data,         // estimator preconditions on sample size
    config,                    // schema / config errors
    io,                        // file or parse errors
};

[[nodiscard]] const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

inline void require(bool ok, ErrorKind kind, const std::string& what) {
    if (!ok) fail(kind, what);
}

}  // namespace voltail
