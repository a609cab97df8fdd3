// SPDX-License-Identifier: Apache-2.0
#include "voltail/error.hpp"

namespace voltail {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::domain: return "DomainError";
        case ErrorKind::dimension: return "DimensionError";
        case ErrorKind::no_inverse_time: return "NoInverseTimeCombination";
        case ErrorKind::condition_violated: return "ConditionViolated";
        case ErrorKind::negative_diffusion: return "NegativeDiffusion";
        case ErrorKind::scheme_unstable: return "SchemeUnstable";
        case ErrorKind::not_normalizable: return "NotNormalizable";
        case ErrorKind::non_integrable: return "NonIntegrable";
        case ErrorKind::quadrature: return "QuadratureError";
        case ErrorKind::insufficient_data: return "InsufficientData";
        case ErrorKind::config: return "ConfigError";
        case ErrorKind::io: return "IOError";
    }
    return "Error";
}

}  // namespace voltail
