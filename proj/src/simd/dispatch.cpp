// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <string_view>

#include "voltail/simd/kernels.hpp"

namespace voltail::simd {
namespace {

const KernelSet& choose() noexcept {
    const char* env = std::getenv("VOLTAIL_KERNELS");
    if (env != nullptr && std::string_view(env) == "scalar") return scalar_kernels();
    if (const KernelSet* k = avx2_kernels()) return *k;
    return scalar_kernels();
}

}  // namespace

const KernelSet& active_kernels() noexcept {
    static const KernelSet& chosen = choose();
    return chosen;
}

}  // namespace voltail::simd
