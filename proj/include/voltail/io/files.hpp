// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace voltail::io {

[[nodiscard]] std::uint64_t fnv1a64(std::string_view bytes) noexcept;
[[nodiscard]] std::string hex64(std::uint64_t v);

/// Writes to a temporary sibling, then renames over `path`.
void atomic_write(const std::filesystem::path& path, std::string_view bytes);

[[nodiscard]] std::string read_file(const std::filesystem::path& path);

}  // namespace voltail::io
