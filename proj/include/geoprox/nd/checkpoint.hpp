// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "geoprox/nd/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace geoprox::nd {

/// Named non-parameter tensor stored alongside the groups (e.g. normalization
/// statistics).
struct NamedBuffer {
    std::string name;
    Tensor value;
};

struct Checkpoint {
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
    std::string config_text;
    std::vector<ParameterGroup> groups;
    std::vector<NamedBuffer> buffers;

    [[nodiscard]] const ParameterGroup* group(const std::string& name) const;
    [[nodiscard]] const Tensor* buffer(const std::string& name) const;
};

/// Binary layout (all integers and floats little-endian):
///
///   "GEOPXCK1" u32 version u64 seed u64 config_hash
///   u64 len, config text
///   u32 n_groups { str name, u8 trainable, u32 n { str name, tensor } }
///   u32 n_buffers { str name, tensor }
///
/// where `str` is u32 length + bytes and `tensor` is u32 rank, u64 dims[rank],
/// f64 values[prod(dims)] row-major.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
[[nodiscard]] Checkpoint load_checkpoint(const std::filesystem::path& path);

/// 64-bit FNV-1a, used for config hashes and seed-stream derivation.
[[nodiscard]] std::uint64_t fnv1a64(std::string_view text) noexcept;

} // namespace geoprox::nd
