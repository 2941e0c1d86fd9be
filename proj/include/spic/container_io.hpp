/*
 * spic-recon : self-supervised training of unrolled MRI reconstruction
 *
 * Copyright 2026 The spic-recon Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

// File container shared by datasets and checkpoints:
//   <JSON header> '\0' <little-endian binary payload>

#include "spic/types.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cstring>
#include <string>

namespace spic::io {

void write_container(const std::string& path, const nlohmann::json& header, const std::string& payload);

struct Container {
    nlohmann::json header;
    std::string payload;
};

Container read_container(const std::string& path);

template <typename T>
void append_le(std::string& out, T value)
{
    static_assert(std::is_trivially_copyable_v<T>);
    char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
        std::reverse(bytes, bytes + sizeof(T));
    out.append(bytes, sizeof(T));
}

template <typename T>
T read_le(const std::string& in, std::size_t& offset)
{
    if (offset + sizeof(T) > in.size())
        throw FormatError("payload truncated");
    char bytes[sizeof(T)];
    std::memcpy(bytes, in.data() + offset, sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
        std::reverse(bytes, bytes + sizeof(T));
    offset += sizeof(T);
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

} // namespace spic::io
