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

#include <json.hpp>

#include <algorithm>
#include <initializer_list>
#include <stdexcept>
#include <string>

namespace spic {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Rejects any key of object `j` not listed in `allowed`.
inline void require_known_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                               const std::string& section)
{
    if (!j.is_object())
        throw ConfigError("config section '" + section + "' must be a JSON object");
    for (const auto& item : j.items())
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return item.key() == k; }))
            throw ConfigError("unknown key '" + item.key() + "' in config section '" + section + "'");
}

/// Reads j[key] into `out` when present, with a readable error on type mismatch.
template <typename T>
void read_optional(const nlohmann::json& j, const char* key, T& out, const std::string& section)
{
    const auto it = j.find(key);
    if (it == j.end())
        return;
    try {
        out = it->get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config key '" + section + "." + key + "': " + e.what());
    }
}

} // namespace spic
