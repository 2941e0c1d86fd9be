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
#include "spic/container_io.hpp"

#include <fstream>
#include <iterator>

namespace spic::io {

void write_container(const std::string& path, const nlohmann::json& header, const std::string& payload)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + path);
    const std::string text = header.dump();
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.put('\0');
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out)
        throw std::runtime_error("write failed: " + path);
}

Container read_container(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open for reading: " + path);
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto nul = bytes.find('\0');
    if (nul == std::string::npos)
        throw FormatError("missing header terminator in " + path);

    Container c;
    try {
        c.header = nlohmann::json::parse(bytes.substr(0, nul));
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("malformed header: ") + e.what());
    }
    c.payload = bytes.substr(nul + 1);
    return c;
}

} // namespace spic::io
