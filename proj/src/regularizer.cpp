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
#include "spic/regularizer.hpp"

#include "spic/json_util.hpp"

namespace spic {

void UnrolledConfig::validate() const
{
    if (T < 1)
        throw std::invalid_argument("model: T must be >= 1");
    if (cg_iters < 1)
        throw std::invalid_argument("model: cg_iters must be >= 1");
    if (blocks < 0)
        throw std::invalid_argument("model: blocks must be >= 0");
    if (channels < 1)
        throw std::invalid_argument("model: channels must be >= 1");
    if (kernel < 1 || kernel % 2 == 0)
        throw std::invalid_argument("model: kernel must be odd and positive");
    if (precision != 32 && precision != 64)
        throw std::invalid_argument("model: precision must be 32 or 64");
}

void to_json(nlohmann::json& j, const UnrolledConfig& c)
{
    j = {{"T", c.T},           {"cg_iters", c.cg_iters}, {"blocks", c.blocks},
         {"channels", c.channels}, {"kernel", c.kernel},   {"precision", c.precision}};
}

void from_json(const nlohmann::json& j, UnrolledConfig& c)
{
    require_known_keys(j, {"T", "cg_iters", "blocks", "channels", "kernel", "precision"}, "model");
    read_optional(j, "T", c.T, "model");
    read_optional(j, "cg_iters", c.cg_iters, "model");
    read_optional(j, "blocks", c.blocks, "model");
    read_optional(j, "channels", c.channels, "model");
    read_optional(j, "kernel", c.kernel, "model");
    read_optional(j, "precision", c.precision, "model");
    c.validate();
}

} // namespace spic
