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
#include "spic/wavelet.hpp"

namespace spic {

WaveletKind parse_wavelet_kind(const std::string& name)
{
    if (name == "dtcwt")
        return WaveletKind::dtcwt;
    if (name == "dwt" || name == "haar")
        return WaveletKind::dwt;
    throw std::invalid_argument("unknown wavelet kind '" + name + "'");
}

std::string to_string(WaveletKind kind) { return kind == WaveletKind::dtcwt ? "dtcwt" : "dwt"; }

} // namespace spic
