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
#include "spic/data_model.hpp"

namespace spic {

namespace {

const char* dtype_name(StorageType t) { return t == StorageType::complex64 ? "complex64" : "complex128"; }

void append_array(std::string& out, const ComplexImage<double>& a, StorageType dtype)
{
    for (Index i = 0; i < a.size(); ++i) {
        const auto v = a.data()[i];
        if (dtype == StorageType::complex64) {
            io::append_le(out, static_cast<float>(v.real()));
            io::append_le(out, static_cast<float>(v.imag()));
        } else {
            io::append_le(out, v.real());
            io::append_le(out, v.imag());
        }
    }
}

void read_array(const std::string& in, std::size_t& offset, ComplexImage<double>& a, StorageType dtype)
{
    for (Index i = 0; i < a.size(); ++i) {
        if (dtype == StorageType::complex64) {
            const float re = io::read_le<float>(in, offset);
            const float im = io::read_le<float>(in, offset);
            a.data()[i] = {re, im};
        } else {
            const double re = io::read_le<double>(in, offset);
            const double im = io::read_le<double>(in, offset);
            a.data()[i] = {re, im};
        }
    }
}

} // namespace

void save_dataset(const Dataset& d, const std::string& path, StorageType dtype)
{
    if (d.slices.empty())
        throw std::invalid_argument("save_dataset: empty dataset");
    const Index rows = d.rows();
    const Index cols = d.cols();
    const Index coils = d.n_coils();

    std::string payload;
    const std::size_t bytes_per = dtype == StorageType::complex64 ? 8 : 16;
    payload.reserve(d.slices.size() * static_cast<std::size_t>(rows * cols * (1 + 2 * coils)) * bytes_per);
    for (const auto& s : d.slices) {
        require_same_shape(s.ground_truth.rows(), s.ground_truth.cols(), rows, cols, "save_dataset");
        if (s.coils.n_coils() != coils || s.full_kspace.n_coils != coils)
            throw ShapeError("save_dataset: slices disagree on coil count");
        append_array(payload, s.ground_truth, dtype);
        append_array(payload, s.coils.maps.data, dtype);
        append_array(payload, s.full_kspace.data, dtype);
    }

    const nlohmann::json header = {
        {"format", "spic-dataset"},
        {"version", kDatasetFormatVersion},
        {"n_slices", d.slices.size()},
        {"rows", rows},
        {"cols", cols},
        {"n_coils", coils},
        {"dtype", dtype_name(dtype)},
        {"layout", {"ground_truth", "coil_maps", "full_kspace"}},
        {"metadata", d.metadata},
    };
    io::write_container(path, header, payload);
}

Dataset load_dataset(const std::string& path)
{
    const io::Container c = io::read_container(path);
    const auto& h = c.header;
    if (!h.contains("version") || h.at("version") != kDatasetFormatVersion)
        throw FormatError("unsupported dataset format version in " + path);
    if (h.value("format", "") != "spic-dataset")
        throw FormatError("not a dataset file: " + path);

    StorageType dtype;
    const std::string name = h.at("dtype").get<std::string>();
    if (name == "complex64")
        dtype = StorageType::complex64;
    else if (name == "complex128")
        dtype = StorageType::complex128;
    else
        throw FormatError("unsupported dtype '" + name + "'");

    const auto n_slices = h.at("n_slices").get<std::size_t>();
    const auto rows = h.at("rows").get<Index>();
    const auto cols = h.at("cols").get<Index>();
    const auto coils = h.at("n_coils").get<Index>();
    if (n_slices < 1 || rows < 1 || cols < 1 || coils < 1)
        throw FormatError("invalid dataset dimensions");

    const std::size_t bytes_per = dtype == StorageType::complex64 ? 8 : 16;
    const std::size_t expected = n_slices * static_cast<std::size_t>(rows * cols * (1 + 2 * coils)) * bytes_per;
    if (c.payload.size() != expected)
        throw FormatError("payload size mismatch: header implies " + std::to_string(expected) + " bytes, found " +
                          std::to_string(c.payload.size()));

    Dataset d;
    d.metadata = h.value("metadata", nlohmann::json::object());
    std::size_t offset = 0;
    for (std::size_t s = 0; s < n_slices; ++s) {
        DatasetSlice slice;
        slice.ground_truth.resize(rows, cols);
        read_array(c.payload, offset, slice.ground_truth, dtype);
        slice.coils.maps = MultiCoil<double>(coils, rows, cols);
        read_array(c.payload, offset, slice.coils.maps.data, dtype);
        BoolImage support = BoolImage::Constant(rows, cols, false);
        for (Index k = 0; k < coils; ++k)
            support = support || (slice.coils.maps.plane(k).abs() > 0.0);
        slice.coils.support = support;
        slice.full_kspace = KSpace<double>(coils, rows, cols);
        read_array(c.payload, offset, slice.full_kspace.data, dtype);
        d.slices.push_back(std::move(slice));
    }
    return d;
}

} // namespace spic
