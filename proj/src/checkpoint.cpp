// Copyright 2026 The stgloc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "stgloc/checkpoint.hpp"

#include <fstream>

#include "binary_io.hpp"
#include "stgloc/errors.hpp"

namespace stg {

void save_checkpoint(const std::string& path, const ParameterSet& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LoadError("cannot open checkpoint for writing: " + path);
  out.write("DORI", 4);
  binary::write_uint<std::uint32_t>(out, kCheckpointVersion);
  for (const auto& [name, t] : params.entries()) {
    binary::write_string(out, name);
    binary::write_uint<std::uint32_t>(out, 2);
    binary::write_uint<std::uint64_t>(out, static_cast<std::uint64_t>(t.rows()));
    binary::write_uint<std::uint64_t>(out, static_cast<std::uint64_t>(t.cols()));
    for (Index i = 0; i < t.size(); ++i) binary::write_f64(out, t.value().data()[i]);
  }
  if (!out) throw LoadError("failed writing checkpoint: " + path);
}

std::vector<NamedArray> read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path);
  try {
    binary::expect_magic(in, "DORI", path);
    const auto version = binary::read_uint<std::uint32_t>(in, "version");
    if (version != kCheckpointVersion) {
      throw CheckpointError(path + ": unsupported checkpoint version " + std::to_string(version));
    }
    std::vector<NamedArray> records;
    while (in.peek() != std::char_traits<char>::eof()) {
      NamedArray rec;
      rec.name = binary::read_string(in, "parameter name");
      const auto rank = binary::read_uint<std::uint32_t>(in, "rank");
      if (rank > 2) throw CheckpointError(path + ": parameter '" + rec.name + "' has rank " + std::to_string(rank));
      std::uint64_t count = 1;
      for (std::uint32_t d = 0; d < rank; ++d) {
        rec.dims.push_back(binary::read_uint<std::uint64_t>(in, "dimension"));
        count *= rec.dims.back();
      }
      const Index rows = rank == 2 ? static_cast<Index>(rec.dims[0]) : 1;
      const Index cols = rank == 0 ? 1 : static_cast<Index>(rec.dims.back());
      rec.value.resize(rows, cols);
      for (std::uint64_t i = 0; i < count; ++i) rec.value.data()[i] = binary::read_f64(in, "payload");
      records.push_back(std::move(rec));
    }
    return records;
  } catch (const CheckpointError&) {
    throw;
  } catch (const LoadError& e) {
    throw CheckpointError(e.what());
  }
}

void load_checkpoint(const std::string& path, ParameterSet& params) {
  const std::vector<NamedArray> records = read_checkpoint(path);
  if (records.size() != params.size()) {
    throw CheckpointError(path + ": holds " + std::to_string(records.size()) + " parameters, model expects " +
                          std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& [name, tensor] = params.entries()[i];
    const NamedArray& rec = records[i];
    if (rec.name != name) {
      throw CheckpointError(path + ": parameter " + std::to_string(i) + " is '" + rec.name + "', model expects '" +
                            name + "'");
    }
    if (rec.value.rows() != tensor.rows() || rec.value.cols() != tensor.cols()) {
      throw CheckpointError(path + ": shape of '" + name + "' is " + std::to_string(rec.value.rows()) + "x" +
                            std::to_string(rec.value.cols()) + ", model expects " +
                            std::to_string(tensor.rows()) + "x" + std::to_string(tensor.cols()));
    }
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    Tensor t = params.entries()[i].second;
    t.mutable_value() = records[i].value;
  }
}

}  // namespace stg
