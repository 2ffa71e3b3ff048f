// Copyright 2026 The discogan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Checkpoint container shared by every model in the project.
//
// Layout (little endian):
//   "DCGNCKPT"  u32 version  u64 meta_len  meta (JSON text)
//   u64 count   count x { u32 name_len, name, u8 dtype, u32 ndim, i64 dims[ndim],
//                         u64 nbytes, raw data }
// Array names are written in lexicographic order so that identical contents
// produce identical bytes.

#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

namespace discogan {

inline constexpr uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  nlohmann::json meta = nlohmann::json::object();
  std::map<std::string, torch::Tensor> arrays;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// SHA-256 (hex) over the sorted names, dtypes, shapes and bytes of every
/// parameter and buffer of `module`.
std::string fingerprint(const torch::nn::Module& module);

/// Copies parameters and buffers of `module` into `ckpt.arrays` under `prefix`.
void export_module(const torch::nn::Module& module, const std::string& prefix, Checkpoint& ckpt);

/// Loads parameters/buffers of `module` from `ckpt.arrays`; every tensor of the
/// module must be present with a matching shape.
void import_module(torch::nn::Module& module, const std::string& prefix, const Checkpoint& ckpt);

}  // namespace discogan
