// Copyright 2026 The discogan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "discogan/checkpoint.hpp"

#include <openssl/evp.h>

#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <stdexcept>
#include <vector>

namespace discogan {
namespace {

constexpr char kMagic[8] = {'D', 'C', 'G', 'N', 'C', 'K', 'P', 'T'};

uint8_t dtype_code(torch::Dtype d) {
  switch (d) {
    case torch::kFloat32: return 0;
    case torch::kFloat64: return 1;
    case torch::kInt64: return 2;
    default: throw std::invalid_argument("checkpoint: unsupported dtype");
  }
}

torch::Dtype code_dtype(uint8_t c) {
  switch (c) {
    case 0: return torch::kFloat32;
    case 1: return torch::kFloat64;
    case 2: return torch::kInt64;
    default: throw std::runtime_error("checkpoint: corrupt dtype code");
  }
}

template <typename T>
void put(std::string& out, T v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::vector<char> buf) : buf_(std::move(buf)) {}
  template <typename T>
  T get() {
    T v;
    std::memcpy(&v, take(sizeof(T)), sizeof(T));
    return v;
  }
  const char* take(std::size_t n) {
    if (pos_ + n > buf_.size()) throw std::runtime_error("checkpoint: truncated file");
    const char* p = buf_.data() + pos_;
    pos_ += n;
    return p;
  }

 private:
  std::vector<char> buf_;
  std::size_t pos_ = 0;
};

void append_tensor_record(std::string& out, const std::string& name, const torch::Tensor& t) {
  auto c = t.detach().cpu().contiguous();
  put<uint32_t>(out, static_cast<uint32_t>(name.size()));
  out += name;
  put<uint8_t>(out, dtype_code(c.scalar_type()));
  put<uint32_t>(out, static_cast<uint32_t>(c.dim()));
  for (auto d : c.sizes()) put<int64_t>(out, d);
  const auto nbytes = static_cast<uint64_t>(c.numel() * c.element_size());
  put<uint64_t>(out, nbytes);
  out.append(static_cast<const char*>(c.data_ptr()), nbytes);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::string out(kMagic, sizeof(kMagic));
  put<uint32_t>(out, kCheckpointVersion);
  const std::string meta = ckpt.meta.dump();
  put<uint64_t>(out, meta.size());
  out += meta;
  put<uint64_t>(out, ckpt.arrays.size());
  for (const auto& [name, t] : ckpt.arrays) append_tensor_record(out, name, t);

  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw std::runtime_error("checkpoint: cannot write " + tmp.string());
    os.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!os) throw std::runtime_error("checkpoint: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path.string());
  Reader r(std::vector<char>((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>()));
  if (std::memcmp(r.take(sizeof(kMagic)), kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path.string());
  const auto version = r.get<uint32_t>();
  if (version != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  Checkpoint ckpt;
  const auto meta_len = r.get<uint64_t>();
  ckpt.meta = nlohmann::json::parse(std::string(r.take(meta_len), meta_len));
  const auto count = r.get<uint64_t>();
  for (uint64_t i = 0; i < count; ++i) {
    const auto name_len = r.get<uint32_t>();
    std::string name(r.take(name_len), name_len);
    const auto dtype = code_dtype(r.get<uint8_t>());
    const auto ndim = r.get<uint32_t>();
    std::vector<int64_t> dims(ndim);
    for (auto& d : dims) d = r.get<int64_t>();
    const auto nbytes = r.get<uint64_t>();
    auto t = torch::empty(dims, torch::TensorOptions().dtype(dtype));
    if (static_cast<uint64_t>(t.numel() * t.element_size()) != nbytes)
      throw std::runtime_error("checkpoint: size mismatch for " + name);
    std::memcpy(t.data_ptr(), r.take(nbytes), nbytes);
    ckpt.arrays.emplace(std::move(name), std::move(t));
  }
  return ckpt;
}

std::string fingerprint(const torch::nn::Module& module) {
  std::map<std::string, torch::Tensor> sorted;
  for (const auto& item : module.named_parameters(/*recurse=*/true)) sorted.emplace(item.key(), item.value());
  for (const auto& item : module.named_buffers(/*recurse=*/true)) sorted.emplace(item.key(), item.value());
  std::string bytes;
  for (const auto& [name, t] : sorted) append_tensor_record(bytes, name, t);

  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw std::runtime_error("fingerprint: SHA-256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 0xF];
  }
  return hex;
}

void export_module(const torch::nn::Module& module, const std::string& prefix, Checkpoint& ckpt) {
  for (const auto& item : module.named_parameters(true))
    ckpt.arrays[prefix + item.key()] = item.value().detach().clone();
  for (const auto& item : module.named_buffers(true))
    ckpt.arrays[prefix + item.key()] = item.value().detach().clone();
}

void import_module(torch::nn::Module& module, const std::string& prefix, const Checkpoint& ckpt) {
  torch::NoGradGuard no_grad;
  auto assign = [&](const std::string& key, torch::Tensor& dst) {
    auto it = ckpt.arrays.find(prefix + key);
    if (it == ckpt.arrays.end()) throw std::runtime_error("checkpoint: missing array " + prefix + key);
    if (it->second.sizes() != dst.sizes())
      throw std::runtime_error("checkpoint: shape mismatch for " + prefix + key);
    dst.copy_(it->second);
  };
  for (auto& item : module.named_parameters(true)) assign(item.key(), item.value());
  for (auto& item : module.named_buffers(true)) assign(item.key(), item.value());
}

}  // namespace discogan
