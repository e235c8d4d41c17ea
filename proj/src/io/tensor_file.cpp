#include "ctr/io/tensor_file.hpp"

#include <cstring>
#include <fstream>

#include "ctr/errors.hpp"

namespace ctr::io {

namespace {

constexpr char kMagic[8] = {'C', 'T', 'R', 'T', 'E', 'N', 'S', '1'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_u64(std::ostream& out, uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_string(std::ostream& out, const std::string& s) {
  write_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

uint32_t read_u32(std::istream& in) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

uint64_t read_u64(std::istream& in) {
  uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

std::string read_string(std::istream& in) {
  const uint64_t len = read_u64(in);
  std::string s(len, '\0');
  in.read(s.data(), static_cast<std::streamsize>(len));
  return s;
}

}  // namespace

const NamedTensor& TensorFile::find(const std::string& name) const {
  for (const NamedTensor& t : tensors) {
    if (t.name == name) return t;
  }
  throw DataError("tensor file: missing tensor '" + name + "'");
}

const std::string& TensorFile::meta(const std::string& key) const {
  auto it = metadata.find(key);
  if (it == metadata.end()) {
    throw DataError("tensor file: missing metadata key '" + key + "'");
  }
  return it->second;
}

void write_tensor_file(const std::string& path, const TensorFile& file) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_u32(out, kVersion);
  write_u64(out, file.metadata.size());
  for (const auto& [key, value] : file.metadata) {
    write_string(out, key);
    write_string(out, value);
  }
  write_u64(out, file.tensors.size());
  for (const NamedTensor& t : file.tensors) {
    write_string(out, t.name);
    write_u32(out, static_cast<uint32_t>(t.dims.size()));
    uint64_t total = 1;
    for (uint64_t d : t.dims) {
      write_u64(out, d);
      total *= d;
    }
    if (total != t.data.size()) {
      throw ContractError("tensor file: dims do not match data size for '" +
                          t.name + "'");
    }
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(double)));
  }
  if (!out) throw DataError("write failed: " + path);
}

TensorFile read_tensor_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open for reading: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DataError("not a model snapshot file: " + path);
  }
  const uint32_t version = read_u32(in);
  if (version != kVersion) {
    throw DataError("unsupported snapshot version in " + path);
  }
  TensorFile file;
  const uint64_t n_meta = read_u64(in);
  for (uint64_t i = 0; i < n_meta; ++i) {
    std::string key = read_string(in);
    std::string value = read_string(in);
    file.metadata.emplace(std::move(key), std::move(value));
  }
  const uint64_t n_tensors = read_u64(in);
  for (uint64_t i = 0; i < n_tensors; ++i) {
    NamedTensor t;
    t.name = read_string(in);
    const uint32_t ndim = read_u32(in);
    uint64_t total = 1;
    for (uint32_t d = 0; d < ndim; ++d) {
      t.dims.push_back(read_u64(in));
      total *= t.dims.back();
    }
    t.data.resize(total);
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(total * sizeof(double)));
    if (!in) throw DataError("truncated snapshot file: " + path);
    file.tensors.push_back(std::move(t));
  }
  return file;
}

}  // namespace ctr::io
