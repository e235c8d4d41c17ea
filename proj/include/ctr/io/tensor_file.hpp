#ifndef CTR_IO_TENSOR_FILE_HPP_
#define CTR_IO_TENSOR_FILE_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ctr::io {

// Versioned binary container of named double tensors plus a free-form
// metadata map. Raw IEEE-754 bytes, so save/load round trips are bit-exact.
struct NamedTensor {
  std::string name;
  std::vector<uint64_t> dims;
  std::vector<double> data;
};

struct TensorFile {
  std::map<std::string, std::string> metadata;
  std::vector<NamedTensor> tensors;

  const NamedTensor& find(const std::string& name) const;
  const std::string& meta(const std::string& key) const;
};

void write_tensor_file(const std::string& path, const TensorFile& file);
TensorFile read_tensor_file(const std::string& path);

}  // namespace ctr::io

#endif  // CTR_IO_TENSOR_FILE_HPP_
