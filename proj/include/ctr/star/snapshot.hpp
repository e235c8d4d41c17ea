#ifndef CTR_STAR_SNAPSHOT_HPP_
#define CTR_STAR_SNAPSHOT_HPP_

#include <string>

#include "ctr/io/tensor_file.hpp"
#include "ctr/star/model.hpp"

namespace ctr::star {

// Full parameter dump (embeddings, shared FCN, per-domain FCNs, PN state
// including moving moments, auxiliary net); load is bit-exact.
void save_star_model(const std::string& path, const StarModel& model);
StarModel load_star_model(const std::string& path);

// In-memory forms, for callers that add their own metadata.
io::TensorFile star_to_tensor_file(const StarModel& model);
StarModel star_from_tensor_file(const io::TensorFile& file);

}  // namespace ctr::star

#endif  // CTR_STAR_SNAPSHOT_HPP_
