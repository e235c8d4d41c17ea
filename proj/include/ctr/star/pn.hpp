#ifndef CTR_STAR_PN_HPP_
#define CTR_STAR_PN_HPP_

#include <cstdint>
#include <vector>

#include "ctr/nn/matrix.hpp"

namespace ctr::star {

// Partitioned normalization: global scale/bias shared across domains,
// per-domain scale/bias on top, and per-domain moving moments for eval.
struct PnParams {
  std::vector<double> gamma;   // global scale, per feature
  std::vector<double> beta;    // global bias
  nn::Matrix gamma_p;          // domains x features
  nn::Matrix beta_p;
  nn::Matrix moving_mean;      // E_p, domains x features
  nn::Matrix moving_var;       // Var_p
  std::vector<uint8_t> domain_seen;  // moments populated for this domain?
  double eps = 1e-5;
  double momentum = 0.99;
  bool strict_eval = false;    // throw on unseen domains instead of (0,1)
  int64_t cold_eval_count = 0; // warning counter for non-strict cold starts

  int num_domains() const { return static_cast<int>(gamma_p.rows()); }
  size_t num_features() const { return gamma.size(); }
};

// Domain parameters start at identity (gamma_p=1, beta_p=0) so training
// begins from the pure shared model.
PnParams pn_init(int num_domains, size_t num_features);

struct PnCache {
  nn::Matrix xhat;
  std::vector<double> inv_std;
  int domain = 0;
};

// Training: standardize by the batch moments, scale by gamma*gamma_p, shift
// by beta+beta_p; only domain p's moving moments are updated. The whole
// batch must come from domain p (callers with per-sample domains must group
// first) and must have at least two rows.
nn::Matrix pn_forward_train(const nn::Matrix& z, int domain, PnParams& params,
                            PnCache* cache = nullptr);

// Eval: standardize by domain p's moving moments; no state mutation apart
// from the cold-start warning counter.
nn::Matrix pn_forward_eval(const nn::Matrix& z, int domain, PnParams& params);

struct PnGrads {
  std::vector<double> gamma;
  std::vector<double> beta;
  nn::Matrix gamma_p;  // domains x features
  nn::Matrix beta_p;
};

void pn_backward(const PnCache& cache, const PnParams& params,
                 const nn::Matrix& dout, PnGrads* grads, nn::Matrix* din);

}  // namespace ctr::star

#endif  // CTR_STAR_PN_HPP_
