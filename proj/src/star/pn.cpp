#include "ctr/star/pn.hpp"

#include <cmath>

#include "ctr/errors.hpp"

namespace ctr::star {

PnParams pn_init(int num_domains, size_t num_features) {
  if (num_domains < 1) throw ContractError("pn_init: need at least 1 domain");
  PnParams p;
  p.gamma.assign(num_features, 1.0);
  p.beta.assign(num_features, 0.0);
  p.gamma_p = nn::Matrix(static_cast<size_t>(num_domains), num_features, 1.0);
  p.beta_p = nn::Matrix(static_cast<size_t>(num_domains), num_features, 0.0);
  p.moving_mean = nn::Matrix(static_cast<size_t>(num_domains), num_features, 0.0);
  p.moving_var = nn::Matrix(static_cast<size_t>(num_domains), num_features, 1.0);
  p.domain_seen.assign(static_cast<size_t>(num_domains), 0);
  return p;
}

namespace {

size_t check_domain(const PnParams& params, int domain) {
  if (domain < 1 || domain > params.num_domains()) {
    throw ContractError("partitioned normalization: unknown domain");
  }
  return static_cast<size_t>(domain - 1);
}

}  // namespace

nn::Matrix pn_forward_train(const nn::Matrix& z, int domain, PnParams& params,
                            PnCache* cache) {
  const size_t d = check_domain(params, domain);
  const size_t dim = params.num_features();
  if (z.cols() != dim) throw ShapeError("pn_forward_train: feature width");
  const size_t n = z.rows();
  if (n < 2) {
    throw ContractError("pn_forward_train: training needs batch size >= 2");
  }

  std::vector<double> mean(dim, 0.0), var(dim, 0.0);
  for (size_t i = 0; i < n; ++i) {
    const double* row = z.row(i);
    for (size_t j = 0; j < dim; ++j) mean[j] += row[j];
  }
  for (size_t j = 0; j < dim; ++j) mean[j] /= static_cast<double>(n);
  for (size_t i = 0; i < n; ++i) {
    const double* row = z.row(i);
    for (size_t j = 0; j < dim; ++j) {
      const double diff = row[j] - mean[j];
      var[j] += diff * diff;
    }
  }
  for (size_t j = 0; j < dim; ++j) var[j] /= static_cast<double>(n);

  std::vector<double> inv_std(dim);
  for (size_t j = 0; j < dim; ++j) {
    inv_std[j] = 1.0 / std::sqrt(var[j] + params.eps);
  }

  nn::Matrix out(n, dim);
  nn::Matrix xhat(n, dim);
  const double* gp = params.gamma_p.row(d);
  const double* bp = params.beta_p.row(d);
  for (size_t i = 0; i < n; ++i) {
    const double* row = z.row(i);
    double* hrow = xhat.row(i);
    double* orow = out.row(i);
    for (size_t j = 0; j < dim; ++j) {
      hrow[j] = (row[j] - mean[j]) * inv_std[j];
      const double scale = params.gamma[j] * gp[j];
      const double shift = params.beta[j] + bp[j];
      orow[j] = scale * hrow[j] + shift;
    }
  }

  // Only domain p accumulates moving moments.
  double* mm = params.moving_mean.row(d);
  double* mv = params.moving_var.row(d);
  const double m = params.momentum;
  for (size_t j = 0; j < dim; ++j) {
    mm[j] = m * mm[j] + (1.0 - m) * mean[j];
    mv[j] = m * mv[j] + (1.0 - m) * var[j];
  }
  params.domain_seen[d] = 1;

  if (cache != nullptr) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
    cache->domain = domain;
  }
  return out;
}

nn::Matrix pn_forward_eval(const nn::Matrix& z, int domain, PnParams& params) {
  const size_t d = check_domain(params, domain);
  const size_t dim = params.num_features();
  if (z.cols() != dim) throw ShapeError("pn_forward_eval: feature width");

  const double* mm = params.moving_mean.row(d);
  const double* mv = params.moving_var.row(d);
  std::vector<double> zero_mean, unit_var;
  if (!params.domain_seen[d]) {
    if (params.strict_eval) {
      throw ContractError("pn_forward_eval: domain has no accumulated moments");
    }
    // Cold-start domain: fall back to (0, 1) moments and count the event.
    params.cold_eval_count += 1;
    zero_mean.assign(dim, 0.0);
    unit_var.assign(dim, 1.0);
    mm = zero_mean.data();
    mv = unit_var.data();
  }

  std::vector<double> inv_std(dim);
  for (size_t j = 0; j < dim; ++j) {
    inv_std[j] = 1.0 / std::sqrt(mv[j] + params.eps);
  }
  const double* gp = params.gamma_p.row(d);
  const double* bp = params.beta_p.row(d);
  nn::Matrix out(z.rows(), dim);
  for (size_t i = 0; i < z.rows(); ++i) {
    const double* row = z.row(i);
    double* orow = out.row(i);
    for (size_t j = 0; j < dim; ++j) {
      const double xhat = (row[j] - mm[j]) * inv_std[j];
      const double scale = params.gamma[j] * gp[j];
      const double shift = params.beta[j] + bp[j];
      orow[j] = scale * xhat + shift;
    }
  }
  return out;
}

void pn_backward(const PnCache& cache, const PnParams& params,
                 const nn::Matrix& dout, PnGrads* grads, nn::Matrix* din) {
  const size_t d = check_domain(params, cache.domain);
  const size_t n = cache.xhat.rows();
  const size_t dim = cache.xhat.cols();
  if (dout.rows() != n || dout.cols() != dim) {
    throw ShapeError("pn_backward: gradient shape mismatch");
  }
  const double* gp = params.gamma_p.row(d);

  std::vector<double> sum_dxhat(dim, 0.0), sum_dxhat_xhat(dim, 0.0);
  nn::Matrix dxhat(n, dim);
  for (size_t i = 0; i < n; ++i) {
    const double* drow = dout.row(i);
    const double* hrow = cache.xhat.row(i);
    double* xrow = dxhat.row(i);
    for (size_t j = 0; j < dim; ++j) {
      xrow[j] = drow[j] * params.gamma[j] * gp[j];
      sum_dxhat[j] += xrow[j];
      sum_dxhat_xhat[j] += xrow[j] * hrow[j];
    }
  }

  if (grads != nullptr) {
    if (grads->gamma.empty()) {
      grads->gamma.assign(dim, 0.0);
      grads->beta.assign(dim, 0.0);
      grads->gamma_p = nn::Matrix(params.gamma_p.rows(), dim);
      grads->beta_p = nn::Matrix(params.beta_p.rows(), dim);
    }
    double* ggp = grads->gamma_p.row(d);
    double* gbp = grads->beta_p.row(d);
    for (size_t i = 0; i < n; ++i) {
      const double* drow = dout.row(i);
      const double* hrow = cache.xhat.row(i);
      for (size_t j = 0; j < dim; ++j) {
        grads->gamma[j] += drow[j] * hrow[j] * gp[j];
        ggp[j] += drow[j] * hrow[j] * params.gamma[j];
        grads->beta[j] += drow[j];
        gbp[j] += drow[j];
      }
    }
  }

  if (din != nullptr) {
    *din = nn::Matrix(n, dim);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (size_t i = 0; i < n; ++i) {
      const double* xrow = dxhat.row(i);
      const double* hrow = cache.xhat.row(i);
      double* orow = din->row(i);
      for (size_t j = 0; j < dim; ++j) {
        orow[j] = cache.inv_std[j] * inv_n *
                  (static_cast<double>(n) * xrow[j] - sum_dxhat[j] -
                   hrow[j] * sum_dxhat_xhat[j]);
      }
    }
  }
}

}  // namespace ctr::star
