#include "gexpect/rmatrix.hpp"

#include <cmath>

namespace gexpect {

RMatrix RMatrix::scalar(double rho) {
  RMatrix r;
  r.kind_ = Kind::Scalar;
  r.data_ = {rho};
  return r;
}

RMatrix RMatrix::by_step(std::vector<double> rho_per_step) {
  RMatrix r;
  r.kind_ = Kind::ByStep;
  r.data_ = std::move(rho_per_step);
  return r;
}

RMatrix RMatrix::diagonal(std::vector<double> rho_per_component) {
  RMatrix r;
  r.kind_ = Kind::Diag;
  r.data_ = std::move(rho_per_component);
  return r;
}

RMatrix RMatrix::dense(int d, std::vector<double> row_major) {
  RMatrix r;
  r.kind_ = Kind::Dense;
  r.dense_d_ = d;
  r.data_ = std::move(row_major);
  return r;
}

double RMatrix::scalar_at(int k) const {
  if (kind_ == Kind::Scalar) return data_[0];
  return data_[k - 1];
}

double RMatrix::diag_entry(int k, int i) const {
  switch (kind_) {
    case Kind::Scalar: return data_[0];
    case Kind::ByStep: return data_[k - 1];
    case Kind::Diag: return i < static_cast<int>(data_.size()) ? data_[i] : 0.0;
    default: break;
  }
  return 0.0;
}

std::vector<double> RMatrix::apply(const MartingaleBasis& basis, int k, int v,
                                   std::span<const double> z) const {
  const int d = basis.dim();
  std::vector<double> out(d, 0.0);
  if (kind_ == Kind::Dense) {
    const int lim = std::min(d, dense_d_);
    for (int i = 0; i < lim; ++i) {
      double acc = 0.0;
      for (int j = 0; j < lim; ++j) acc += dense_entry(i, j) * z[j];
      out[i] = acc;
    }
  } else {
    for (int i = 0; i < d; ++i) out[i] = diag_entry(k, i) * z[i];
  }
  (void)v;
  return out;
}

double RMatrix::apply_norm(const MartingaleBasis& basis, int k, int v,
                           std::span<const double> z) const {
  const auto rz = apply(basis, k, v, z);
  return basis.m_norm(k, v, rz);
}

double RMatrix::dnorm(const MartingaleBasis& basis, int k, int v) const {
  const int d = basis.dim();
  const int act = basis.active(k, v);
  if (act == 0) return 0.0;
  if (kind_ == Kind::Scalar || kind_ == Kind::ByStep) return std::fabs(scalar_at(k));
  if (kind_ == Kind::Diag) {
    double m = 0.0;
    for (int i = 0; i < act; ++i) m = std::max(m, std::fabs(diag_entry(k, i)));
    return m;
  }
  // Dense: operator norm of A_ij = sqrt(phi_i) r_ij / sqrt(phi_j) on the
  // active block, by power iteration on A^T A (d is tiny).
  std::vector<double> sphi(d, 0.0);
  for (int i = 0; i < act; ++i) sphi[i] = std::sqrt(basis.phi(k, v, i));
  auto apply_a = [&](const std::vector<double>& w, std::vector<double>& out) {
    for (int i = 0; i < act; ++i) {
      double acc = 0.0;
      for (int j = 0; j < act; ++j)
        if (i < dense_d_ && j < dense_d_) acc += dense_entry(i, j) * w[j] / sphi[j];
      out[i] = sphi[i] * acc;
    }
  };
  auto apply_at = [&](const std::vector<double>& w, std::vector<double>& out) {
    for (int j = 0; j < act; ++j) {
      double acc = 0.0;
      for (int i = 0; i < act; ++i)
        if (i < dense_d_ && j < dense_d_) acc += dense_entry(i, j) * sphi[i] * w[i];
      out[j] = acc / sphi[j];
    }
  };
  std::vector<double> w(act, 1.0), tmp(act, 0.0), next(act, 0.0);
  double lambda = 0.0;
  for (int iter = 0; iter < 200; ++iter) {
    apply_a(w, tmp);
    apply_at(tmp, next);
    double nrm = 0.0;
    for (double x : next) nrm += x * x;
    nrm = std::sqrt(nrm);
    if (nrm == 0.0) return 0.0;
    for (int i = 0; i < act; ++i) w[i] = next[i] / nrm;
    lambda = nrm;
  }
  return std::sqrt(lambda);
}

double RMatrix::dnorm_sup(const MartingaleBasis& basis) const {
  double m = 0.0;
  const FilteredSpace& sp = basis.space();
  for (int k = 1; k <= sp.steps(); ++k)
    for (int v = 0; v < sp.node_count(k - 1); ++v) m = std::max(m, dnorm(basis, k, v));
  return m;
}

}  // namespace gexpect
