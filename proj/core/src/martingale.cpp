#include "gexpect/martingale.hpp"

#include <cmath>
#include <sstream>

#include "gexpect/report.hpp"

namespace gexpect {

namespace {

// Conditional inner product on one atom: E[xy | v] with x, y given on the
// children of v.
double cond_dot(const FilteredSpace& sp, int k, int v, std::span<const double> x,
                std::span<const double> y) {
  const Node& parent = sp.node(k - 1, v);
  double acc = 0.0;
  for (std::size_t j = 0; j < parent.children.size(); ++j)
    acc += (sp.node(k, parent.children[j]).p / parent.p) * x[j] * y[j];
  return acc;
}

}  // namespace

MartingaleBasis davis_varaiya_basis(const FilteredSpace& sp) {
  const int K = sp.steps();
  MartingaleBasis basis;
  basis.space_ = &sp;

  int d = 0;
  for (int k = 1; k <= K; ++k)
    for (int v = 0; v < sp.node_count(k - 1); ++v)
      d = std::max(d, static_cast<int>(sp.node(k - 1, v).children.size()) - 1);
  basis.d_ = d;

  basis.inc_.resize(K);
  basis.qv_.resize(K);
  basis.phi_.resize(K);
  basis.active_.resize(K);

  for (int k = 1; k <= K; ++k) {
    const int nv = sp.node_count(k - 1);
    basis.inc_[k - 1].resize(nv);
    basis.qv_[k - 1].assign(static_cast<std::size_t>(nv) * d, 0.0);
    basis.phi_[k - 1].assign(static_cast<std::size_t>(nv) * d, 0.0);
    basis.active_[k - 1].assign(nv, 0);
    const double dmu = sp.grid().dmu(k);

    for (int v = 0; v < nv; ++v) {
      const Node& parent = sp.node(k - 1, v);
      const int m = static_cast<int>(parent.children.size());
      auto& slot = basis.inc_[k - 1][v];
      slot.assign(static_cast<std::size_t>(m) * d, 0.0);

      // Candidates: centred child indicators in canonical order. The span of
      // the conditionally mean-zero subspace has dimension m - 1; the last
      // candidate is always dependent.
      std::vector<std::vector<double>> built;
      for (int j = 0; j < m && static_cast<int>(built.size()) < m - 1; ++j) {
        const double qj = sp.node(k, parent.children[j]).p / parent.p;
        std::vector<double> cand(m, -qj);
        cand[j] += 1.0;
        // Two rounds of modified Gram-Schmidt for numerical orthogonality.
        for (int round = 0; round < 2; ++round) {
          for (const auto& b : built) {
            const double proj = cond_dot(sp, k, v, cand, b);
            for (int l = 0; l < m; ++l) cand[l] -= proj * b[l];
          }
        }
        const double nrm2 = cond_dot(sp, k, v, cand, cand);
        if (nrm2 <= 1e-24) continue;
        const double inv = 1.0 / std::sqrt(nrm2);
        for (auto& x : cand) x *= inv;
        built.push_back(std::move(cand));
      }

      const int r = static_cast<int>(built.size());
      basis.active_[k - 1][v] = r;
      for (int i = 0; i < r; ++i) {
        for (int c = 0; c < m; ++c) slot[static_cast<std::size_t>(c) * d + i] = built[i][c];
        const double qv_inc = cond_dot(sp, k, v, built[i], built[i]);  // = 1 up to rounding
        basis.qv_[k - 1][static_cast<std::size_t>(v) * d + i] = qv_inc;
        basis.phi_[k - 1][static_cast<std::size_t>(v) * d + i] = qv_inc / dmu;
      }
    }
  }

  // Forward-accumulated values M^i_t, with M^i_0 = 0.
  basis.values_.resize(d);
  for (int i = 0; i < d; ++i) {
    AdaptedProcess m;
    m.at.push_back(constant_rv(sp, 0, 0.0));
    for (int k = 1; k <= K; ++k) {
      RandomVariable next{k, std::vector<double>(sp.node_count(k), 0.0)};
      for (int v = 0; v < sp.node_count(k - 1); ++v) {
        const Node& parent = sp.node(k - 1, v);
        for (std::size_t j = 0; j < parent.children.size(); ++j)
          next[parent.children[j]] =
              m.at[k - 1][v] + basis.increment(k, v, static_cast<int>(j), i);
      }
      m.at.push_back(std::move(next));
    }
    basis.values_[i] = std::move(m);
  }
  return basis;
}

double MartingaleBasis::m_norm_sq(int k, int v, std::span<const double> z) const {
  if (static_cast<int>(z.size()) != d_)
    fail(ErrorCode::DimensionMismatch, "integrand has " + std::to_string(z.size()) +
                                           " components, basis dimension is " +
                                           std::to_string(d_));
  double acc = 0.0;
  for (int i = 0; i < d_; ++i) acc += z[i] * z[i] * phi(k, v, i);
  return acc;
}

double MartingaleBasis::m_norm(int k, int v, std::span<const double> z) const {
  return std::sqrt(m_norm_sq(k, v, z));
}

double MartingaleBasis::pair_increment(int k, int v, int c, std::span<const double> z) const {
  double acc = 0.0;
  for (int i = 0; i < d_; ++i) acc += z[i] * increment(k, v, c, i);
  return acc;
}

IntegrandVector zero_integrand(const FilteredSpace& sp, int d) {
  IntegrandVector zv;
  zv.d = d;
  zv.z.resize(sp.steps());
  for (int k = 1; k <= sp.steps(); ++k)
    zv.z[k - 1].assign(static_cast<std::size_t>(sp.node_count(k - 1)) * d, 0.0);
  return zv;
}

void represent_step(const MartingaleBasis& basis, int k, const RandomVariable& dev,
                    IntegrandVector& out) {
  const FilteredSpace& sp = basis.space();
  for (int v = 0; v < sp.node_count(k - 1); ++v) {
    const Node& parent = sp.node(k - 1, v);
    auto zk = out.at(k, v);
    for (int i = 0; i < basis.dim(); ++i) {
      const double qv = basis.qv_increment(k, v, i);
      if (qv <= 0.0) {
        zk[i] = 0.0;  // H^2_M equivalence class representative
        continue;
      }
      double cov = 0.0;
      for (std::size_t j = 0; j < parent.children.size(); ++j) {
        const int c = parent.children[j];
        cov += (sp.node(k, c).p / parent.p) * dev[c] *
               basis.increment(k, v, static_cast<int>(j), i);
      }
      zk[i] = cov / qv;
    }
  }
}

IntegrandVector represent(const MartingaleBasis& basis, const AdaptedProcess& n,
                          double martingale_tol) {
  const FilteredSpace& sp = basis.space();
  IntegrandVector zv = zero_integrand(sp, basis.dim());
  for (int k = 1; k <= sp.steps(); ++k) {
    const RandomVariable mean = conditional_expectation(sp, n.at[k], k - 1);
    const double drift = max_abs_diff(mean, n.at[k - 1]);
    if (drift > martingale_tol)
      fail(ErrorCode::NotAMartingale,
           "conditional drift " + format_double(drift) + " at step " + std::to_string(k));
    RandomVariable dev = rv_sub(n.at[k], lift(sp, n.at[k - 1], k));
    represent_step(basis, k, dev, zv);
  }
  return zv;
}

RandomVariable stoch_integral(const MartingaleBasis& basis, const IntegrandVector& zv, int a,
                              int b) {
  const FilteredSpace& sp = basis.space();
  if (a > b) fail(ErrorCode::LevelOrder, "integral bounds out of order");
  RandomVariable acc = constant_rv(sp, a, 0.0);
  for (int k = a + 1; k <= b; ++k) {
    RandomVariable next{k, std::vector<double>(sp.node_count(k), 0.0)};
    for (int v = 0; v < sp.node_count(k - 1); ++v) {
      const Node& parent = sp.node(k - 1, v);
      const auto zk = zv.at(k, v);
      for (std::size_t j = 0; j < parent.children.size(); ++j)
        next[parent.children[j]] =
            acc[v] + basis.pair_increment(k, v, static_cast<int>(j), zk);
    }
    acc = std::move(next);
  }
  return acc;
}

double IsometryReport::max_gap() const {
  return std::max(std::fabs(lhs - rhs_qv), std::fabs(rhs_qv - rhs_square));
}

IsometryReport isometry_check(const MartingaleBasis& basis, const IntegrandVector& zv,
                              const PredictableProcess& indicator) {
  const FilteredSpace& sp = basis.space();
  IsometryReport rep;
  for (int k = 1; k <= sp.steps(); ++k) {
    const double dmu = sp.grid().dmu(k);
    for (int v = 0; v < sp.node_count(k - 1); ++v) {
      if (indicator.step(k)[v] == 0.0) continue;
      const double pv = sp.node(k - 1, v).p;
      const auto zk = zv.at(k, v);
      rep.lhs += pv * basis.m_norm_sq(k, v, zk) * dmu;
      for (int i = 0; i < basis.dim(); ++i)
        rep.rhs_qv += pv * zk[i] * zk[i] * basis.qv_increment(k, v, i);
    }
  }
  // E[(int_A Z dM)^2] via the masked pathwise integral.
  IntegrandVector masked = zv;
  for (int k = 1; k <= sp.steps(); ++k)
    for (int v = 0; v < sp.node_count(k - 1); ++v) {
      if (indicator.step(k)[v] == 0.0) {
        auto zk = masked.at(k, v);
        for (int i = 0; i < masked.d; ++i) zk[i] = 0.0;
      }
    }
  const RandomVariable integral = stoch_integral(basis, masked, 0, sp.steps());
  for (int w = 0; w < sp.atoms(); ++w)
    rep.rhs_square += sp.node(sp.steps(), w).p * integral[w] * integral[w];
  return rep;
}

std::string dump_basis(const MartingaleBasis& basis) {
  const FilteredSpace& sp = basis.space();
  std::ostringstream out;
  out << "basis d " << basis.dim() << "\n";
  for (int k = 1; k <= sp.steps(); ++k) {
    for (int v = 0; v < sp.node_count(k - 1); ++v) {
      const Node& parent = sp.node(k - 1, v);
      out << "atom step " << k << " node " << parent.id << " active "
          << basis.active(k, v) << "\n";
      for (int i = 0; i < basis.active(k, v); ++i) {
        out << "  dM^" << (i + 1) << " phi " << format_double(basis.phi(k, v, i)) << " :";
        for (std::size_t j = 0; j < parent.children.size(); ++j)
          out << " " << format_double(basis.increment(k, v, static_cast<int>(j), i));
        out << "\n";
      }
    }
  }
  return out.str();
}

}  // namespace gexpect
