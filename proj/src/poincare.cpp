#include "gsmix/poincare.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <unordered_map>

#include "gsmix/losses.hpp"
#include "gsmix/quadrature.hpp"

namespace gsmix {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kWeightFloor = 1e-240;
}  // namespace

double chisq_same_cov(const Eigen::VectorXd& mu_i, const Eigen::VectorXd& mu_j,
                      const Eigen::MatrixXd& sigma) {
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("chisq_same_cov: Sigma not SPD");
  Eigen::VectorXd dmu = mu_i - mu_j;
  double quad = dmu.dot(llt.solve(dmu));
  return std::expm1(quad);
}

double chisq_same_cov_bound(double diameter, double lambda_min, double beta) {
  return std::exp(7.0 * diameter * diameter / (lambda_min * (1.0 + beta)));
}

double chisq_joint(const SharedCovMixture& model, const TemperatureSchedule& s, int i, int j,
                   double tol) {
  if (i < 0 || j < 0 || i >= model.num_components() || j >= model.num_components())
    throw std::invalid_argument("chisq_joint: component index out of range");
  if (i == j) return 0.0;
  auto f = [&](double beta) {
    SharedCovMixture t = model.temper(beta, s.lambda_min());
    return chisq_same_cov(model.means()[i], model.means()[j], t.covariance()) * s.r_pdf(beta);
  };
  double coarse = integrate(f, 0.0, s.beta_max(), tol);
  double fine = integrate(f, 0.0, s.beta_max(), 0.1 * tol);
  if (std::fabs(fine - coarse) > 50.0 * tol * std::max(1.0, std::fabs(fine)))
    throw std::runtime_error("chisq_joint: quadrature did not converge, achieved " +
                             std::to_string(std::fabs(fine - coarse)));
  return fine;
}

ProjectedChain projected_chain_bound(const SharedCovMixture& model, const TemperatureSchedule& s) {
  const int k = model.num_components();
  if (k < 2) throw std::invalid_argument("projected_chain_bound: needs K >= 2");
  ProjectedChain out;
  Eigen::MatrixXd chi(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) chi(i, j) = (i == j) ? 0.0 : chisq_joint(model, s, i, j);
  // chi^2 between same-covariance Gaussians is symmetric, so the pairwise max
  // of Lemma-style chi_max is the matrix itself; keep the max for clarity
  out.transition.setZero(k, k);
  for (int i = 0; i < k; ++i) {
    double off = 0.0;
    for (int j = 0; j < k; ++j) {
      if (i == j) continue;
      double cmax = std::max(chi(i, j), chi(j, i));
      out.transition(i, j) = model.weights()[j] / std::max(cmax, 1.0);
      off += out.transition(i, j);
    }
    if (off > 1.0) throw std::runtime_error("projected chain row mass exceeds 1");
    out.transition(i, i) = 1.0 - off;
  }
  // detailed balance w_i T(i,j) = w_j T(j,i)
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      out.detailed_balance_err =
          std::max(out.detailed_balance_err,
                   std::fabs(model.weights()[i] * out.transition(i, j) -
                             model.weights()[j] * out.transition(j, i)));

  // canonical single-edge paths. The path length is measured in the edge
  // measure Q(k,l) = w_k T(k,l) of the reversible chain, so the bound is
  //   C <= max_{k,l} ||gamma_kl||_Q w_k w_l = max_{k,l} max{chi^2_max(k,l), 1},
  // which collapses to 14 D^2 / lambda_min through the joint chi^2 bound.
  // (Weighting by T alone is falsified by the dense eigensolve: at K = 2 and
  // equal weights the exact constant is 1 while w_k w_l / T(k,l) gives 1/2.)
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) {
      if (a == b) continue;
      double len = 1.0 / (model.weights()[a] * out.transition(a, b));
      out.c_projected = std::max(out.c_projected, len * model.weights()[a] * model.weights()[b]);
    }

  // exact constant of the chain with jump rates T(i,j): generalized eigensolve
  // of the Dirichlet form against the stationary weights
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      if (i != j) {
        q(i, i) += model.weights()[i] * out.transition(i, j);
        q(i, j) -= model.weights()[i] * out.transition(i, j);
      }
  q = 0.5 * (q + q.transpose().eval());
  Eigen::VectorXd sqw = model.weights().array().sqrt().matrix();
  Eigen::MatrixXd sym = q.array().colwise() / sqw.array();
  sym = sym.array().rowwise() / sqw.transpose().array();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (sym + sym.transpose().eval()));
  double gap = 0.0;
  for (int i = 0; i < k; ++i)
    if (es.eigenvalues()[i] > 1e-12) {
      gap = es.eigenvalues()[i];
      break;
    }
  out.c_exact = gap > 0.0 ? 1.0 / gap : 0.0;
  return out;
}

ComponentBound component_bound(const SharedCovMixture& model, const TemperatureSchedule& s,
                               int i) {
  if (i < 0 || i >= model.num_components())
    throw std::invalid_argument("component_bound: index out of range");
  ComponentBound cb;
  const double d = model.dim();
  const double lam_max = model.lambda_max(), lam_min = s.lambda_min();
  const double dd = s.diameter();
  cb.c_beta = s.beta_max() / kPi;
  cb.c_x_given_beta = lam_max + s.beta_max() * lam_min;
  double pow14_8 = std::pow(14.0, 8);
  cb.rate_of_change_closed =
      16.0 * d * d * std::max(std::pow(lam_max, 8), pow14_8 * std::pow(dd, 16));

  // numeric sup over a log-spaced beta grid of E (d/dbeta log p(x|beta,i))^2;
  // for a Gaussian component this moment is exact:
  //   (lambda/2)^2 Var(z' Sigma_beta^{-1} z) = (lambda^2/2) Tr Sigma_beta^{-2}
  cb.rate_of_change_numeric = 0.0;
  const int n_grid = 512;
  for (int gidx = 0; gidx < n_grid; ++gidx) {
    double beta;
    if (gidx == 0) {
      beta = 0.0;
    } else {
      double lo = s.beta_max() * 1e-6;
      double t = double(gidx - 1) / double(n_grid - 2);
      beta = lo * std::pow(s.beta_max() / lo, t);
    }
    SharedCovMixture tm = model.temper(beta, lam_min);
    double tr2 = (tm.precision() * tm.precision()).trace();
    cb.rate_of_change_numeric =
        std::max(cb.rate_of_change_numeric, 0.5 * lam_min * lam_min * tr2);
  }

  cb.value = std::max(cb.c_x_given_beta * (1.0 + 2.0 * cb.c_beta * cb.rate_of_change_closed),
                      2.0 * cb.c_beta);
  return cb;
}

PoincareBoundBreakdown total_bound(const SharedCovMixture& model, const TemperatureSchedule& s) {
  if (std::fabs(model.lambda_min() - s.lambda_min()) > 1e-9 * model.lambda_min() &&
      s.lambda_min() > model.lambda_min())
    throw std::invalid_argument("total_bound: schedule lambda_min inconsistent with model");
  const int k = model.num_components();
  PoincareBoundBreakdown br;
  double comp_max = 0.0;
  ComponentBound cb0;
  for (int i = 0; i < k; ++i) {
    ComponentBound cb = component_bound(model, s, i);
    if (cb.value >= comp_max) {
      comp_max = cb.value;
      cb0 = cb;
    }
  }
  br.c_beta = cb0.c_beta;
  br.c_x_given_beta = cb0.c_x_given_beta;
  br.rate_of_change_sup = cb0.rate_of_change_numeric;
  br.rate_of_change_closed = cb0.rate_of_change_closed;
  br.c_component = comp_max;

  br.chisq_joint_matrix.setZero(k, k);
  if (k >= 2) {
    ProjectedChain pc = projected_chain_bound(model, s);
    br.projected_T = pc.transition;
    br.c_projected = pc.c_projected;
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j)
        br.chisq_joint_matrix(i, j) = (i == j) ? 0.0 : chisq_joint(model, s, i, j);
  } else {
    br.projected_T = Eigen::MatrixXd::Ones(1, 1);
    br.c_projected = 0.0;
  }
  br.c_total = br.c_component * (1.0 + 0.5 * br.c_projected);
  double dd = s.diameter(), d = model.dim();
  br.collapsed_reference = std::pow(dd, 22) * d * d * std::pow(model.lambda_max(), 9) /
                           (s.lambda_min() * s.lambda_min());
  return br;
}

// ---------------------------------------------------------------------------
// grid spectral oracle

namespace {

// smallest nonzero generalized eigenvalue of (Q, diag(pi)) orthogonal to
// constants, by inverse iteration with a tiny diagonal shift
double smallest_positive_eig(const Eigen::SparseMatrix<double>& q, const Eigen::VectorXd& pi) {
  const long n = pi.size();
  Eigen::SparseMatrix<double> m = q;
  Eigen::VectorXd shift = 1e-10 * pi;
  for (long i = 0; i < n; ++i) m.coeffRef(i, i) += shift[i];
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  solver.compute(m);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("spectral oracle: factorization failed");

  Eigen::VectorXd v(n);
  Rng rng(1234577);
  for (long i = 0; i < n; ++i) v[i] = rng.normal();
  v.array() -= (pi.array() * v.array()).sum();
  double lam = 0.0, prev = -1.0;
  for (int it = 0; it < 500; ++it) {
    Eigen::VectorXd u = solver.solve((pi.array() * v.array()).matrix());
    u.array() -= (pi.array() * u.array()).sum();
    double nrm = std::sqrt((pi.array() * u.array() * u.array()).sum());
    if (!(nrm > 0.0)) throw std::runtime_error("spectral oracle: iteration collapsed");
    u /= nrm;
    lam = u.dot(q * u);
    if (prev >= 0.0 && std::fabs(lam - prev) <= 1e-12 * std::max(lam, 1e-30)) break;
    prev = lam;
    v = u;
  }
  return lam;
}

double oracle_1d_once(const std::function<double(double)>& logp, double lo, double hi, int n) {
  GridOperator::Axis ax{lo, hi, n, (hi - lo) / (n - 1)};
  GridOperator op = build_grid_operator(
      [&](const std::vector<double>& c) { return logp(c[0]); }, {ax});
  if (op.stationary[0] > 1e-6 || op.stationary[n - 1] > 1e-6)
    throw std::runtime_error("spectral oracle: density mass at grid boundary");
  return 1.0 / grid_spectral_gap(op);
}

}  // namespace

GridOperator build_grid_operator(
    const std::function<double(const std::vector<double>&)>& log_density,
    const std::vector<GridOperator::Axis>& axes) {
  if (axes.empty() || axes.size() > 2)
    throw std::invalid_argument("build_grid_operator: 1 or 2 axes");
  GridOperator op;
  op.axes = axes;
  const int n0 = axes[0].n;
  const int n1 = axes.size() == 2 ? axes[1].n : 1;
  const long n = long(n0) * n1;
  auto coord = [&](int i, int a) { return axes[a].lo + i * axes[a].step; };

  std::vector<double> lp(n);
  double base = -1e300;
  std::vector<double> c(axes.size());
  for (int i = 0; i < n0; ++i) {
    c[0] = coord(i, 0);
    for (int j = 0; j < n1; ++j) {
      if (axes.size() == 2) c[1] = coord(j, 1);
      lp[long(i) * n1 + j] = log_density(c);
      base = std::max(base, lp[long(i) * n1 + j]);
    }
  }
  double z = 0.0;
  op.stationary.resize(n);
  for (long f = 0; f < n; ++f) {
    op.stationary[f] = std::exp(lp[f] - base);
    z += op.stationary[f];
  }
  op.stationary /= z;

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(4 * n * axes.size());
  auto add_edge = [&](long a, long b, double w, double h) {
    double cc = std::max(w, kWeightFloor) / (h * h);
    trips.emplace_back(a, a, cc);
    trips.emplace_back(b, b, cc);
    trips.emplace_back(a, b, -cc);
    trips.emplace_back(b, a, -cc);
  };
  // edges along axis 0
  for (int i = 0; i + 1 < n0; ++i) {
    c[0] = coord(i, 0) + 0.5 * axes[0].step;
    for (int j = 0; j < n1; ++j) {
      if (axes.size() == 2) c[1] = coord(j, 1);
      double w = std::exp(log_density(c) - base) / z;
      add_edge(long(i) * n1 + j, long(i + 1) * n1 + j, w, axes[0].step);
    }
  }
  // edges along axis 1
  if (axes.size() == 2) {
    for (int i = 0; i < n0; ++i) {
      c[0] = coord(i, 0);
      for (int j = 0; j + 1 < n1; ++j) {
        c[1] = coord(j, 1) + 0.5 * axes[1].step;
        double w = std::exp(log_density(c) - base) / z;
        add_edge(long(i) * n1 + j, long(i) * n1 + j + 1, w, axes[1].step);
      }
    }
  }
  for (long f = 0; f < n; ++f) op.stationary[f] = std::max(op.stationary[f], kWeightFloor);
  op.dirichlet.resize(n, n);
  op.dirichlet.setFromTriplets(trips.begin(), trips.end());
  return op;
}

double grid_spectral_gap(const GridOperator& op) {
  return smallest_positive_eig(op.dirichlet, op.stationary);
}

OracleResult spectral_oracle_1d(const std::function<double(double)>& log_density, double lo,
                                double hi, int n) {
  if (n < 9) throw std::invalid_argument("spectral_oracle_1d: grid too small");
  OracleResult r;
  r.coarse = oracle_1d_once(log_density, lo, hi, n);
  r.fine = oracle_1d_once(log_density, lo, hi, 2 * n - 1);
  r.value = (4.0 * r.fine - r.coarse) / 3.0;
  return r;
}

OracleResult spectral_oracle_mixture(const SharedCovMixture& model, int n, double span_sd) {
  if (model.dim() != 1) throw std::invalid_argument("spectral_oracle_mixture: 1d only");
  double sd = std::sqrt(model.lambda_max());
  double lo = 1e300, hi = -1e300;
  for (const auto& m : model.means()) {
    lo = std::min(lo, m[0] - span_sd * sd);
    hi = std::max(hi, m[0] + span_sd * sd);
  }
  auto logp = [&](double x) {
    Eigen::VectorXd xv(1);
    xv[0] = x;
    return model.log_pdf(xv);
  };
  return spectral_oracle_1d(logp, lo, hi, n);
}

namespace {

double oracle_joint_once(const SharedCovMixture& model, const TemperatureSchedule& s, int nx,
                         int nb, double span_sd) {
  const double bmax = s.beta_max();
  double sd_max = std::sqrt(model.lambda_max() + bmax * s.lambda_min());
  double lo = 1e300, hi = -1e300;
  for (const auto& m : model.means()) {
    lo = std::min(lo, m[0] - span_sd * sd_max);
    hi = std::max(hi, m[0] + span_sd * sd_max);
  }
  // tempered models are memoized per beta value: the grid walks beta in the
  // inner loop, so each distinct beta is factored once
  std::unordered_map<long long, SharedCovMixture> cache;
  auto logpi = [&](const std::vector<double>& c) {
    double x = c[0], beta = c[1];
    long long key;
    std::memcpy(&key, &beta, sizeof key);
    auto it = cache.find(key);
    if (it == cache.end())
      it = cache.emplace(key, model.temper(beta, s.lambda_min())).first;
    Eigen::VectorXd xv(1);
    xv[0] = x;
    return it->second.log_pdf(xv) -
           7.0 * s.diameter() * s.diameter() / (s.lambda_min() * (1.0 + beta));
  };
  GridOperator::Axis ax{lo, hi, nx, (hi - lo) / (nx - 1)};
  GridOperator::Axis ab{0.0, bmax, nb, bmax / (nb - 1)};
  GridOperator op = build_grid_operator(logpi, {ax, ab});
  double boundary_mass = 0.0;
  for (int j = 0; j < nb; ++j)
    boundary_mass += op.stationary[j] + op.stationary[long(nx - 1) * nb + j];
  if (boundary_mass > 1e-6)
    throw std::runtime_error("spectral oracle: density mass at x boundary");
  return 1.0 / grid_spectral_gap(op);
}

}  // namespace

OracleResult spectral_oracle_joint(const SharedCovMixture& model, const TemperatureSchedule& s,
                                   int nx, int nb, double span_sd) {
  if (model.dim() != 1)
    throw std::invalid_argument("spectral_oracle_joint: continuous state limited to x in R^1");
  OracleResult r;
  r.coarse = oracle_joint_once(model, s, nx, nb, span_sd);
  r.fine = oracle_joint_once(model, s, 2 * nx - 1, 2 * nb - 1, span_sd);
  r.value = (4.0 * r.fine - r.coarse) / 3.0;
  return r;
}

// ---------------------------------------------------------------------------
// discrete decomposition

Eigen::MatrixXd metropolis_path_generator(const Eigen::VectorXd& dist) {
  const int n = int(dist.size());
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    if (i + 1 < n) g(i, i + 1) = 0.5 * std::min(1.0, dist[i + 1] / dist[i]);
    if (i > 0) g(i, i - 1) = 0.5 * std::min(1.0, dist[i - 1] / dist[i]);
    g(i, i) = -g.row(i).sum();
  }
  return g;
}

double discrete_poincare_constant(const Eigen::MatrixXd& generator,
                                  const Eigen::VectorXd& stationary) {
  const int n = int(stationary.size());
  Eigen::VectorXd sq = stationary.array().sqrt().matrix();
  Eigen::MatrixXd sym(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) sym(i, j) = -sq[i] * generator(i, j) / sq[j];
  sym = 0.5 * (sym + sym.transpose().eval());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  for (int i = 0; i < n; ++i)
    if (es.eigenvalues()[i] > 1e-11) return 1.0 / es.eigenvalues()[i];
  throw std::runtime_error("discrete_poincare_constant: no positive eigenvalue");
}

double chisq_discrete(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  double acc = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    if (q[i] <= 0.0) {
      if (p[i] > 0.0) throw std::invalid_argument("chisq_discrete: support mismatch");
      continue;
    }
    double d = p[i] - q[i];
    acc += d * d / q[i];
  }
  return acc;
}

DecompositionReport decomposition_check(const DiscreteMixtureInstance& inst, int trials,
                                        Rng& rng) {
  const int m = int(inst.weights.size());
  const int n = int(inst.components[0].size());
  DecompositionReport rep;
  rep.trials = trials;

  Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < m; ++j) p += inst.weights[j] * inst.components[j];

  // component constants (exact)
  rep.c_component = 0.0;
  for (int j = 0; j < m; ++j)
    rep.c_component =
        std::max(rep.c_component,
                 discrete_poincare_constant(inst.generators[j], inst.components[j]));

  // projected chain with the verbatim transition rule
  double c_bar = 0.0;
  if (m >= 2) {
    Eigen::MatrixXd pbar = Eigen::MatrixXd::Zero(m, m);
    for (int j = 0; j < m; ++j)
      for (int kk = 0; kk < m; ++kk) {
        if (j == kk) continue;
        double cmax = std::max(chisq_discrete(inst.components[j], inst.components[kk]),
                               chisq_discrete(inst.components[kk], inst.components[j]));
        pbar(j, kk) = inst.weights[kk] / std::max(cmax, 1.0);
      }
    Eigen::MatrixXd lbar = pbar;
    for (int j = 0; j < m; ++j) lbar(j, j) = -pbar.row(j).sum();
    c_bar = discrete_poincare_constant(lbar, inst.weights);
  }
  rep.c_projected = c_bar;
  const double factor = rep.c_component * (1.0 + 0.5 * c_bar);

  auto dirichlet = [&](const Eigen::VectorXd& g) {
    double e = 0.0;
    for (int j = 0; j < m; ++j) {
      Eigen::VectorXd lg = inst.generators[j] * g;
      e -= inst.weights[j] * (inst.components[j].array() * g.array() * lg.array()).sum();
    }
    return e;
  };
  auto variance = [&](const Eigen::VectorXd& g) {
    double mean = (p.array() * g.array()).sum();
    return (p.array() * (g.array() - mean).square()).sum();
  };

  rep.min_slack = 1e300;
  for (int t = 0; t < trials; ++t) {
    Eigen::VectorXd g(n);
    for (int i = 0; i < n; ++i) g[i] = rng.normal();
    double lhs = variance(g), rhs = factor * dirichlet(g);
    if (lhs > rhs * (1.0 + 1e-12)) ++rep.violations;
    rep.min_slack = std::min(rep.min_slack, rhs - lhs);
  }

  // adversarial function: second eigenfunction of the full chain
  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(n, n);
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) {
      if (x == y) continue;
      double rate = 0.0;
      for (int j = 0; j < m; ++j)
        rate += inst.weights[j] * inst.components[j][x] * inst.generators[j](x, y);
      full(x, y) = rate / p[x];
    }
  for (int x = 0; x < n; ++x) full(x, x) = -full.row(x).sum();
  {
    Eigen::VectorXd sq = p.array().sqrt().matrix();
    Eigen::MatrixXd sym(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) sym(i, j) = -sq[i] * full(i, j) / sq[j];
    sym = 0.5 * (sym + sym.transpose().eval());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    int second = -1;
    for (int i = 0; i < n; ++i)
      if (es.eigenvalues()[i] > 1e-11) {
        second = i;
        break;
      }
    if (second >= 0) {
      Eigen::VectorXd g = (es.eigenvectors().col(second).array() / sq.array()).matrix();
      rep.adversarial_slack = factor * dirichlet(g) - variance(g);
      if (rep.adversarial_slack < 0.0) ++rep.violations;
    }
  }
  return rep;
}

}  // namespace gsmix
