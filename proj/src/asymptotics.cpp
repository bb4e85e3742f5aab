// nwmclust: supervised variable clustering via network-wide metrics
// SPDX-License-Identifier: MIT
#include "nwmclust/asymptotics.hpp"

#include <json.hpp>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <sstream>

namespace nwmc {

std::string to_string(CovTarget t) {
  switch (t) {
    case CovTarget::BETA: return "beta";
    case CovTarget::RHO: return "rho";
    case CovTarget::DEGREE: return "degree";
    default: return "clustering";
  }
}

std::string to_string(CovMethod m) {
  switch (m) {
    case CovMethod::PLUGIN: return "plugin";
    case CovMethod::BOOTSTRAP: return "bootstrap";
    default: return "monte_carlo_oracle";
  }
}

std::string CovarianceEstimate::to_json() const {
  nlohmann::json j;
  j["target"] = to_string(target);
  j["method"] = to_string(method);
  j["scale"] = kScale;
  j["n_eff"] = n_eff;
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(sigma.rows()));
  for (Eigen::Index r = 0; r < sigma.rows(); ++r)
    for (Eigen::Index c = 0; c < sigma.cols(); ++c) rows[static_cast<std::size_t>(r)].push_back(sigma(r, c));
  j["sigma"] = rows;
  return j.dump(2);
}

void check_psd(const Mat& M, const std::string& what, double tol) {
  require(M.rows() == M.cols(), what + " must be square");
  if (M.size() == 0) return;
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) throw NumericalError(what + " is not symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  if (lmin < -tol * scale) {
    std::ostringstream msg;
    msg << what << " is not positive semidefinite (min eigenvalue " << lmin << ")";
    throw NumericalError(msg.str());
  }
}

Mat elimination_matrix(std::size_t m) {
  require(m >= 1, "elimination matrix needs m >= 1");
  Mat K = Mat::Zero(static_cast<Eigen::Index>(m * (m + 1) / 2), static_cast<Eigen::Index>(m * m));
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = j; i < m; ++i)
      K(static_cast<Eigen::Index>(half_vec_index(i, j, m)), static_cast<Eigen::Index>(j * m + i)) = 1.0;
  return K;
}

Vec vec(const Mat& M) { return Eigen::Map<const Vec>(M.data(), M.size()); }

Vec half_vec(const Mat& M) {
  const std::size_t m = static_cast<std::size_t>(M.rows());
  Vec v(static_cast<Eigen::Index>(m * (m + 1) / 2));
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = j; i < m; ++i)
      v(static_cast<Eigen::Index>(half_vec_index(i, j, m))) =
          M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return v;
}

namespace {

// Multiplier of the ordered-pair edge sum in the clustering coefficient.
double clustering_scale(std::size_t q, PairCounting pairs) {
  const double denom = static_cast<double>((q - 1) * (q - 2));
  return (pairs == PairCounting::ORDERED ? 2.0 : 1.0) / denom;
}

}  // namespace

Mat grad_nwm(const Vec& v, const WeightFunction& f, const NwmSpec& spec) {
  const Eigen::Index q = v.size();
  Mat J = Mat::Zero(q, q);
  if (spec.kind == NwmKind::DEGREE) {
    require(q >= 2, "degree gradient needs q >= 2");
    for (Eigen::Index j = 0; j < q; ++j)
      for (Eigen::Index k = 0; k < q; ++k) {
        if (k == j) continue;
        J(j, j) += f.d1(v(j), v(k));
        J(j, k) = f.d1(v(k), v(j));  // d/dv_k f(v_j, v_k), using symmetry of f
      }
    if (spec.standardized_degree) J /= static_cast<double>(q - 1);
    return J;
  }
  require(q >= 3, "clustering gradient needs q >= 3");
  // C_j = s * sum_{u<w; u,w != j} f(v_u, v_w). v_k (k != j) enters every
  // such pair containing k, i.e. (k, u) for u not in {j, k}; with ordered
  // counting each pair appears twice, which s absorbs.
  const double s = clustering_scale(static_cast<std::size_t>(q), spec.pairs);
  for (Eigen::Index k = 0; k < q; ++k) {
    double total = 0.0;
    Vec g(q);
    for (Eigen::Index u = 0; u < q; ++u) {
      g(u) = u == k ? 0.0 : f.d1(v(k), v(u));
      total += g(u);
    }
    for (Eigen::Index j = 0; j < q; ++j)
      if (j != k) J(j, k) = s * (total - g(j));
  }
  return J;
}

Mat grad_L_D(const Vec& v, const WeightFunction& f) { return grad_nwm(v, f, NwmSpec{NwmKind::DEGREE}); }

Mat grad_L_C(const Vec& v, const WeightFunction& f, PairCounting pairs) {
  NwmSpec s;
  s.kind = NwmKind::CLUSTERING;
  s.pairs = pairs;
  return grad_nwm(v, f, s);
}

std::vector<Mat> hessian_nwm(const Vec& v, const WeightFunction& f, const NwmSpec& spec) {
  const Eigen::Index q = v.size();
  std::vector<Mat> H(static_cast<std::size_t>(q), Mat::Zero(q, q));
  if (spec.kind == NwmKind::DEGREE) {
    require(q >= 2, "degree Hessian needs q >= 2");
    const double s = spec.standardized_degree ? 1.0 / static_cast<double>(q - 1) : 1.0;
    for (Eigen::Index i = 0; i < q; ++i) {
      Mat& Hi = H[static_cast<std::size_t>(i)];
      for (Eigen::Index k = 0; k < q; ++k) {
        if (k == i) continue;
        Hi(i, i) += s * f.d11(v(i), v(k));
        Hi(i, k) = Hi(k, i) = s * f.d12(v(i), v(k));
        Hi(k, k) = s * f.d22(v(i), v(k));
      }
    }
    return H;
  }
  require(q >= 3, "clustering Hessian needs q >= 3");
  const double s = clustering_scale(static_cast<std::size_t>(q), spec.pairs);
  for (Eigen::Index i = 0; i < q; ++i) {
    Mat& Hi = H[static_cast<std::size_t>(i)];
    for (Eigen::Index k = 0; k < q; ++k) {
      if (k == i) continue;
      for (Eigen::Index u = 0; u < q; ++u) {
        if (u == i || u == k) continue;
        Hi(k, k) += s * f.d11(v(k), v(u));
        Hi(k, u) = s * f.d12(v(k), v(u));
      }
    }
  }
  return H;
}

Mat grad_h(const Mat& gamma, bool transformed) {
  const Eigen::Index m = gamma.rows();
  require(gamma.cols() == m && m >= 2, "precision matrix must be square with dimension >= 2");
  Eigen::LLT<Mat> llt(gamma);
  if (llt.info() != Eigen::Success) throw NumericalError("precision matrix is not positive definite");
  const Eigen::Index q = m - 1;
  const std::size_t mu = static_cast<std::size_t>(m);
  Mat G = Mat::Zero(q, m * (m + 1) / 2);
  const double factor = transformed ? 0.5 : 1.0;
  const double g00 = gamma(0, 0);
  for (Eigen::Index i = 0; i < q; ++i) {
    const Eigen::Index a = i + 1;
    const double gaa = gamma(a, a), ga0 = gamma(a, 0);
    const double root = std::sqrt(g00 * gaa);
    const double r = -ga0 / root;
    const auto ua = static_cast<std::size_t>(a);
    G(i, static_cast<Eigen::Index>(half_vec_index(0, 0, mu))) = factor * (-0.5 * r / g00);
    G(i, static_cast<Eigen::Index>(half_vec_index(ua, 0, mu))) = factor * (-1.0 / root);
    G(i, static_cast<Eigen::Index>(half_vec_index(ua, ua, mu))) = factor * (-0.5 * r / gaa);
  }
  return G;
}

Mat delta_S(const Mat& samples) {
  const Eigen::Index n = samples.rows(), m = samples.cols();
  require(n >= 2, "delta_S needs at least 2 rows");
  Mat Z = samples;
  const Eigen::RowVectorXd mean = Z.colwise().mean();
  Z.rowwise() -= mean;
  // Row r of Zk is vec(z_r z_r') = z_r (x) z_r.
  Mat Zk(n, m * m);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index b = 0; b < m; ++b)
      for (Eigen::Index a = 0; a < m; ++a) Zk(r, b * m + a) = Z(r, a) * Z(r, b);
  const Vec vs = Zk.colwise().mean().transpose();
  Mat D = (Zk.transpose() * Zk) / static_cast<double>(n) - vs * vs.transpose();
  return 0.5 * (D + D.transpose());
}

CovarianceEstimate cov_rho(const PartialCorrelations& pc, const Mat& dS, const Mat& K, std::size_t n_eff,
                           bool transformed, const PluginOptions& opt) {
  const Eigen::Index m = pc.gamma.rows();
  require(static_cast<std::size_t>(m - 1) <= opt.max_q,
          "plug-in covariance refused for q = " + std::to_string(m - 1) + " > " + std::to_string(opt.max_q) +
              "; use the bootstrap covariance instead");
  require(dS.rows() == m * m && dS.cols() == m * m, "Delta_S dimension mismatch");
  require(K.rows() == m * (m + 1) / 2 && K.cols() == m * m, "elimination matrix dimension mismatch");
  const Mat L = -Eigen::kroneckerProduct(pc.gamma, pc.gamma).eval();
  const Mat A = grad_h(pc.gamma, transformed) * K * L;
  CovarianceEstimate est;
  est.target = CovTarget::RHO;
  est.method = CovMethod::PLUGIN;
  est.n_eff = n_eff;
  est.sigma = A * dS * A.transpose();
  est.sigma = 0.5 * (est.sigma + est.sigma.transpose()).eval();
  check_psd(est.sigma, "partial-correlation covariance");
  return est;
}

CovarianceEstimate cov_nwm_beta(const PostSelectionFit& fit, const Mat& J, NwmKind kind) {
  require(J.cols() == fit.xtx_inv.rows(), "gradient and coefficient dimensions differ");
  if (kind == NwmKind::CLUSTERING) require(J.rows() >= 3, "clustering covariance needs q >= 3");
  CovarianceEstimate est;
  est.target = kind == NwmKind::DEGREE ? CovTarget::DEGREE : CovTarget::CLUSTERING;
  est.method = CovMethod::PLUGIN;
  est.n_eff = fit.rows;
  est.sigma = fit.sigma2_hat * J * (static_cast<double>(fit.rows) * fit.xtx_inv) * J.transpose();
  est.sigma = 0.5 * (est.sigma + est.sigma.transpose()).eval();
  check_psd(est.sigma, "NWM covariance");
  return est;
}

CovarianceEstimate cov_nwm_rho(const CovarianceEstimate& cr, const Mat& J, NwmKind kind) {
  require(J.cols() == cr.sigma.rows(), "gradient and partial-correlation dimensions differ");
  if (kind == NwmKind::CLUSTERING) require(J.rows() >= 3, "clustering covariance needs q >= 3");
  CovarianceEstimate est;
  est.target = kind == NwmKind::DEGREE ? CovTarget::DEGREE : CovTarget::CLUSTERING;
  est.method = cr.method;
  est.n_eff = cr.n_eff;
  est.sigma = J * cr.sigma * J.transpose();
  est.sigma = 0.5 * (est.sigma + est.sigma.transpose()).eval();
  check_psd(est.sigma, "NWM covariance");
  return est;
}

CovarianceEstimate plugin_nwm_cov_rho(const Mat& Z, const WeightFunction& f, const NwmSpec& spec, bool use_raw,
                                      const PluginOptions& opt) {
  const Eigen::Index m = Z.cols();
  const PartialCorrelations pc = partial_correlations(Z.col(0), Z.rightCols(m - 1));
  const Mat dS = delta_S(Z);
  const Mat K = elimination_matrix(static_cast<std::size_t>(m));
  const CovarianceEstimate cr = cov_rho(pc, dS, K, static_cast<std::size_t>(Z.rows()), !use_raw, opt);
  const Mat J = grad_nwm(use_raw ? pc.rho_raw : pc.rho, f, spec);
  return cov_nwm_rho(cr, J, spec.kind);
}

BiasDiagnostics prop12_bias_diagnostics(const Vec& beta_hat, const PenaltyConfig& cfg, double lambda, const Mat& J,
                                        const std::vector<Mat>& H, const Mat& V, double sigma2) {
  const Eigen::Index q = beta_hat.size();
  require(J.rows() == q && J.cols() == q && V.rows() == q && V.cols() == q &&
              H.size() == static_cast<std::size_t>(q),
          "bias diagnostics dimension mismatch");
  BiasDiagnostics out;
  out.b.resize(q);
  Vec second(q);
  for (Eigen::Index j = 0; j < q; ++j) {
    const double t = std::abs(beta_hat(j));
    const bool kink = (cfg.family == Penalty::SCAD && t == lambda) || t == cfg.a * lambda;
    require(!kink, "|beta_hat| lies on a kink of the penalty; perturb lambda");
    const double sgn = beta_hat(j) > 0 ? 1.0 : (beta_hat(j) < 0 ? -1.0 : 0.0);
    out.b(j) = penalty_derivative(cfg.family, t, lambda, cfg.a) * sgn;
    second(j) = penalty_second_derivative(cfg.family, t, lambda, cfg.a);
  }
  const Mat A = V + Mat(second.asDiagonal());
  Eigen::FullPivLU<Mat> lu(A);
  if (!lu.isInvertible()) throw NumericalError("V + diag(p'') is singular");
  out.c = lu.solve(out.b);
  const Mat Ainv = lu.inverse();
  // G = J + M with M(i, k) = sum_j c_j H_i(j, k): gradient evaluated with the
  // first-order correction for the shrinkage shift c.
  Mat G = J;
  for (Eigen::Index i = 0; i < q; ++i) G.row(i) += (H[static_cast<std::size_t>(i)] * out.c).transpose();
  out.bias = -(G * out.c);
  out.cov = sigma2 * G * Ainv * V * Ainv.transpose() * G.transpose();
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

Mat fd_jacobian(const std::function<Vec(const Vec&)>& g, const Vec& x) {
  const Vec g0 = g(x);
  Mat J(g0.size(), x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double h = std::max(1e-6, 1e-6 * std::abs(x(k)));
    Vec xp = x, xm = x;
    xp(k) += h;
    xm(k) -= h;
    J.col(k) = (g(xp) - g(xm)) / (2.0 * h);
  }
  return J;
}

}  // namespace nwmc
