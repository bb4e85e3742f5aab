// nwmclust: supervised variable clustering via network-wide metrics
// SPDX-License-Identifier: MIT
#include "nwmclust/network.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

namespace nwmc {

double f1(double x, double y) {
  require(x >= -1e-12 && x <= 1.0 + 1e-12 && y >= -1e-12 && y <= 1.0 + 1e-12,
          "f1 arguments must lie in [0,1]");
  const double cx = std::clamp(x, 0.0, 1.0), cy = std::clamp(y, 0.0, 1.0);
  return std::sqrt(2.0 * (1.0 - cx * cx)) + std::sqrt(2.0 * (1.0 - cy * cy));
}

double f2(double x, double y) {
  require(std::isfinite(x) && std::isfinite(y), "f2 arguments must be finite");
  return std::hypot(x, y);
}

double f1_f2_identity_residual(double x, double y) {
  // f2(x,y)^2 and f2(x^2,y^2)^2 are evaluated as exact sums of squares:
  // squaring the rounded hypot loses an ulp, which the square root below
  // amplifies to ~1e-8 wherever the radicand vanishes (x or y equal to 1).
  const double a = f1(x, y), b2 = x * x + y * y, c2 = x * x * x * x + y * y * y * y;
  const double inner = std::max(0.0, 1.0 - b2 - (c2 - b2 * b2) / 2.0);
  return a * a - (4.0 - 2.0 * b2 + 4.0 * std::sqrt(inner));
}

namespace {

double fd_step(double x, double base) { return std::max(base, base * std::abs(x)); }

}  // namespace

WeightFunction WeightFunction::f1() { return WeightFunction(WeightFn::F1, [](double x, double y) { return nwmc::f1(x, y); }); }

WeightFunction WeightFunction::f2() { return WeightFunction(WeightFn::F2, [](double x, double y) { return nwmc::f2(x, y); }); }

WeightFunction WeightFunction::from_id(WeightFn id) {
  switch (id) {
    case WeightFn::F1: return f1();
    case WeightFn::F2: return f2();
    default: throw UsageError("custom weight functions must be registered with WeightFunction::custom");
  }
}

WeightFunction WeightFunction::custom(Fn f, double lo, double hi) {
  require(static_cast<bool>(f), "custom weight function is empty");
  require(hi > lo, "custom weight function probe range is empty");
  WeightFunction wf(WeightFn::CUSTOM, std::move(f));
  const int g = 7;
  for (int i = 0; i < g; ++i) {
    for (int j = 0; j < g; ++j) {
      // Probe strictly inside the range so that finite differences stay in the domain.
      const double x = lo + (hi - lo) * (i + 0.5) / g, y = lo + (hi - lo) * (j + 0.5) / g;
      const double fxy = wf(x, y), fyx = wf(y, x);
      require(std::isfinite(fxy), "custom weight function is not finite at probe points");
      require(fxy >= 0.0, "custom weight function must be nonnegative");
      require(std::abs(fxy - fyx) <= 1e-10 * (1.0 + std::abs(fxy)), "custom weight function must be symmetric");
      const double c1 = wf.d11(x, y);
      // A second difference at a coarser step must agree with the fine one
      // up to the O(h^2) truncation error expected of a C^2 function.
      const double h = 4.0 * fd_step(x, 1e-4);
      const double coarse = (wf(x + h, y) - 2.0 * fxy + wf(x - h, y)) / (h * h);
      require(std::isfinite(c1) && std::abs(coarse - c1) <= 1e-2 * (1.0 + std::abs(c1)),
              "custom weight function fails the twice-differentiability probe");
    }
  }
  return wf;
}

double WeightFunction::operator()(double x, double y) const { return f_(x, y); }

void WeightFunction::check_domain(double x, double y) const {
  if (id_ == WeightFn::F1)
    require(x >= -1e-12 && x <= 1.0 + 1e-12 && y >= -1e-12 && y <= 1.0 + 1e-12, "f1 arguments must lie in [0,1]");
  else
    require(std::isfinite(x) && std::isfinite(y), "weight arguments must be finite");
}

double WeightFunction::d1(double x, double y) const {
  switch (id_) {
    case WeightFn::F1: {
      const double c = std::min(std::max(x, 0.0), kRhoClamp);
      return -std::sqrt(2.0) * c / std::sqrt(1.0 - c * c);
    }
    case WeightFn::F2: {
      const double r = std::hypot(x, y);
      require(r > 0.0, "f2 is not differentiable at the origin");
      return x / r;
    }
    default: {
      const double h = fd_step(x, 1e-6);
      return (f_(x + h, y) - f_(x - h, y)) / (2.0 * h);
    }
  }
}

double WeightFunction::d11(double x, double y) const {
  switch (id_) {
    case WeightFn::F1: {
      const double c = std::min(std::max(x, 0.0), kRhoClamp);
      return -std::sqrt(2.0) / std::pow(1.0 - c * c, 1.5);
    }
    case WeightFn::F2: {
      const double r = std::hypot(x, y);
      require(r > 0.0, "f2 is not differentiable at the origin");
      return y * y / (r * r * r);
    }
    default: {
      const double h = fd_step(x, 1e-4);
      return (f_(x + h, y) - 2.0 * f_(x, y) + f_(x - h, y)) / (h * h);
    }
  }
}

double WeightFunction::d12(double x, double y) const {
  switch (id_) {
    case WeightFn::F1: return 0.0;
    case WeightFn::F2: {
      const double r = std::hypot(x, y);
      require(r > 0.0, "f2 is not differentiable at the origin");
      return -x * y / (r * r * r);
    }
    default: {
      const double hx = fd_step(x, 1e-4), hy = fd_step(y, 1e-4);
      return (f_(x + hx, y + hy) - f_(x + hx, y - hy) - f_(x - hx, y + hy) + f_(x - hx, y - hy)) /
             (4.0 * hx * hy);
    }
  }
}

PartialCorrelations partial_correlations_from_cov(const Mat& sigma) {
  require(sigma.rows() == sigma.cols() && sigma.rows() >= 2, "covariance must be square with dimension >= 2");
  Eigen::SelfAdjointEigenSolver<Mat> es(sigma, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0), lmax = es.eigenvalues()(sigma.rows() - 1);
  if (!(lmin > 1e-12 * std::max(lmax, 1e-300))) {
    std::ostringstream msg;
    msg << "covariance of (y, X_S) is singular (condition number "
        << (lmin > 0 ? lmax / lmin : std::numeric_limits<double>::infinity()) << ")";
    throw NumericalError(msg.str());
  }
  PartialCorrelations pc;
  pc.sigma = sigma;
  const Eigen::Index m = sigma.rows(), q = m - 1;
  pc.gamma = sigma.llt().solve(Mat::Identity(m, m));
  pc.gamma = 0.5 * (pc.gamma + pc.gamma.transpose()).eval();
  pc.rho_raw.resize(q);
  for (Eigen::Index i = 0; i < q; ++i)
    pc.rho_raw(i) = -pc.gamma(0, i + 1) / std::sqrt(pc.gamma(0, 0) * pc.gamma(i + 1, i + 1));
  pc.rho = (1.0 + pc.rho_raw.array()) / 2.0;
  return pc;
}

PartialCorrelations partial_correlations(const Vec& y, const Mat& Xs) {
  require(y.size() == Xs.rows(), "y and X_S row counts differ");
  require(Xs.cols() >= 1, "partial correlations need at least one predictor");
  require(Xs.rows() >= Xs.cols() + 2, "partial correlations need at least q+2 rows");
  const Eigen::Index n = Xs.rows(), m = Xs.cols() + 1;
  Mat Z(n, m);
  Z.col(0) = y;
  Z.rightCols(m - 1) = Xs;
  const Eigen::RowVectorXd mean = Z.colwise().mean();
  Z.rowwise() -= mean;
  Mat sigma = (Z.transpose() * Z) / static_cast<double>(n);
  return partial_correlations_from_cov(sigma);
}

ImplicitNetwork build_network(const Vec& values, const WeightFunction& f, WeightFamily family, IndexSet vertices) {
  const Eigen::Index q = values.size();
  require(q >= 2, "a network needs at least 2 vertices, got " + std::to_string(q));
  require(family != WeightFamily::ANOVA_SS, "ANOVA networks are built by anova_weights");
  ImplicitNetwork net;
  if (vertices.empty())
    for (Eigen::Index i = 0; i < q; ++i) vertices.push_back(static_cast<std::size_t>(i));
  require(vertices.size() == static_cast<std::size_t>(q), "vertex list does not match value count");
  net.vertices = std::move(vertices);
  net.values = values;
  net.family = family;
  net.f_id = f.id();
  net.W = Mat::Zero(q, q);
  for (Eigen::Index i = 0; i < q; ++i)
    for (Eigen::Index j = i + 1; j < q; ++j) {
      f.check_domain(values(i), values(j));
      const double w = f(values(i), values(j));
      require(std::isfinite(w) && w >= 0.0, "weight function produced a negative or non-finite weight");
      net.W(i, j) = net.W(j, i) = w;
    }
  return net;
}

ImplicitNetwork anova_weights(const Vec& y, const Eigen::MatrixXi& factors) {
  const Eigen::Index n = factors.rows(), p = factors.cols();
  require(y.size() == n, "response and factor matrix row counts differ");
  require(p >= 2, "ANOVA weights need at least 2 factors");
  const double grand = y.mean();
  const double tss = (y.array() - grand).square().sum();
  if (!(tss > 0.0)) throw NumericalError("total sum of squares is zero (constant response)");

  // Main-effect means per factor level.
  std::vector<std::map<int, double>> main(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) {
    std::map<int, std::pair<double, int>> acc;
    for (Eigen::Index r = 0; r < n; ++r) {
      auto& a = acc[factors(r, j)];
      a.first += y(r);
      a.second += 1;
    }
    require(acc.size() >= 2, "factor " + std::to_string(j + 1) + " has fewer than 2 levels");
    for (const auto& [lvl, a] : acc) main[static_cast<std::size_t>(j)][lvl] = a.first / a.second;
  }

  ImplicitNetwork net;
  net.family = WeightFamily::ANOVA_SS;
  net.f_id = WeightFn::CUSTOM;
  net.W = Mat::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j) net.vertices.push_back(static_cast<std::size_t>(j));
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = i + 1; j < p; ++j) {
      std::map<std::pair<int, int>, std::pair<double, int>> cells;
      for (Eigen::Index r = 0; r < n; ++r) {
        auto& c = cells[{factors(r, i), factors(r, j)}];
        c.first += y(r);
        c.second += 1;
      }
      const auto& mi = main[static_cast<std::size_t>(i)];
      const auto& mj = main[static_cast<std::size_t>(j)];
      const int reps = cells.begin()->second.second;
      const bool balanced = cells.size() == mi.size() * mj.size() &&
                            std::all_of(cells.begin(), cells.end(), [&](const auto& c) { return c.second.second == reps; });
      if (!balanced) {
        std::ostringstream msg;
        msg << "unbalanced design for factors " << i + 1 << " and " << j + 1 << ": cell counts";
        for (const auto& [k, c] : cells) msg << " (" << k.first << "," << k.second << ")=" << c.second;
        msg << " over " << mi.size() << "x" << mj.size() << " cells";
        throw UsageError(msg.str());
      }
      double ss = 0.0;
      for (const auto& [k, c] : cells) {
        const double dev = c.first / c.second - mi.at(k.first) - mj.at(k.second) + grand;
        ss += dev * dev;
      }
      // Clamp roundoff so that the weights stay within [0, 1].
      const double w = std::clamp(reps * ss / tss, 0.0, 1.0);
      net.W(i, j) = net.W(j, i) = w;
    }
  return net;
}

std::string to_string(WeightFamily f) {
  switch (f) {
    case WeightFamily::F_ON_BETA: return "f_on_beta";
    case WeightFamily::F_ON_RHO: return "f_on_rho";
    default: return "anova_ss";
  }
}

std::string to_string(WeightFn f) {
  switch (f) {
    case WeightFn::F1: return "f1";
    case WeightFn::F2: return "f2";
    default: return "custom";
  }
}

namespace {

std::string vertex_name(const ImplicitNetwork& net, const std::vector<std::string>& names, std::size_t i) {
  const std::size_t col = net.vertices[i];
  return col < names.size() ? names[col] : "X" + std::to_string(col + 1);
}

}  // namespace

std::string network_edge_list_csv(const ImplicitNetwork& net, const std::vector<std::string>& names) {
  std::ostringstream out;
  out << "i,j,weight\n" << std::setprecision(17);
  for (std::size_t i = 0; i < net.size(); ++i)
    for (std::size_t j = i + 1; j < net.size(); ++j)
      out << vertex_name(net, names, i) << ',' << vertex_name(net, names, j) << ','
          << net.W(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) << '\n';
  return out.str();
}

std::string network_json(const ImplicitNetwork& net, const std::vector<std::string>& names) {
  nlohmann::json j;
  j["family"] = to_string(net.family);
  j["f"] = to_string(net.f_id);
  std::vector<std::string> vn;
  for (std::size_t i = 0; i < net.size(); ++i) vn.push_back(vertex_name(net, names, i));
  j["vertices"] = vn;
  std::vector<std::vector<double>> w(net.size(), std::vector<double>(net.size()));
  for (std::size_t a = 0; a < net.size(); ++a)
    for (std::size_t b = 0; b < net.size(); ++b) w[a][b] = net.W(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
  j["W"] = w;
  return j.dump(2);
}

}  // namespace nwmc
