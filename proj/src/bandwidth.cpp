#include "mcd/bandwidth.hpp"

#include <cmath>
#include <limits>
#include <map>

namespace mcd {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

Eigen::MatrixXd select_cols(const Eigen::MatrixXd& m, const std::vector<int>& cols) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(cols[j]);
  return out;
}

struct Role {
  Eigen::MatrixXd x;        // continuous columns
  std::vector<int> labels;  // discrete labels (empty if none)
  std::vector<int> cols;
  bool has_disc = false;
};

Role make_role(const Dataset& ds, const std::vector<int>& idx) {
  Role r;
  for (int k : idx) {
    if (ds.has_x_disc() && k == ds.x_disc_index())
      r.has_disc = true;
    else
      r.cols.push_back(k);
  }
  r.x = select_cols(ds.x_cont, r.cols);
  if (r.has_disc) r.labels = ds.x_disc;
  return r;
}

// groups of row indices by discrete level (single group when no labels)
std::vector<std::vector<int>> level_groups(const std::vector<int>& labels, int n) {
  if (labels.empty()) {
    std::vector<int> all(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) all[static_cast<size_t>(i)] = i;
    return {all};
  }
  std::map<int, std::vector<int>> by;
  for (int i = 0; i < n; ++i) by[labels[static_cast<size_t>(i)]].push_back(i);
  std::vector<std::vector<int>> out;
  for (auto& [lvl, rows] : by) out.push_back(rows);
  return out;
}

double unnorm_gauss(const Eigen::VectorXd& diff, const Eigen::VectorXd& widths) {
  double q = 0.0;
  for (Eigen::Index j = 0; j < diff.size(); ++j) {
    const double z = diff[j] / widths[j];
    q += z * z;
  }
  return std::exp(-0.5 * q);
}

double sd_of(const Eigen::VectorXd& v) {
  const double n = static_cast<double>(v.size());
  if (n < 2) return 1.0;
  const double mu = v.mean();
  const double ss = (v.array() - mu).square().sum();
  return std::sqrt(ss / (n - 1.0));
}

// grid selection helper: scores per grid value, larger-is-better, ties toward
// the larger bandwidth
struct GridScore {
  std::vector<double> score;
  std::vector<bool> degenerate;
};

BandwidthChoice pick(const std::vector<double>& grid, const GridScore& gs) {
  BandwidthChoice out;
  double best = -std::numeric_limits<double>::infinity();
  int best_i = -1;
  for (size_t i = 0; i < grid.size(); ++i) {
    if (gs.score[i] >= best) {
      best = gs.score[i];
      best_i = static_cast<int>(i);
    }
  }
  if (best_i < 0 || !std::isfinite(best))
    throw Error(ErrorCode::AllDegenerate, "every grid point yields a degenerate leave-one-out fit");
  out.value = grid[static_cast<size_t>(best_i)];
  out.degenerate = gs.degenerate[static_cast<size_t>(best_i)];
  return out;
}

// averages per-level winners; levels with fewer than 2 observations are
// skipped (leave-one-out needs a remainder)
BandwidthChoice per_level_average(
    const std::vector<double>& grid, const std::vector<std::vector<int>>& groups,
    const std::function<GridScore(const std::vector<int>&)>& score_level) {
  double sum = 0.0;
  int used = 0;
  bool degen = false;
  for (const auto& rows : groups) {
    if (rows.size() < 2) continue;
    const BandwidthChoice c = pick(grid, score_level(rows));
    sum += c.value;
    degen = degen || c.degenerate;
    ++used;
  }
  if (used == 0) throw Error(ErrorCode::AllDegenerate, "no discrete level admits a leave-one-out fit");
  return BandwidthChoice{sum / static_cast<double>(used), degen};
}

}  // namespace

std::vector<double> BandwidthGrid::values() const {
  std::vector<double> v(static_cast<size_t>(size));
  if (size == 1) {
    v[0] = lo;
    return v;
  }
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < size; ++i)
    v[static_cast<size_t>(i)] = std::exp(a + (b - a) * static_cast<double>(i) / (size - 1));
  return v;
}

Eigen::VectorXd column_scales(const Eigen::MatrixXd& m) {
  Eigen::VectorXd s(m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) s[j] = std::max(sd_of(m.col(j)), 1e-12);
  return s;
}

BandwidthChoice cv_nw_bandwidth(const Dataset& ds, const CovariatePartition& part,
                                const std::vector<double>& grid) {
  if (grid.empty()) throw Error(ErrorCode::Domain, "cv_nw_bandwidth: empty grid");
  if (ds.n() < 3) throw Error(ErrorCode::Domain, "cv_nw_bandwidth: needs n >= 3");
  const Role role = make_role(ds, part.centering());
  if (role.cols.empty())
    throw Error(ErrorCode::Domain, "cv_nw_bandwidth: centering set has no continuous columns");
  const Eigen::VectorXd scales = column_scales(role.x);
  const auto groups = level_groups(role.labels, ds.n());

  auto score_level = [&](const std::vector<int>& rows) {
    GridScore gs;
    gs.score.resize(grid.size());
    gs.degenerate.assign(grid.size(), false);
    for (size_t gi = 0; gi < grid.size(); ++gi) {
      const Eigen::VectorXd w = grid[gi] * scales;
      double sse = 0.0;
      bool ok = true;
      for (int i : rows) {
        Eigen::VectorXd num = Eigen::VectorXd::Zero(ds.y_cont.cols());
        double den = 0.0;
        for (int j : rows) {
          if (j == i) continue;
          const double k = unnorm_gauss((role.x.row(i) - role.x.row(j)).transpose(), w);
          num += k * ds.y_cont.row(j).transpose();
          den += k;
        }
        if (den <= kDensityFloor) {
          ok = false;
          break;
        }
        sse += (ds.y_cont.row(i).transpose() - num / den).squaredNorm();
      }
      gs.score[gi] = ok ? -sse : -std::numeric_limits<double>::infinity();
      gs.degenerate[gi] = !ok;
    }
    return gs;
  };
  return per_level_average(grid, groups, score_level);
}

namespace {

// shared by cv_marginal_bandwidth and the harness's density-loglik centering
// rule: LOO log likelihood of a covariate-block KDE
BandwidthChoice cv_density_loglik(const Role& role, int n, const std::vector<double>& grid) {
  if (role.cols.empty() && !role.has_disc)
    throw Error(ErrorCode::Domain, "cv_density_loglik: role has no covariates");
  if (role.cols.empty()) {
    // purely discrete block: no bandwidth enters; return the smallest candidate
    return BandwidthChoice{grid.front(), false};
  }
  const Eigen::VectorXd scales = column_scales(role.x);
  const double d = static_cast<double>(role.cols.size());
  const auto groups = level_groups(role.labels, n);

  auto score_level = [&](const std::vector<int>& rows) {
    GridScore gs;
    gs.score.resize(grid.size());
    gs.degenerate.assign(grid.size(), false);
    const double m = static_cast<double>(rows.size());
    for (size_t gi = 0; gi < grid.size(); ++gi) {
      const Eigen::VectorXd w = grid[gi] * scales;
      double log_norm = -0.5 * kLog2Pi * d - std::log(m - 1.0);
      for (Eigen::Index j = 0; j < w.size(); ++j) log_norm -= std::log(w[j]);
      double ll = 0.0;
      bool all_floor = true;
      for (int i : rows) {
        double acc = 0.0;
        for (int j : rows) {
          if (j == i) continue;
          acc += unnorm_gauss((role.x.row(i) - role.x.row(j)).transpose(), w);
        }
        double dens = acc * std::exp(log_norm);
        if (dens > kDensityFloor)
          all_floor = false;
        else
          dens = kDensityFloor;
        ll += std::log(dens);
      }
      gs.score[gi] = ll;
      gs.degenerate[gi] = all_floor;
    }
    return gs;
  };
  return per_level_average(grid, groups, score_level);
}

}  // namespace

BandwidthChoice cv_marginal_bandwidth(const Dataset& ds, const CovariatePartition& part,
                                      const std::vector<double>& grid) {
  if (grid.empty()) throw Error(ErrorCode::Domain, "cv_marginal_bandwidth: empty grid");
  if (ds.n() < 3) throw Error(ErrorCode::Domain, "cv_marginal_bandwidth: needs n >= 3");
  return cv_density_loglik(make_role(ds, part.conditioning()), ds.n(), grid);
}

BandwidthChoice cv_conditional_bandwidth(const Dataset& ds, const CovariatePartition& part,
                                         const Eigen::VectorXd& c_m, const Eigen::VectorXd& c_g,
                                         const std::vector<double>& grid) {
  if (grid.empty()) throw Error(ErrorCode::Domain, "cv_conditional_bandwidth: empty grid");
  if (ds.n() < 3) throw Error(ErrorCode::Domain, "cv_conditional_bandwidth: needs n >= 3");
  if (ds.dy() == 0)
    throw Error(ErrorCode::Domain, "cv_conditional_bandwidth: no continuous response to smooth");
  const int n = ds.n();
  const Role cen = make_role(ds, part.centering());
  const Role con = make_role(ds, part.conditioning());

  // residuals with the centering fit held fixed
  Eigen::MatrixXd resid = ds.y_cont;
  if (!cen.cols.empty() || cen.has_disc) {
    for (int i = 0; i < n; ++i) {
      const int lab = cen.has_disc ? cen.labels[static_cast<size_t>(i)] : -1;
      resid.row(i) -= nadaraya_watson(cen.x, cen.labels, ds.y_cont, c_m,
                                      cen.x.row(i).transpose(), lab)
                          .transpose();
    }
  }
  Eigen::VectorXd yscales(resid.cols());
  for (Eigen::Index j = 0; j < resid.cols(); ++j) yscales[j] = std::max(sd_of(resid.col(j)), 1e-12);
  const double dy = static_cast<double>(resid.cols());

  // conditioning kernel weights held fixed; uniform when the role is empty
  const bool pooled = con.cols.empty() && !con.has_disc;
  const auto groups = level_groups(pooled ? std::vector<int>{} : con.labels, n);

  auto score_level = [&](const std::vector<int>& rows) {
    GridScore gs;
    gs.score.resize(grid.size());
    gs.degenerate.assign(grid.size(), false);
    const double m = static_cast<double>(rows.size());

    Eigen::MatrixXd xw(rows.size(), rows.size());
    for (size_t a = 0; a < rows.size(); ++a)
      for (size_t b = 0; b < rows.size(); ++b) {
        if (a == b) {
          xw(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = 0.0;
          continue;
        }
        double w = 1.0;
        if (!con.cols.empty())
          w = unnorm_gauss((con.x.row(rows[a]) - con.x.row(rows[b])).transpose(), c_g);
        xw(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = w;
      }

    for (size_t gi = 0; gi < grid.size(); ++gi) {
      const Eigen::VectorXd wy = grid[gi] * yscales;
      double log_norm = -0.5 * kLog2Pi * dy - std::log(m - 1.0);
      for (Eigen::Index j = 0; j < wy.size(); ++j) log_norm -= std::log(wy[j]);
      double ll = 0.0;
      bool all_floor = true;
      for (size_t a = 0; a < rows.size(); ++a) {
        double acc = 0.0;
        for (size_t b = 0; b < rows.size(); ++b) {
          if (a == b) continue;
          const double ky = unnorm_gauss(
              (resid.row(rows[a]) - resid.row(rows[b])).transpose(), wy);
          acc += xw(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) * ky;
        }
        double dens = acc * std::exp(log_norm);
        if (dens > kDensityFloor)
          all_floor = false;
        else
          dens = kDensityFloor;
        ll += std::log(dens);
      }
      gs.score[gi] = ll;
      gs.degenerate[gi] = all_floor;
    }
    return gs;
  };
  return per_level_average(grid, groups, score_level);
}

SelectedBandwidths select_bandwidths(const Dataset& ds, const CovariatePartition& part,
                                     const BandwidthGrid& grid, CmRule cm_rule) {
  const auto g = grid.values();
  SelectedBandwidths out;
  const Role cen = make_role(ds, part.centering());
  const Role con = make_role(ds, part.conditioning());
  const bool centered = !cen.cols.empty() || cen.has_disc;
  const bool conditioned = !con.cols.empty() || con.has_disc;

  if (centered && !cen.cols.empty()) {
    BandwidthChoice cm;
    if (cm_rule == CmRule::NwSse)
      cm = cv_nw_bandwidth(ds, part, g);
    else
      cm = cv_density_loglik(cen, ds.n(), g);
    out.cm_std = cm.value;
    out.degenerate = out.degenerate || cm.degenerate;
    out.set.c_m = cm.value * column_scales(cen.x);
  } else {
    out.set.c_m = Eigen::VectorXd::Ones(cen.cols.size());  // discrete-only centering
    out.cm_std = centered ? 1.0 : 0.0;
  }

  if (conditioned && !con.cols.empty()) {
    const BandwidthChoice cg = cv_marginal_bandwidth(ds, part, g);
    out.cg_std = cg.value;
    out.degenerate = out.degenerate || cg.degenerate;
    out.set.c_g = cg.value * column_scales(con.x);
  } else {
    out.set.c_g = Eigen::VectorXd::Ones(con.cols.size());
    out.cg_std = conditioned ? 1.0 : 0.0;
  }

  if (ds.dy() > 0) {
    const BandwidthChoice cy = cv_conditional_bandwidth(ds, part, out.set.c_m, out.set.c_g, g);
    out.cy_std = cy.value;
    out.degenerate = out.degenerate || cy.degenerate;
    Eigen::MatrixXd resid = ds.y_cont;
    if (centered) {
      for (int i = 0; i < ds.n(); ++i) {
        const int lab = cen.has_disc ? cen.labels[static_cast<size_t>(i)] : -1;
        resid.row(i) -= nadaraya_watson(cen.x, cen.labels, ds.y_cont, out.set.c_m,
                                        cen.x.row(i).transpose(), lab)
                            .transpose();
      }
    }
    out.set.c_y = cy.value * column_scales(resid);
  } else {
    out.set.c_y = Eigen::VectorXd();
  }
  out.set.degenerate = out.degenerate;
  return out;
}

}  // namespace mcd
