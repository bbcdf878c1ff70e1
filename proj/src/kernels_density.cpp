#include "mcd/kernels_density.hpp"

#include <cmath>
#include <map>

namespace mcd {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// exp(-||u||^2/2) without the (2pi)^{-d/2} factor
double unnorm_gauss(const Eigen::VectorXd& diff, const Eigen::VectorXd& widths) {
  double q = 0.0;
  for (Eigen::Index j = 0; j < diff.size(); ++j) {
    const double z = diff[j] / widths[j];
    q += z * z;
  }
  return std::exp(-0.5 * q);
}

double norm_const(const Eigen::VectorXd& widths) {
  double c = std::exp(-0.5 * kLog2Pi * static_cast<double>(widths.size()));
  for (Eigen::Index j = 0; j < widths.size(); ++j) c /= widths[j];
  return c;
}

Eigen::MatrixXd select_cols(const Eigen::MatrixXd& m, const std::vector<int>& cols) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(cols[j]);
  return out;
}

}  // namespace

double gaussian_kernel(const Eigen::VectorXd& u) {
  for (Eigen::Index j = 0; j < u.size(); ++j)
    if (!std::isfinite(u[j])) throw Error(ErrorCode::NonFiniteValue, "gaussian_kernel: non-finite input");
  return std::exp(-0.5 * (u.squaredNorm() + kLog2Pi * static_cast<double>(u.size())));
}

double kde(const Eigen::MatrixXd& points, const std::vector<int>& labels,
           const Eigen::VectorXd& widths, const Eigen::VectorXd& query, int qlabel) {
  const Eigen::Index n = points.rows();
  if (n == 0) throw Error(ErrorCode::EmptyData, "kde: empty data block");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!labels.empty() && labels[static_cast<size_t>(i)] != qlabel) continue;
    acc += unnorm_gauss(query - points.row(i).transpose(), widths);
  }
  return acc * norm_const(widths) / static_cast<double>(n);
}

Eigen::VectorXd nadaraya_watson(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                                const Eigen::MatrixXd& y, const Eigen::VectorXd& widths,
                                const Eigen::VectorXd& query, int qlabel) {
  const Eigen::Index n = x.rows();
  if (n == 0) throw Error(ErrorCode::EmptyData, "nadaraya_watson: empty data block");
  bool any_label = labels.empty();
  for (Eigen::Index i = 0; i < n && !any_label; ++i)
    if (labels[static_cast<size_t>(i)] == qlabel) any_label = true;
  if (!any_label)
    throw Error(ErrorCode::EmptyCell, "nadaraya_watson: no observation matches the discrete level");

  Eigen::VectorXd num = Eigen::VectorXd::Zero(y.cols());
  double den = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!labels.empty() && labels[static_cast<size_t>(i)] != qlabel) continue;
    const double w = unnorm_gauss(query - x.row(i).transpose(), widths);
    num += w * y.row(i).transpose();
    den += w;
  }
  if (den <= kDensityFloor)
    throw Error(ErrorCode::ZeroDenominator, "nadaraya_watson: kernel weights vanished at the query");
  return num / den;
}

DensityEstimate DensityEstimate::fit(const Dataset& ds, const CovariatePartition& part,
                                     const BandwidthSet& bw) {
  validate(ds, part);
  auto positive = [](const Eigen::VectorXd& v, const char* name) {
    for (Eigen::Index j = 0; j < v.size(); ++j)
      if (!(v[j] > 0.0) || !std::isfinite(v[j]))
        throw Error(ErrorCode::Domain, std::string("bandwidth ") + name + " must be positive and finite");
  };
  positive(bw.c_m, "c_m");
  positive(bw.c_g, "c_g");
  positive(bw.c_y, "c_y");

  DensityEstimate est;
  est.variant_ = variant_of(part, ds.n_x_indices());
  est.n_ = ds.n();
  est.n_y_levels_ = ds.n_y_levels();
  est.bw_ = bw;
  est.ydata_ = ds.y_cont;
  est.ydisc_ = ds.y_disc;

  auto split_role = [&](const std::vector<int>& idx, Eigen::MatrixXd& xc, std::vector<int>& lab,
                        std::vector<int>& cols, bool& has_disc) {
    cols.clear();
    has_disc = false;
    for (int k : idx) {
      if (ds.has_x_disc() && k == ds.x_disc_index())
        has_disc = true;
      else
        cols.push_back(k);
    }
    xc = select_cols(ds.x_cont, cols);
    lab = has_disc ? ds.x_disc : std::vector<int>{};
  };
  split_role(part.centering(), est.cen_x_, est.cen_lab_, est.cen_cols_, est.cen_has_disc_);
  split_role(part.conditioning(), est.con_x_, est.con_lab_, est.con_cols_, est.con_has_disc_);

  if (static_cast<int>(est.cen_cols_.size()) != bw.c_m.size() && !part.centering().empty())
    throw Error(ErrorCode::DimensionMismatch, "c_m length does not match centering columns");
  if (static_cast<int>(est.con_cols_.size()) != bw.c_g.size() && !part.conditioning().empty())
    throw Error(ErrorCode::DimensionMismatch, "c_g length does not match conditioning columns");
  if (ds.dy() != bw.c_y.size())
    throw Error(ErrorCode::DimensionMismatch, "c_y length does not match continuous responses");

  const bool centered = !part.centering().empty();
  if (centered) {
    // every observed centering level needs at least two observations
    if (est.cen_has_disc_) {
      std::map<int, int> counts;
      for (int c : est.cen_lab_) ++counts[c];
      for (auto& [lvl, cnt] : counts)
        if (cnt < 2)
          throw Error(ErrorCode::EmptyCell, "centering level " + std::to_string(lvl) +
                                                " has fewer than 2 observations");
    }
    est.mhat_data_.resize(est.n_, ds.dy());
    for (int i = 0; i < est.n_; ++i) {
      const int lab = est.cen_has_disc_ ? est.cen_lab_[static_cast<size_t>(i)] : -1;
      est.mhat_data_.row(i) = nadaraya_watson(est.cen_x_, est.cen_lab_, est.ydata_, bw.c_m,
                                              est.cen_x_.row(i).transpose(), lab)
                                  .transpose();
    }
    est.resid_ = est.ydata_ - est.mhat_data_;
  } else {
    est.mhat_data_ = Eigen::MatrixXd::Zero(est.n_, ds.dy());
    est.resid_ = est.ydata_;
  }
  return est;
}

Eigen::VectorXd DensityEstimate::role_query(const XPoint& x, const std::vector<int>& cols) const {
  Eigen::VectorXd q(static_cast<Eigen::Index>(cols.size()));
  for (size_t j = 0; j < cols.size(); ++j) {
    if (cols[j] >= x.xc.size())
      throw Error(ErrorCode::IndexOutOfRange, "query covariate vector too short");
    q[static_cast<Eigen::Index>(j)] = x.xc[cols[j]];
  }
  return q;
}

int DensityEstimate::role_label(const XPoint& x, bool has_disc) const {
  if (!has_disc) return -1;
  if (x.xd < 0) throw Error(ErrorCode::IndexOutOfRange, "query omits the discrete covariate label");
  return x.xd;
}

Eigen::VectorXd DensityEstimate::center(const XPoint& x) const {
  if (cen_cols_.empty() && !cen_has_disc_) return Eigen::VectorXd::Zero(ydata_.cols());
  return nadaraya_watson(cen_x_, cen_lab_, ydata_, bw_.c_m, role_query(x, cen_cols_),
                         role_label(x, cen_has_disc_));
}

Eigen::VectorXd DensityEstimate::donor_weights(const XPoint& x) const {
  Eigen::VectorXd u(n_);
  if (con_cols_.empty() && !con_has_disc_) {
    u.setOnes();
    return u;
  }
  const Eigen::VectorXd q = role_query(x, con_cols_);
  const int lab = role_label(x, con_has_disc_);
  double total = 0.0;
  for (int i = 0; i < n_; ++i) {
    double w = 0.0;
    if (!con_has_disc_ || con_lab_[static_cast<size_t>(i)] == lab)
      w = unnorm_gauss(q - con_x_.row(i).transpose(), bw_.c_g);
    u[i] = w;
    total += w;
  }
  if (total <= kDensityFloor)
    throw Error(ErrorCode::ZeroConditioningDensity,
                "conditioning density vanished at the query point");
  return u;
}

double DensityEstimate::eval(const Eigen::VectorXd& y1, int y2code, const XPoint& x) const {
  const Eigen::VectorXd u = donor_weights(x);
  const Eigen::VectorXd mu =
      (variant_ == Variant::Uncentered) ? Eigen::VectorXd::Zero(ydata_.cols()) : center(x);
  const double ky_norm = norm_const(bw_.c_y);
  double num = 0.0, den = 0.0;
  for (int i = 0; i < n_; ++i) {
    den += u[i];
    if (u[i] == 0.0) continue;
    if (!ydisc_.empty() && ydisc_[static_cast<size_t>(i)] != y2code) continue;
    double k = 1.0;
    if (ydata_.cols() > 0)
      k = unnorm_gauss(y1 - mu - resid_.row(i).transpose(), bw_.c_y) * ky_norm;
    num += u[i] * k;
  }
  return num / den;
}

double DensityEstimate::eval1(double y, const XPoint& x) const {
  Eigen::VectorXd y1(1);
  y1[0] = y;
  return eval(y1, -1, x);
}

double DensityEstimate::eval_disc(int y2code, const XPoint& x) const {
  return eval(Eigen::VectorXd(), y2code, x);
}

YSample DensityEstimate::sample(const XPoint& x, int count, RngStream& rng) const {
  const Eigen::VectorXd u = donor_weights(x);
  const Eigen::VectorXd mu =
      (variant_ == Variant::Uncentered) ? Eigen::VectorXd::Zero(ydata_.cols()) : center(x);
  YSample out;
  out.y_cont.resize(count, ydata_.cols());
  if (!ydisc_.empty()) out.y_disc.resize(static_cast<size_t>(count));
  std::span<const double> w(u.data(), static_cast<size_t>(u.size()));
  for (int s = 0; s < count; ++s) {
    const int j = rng.discrete(w);
    for (Eigen::Index c = 0; c < ydata_.cols(); ++c)
      out.y_cont(s, c) = mu[c] + resid_(j, c) + bw_.c_y[c] * rng.normal();
    if (!ydisc_.empty()) out.y_disc[static_cast<size_t>(s)] = ydisc_[static_cast<size_t>(j)];
  }
  return out;
}

double MarginalResidualDensity::eval(const Eigen::VectorXd& residuals, double e) const {
  const Eigen::Index n = residuals.size();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = (e - residuals[i]) / c_;
    acc += std::exp(-0.5 * z * z);
  }
  return acc / (static_cast<double>(n) * c_ * std::sqrt(2.0 * M_PI));
}

}  // namespace mcd
