#include "mcd/core_types.hpp"

#include <algorithm>
#include <set>

namespace mcd {

namespace {

std::vector<int> merged(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out = a;
  out.insert(out.end(), b.begin(), b.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

std::vector<int> CovariatePartition::centering() const { return merged(m_only, shared); }
std::vector<int> CovariatePartition::conditioning() const { return merged(shared, g_only); }

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::Uncentered: return "uncentered";
    case Variant::Homoscedastic: return "homoscedastic";
    case Variant::Joint: return "joint";
    case Variant::General: return "general";
  }
  return "?";
}

CheckedData validate(const Dataset& ds, const CovariatePartition& part) {
  const int n = ds.n();
  if (n < 1) throw Error(ErrorCode::DimensionMismatch, "dataset has no rows");
  auto check_rows = [&](Eigen::Index rows, const char* what) {
    if (rows != 0 && rows != n)
      throw Error(ErrorCode::DimensionMismatch,
                  std::string(what) + " row count does not match n=" + std::to_string(n));
  };
  check_rows(ds.y_cont.rows(), "y_cont");
  check_rows(ds.x_cont.rows(), "x_cont");
  if (!ds.y_disc.empty() && static_cast<int>(ds.y_disc.size()) != n)
    throw Error(ErrorCode::DimensionMismatch, "y_disc length does not match n");
  if (!ds.x_disc.empty() && static_cast<int>(ds.x_disc.size()) != n)
    throw Error(ErrorCode::DimensionMismatch, "x_disc length does not match n");
  if (ds.dy() == 0 && ds.y_disc.empty())
    throw Error(ErrorCode::DimensionMismatch, "dataset has no response");

  for (Eigen::Index i = 0; i < ds.y_cont.rows(); ++i)
    for (Eigen::Index j = 0; j < ds.y_cont.cols(); ++j)
      if (!std::isfinite(ds.y_cont(i, j)))
        throw Error(ErrorCode::NonFiniteValue, "non-finite value in y_cont at row " +
                                                   std::to_string(i) + ", column " + std::to_string(j));
  for (Eigen::Index i = 0; i < ds.x_cont.rows(); ++i)
    for (Eigen::Index j = 0; j < ds.x_cont.cols(); ++j)
      if (!std::isfinite(ds.x_cont(i, j)))
        throw Error(ErrorCode::NonFiniteValue, "non-finite value in x_cont at row " +
                                                   std::to_string(i) + ", column " + std::to_string(j));
  for (size_t i = 0; i < ds.x_disc.size(); ++i)
    if (ds.x_disc[i] < 0 || ds.x_disc[i] >= static_cast<int>(ds.x_labels.size()))
      throw Error(ErrorCode::IndexOutOfRange, "x_disc code out of range at row " + std::to_string(i));
  for (size_t i = 0; i < ds.y_disc.size(); ++i)
    if (ds.y_disc[i] < 0 || ds.y_disc[i] >= static_cast<int>(ds.y_labels.size()))
      throw Error(ErrorCode::IndexOutOfRange, "y_disc code out of range at row " + std::to_string(i));

  const int n_idx = ds.n_x_indices();
  std::set<int> seen;
  auto check_set = [&](const std::vector<int>& s, const char* name) {
    for (int idx : s) {
      if (idx < 0 || idx >= n_idx)
        throw Error(ErrorCode::IndexOutOfRange,
                    std::string("partition index ") + std::to_string(idx) + " in " + name +
                        " is not a covariate column");
      if (!seen.insert(idx).second)
        throw Error(ErrorCode::OverlappingPartition,
                    "covariate index " + std::to_string(idx) + " appears in more than one partition set");
    }
  };
  check_set(part.m_only, "m_only");
  check_set(part.shared, "shared");
  check_set(part.g_only, "g_only");

  if (!part.centering().empty() && ds.dy() == 0)
    throw Error(ErrorCode::DimensionMismatch,
                "centering requires at least one continuous response column");

  return CheckedData{&ds, &part};
}

Variant variant_of(const CovariatePartition& part, int n_covariate_indices) {
  const size_t cen = part.centering().size();
  const size_t con = part.conditioning().size();
  if (cen == 0 && con == 0)
    throw Error(ErrorCode::OverlappingPartition, "partition assigns no covariates to any role");
  if (cen == 0) return Variant::Uncentered;
  if (con == 0) return Variant::Homoscedastic;
  if (static_cast<int>(part.shared.size()) == n_covariate_indices) return Variant::Joint;
  return Variant::General;
}

}  // namespace mcd
