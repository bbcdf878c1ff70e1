#include "mcd/table_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace mcd {

std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return std::string(buf);
}

std::vector<int> display_order(Family family, int p) {
  std::vector<int> order;
  if (family == Family::GaussianLinear) {
    order.push_back(p - 1);  // log sigma first
    for (int j = 0; j + 1 < p; ++j) order.push_back(j);
  } else {
    for (int j = 0; j < p; ++j) order.push_back(j);
  }
  return order;
}

std::string summary_csv(const StudySummary& s) {
  std::ostringstream os;
  os << "estimator,parameter,mean,sd";
  if (s.with_bootstrap) os << ",corrected_mean,corrected_sd,coverage";
  os << "\n";
  const int p = static_cast<int>(s.param_names.size());
  const auto order = display_order(s.family, p);
  for (const EstimatorStudy& es : s.estimators) {
    for (int j : order) {
      os << es.label << "," << s.param_names[static_cast<size_t>(j)];
      if (es.estimates.rows() == 0) {
        os << ",nan,nan";
        if (s.with_bootstrap) os << ",nan,nan,nan";
      } else {
        os << "," << fmt6(es.mean[j]) << "," << fmt6(es.sd[j]);
        if (s.with_bootstrap)
          os << "," << fmt6(es.corrected_mean[j]) << "," << fmt6(es.corrected_sd[j]) << ","
             << fmt6(es.coverage[j]);
      }
      os << "\n";
    }
  }
  return os.str();
}

std::string summary_markdown(const StudySummary& s) {
  std::ostringstream os;
  const int p = static_cast<int>(s.param_names.size());
  const auto order = display_order(s.family, p);
  os << "| estimator |";
  for (int j : order) {
    const std::string& nm = s.param_names[static_cast<size_t>(j)];
    if (s.with_bootstrap)
      os << " " << nm << "^c | sd | cov |";
    else
      os << " " << nm << " | sd |";
  }
  if (!s.with_bootstrap) os << " time |";
  os << "\n|---|";
  for (int j : order) {
    (void)j;
    os << "---|---|";
    if (s.with_bootstrap) os << "---|";
  }
  if (!s.with_bootstrap) os << "---|";
  os << "\n";
  for (const EstimatorStudy& es : s.estimators) {
    os << "| " << es.label << " |";
    if (es.estimates.rows() == 0) {
      for (int j : order) {
        (void)j;
        os << " nan | nan |";
        if (s.with_bootstrap) os << " nan |";
      }
      if (!s.with_bootstrap) os << " nan |";
      os << "\n";
      continue;
    }
    for (int j : order) {
      if (s.with_bootstrap)
        os << " " << fmt6(es.corrected_mean[j]) << " | " << fmt6(es.corrected_sd[j]) << " | "
           << fmt6(es.coverage[j]) << " |";
      else
        os << " " << fmt6(es.mean[j]) << " | " << fmt6(es.sd[j]) << " |";
    }
    if (!s.with_bootstrap) os << " " << fmt6(es.mean_seconds) << " |";
    os << "\n";
  }
  return os.str();
}

std::string estimates_csv(const std::vector<FitRow>& rows, const std::vector<std::string>& params,
                          Family family) {
  std::ostringstream os;
  os << "estimator,parameter,estimate,corrected,sd\n";
  const int p = static_cast<int>(params.size());
  const auto order = display_order(family, p);
  for (const FitRow& r : rows) {
    for (int j : order) {
      os << r.estimator << "," << params[static_cast<size_t>(j)];
      if (r.failed)
        os << ",nan,nan,nan";
      else
        os << "," << fmt6(r.estimate[j]) << "," << fmt6(r.corrected[j]) << "," << fmt6(r.sd[j]);
      os << "\n";
    }
  }
  return os.str();
}

std::string curves_csv(const BreakdownCurves& curves) {
  std::ostringstream os;
  os << "z,estimator,parameter,mean\n";
  for (size_t gi = 0; gi < curves.grid.size(); ++gi) {
    const StudySummary& s = curves.summaries[gi];
    const int p = static_cast<int>(s.param_names.size());
    const auto order = display_order(s.family, p);
    for (const EstimatorStudy& es : s.estimators)
      for (int j : order)
        os << fmt6(curves.grid[gi]) << "," << es.label << ","
           << s.param_names[static_cast<size_t>(j)] << ","
           << (es.estimates.rows() > 0 ? fmt6(es.mean[j]) : "nan") << "\n";
  }
  return os.str();
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open csv file: " + path);
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) {
      size_t a = cell.find_first_not_of(" \t");
      size_t b = cell.find_last_not_of(" \t");
      cells.push_back(a == std::string::npos ? "" : cell.substr(a, b - a + 1));
    }
    if (first) {
      t.header = cells;
      first = false;
    } else {
      t.rows.push_back(cells);
    }
  }
  if (t.header.empty()) throw Error(ErrorCode::SchemaMismatch, "csv file has no header row: " + path);
  return t;
}

void write_text_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write file: " + path);
  out << content;
}

}  // namespace mcd
