#ifndef MCD_TABLE_IO_HPP
#define MCD_TABLE_IO_HPP

#include <string>
#include <vector>

#include "mcd/bootstrap_inference.hpp"
#include "mcd/sim_harness.hpp"

namespace mcd {

// fixed 6-significant-digit formatting used for all numeric output
std::string fmt6(double v);

// parameter display order: log sigma leads for the linear model, matching the
// paper's table layout
std::vector<int> display_order(Family family, int p);

std::string summary_csv(const StudySummary& s);
std::string summary_markdown(const StudySummary& s);

struct FitRow {
  std::string estimator;
  Eigen::VectorXd estimate;
  Eigen::VectorXd corrected;
  Eigen::VectorXd sd;
  bool failed = false;
};
std::string estimates_csv(const std::vector<FitRow>& rows, const std::vector<std::string>& params,
                          Family family);

std::string curves_csv(const BreakdownCurves& curves);

// simple CSV table: first row is the header
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
CsvTable read_csv(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace mcd

#endif
