#include "nds/csv.hpp"

#include <iomanip>

namespace nds {

namespace {

void write_header(std::ostream& os, const std::vector<std::string>& names, bool with_run) {
  if (with_run) os << "run,";
  os << "t";
  for (const auto& n : names) os << "," << n;
  os << "\n";
}

void write_rows(std::ostream& os, int run, bool with_run, const Trajectory& tr) {
  os << std::setprecision(15);
  for (size_t i = 0; i < tr.t.size(); ++i) {
    if (with_run) os << run << ",";
    os << tr.t[i];
    for (int c = 0; c < tr.x[i].size(); ++c) os << "," << tr.x[i][c];
    os << "\n";
  }
}

}  // namespace

void write_trajectory_csv(std::ostream& os, const std::vector<std::string>& state_names,
                          const Trajectory& trajectory) {
  write_header(os, state_names, false);
  write_rows(os, 0, false, trajectory);
}

void write_long_csv_header(std::ostream& os, const std::vector<std::string>& state_names) {
  write_header(os, state_names, true);
}

void write_long_csv_rows(std::ostream& os, int run, const Trajectory& trajectory) {
  write_rows(os, run, true, trajectory);
}

}  // namespace nds
