#pragma once

// CSV trajectory export: header `t,<state names...>`, one row per output
// time; the long format prepends a `run` column.

#include <ostream>
#include <string>
#include <vector>

#include "nds/integrate.hpp"

namespace nds {

void write_trajectory_csv(std::ostream& os, const std::vector<std::string>& state_names,
                          const Trajectory& trajectory);

void write_long_csv_header(std::ostream& os, const std::vector<std::string>& state_names);
void write_long_csv_rows(std::ostream& os, int run, const Trajectory& trajectory);

}  // namespace nds
