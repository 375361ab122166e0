#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "gibbs_ot/schedule.hpp"

namespace gibbs_ot::cli {

/// Parses "geometric:T0[,l=L][,N=N]", "adaptive:eta" or "constant:T".
/// Missing l defaults to `sweeps`, missing N to `grid`.
TemperatureSchedule parse_schedule(const std::string& spec, std::size_t sweeps, std::size_t grid);

/// Full CLI: args excludes the program name. Returns the process exit code
/// (0 ok, 2 config, 3 input, 4 numerical).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gibbs_ot::cli
