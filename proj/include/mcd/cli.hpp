#ifndef MCD_CLI_HPP
#define MCD_CLI_HPP

#include <string>

#include "mcd/config.hpp"

namespace mcd {

// Exit codes: 0 success, 2 config error, 3 data error, 4 estimation failure.
int run_command(RunConfig cfg);

// CSV ingestion per the config's data schema.
Dataset load_dataset(const RunConfig& cfg);

}  // namespace mcd

#endif
