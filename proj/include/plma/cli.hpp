#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace plma {

enum ExitCode : int {
    kExitOk = 0,
    kExitCertFail = 1,
    kExitConfig = 2,
    kExitSolver = 3,
};

struct RunConfig {
    std::string command;
    std::vector<std::string> cases; // empty or {"all"} selects the whole registry
    std::vector<int> ns;
    double tol = 0.0; // 0 = per-solver default
    std::string out_dir = "plma_out";
    std::string format = "csv";
    std::uint64_t seed = 7;
    std::vector<double> eps_list;
};

// JSON config file with the same keys as the flags; flags win on conflict.
RunConfig load_config_file(const std::string& path);

int cmd_transform(const RunConfig& cfg);
int cmd_solve(const RunConfig& cfg);
int cmd_verify(const RunConfig& cfg);
int cmd_sweep(const RunConfig& cfg);

// Full argv entry point used by the binary; maps errors to exit codes.
int run_cli(int argc, char** argv);

} // namespace plma
