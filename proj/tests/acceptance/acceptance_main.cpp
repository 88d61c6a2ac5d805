// Acceptance suite: runs the numbered criteria and prints one pass/fail line
// per criterion. With an argument it runs that criterion alone (ctest wires
// one entry per criterion); exit code is nonzero when anything fails.

#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "fracpath/experiments.hpp"

using namespace fracpath;

int main(int argc, char** argv) {
    const std::vector<std::string> ids = {
        "acc1_rl_group_law", "acc2_net_bounds",   "acc3_scaling_limit",
        "acc4_hedge_rate",   "acc5_besov_bmo",    "acc6_oscillation",
        "acc7_tv",           "acc8_gamma",        "acc9_gkw",
        "acc10_k_functional", "acc11_moment_tail",
    };
    int only = 0;
    if (argc > 1) only = std::atoi(argv[1]);
    ExperimentConfig cfg = ExperimentConfig::empty();
    bool all_ok = true;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        int num = static_cast<int>(i) + 1;
        if (only != 0 && num != only) continue;
        ExperimentReport rep = run_experiment(ids[i], cfg, std::nullopt);
        bool ok = rep.all_pass();
        all_ok = all_ok && ok;
        std::printf("criterion %2d [%s] %-22s (%.1fs)\n", num, ok ? "PASS" : "FAIL",
                    ids[i].c_str(), rep.wall_seconds);
        for (const auto& r : rep.rows)
            if (!r.pass)
                std::printf("    FAILED %s: estimate=%.6g tolerance=%.6g\n", r.name.c_str(),
                            r.estimate, r.tolerance);
    }
    return all_ok ? 0 : 1;
}
