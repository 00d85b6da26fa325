#include "mpflow/harness.hpp"

#include <cstdio>
#include <cstdlib>

namespace hn = mpflow::harness;

// One line per criterion; failing checks are listed under it.
int main(int argc, char** argv) {
    const int only = argc > 1 ? std::atoi(argv[1]) : 0;
    int failed = 0;
    double total = 0.0;
    for (const auto& info : hn::criteria()) {
        if (only && info.id != only) continue;
        const hn::CriterionResult r = hn::run_criterion(info.id, 1);
        total += r.seconds;
        std::printf("[%s] criterion %2d: %s (%zu checks, %.1f s)\n", r.pass() ? "PASS" : "FAIL", r.id,
                    r.title.c_str(), r.report.checks.size(), r.seconds);
        if (!r.pass()) {
            ++failed;
            for (const auto& c : r.report.checks) {
                if (!c.pass) std::printf("    failed %s = %.6e (tol %.1e)\n", c.name.c_str(), c.value, c.tol);
            }
            for (const auto& f : r.report.failures) std::printf("    note %s\n", f.c_str());
        }
        std::fflush(stdout);
    }
    std::printf("%d criteria failed, %.1f s total\n", failed, total);
    return failed ? 1 : 0;
}
