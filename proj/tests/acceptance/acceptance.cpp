// Acceptance gate: one PASS/FAIL line per criterion. With --criterion N only
// that criterion runs and the exit status reflects it; without, all twelve run.

#include <bbm/harness/criteria.hpp>

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    using namespace bbm::harness;
    CLI::App app{"acceptance criteria"};
    int only = 0;
    CriteriaOptions opts;
    app.add_option("--criterion", only, "run a single criterion")->check(CLI::Range(1, kCriterionCount));
    app.add_option("--scale", opts.scale, "fraction of the full replicate counts")->check(CLI::Range(1e-3, 1.0));
    app.add_option("--threads", opts.threads, "worker threads (0: all cores)");
    CLI11_PARSE(app, argc, argv);

    if (only > 0) {
        const auto r = run_criterion(only, opts);
        std::cout << format_result(r) << std::endl;
        return r.passed ? 0 : 1;
    }
    const auto results = run_criteria(opts, std::cout);
    for (const auto& r : results)
        if (!r.passed) return 1;
    return 0;
}
