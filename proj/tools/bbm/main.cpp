#include <bbm/harness/runner.hpp>
#include <bbm/harness/spec.hpp>

#include <iostream>

int main(int argc, char** argv) {
    using namespace bbm::harness;
    ExperimentSpec spec;
    try {
        spec = parse_flags(argc, argv);
    } catch (const UsageError& e) {
        (e.code() == kExitOk ? std::cout : std::cerr) << e.what();
        return e.code();
    }
    return run(spec, std::cout, std::cerr);
}
