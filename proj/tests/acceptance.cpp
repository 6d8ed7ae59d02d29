// Runs the acceptance checks and prints one line per criterion.

#include <cstdio>
#include <cstring>

#include "fracstab/acceptance.hpp"

int main(int argc, char** argv) {
  using namespace fracstab::acceptance;
  Tier tier = Tier::Full;
  for (int i = 1; i < argc; ++i)
    if (std::strcmp(argv[i], "--fast") == 0) tier = Tier::Fast;
  Suite suite;
  bool all = true;
  suite.run(tier, [&](const CheckResult& r) {
    all = all && r.passed;
    std::printf("criterion %2d %s: %s (measured %.3g, required %.3g, %.1fs) %s\n", r.id, r.name.c_str(),
                r.passed ? "PASS" : "FAIL", r.measured, r.required, r.seconds, r.detail.c_str());
    std::fflush(stdout);
  });
  return all ? 0 : 1;
}
