// Acceptance run: one line per criterion, nonzero exit if any fails.
//   acceptance [criterion-number ...]

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "softlogic/verify.hpp"

int main(int argc, char** argv) {
  using namespace softlogic;
  const auto& checks = builtin_checks();
  std::vector<std::size_t> selected;
  for (int i = 1; i < argc; ++i) {
    const long n = std::strtol(argv[i], nullptr, 10);
    if (n < 1 || n > static_cast<long>(checks.size())) {
      std::fprintf(stderr, "usage: %s [1..%zu ...]\n", argv[0], checks.size());
      return 2;
    }
    selected.push_back(static_cast<std::size_t>(n - 1));
  }
  if (selected.empty())
    for (std::size_t i = 0; i < checks.size(); ++i) selected.push_back(i);

  const VerifyOptions opt;
  int failed = 0;
  for (std::size_t i : selected) {
    const CheckResult r = run_check(checks[i], opt);
    failed += !r.passed;
    std::printf("[%2zu] %s %-20s %8.3f s  %s\n", i + 1, r.passed ? "PASS" : "FAIL", r.name.c_str(),
                r.seconds, r.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", selected.size() - static_cast<std::size_t>(failed),
              selected.size());
  return failed ? 1 : 0;
}
