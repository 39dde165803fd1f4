#include <gtest/gtest.h>

#include "softlogic/verify.hpp"

using namespace softlogic;

TEST(Verify, FastChecksPass) {
  const VerifyOptions opt;
  for (const auto& c : builtin_checks()) {
    if (c.extended) continue;
    const CheckResult r = run_check(c, opt);
    EXPECT_TRUE(r.passed) << r.name << ": " << r.detail;
  }
}

TEST(Verify, CountCheckReportsValue) {
  const CheckResult r = run_check(*find_check("count-compositions"), VerifyOptions{});
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(r.detail, "1208");
  EXPECT_EQ(find_check("no-such-check"), nullptr);
}

TEST(Verify, InjectedBasisFaultFailsCatalog) {
  VerifyOptions opt;
  opt.basis = [](int n) {
    BasisMatrix b = build_basis(n);
    b.set(1, 0, -b(1, 0));
    return b;
  };
  EXPECT_FALSE(run_check(*find_check("table-catalog"), opt).passed);
  EXPECT_FALSE(run_check(*find_check("basis"), opt).passed);
}

TEST(Verify, ExceptionsBecomeFailures) {
  VerifyOptions opt;
  opt.basis = [](int) -> BasisMatrix { throw std::runtime_error("boom"); };
  const CheckResult r = run_check(*find_check("table-catalog"), opt);
  EXPECT_FALSE(r.passed);
  EXPECT_NE(r.detail.find("boom"), std::string::npos);
}
