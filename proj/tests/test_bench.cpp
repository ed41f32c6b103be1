#include <gtest/gtest.h>

#include <sstream>

#include "dataseal/bench.hpp"

using namespace dataseal;

namespace {

BenchPoint point(std::size_t n, double enc, double eval, double ver) {
  return BenchPoint{OpKind::Mul, n, enc, eval, ver, 2};
}

}  // namespace

TEST(Bench, ConfigValidation) {
  BenchConfig c;
  c.sizes = {8};
  EXPECT_THROW(c.validate(), Error);
  c.sizes = {8, 8};
  EXPECT_THROW(c.validate(), Error);
  c.sizes = {16, 8};
  EXPECT_THROW(c.validate(), Error);
  c.sizes = {8, 16};
  c.reps = 4;
  EXPECT_THROW(c.validate(), Error);
  c.reps = 5;
  EXPECT_NO_THROW(c.validate());
}

TEST(Bench, TrendRuleWithTolerance) {
  // r = (enc + ver) / eval: 1.0, 1.09, 0.5 stays within 10%
  EXPECT_TRUE(overhead_nonincreasing({point(8, 1, 2, 1), point(16, 1.09, 2, 1.09), point(32, 1, 4, 1)}));
  EXPECT_FALSE(overhead_nonincreasing({point(8, 1, 2, 1), point(16, 1.3, 2, 1)}));
  EXPECT_TRUE(overhead_nonincreasing({point(8, 1, 2, 1), point(16, 1.3, 2, 1)}, 0.25));
  EXPECT_DOUBLE_EQ(point(8, 1, 4, 1).overhead_ratio(), 0.5);
}

TEST(Bench, RecordsAndSpace) {
  BenchConfig c;
  c.sizes = {2, 4, 8};
  c.min_sample_ms = 0.05;
  const auto rep = run_bench(c);
  ASSERT_EQ(rep.records.size(), 3u * 3u * 3u);
  ASSERT_EQ(rep.points.size(), 9u);
  for (const auto& r : rep.records) {
    EXPECT_GT(r.median_ms, 0.0);
    const double want = (r.op == OpKind::Mul ? 2.0 : 1.0) / static_cast<double>(r.n);
    EXPECT_EQ(r.space_ratio, want);
  }
  for (auto op : {OpKind::Mul, OpKind::Add, OpKind::Poly}) {
    EXPECT_EQ(rep.series(op).size(), 3u);
    EXPECT_TRUE(space_exact(rep.series(op)));
  }
  std::ostringstream csv;
  write_bench_csv(csv, rep);
  std::string header;
  std::getline(std::istringstream(csv.str()) >> std::ws, header);
  EXPECT_EQ(header, "op,n,phase,median_ms,space_ratio");
  EXPECT_NE(csv.str().find("mul,8,verify,"), std::string::npos);
}
