#pragma once

// Client overhead benchmark: encode and verify time against server
// evaluation time, per operation and square size.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "dataseal/sealcodec.hpp"

namespace dataseal {

enum class Phase : std::uint8_t { Encode, Evaluate, Verify };

std::string_view phase_name(Phase p) noexcept;

struct BenchRecord {
  OpKind op = OpKind::Mul;
  std::size_t n = 0;
  Phase phase = Phase::Encode;
  double median_ms = 0;  // per operation, > 0
  double space_ratio = 0;  // appended rows / original rows
};

struct BenchConfig {
  std::vector<std::size_t> sizes{8, 16, 32, 64};
  std::size_t reps = 5;
  std::vector<OpKind> ops{OpKind::Mul, OpKind::Add, OpKind::Poly};
  Modulus modulus{kDefaultModulus};
  /// Fixed slot count; by default each size gets the smallest power of two
  /// that holds a row.
  std::optional<std::size_t> slot_count;
  std::uint32_t exponent = 2;
  std::uint64_t seed = 1;
  /// Each sample repeats the phase until at least this much time passes.
  double min_sample_ms = 2.0;

  /// InvalidParams unless sizes ascend with >= 2 entries and reps >= 5.
  void validate() const;
};

struct BenchPoint {
  OpKind op = OpKind::Mul;
  std::size_t n = 0;
  double encode_ms = 0, evaluate_ms = 0, verify_ms = 0;
  std::size_t appended_rows = 0;

  /// (encode + verify) / evaluate
  double overhead_ratio() const noexcept { return (encode_ms + verify_ms) / evaluate_ms; }
  double space_ratio() const noexcept { return static_cast<double>(appended_rows) / static_cast<double>(n); }
};

struct BenchReport {
  std::vector<BenchRecord> records;
  std::vector<BenchPoint> points;

  std::vector<BenchPoint> series(OpKind op) const;
};

BenchReport run_bench(const BenchConfig& config);

/// Each r(n_{i+1}) <= (1 + tolerance) * r(n_i).
bool overhead_nonincreasing(const std::vector<BenchPoint>& series, double tolerance = 0.10);

/// appended_rows == appended_rows_for(op) at every size, i.e. s(n) = 2/n for
/// MUL and 1/n otherwise.
bool space_exact(const std::vector<BenchPoint>& series);

/// Header: op,n,phase,median_ms,space_ratio
void write_bench_csv(std::ostream& out, const BenchReport& report);

}  // namespace dataseal
