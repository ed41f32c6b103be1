#pragma once

// Tampering strategies applied at the server boundary, detection campaigns,
// and the unforgeability game.
//
// The adversary acts on plaintext slot images of RESULT ciphertexts. That is
// the strongest effect a ciphertext-mauling server could achieve, so measured
// detection rates are a lower bound on the real scheme's.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "dataseal/protocol.hpp"

namespace dataseal {

struct Passthrough {};

/// C[row][col] += delta. Unset fields are drawn per trial.
struct ElementEdit {
  std::optional<std::size_t> row, col;
  std::optional<RingScalar> delta;  // nonzero
};

/// Every row, checksum rows included, times factor.
struct MatrixScale {
  std::optional<RingScalar> factor;  // not 0 or 1
};

/// Edits one data entry and replaces checksum rows with uniform values.
/// With keep_golden_row the last appended row of a MUL result is left
/// intact; add and poly results have a single appended row.
struct ChecksumForge {
  bool keep_golden_row = true;
};

/// Consistent rewrite under the all-ones checksum rule: the data entry and
/// the first appended row move together (additively, or multiplicatively
/// for POLY).
struct JointForge {
  std::optional<std::size_t> row, col;
  std::optional<RingScalar> delta;
  std::optional<RingScalar> factor;
};

/// Replaces one data row of the honest result with arbitrary values.
struct HonestThenOverwrite {
  std::optional<std::size_t> row;
};

using TamperStrategy =
    std::variant<Passthrough, ElementEdit, MatrixScale, ChecksumForge, JointForge, HonestThenOverwrite>;

enum class Stage : std::uint8_t { PreEvaluation, PostEvaluation };

/// "passthrough", "element-edit", "matrix-scale", "checksum-forge",
/// "joint-forge", "honest-then-overwrite"
std::string_view strategy_name(const TamperStrategy& s) noexcept;
TamperStrategy parse_strategy(std::string_view name);
Stage stage_of(const TamperStrategy& s) noexcept;

/// Mutates a result image whose first `data_rows` rows are data and the rest
/// checksum rows. Every strategy other than Passthrough changes at least one
/// data value. ShapeMismatch if a fixed row/col is out of range or a
/// delta/factor is degenerate mod m.
Matrix apply_tamper(const Matrix& image, std::size_t data_rows, const TamperStrategy& strategy, OpKind op,
                    std::mt19937_64& rng);

/// Checksum rows a scheme appends for op.
std::size_t appended_rows(Scheme scheme, OpKind op) noexcept;

/// Rewrites RESULT messages on their way back to the client.
///
/// The logical width of a result is public in the threat model but absent
/// from the wire; it is taken from the public operand when there is one and
/// from set_logical_cols() otherwise.
class AdversarialTransport final : public Transport {
 public:
  AdversarialTransport(Transport& inner, TamperStrategy strategy, Scheme scheme, std::uint64_t seed);

  void send(const Message& msg) override;
  Message receive() override;

  void set_logical_cols(std::size_t cols) noexcept { cols_hint_ = cols; }
  /// Tamper only with the n-th RESULT (1-based); all of them when unset.
  void set_target(std::optional<std::size_t> nth) noexcept { target_ = nth; }
  void set_strategy(TamperStrategy s) { strategy_ = std::move(s); }

  std::size_t results_seen() const noexcept { return results_seen_; }
  std::size_t tampered() const noexcept { return tampered_; }

 private:
  struct Shape {
    OpKind op;
    std::size_t data_rows;
    std::optional<std::size_t> cols;
  };

  Transport& inner_;
  TamperStrategy strategy_;
  Scheme scheme_;
  std::mt19937_64 rng_;
  std::optional<Modulus> modulus_;  // learned from HELLO
  std::optional<std::size_t> cols_hint_;
  std::optional<std::size_t> target_;
  std::map<std::uint64_t, Shape> shapes_;
  std::size_t results_seen_ = 0;
  std::size_t tampered_ = 0;
};

// ------------------------------------------------------------- campaigns

struct CampaignConfig {
  std::vector<OpKind> ops{OpKind::Mul, OpKind::Add, OpKind::Poly};
  std::vector<std::size_t> sizes{2, 4, 8};
  std::size_t trials = 100;
  Modulus modulus{kDefaultModulus};
  std::vector<Scheme> schemes{Scheme::DataSeal, Scheme::AbftBaseline};
  std::vector<TamperStrategy> strategies;
  std::uint64_t seed = 1;
  unsigned threads = 1;

  /// InvalidParams for zero trials or empty axes.
  void validate() const;
};

/// One (scheme, strategy, op, size) cell. detections + false_accepts ==
/// trials; for Passthrough the accepts are correct, not false.
struct DetectionStats {
  Scheme scheme = Scheme::DataSeal;
  std::string strategy;
  OpKind op = OpKind::Mul;
  std::size_t size = 0;
  std::size_t trials = 0;
  std::size_t detections = 0;
  std::size_t false_accepts = 0;
  std::size_t weighted_failures = 0;
  std::size_t golden_failures = 0;
  std::size_t malformed = 0;        // rejected by the result shape check
  std::size_t degenerate = 0;       // trials with v_o == 0
  std::size_t degenerate_accepts = 0;

  double detection_rate() const noexcept {
    return trials ? static_cast<double>(detections) / static_cast<double>(trials) : 0.0;
  }
};

/// Cells in config order; deterministic in config.seed regardless of
/// thread count.
std::vector<DetectionStats> run_campaign(const CampaignConfig& config);

/// Header: scheme,strategy,op,size,trials,detections,false_accepts
void write_campaign_csv(std::ostream& out, const std::vector<DetectionStats>& stats);

// ----------------------------------------------------------------- games

struct ForgeryConfig {
  Modulus modulus{kDefaultModulus};
  std::size_t rows = 2;
  std::size_t inner = 2;
  std::size_t cols = 4;
  std::size_t trials = 10000;
  /// Control: the adversary computes the weighted row with the real key.
  bool adversary_has_key = false;
  std::uint64_t seed = 1;
};

struct ForgeryResult {
  std::size_t trials = 0;
  std::size_t wins = 0;
  /// m^-cols: a uniform weighted row matches vk*C' with this probability.
  double analytical_bound = 0;

  double win_rate() const noexcept {
    return trials ? static_cast<double>(wins) / static_cast<double>(trials) : 0.0;
  }
};

/// Each play: fresh secret and nonce, honest MUL result, forged data rows,
/// a uniform random weighted-checksum row and the honest golden row. A win
/// is an ACCEPT.
ForgeryResult forgery_game(const ForgeryConfig& config);

/// The textbook column-checksum bypass on the 2x2 instance A=[[3,1],[1,5]],
/// B=[[8,6],[7,10]] over Z_97: A[0][0] goes 3 -> 4 and its checksum 4 -> 5
/// before evaluation. The same rewrite is replayed against a keyed encoding.
struct BypassReplay {
  Matrix abft_honest;   // 3 x 2 result, checksum row last
  Matrix abft_forged;
  Verdict abft_verdict;
  Matrix keyed_forged;  // 4 x 2
  Verdict keyed_verdict;
  std::string transcript;
};

BypassReplay replay_column_checksum_bypass(const VerificationKey& key);

}  // namespace dataseal
