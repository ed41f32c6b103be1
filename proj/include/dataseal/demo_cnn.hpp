#pragma once

// A small conv -> square -> dense network for end-to-end verified
// inference. Weights wrap mod m; the outputs carry no classification
// meaning.

#include <cstdint>
#include <vector>

#include "dataseal/pipeline.hpp"

namespace dataseal {

/// 144-wide dense input rows need 256 slots.
inline constexpr std::size_t kDemoSlotCount = 256;

struct DemoCnnSpec {
  PipelineSpec pipeline;  // conv 4x3x3 stride 1 pad 0, square, dense 144 -> 10
  Tensor input;           // 1 x 8 x 8, pixels in [0, 255]

  /// Weights are signed integers in [-8, 8] drawn from `seed`.
  static DemoCnnSpec build(std::uint64_t seed, const Modulus& mod = Modulus{});
};

BackendParams demo_backend_params(const Modulus& mod = Modulus{});

/// Output logits as centered residues.
std::vector<std::int64_t> decode_signed_values(const Tensor& t);

}  // namespace dataseal
