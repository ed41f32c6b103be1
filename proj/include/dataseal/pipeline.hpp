#pragma once

// Layer-by-layer verified inference. Every layer is one outsourced job; its
// result is decrypted, verified and re-encoded before the next layer runs.

#include <cstddef>
#include <cstdint>
#include <variant>
#include <vector>

#include "dataseal/protocol.hpp"

namespace dataseal {

/// Convolution lowered to MUL: A = im2col(x)^T (positions x C*kh*kw),
/// B = W^T, output channels are the columns of A*B.
struct ConvLayer {
  Matrix weights;  // filters x (in_channels * kernel_h * kernel_w)
  std::size_t in_channels = 1;
  std::size_t in_h = 1;
  std::size_t in_w = 1;
  ConvGeometry geom;
};

/// Element-wise x^n over the tensor viewed as channels x (H*W).
/// Zero entries follow the session's PolyOptions.
struct PolyLayer {
  std::uint32_t exponent = 2;
};

/// Flattened input (1 x C*H*W) times weights (in x out); output is 1 x 1 x out.
struct DenseLayer {
  Matrix weights;
};

using Layer = std::variant<ConvLayer, PolyLayer, DenseLayer>;

std::string_view layer_kind(const Layer& layer) noexcept;

struct PipelineSpec {
  std::vector<Layer> layers;

  /// GeometryError unless each layer accepts the previous layer's output.
  void validate(std::size_t channels, std::size_t height, std::size_t width) const;
};

struct PipelineOptions {
  /// Submit layer k+1 before verifying layer k. A rejection still aborts
  /// before layer k+1's result is used.
  bool overlap = false;
};

struct PipelineResult {
  Tensor output;
  std::vector<Verdict> verdicts;  // one per layer, all accepting
  std::vector<std::uint64_t> job_ids;
};

/// The first rejecting layer, 1-based.
class LayerRejected : public Error {
 public:
  LayerRejected(std::size_t layer, Verdict verdict);

  std::size_t layer() const noexcept { return layer_; }
  const Verdict& verdict() const noexcept { return verdict_; }

 private:
  std::size_t layer_;
  Verdict verdict_;
};

PipelineResult run_pipeline(ClientSession& session, const PipelineSpec& spec, const Tensor& input,
                            Transport& transport, PipelineOptions options = {});

/// Plaintext composition of the same layers.
Tensor reference_forward(const PipelineSpec& spec, const Tensor& input);

}  // namespace dataseal
