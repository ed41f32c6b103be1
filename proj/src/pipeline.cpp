#include "dataseal/pipeline.hpp"

#include <optional>
#include <string>

namespace dataseal {

namespace {

struct Dims {
  std::size_t c, h, w;
};

std::string dims_text(const Dims& d) {
  return std::to_string(d.c) + "x" + std::to_string(d.h) + "x" + std::to_string(d.w);
}

/// Output dims of `layer` on input `in`; GeometryError on mismatch.
Dims output_dims(const Layer& layer, const Dims& in, std::size_t index) {
  const std::string where = "layer " + std::to_string(index + 1) + ": ";
  if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
    if (conv->in_channels != in.c || conv->in_h != in.h || conv->in_w != in.w) {
      throw Error(Errc::GeometryError, where + "conv expects " +
                                           dims_text({conv->in_channels, conv->in_h, conv->in_w}) + ", got " +
                                           dims_text(in));
    }
    if (conv->weights.cols() != in.c * conv->geom.kernel_h * conv->geom.kernel_w) {
      throw Error(Errc::GeometryError, where + "conv weights need C*kh*kw columns");
    }
    const auto [oh, ow] = conv_output_dims(in.h, in.w, conv->geom);
    return {conv->weights.rows(), oh, ow};
  }
  if (const auto* poly = std::get_if<PolyLayer>(&layer)) {
    if (poly->exponent == 0) throw Error(Errc::InvalidExponent, where + "exponent must be >= 1");
    return in;
  }
  const auto& dense = std::get<DenseLayer>(layer);
  if (dense.weights.rows() != in.c * in.h * in.w) {
    throw Error(Errc::GeometryError, where + "dense expects " + std::to_string(dense.weights.rows()) +
                                         " inputs, got " + dims_text(in));
  }
  return {1, 1, dense.weights.cols()};
}

Matrix flatten(const Tensor& x) {
  return Matrix(1, x.data().size(), x.modulus(), {x.data().begin(), x.data().end()});
}

/// The job a layer submits for input x.
JobRequest lower(const Layer& layer, const Tensor& x) {
  if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
    return JobRequest{OpKind::Mul, transpose(im2col(x, conv->geom)), transpose(conv->weights), 0};
  }
  if (const auto* poly = std::get_if<PolyLayer>(&layer)) {
    return JobRequest{OpKind::Poly, x.as_matrix(), std::nullopt, poly->exponent};
  }
  return JobRequest{OpKind::Mul, flatten(x), std::get<DenseLayer>(layer).weights, 0};
}

/// Reassembles a layer's data rows into its output tensor.
Tensor lift(const Layer& layer, const Matrix& c, const Dims& out) {
  if (std::holds_alternative<ConvLayer>(layer)) return Tensor::from_matrix(transpose(c), out.c, out.h, out.w);
  return Tensor::from_matrix(c, out.c, out.h, out.w);
}

Tensor apply_plain(const Layer& layer, const Tensor& x, const Dims& out) {
  const JobRequest job = lower(layer, x);
  const Matrix c = job.op == OpKind::Poly ? mat_pow_elementwise(job.a, job.exponent) : mat_mul(job.a, *job.b);
  return lift(layer, c, out);
}

std::vector<Dims> plan(const PipelineSpec& spec, const Dims& in) {
  std::vector<Dims> dims;
  Dims cur = in;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    cur = output_dims(spec.layers[i], cur, i);
    dims.push_back(cur);
  }
  return dims;
}

}  // namespace

std::string_view layer_kind(const Layer& layer) noexcept {
  switch (layer.index()) {
    case 0: return "conv";
    case 1: return "poly";
    default: return "dense";
  }
}

void PipelineSpec::validate(std::size_t channels, std::size_t height, std::size_t width) const {
  plan(*this, {channels, height, width});
}

LayerRejected::LayerRejected(std::size_t layer, Verdict verdict)
    : Error(Errc::LayerRejected, "layer " + std::to_string(layer) + " " + verdict.summary()),
      layer_(layer),
      verdict_(std::move(verdict)) {}

Tensor reference_forward(const PipelineSpec& spec, const Tensor& input) {
  const auto dims = plan(spec, {input.channels(), input.height(), input.width()});
  Tensor x = input;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) x = apply_plain(spec.layers[i], x, dims[i]);
  return x;
}

PipelineResult run_pipeline(ClientSession& session, const PipelineSpec& spec, const Tensor& input,
                            Transport& transport, PipelineOptions options) {
  const auto dims = plan(spec, {input.channels(), input.height(), input.width()});
  PipelineResult out{input, {}, {}};
  const std::size_t n = spec.layers.size();
  if (n == 0) return out;

  if (!options.overlap) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint64_t id = session.submit(lower(spec.layers[i], out.output), transport);
      JobOutcome r = session.receive(transport.receive());
      if (!r.verdict.accepted) throw LayerRejected(i + 1, std::move(r.verdict));
      out.output = lift(spec.layers[i], r.result, dims[i]);
      out.verdicts.push_back(std::move(r.verdict));
      out.job_ids.push_back(id);
    }
    return out;
  }

  // Overlap: open layer i, start layer i+1 on its unverified output, then
  // verify layer i. Layer i+1's result is drained and dropped on rejection.
  std::uint64_t id = session.submit(lower(spec.layers[0], out.output), transport);
  for (std::size_t i = 0; i < n; ++i) {
    const Message reply = transport.receive();
    const auto* result = std::get_if<ResultMsg>(&reply);
    if (!result) {
      session.receive(reply);  // rethrows ERROR
      throw Error(Errc::MalformedResult, "expected RESULT");
    }
    std::optional<ClientSession::Opened> opened;
    try {
      opened = session.open(*result);
    } catch (const Error&) {
      session.discard(result->job_id);
      throw;
    }
    Tensor next = lift(spec.layers[i], opened->data, dims[i]);
    std::optional<std::uint64_t> next_id;
    if (i + 1 < n) {
      try {
        next_id = session.submit(lower(spec.layers[i + 1], next), transport);
      } catch (const Error&) {
        // a tampered layer can make the next encoding fail; report the tamper
        Verdict early = session.verify(*opened);
        if (!early.accepted) throw LayerRejected(i + 1, std::move(early));
        throw;
      }
    }
    Verdict v = session.verify(*opened);
    if (!v.accepted) {
      if (next_id) {
        try {
          (void)transport.receive();
        } catch (const Error&) {
          // the speculative reply is dropped either way
        }
        session.discard(*next_id);
      }
      throw LayerRejected(i + 1, std::move(v));
    }
    out.output = std::move(next);
    out.verdicts.push_back(std::move(v));
    out.job_ids.push_back(id);
    if (next_id) id = *next_id;
  }
  return out;
}

}  // namespace dataseal
