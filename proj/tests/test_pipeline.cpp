#include <gtest/gtest.h>

#include <random>

#include "dataseal/adversary.hpp"
#include "dataseal/demo_cnn.hpp"
#include "dataseal/pipeline.hpp"
#include "oracle.hpp"

using namespace dataseal;

namespace {

ClientSecret secret_from(std::uint64_t seed) {
  std::array<std::uint8_t, 16> b{};
  std::mt19937_64 rng(seed);
  for (auto& x : b) x = static_cast<std::uint8_t>(rng());
  return ClientSecret(b);
}

SessionConfig config(std::size_t slots = 64) {
  SessionConfig c;
  c.params.slot_count = slots;
  c.nonce_prefix = 1;
  return c;
}

Tensor random_tensor(std::size_t c, std::size_t h, std::size_t w, const Modulus& m, std::mt19937_64& rng) {
  std::vector<RingScalar> v(c * h * w);
  for (auto& x : v) x = 1 + rng() % (m.value() - 1);
  return Tensor(c, h, w, m, std::move(v));
}

std::vector<RingScalar> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

/// dense (1 x in) * W, oracle form
std::vector<RingScalar> dense_oracle(const std::vector<RingScalar>& x, const Matrix& w, std::uint64_t m) {
  return oracle::matmul({x}, oracle::grid(w), m)[0];
}

}  // namespace

TEST(Pipeline, MulThenPolyMatchesPlainComposition) {
  const Modulus m;
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = random_tensor(1, 2, 3, m, rng);
    const auto w = oracle::random_matrix(6, 5, m, rng, 1);
    PipelineSpec spec{{DenseLayer{w}, PolyLayer{2}}};
    const auto cfg = config();
    const auto server = keygen(cfg.params);
    ClientSession client(secret_from(1), cfg);
    InProcessTransport t(server);
    client.handshake(t);
    auto h = dense_oracle(values(x), w, m.value());
    bool has_zero = false;
    for (auto v : h) has_zero |= v == 0;
    if (has_zero) continue;  // zero entries are rejected by the poly encoder
    const auto res = run_pipeline(client, spec, x, t);
    ASSERT_EQ(res.verdicts.size(), 2u);
    for (const auto& v : res.verdicts) EXPECT_TRUE(v.accepted);
    for (auto& v : h) v = oracle::pow(v, 2, m.value());
    EXPECT_EQ(values(res.output), h);
    EXPECT_EQ(res.output, reference_forward(spec, x));
    EXPECT_EQ(client.pending_count(), 0u);
  }
}

TEST(Pipeline, ConvLayerMatchesDirectConvolution) {
  const Modulus m;
  std::mt19937_64 rng(2);
  const std::size_t c = 2, h = 5, w = 4;
  const auto x = random_tensor(c, h, w, m, rng);
  const auto filt = oracle::random_matrix(3, c * 2 * 2, m, rng);
  const ConvGeometry g{2, 2, 1, 1};
  PipelineSpec spec{{ConvLayer{filt, c, h, w, g}}};
  const auto cfg = config();
  const auto server = keygen(cfg.params);
  ClientSession client(secret_from(2), cfg);
  InProcessTransport t(server);
  client.handshake(t);
  for (bool overlap : {false, true}) {
    const auto res = run_pipeline(client, spec, x, t, PipelineOptions{overlap});
    std::size_t oh = 0, ow = 0;
    const auto want = oracle::conv2d(values(x), c, h, w, oracle::grid(filt), 2, 2, 1, 1, m.value(), oh, ow);
    EXPECT_EQ(res.output.channels(), 3u);
    EXPECT_EQ(res.output.height(), oh);
    EXPECT_EQ(res.output.width(), ow);
    EXPECT_EQ(values(res.output), want);
  }
}

TEST(Pipeline, EmptySpecIsIdentity) {
  const auto cfg = config();
  const auto server = keygen(cfg.params);
  ClientSession client(secret_from(3), cfg);
  InProcessTransport inner(server);
  AdversarialTransport t(inner, Passthrough{}, Scheme::DataSeal, 1);
  client.handshake(t);
  std::mt19937_64 rng(3);
  const auto x = random_tensor(2, 2, 2, cfg.params.modulus, rng);
  const auto res = run_pipeline(client, PipelineSpec{}, x, t);
  EXPECT_EQ(res.output, x);
  EXPECT_TRUE(res.verdicts.empty());
  EXPECT_TRUE(res.job_ids.empty());
  EXPECT_EQ(t.results_seen(), 0u);
}

TEST(Pipeline, GeometryErrors) {
  const Modulus m;
  PipelineSpec spec{{DenseLayer{Matrix(5, 2, m)}}};
  try {
    spec.validate(1, 2, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::GeometryError);
    EXPECT_NE(std::string(e.what()).find("layer 1"), std::string::npos);
  }
  PipelineSpec conv{{ConvLayer{Matrix(2, 9, m), 1, 2, 2, ConvGeometry{3, 3, 1, 0}}}};
  EXPECT_THROW(conv.validate(1, 2, 2), Error);
  EXPECT_THROW(PipelineSpec{{PolyLayer{0}}}.validate(1, 1, 1), Error);
}

TEST(Pipeline, TamperAtLayerTwoAbortsThere) {
  const Modulus m;
  std::mt19937_64 rng(4);
  const auto x = random_tensor(1, 2, 2, m, rng);
  const auto w = oracle::random_matrix(4, 3, m, rng, 1);
  PipelineSpec spec{{DenseLayer{w}, PolyLayer{3}}};
  for (bool overlap : {false, true}) {
    const auto cfg = config();
    const auto server = keygen(cfg.params);
    ClientSession client(secret_from(4), cfg);
    InProcessTransport inner(server);
    AdversarialTransport t(inner, ElementEdit{0, 0, 1}, Scheme::DataSeal, 4);
    t.set_target(2);
    t.set_logical_cols(3);
    client.handshake(t);
    try {
      run_pipeline(client, spec, x, t, PipelineOptions{overlap});
      FAIL() << "expected LayerRejected";
    } catch (const LayerRejected& e) {
      EXPECT_EQ(e.layer(), 2u);
      EXPECT_EQ(e.code(), Errc::LayerRejected);
      EXPECT_TRUE(e.verdict().failed_check(Check::WeightedChecksum));
    }
    EXPECT_EQ(t.results_seen(), 2u);
    EXPECT_EQ(t.tampered(), 1u);
    EXPECT_EQ(client.pending_count(), 0u);
  }
}

TEST(Pipeline, OverlapDiscardsSpeculativeLayer) {
  const Modulus m;
  std::mt19937_64 rng(5);
  const auto x = random_tensor(1, 2, 2, m, rng);
  PipelineSpec spec{{DenseLayer{oracle::random_matrix(4, 3, m, rng, 1)}, DenseLayer{oracle::random_matrix(3, 2, m, rng)},
                     DenseLayer{oracle::random_matrix(2, 2, m, rng)}}};
  const auto cfg = config();
  const auto server = keygen(cfg.params);
  ClientSession client(secret_from(5), cfg);
  InProcessTransport inner(server);
  AdversarialTransport t(inner, MatrixScale{3}, Scheme::DataSeal, 5);
  t.set_target(1);
  client.handshake(t);
  try {
    run_pipeline(client, spec, x, t, PipelineOptions{true});
    FAIL();
  } catch (const LayerRejected& e) {
    EXPECT_EQ(e.layer(), 1u);
    EXPECT_EQ(e.verdict().failed, std::vector<Check>{Check::GoldenOutput});
  }
  // layer 2 was in flight and its reply has been drained
  EXPECT_EQ(t.results_seen(), 2u);
  EXPECT_EQ(client.pending_count(), 0u);
  EXPECT_THROW(inner.receive(), Error);
}

TEST(DemoCnn, HonestRunMatchesHandWrittenForwardPass) {
  const Modulus m;
  const auto demo = DemoCnnSpec::build(1, m);
  ASSERT_EQ(demo.pipeline.layers.size(), 3u);
  EXPECT_EQ(layer_kind(demo.pipeline.layers[0]), "conv");
  EXPECT_EQ(layer_kind(demo.pipeline.layers[1]), "poly");
  EXPECT_EQ(layer_kind(demo.pipeline.layers[2]), "dense");
  const auto& conv = std::get<ConvLayer>(demo.pipeline.layers[0]);
  const auto& dense = std::get<DenseLayer>(demo.pipeline.layers[2]);
  EXPECT_EQ(conv.weights.rows(), 4u);
  EXPECT_EQ(conv.weights.cols(), 9u);
  EXPECT_EQ(dense.weights.rows(), 144u);
  EXPECT_EQ(dense.weights.cols(), 10u);
  for (auto v : conv.weights.data()) EXPECT_LE(std::abs(m.decode_signed(v)), 8);
  for (auto v : demo.input.data()) EXPECT_LE(v, 255u);
  EXPECT_EQ(DemoCnnSpec::build(1, m).input, demo.input);

  std::size_t oh = 0, ow = 0;
  auto h = oracle::conv2d(values(demo.input), 1, 8, 8, oracle::grid(conv.weights), 3, 3, 1, 0, m.value(), oh, ow);
  ASSERT_EQ(oh * ow, 36u);
  for (auto& v : h) v = oracle::pow(v, 2, m.value());
  const auto logits = dense_oracle(h, dense.weights, m.value());

  const auto params = demo_backend_params(m);
  const auto server = keygen(params);
  SessionConfig cfg;
  cfg.params = params;
  ClientSession client(secret_from(6), cfg);
  InProcessTransport t(server);
  client.handshake(t);
  const auto res = run_pipeline(client, demo.pipeline, demo.input, t);
  EXPECT_EQ(values(res.output), logits);
  EXPECT_EQ(res.output.width(), 10u);
  const auto decoded = decode_signed_values(res.output);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(m.encode_signed(decoded[i]), logits[i]);
}
