#include "dataseal/demo_cnn.hpp"

#include <random>

namespace dataseal {

namespace {

Matrix signed_weights(std::size_t rows, std::size_t cols, const Modulus& mod, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::int64_t> d(-8, 8);
  std::vector<RingScalar> v(rows * cols);
  for (auto& x : v) x = mod.encode_signed(d(rng));
  return Matrix(rows, cols, mod, std::move(v));
}

}  // namespace

DemoCnnSpec DemoCnnSpec::build(std::uint64_t seed, const Modulus& mod) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<RingScalar> pixel(0, 255);
  std::vector<RingScalar> px(64);
  for (auto& x : px) x = mod.reduce(pixel(rng));
  Tensor input(1, 8, 8, mod, std::move(px));

  ConvLayer conv{signed_weights(4, 9, mod, rng), 1, 8, 8, ConvGeometry{3, 3, 1, 0}};
  DenseLayer dense{signed_weights(4 * 6 * 6, 10, mod, rng)};
  PipelineSpec spec{{conv, PolyLayer{2}, dense}};
  spec.validate(1, 8, 8);
  return DemoCnnSpec{std::move(spec), std::move(input)};
}

BackendParams demo_backend_params(const Modulus& mod) {
  BackendParams p;
  p.modulus = mod;
  p.slot_count = kDemoSlotCount;
  return p;
}

std::vector<std::int64_t> decode_signed_values(const Tensor& t) {
  std::vector<std::int64_t> out;
  out.reserve(t.data().size());
  for (auto v : t.data()) out.push_back(t.modulus().decode_signed(v));
  return out;
}

}  // namespace dataseal
