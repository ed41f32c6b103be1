#include "dataseal/wire.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <optional>
#include <string>

namespace dataseal {

namespace {

constexpr std::uint8_t kMagic[4] = {'D', 'S', 'V', '1'};

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }

  void matrix(const Matrix& m) {
    u32(static_cast<std::uint32_t>(m.rows()));
    u32(static_cast<std::uint32_t>(m.cols()));
    for (auto v : m.data()) u64(v);
  }

  void encmat(const EncryptedMatrix& e) {
    u32(static_cast<std::uint32_t>(e.row_cts.size()));
    for (const auto& ct : e.row_cts) {
      u32(static_cast<std::uint32_t>(ct.slots.size()));
      u16(static_cast<std::uint16_t>(ct.depth));
      for (auto v : ct.slots) u64(v);
    }
  }

  std::vector<std::uint8_t> take() { return std::move(buf_); }
  std::size_t size() const noexcept { return buf_.size(); }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  Reader(std::span<const std::uint8_t> data, const WireContext& ctx) : data_(data), ctx_(ctx) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }

  std::size_t remaining() const noexcept { return data_.size() - pos_; }

  void need(std::size_t n) const {
    if (remaining() < n) throw Error(Errc::Truncated, "payload ends early");
  }

  const Modulus& modulus() const {
    if (!ctx_.modulus) throw Error(Errc::NotNegotiated, "no modulus negotiated for this session");
    return *ctx_.modulus;
  }

  RingScalar value() {
    const std::uint64_t v = u64();
    if (!modulus().contains(v)) throw Error(Errc::ValueOutOfRange, std::to_string(v) + " >= modulus");
    return v;
  }

  Matrix matrix() {
    const Modulus& mod = modulus();
    const std::uint32_t rows = u32();
    const std::uint32_t cols = u32();
    const std::uint64_t count = static_cast<std::uint64_t>(rows) * cols;
    if (count > remaining() / 8) throw Error(Errc::Truncated, "matrix body ends early");
    std::vector<RingScalar> data(count);
    for (auto& v : data) v = value();
    return Matrix(rows, cols, mod, std::move(data));
  }

  EncryptedMatrix encmat() {
    const std::uint32_t count = u32();
    if (count == 0) throw Error(Errc::MalformedJob, "encrypted matrix without ciphertexts");
    need(static_cast<std::uint64_t>(count) * 6);
    EncryptedMatrix e;
    e.row_cts.reserve(count);
    std::optional<std::uint32_t> width;
    for (std::uint32_t i = 0; i < count; ++i) {
      const std::uint32_t slots = u32();
      if (slots < 2 || !std::has_single_bit(slots)) {
        throw Error(Errc::ValueOutOfRange, "slot_count " + std::to_string(slots) + " is not a power of two");
      }
      if (ctx_.slot_count && slots != *ctx_.slot_count) {
        throw Error(Errc::ValueOutOfRange, "slot_count " + std::to_string(slots) + " differs from session");
      }
      if (width && slots != *width) throw Error(Errc::ValueOutOfRange, "ciphertexts differ in slot count");
      width = slots;
      Ciphertext ct;
      ct.depth = u16();
      need(static_cast<std::uint64_t>(slots) * 8);
      ct.slots.resize(slots);
      for (auto& v : ct.slots) v = value();
      e.row_cts.push_back(std::move(ct));
    }
    e.rows = count;
    e.cols = *width;
    return e;
  }

  void expect_end() const {
    if (remaining() != 0) throw Error(Errc::LengthMismatch, std::to_string(remaining()) + " trailing payload bytes");
  }

  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::uint64_t le(std::size_t n) {
    need(n);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += n;
    return v;
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
  const WireContext& ctx_;
};

void check_job_shape(const JobMsg& job) {
  const auto enc = job.encrypted.size();
  const auto pub = job.public_operands.size();
  bool ok = false;
  switch (job.op) {
    case OpKind::Mul: ok = job.exponent == 0 && ((enc == 1 && pub == 1) || (enc == 2 && pub == 0)); break;
    case OpKind::Add: ok = job.exponent == 0 && enc == 2 && pub == 0; break;
    case OpKind::Poly: ok = job.exponent >= 1 && enc == 1 && pub == 0; break;
  }
  if (!ok) throw Error(Errc::MalformedJob, "operands do not match op " + std::string(op_name(job.op)));
}

}  // namespace

MsgType message_type(const Message& m) noexcept {
  return static_cast<MsgType>(m.index() + 1);
}

std::vector<std::uint8_t> encode_frame(const Message& msg) {
  Writer body;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, HelloMsg>) {
          body.u16(m.version);
          body.u32(m.slot_count);
          body.u64(m.modulus);
        } else if constexpr (std::is_same_v<T, JobMsg>) {
          body.u64(m.job_id);
          body.u8(static_cast<std::uint8_t>(m.op));
          body.u32(m.exponent);
          body.u8(static_cast<std::uint8_t>(m.encrypted.size()));
          for (const auto& e : m.encrypted) body.encmat(e);
          body.u8(static_cast<std::uint8_t>(m.public_operands.size()));
          for (const auto& p : m.public_operands) body.matrix(p);
        } else if constexpr (std::is_same_v<T, ResultMsg>) {
          body.u64(m.job_id);
          body.encmat(m.result);
        } else {
          body.u64(m.job_id);
          body.u16(static_cast<std::uint16_t>(m.code));
          const std::size_t len = std::min<std::size_t>(m.text.size(), 0xffff);
          body.u16(static_cast<std::uint16_t>(len));
          body.bytes({reinterpret_cast<const std::uint8_t*>(m.text.data()), len});
        }
      },
      msg);
  if (body.size() > kMaxPayload) throw Error(Errc::FrameTooLarge, "payload exceeds 64 MiB");
  auto payload = body.take();
  Writer frame;
  frame.bytes(kMagic);
  frame.u8(static_cast<std::uint8_t>(message_type(msg)));
  frame.u32(static_cast<std::uint32_t>(payload.size()));
  frame.bytes(payload);
  return frame.take();
}

FrameHeader decode_header(std::span<const std::uint8_t> header) {
  if (header.size() < kHeaderSize) throw Error(Errc::Truncated, "frame header is 9 bytes");
  if (std::memcmp(header.data(), kMagic, 4) != 0) throw Error(Errc::BadMagic, "frame does not start with DSV1");
  const std::uint8_t type = header[4];
  if (type < 1 || type > 4) throw Error(Errc::UnknownType, "message type " + std::to_string(type));
  std::uint32_t len = 0;
  for (int i = 0; i < 4; ++i) len |= static_cast<std::uint32_t>(header[5 + static_cast<std::size_t>(i)]) << (8 * i);
  if (len > kMaxPayload) throw Error(Errc::FrameTooLarge, "payload_len " + std::to_string(len));
  return {static_cast<MsgType>(type), len};
}

Message decode_payload(MsgType type, std::span<const std::uint8_t> payload, const WireContext& ctx) {
  Reader r(payload, ctx);
  Message out;
  switch (type) {
    case MsgType::Hello: {
      HelloMsg h;
      h.version = r.u16();
      h.slot_count = r.u32();
      h.modulus = r.u64();
      out = h;
      break;
    }
    case MsgType::Job: {
      JobMsg j;
      j.job_id = r.u64();
      const std::uint8_t op = r.u8();
      if (op < 1 || op > 3) throw Error(Errc::MalformedJob, "unknown op " + std::to_string(op));
      j.op = static_cast<OpKind>(op);
      j.exponent = r.u32();
      const std::uint8_t n_enc = r.u8();
      if (n_enc > 2) throw Error(Errc::MalformedJob, "too many encrypted operands");
      for (std::uint8_t i = 0; i < n_enc; ++i) j.encrypted.push_back(r.encmat());
      const std::uint8_t n_pub = r.u8();
      if (n_pub > 1) throw Error(Errc::MalformedJob, "too many public operands");
      for (std::uint8_t i = 0; i < n_pub; ++i) j.public_operands.push_back(r.matrix());
      check_job_shape(j);
      out = std::move(j);
      break;
    }
    case MsgType::Result: {
      ResultMsg res;
      res.job_id = r.u64();
      res.result = r.encmat();
      out = std::move(res);
      break;
    }
    case MsgType::Error: {
      ErrorMsg e;
      e.job_id = r.u64();
      const std::uint16_t code = r.u16();
      if (!errc_is_registered(code)) throw Error(Errc::ValueOutOfRange, "unregistered error code " + std::to_string(code));
      e.code = static_cast<Errc>(code);
      const std::uint16_t len = r.u16();
      const auto text = r.take(len);
      e.text.assign(text.begin(), text.end());
      out = std::move(e);
      break;
    }
    default:
      throw Error(Errc::UnknownType, "message type " + std::to_string(static_cast<int>(type)));
  }
  r.expect_end();
  return out;
}

Message decode_frame(std::span<const std::uint8_t> bytes, const WireContext& ctx) {
  const FrameHeader h = decode_header(bytes);
  const std::size_t body = bytes.size() - kHeaderSize;
  if (body < h.payload_len) {
    throw Error(Errc::Truncated, "payload_len " + std::to_string(h.payload_len) + " but " + std::to_string(body) +
                                     " bytes follow");
  }
  if (body > h.payload_len) {
    throw Error(Errc::LengthMismatch, std::to_string(body - h.payload_len) + " bytes beyond payload_len");
  }
  return decode_payload(h.type, bytes.subspan(kHeaderSize), ctx);
}

EncryptedMatrix with_logical_cols(EncryptedMatrix e, std::size_t cols) {
  for (const auto& ct : e.row_cts) {
    if (cols > ct.slots.size()) throw Error(Errc::DimensionMismatch, "logical width exceeds slot count");
  }
  e.cols = cols;
  return e;
}

}  // namespace dataseal
