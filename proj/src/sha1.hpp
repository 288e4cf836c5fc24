#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <string>

namespace dipsim::detail {

// Minimal SHA-1 (FIPS 180-1), enough for content hashing of config blobs.
class Sha1 {
public:
  Sha1() = default;

  void update(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    len_ += n;
    while (n > 0) {
      std::size_t take = std::min(n, std::size_t(64) - buf_len_);
      std::memcpy(buf_ + buf_len_, p, take);
      buf_len_ += take;
      p += take;
      n -= take;
      if (buf_len_ == 64) {
        process();
        buf_len_ = 0;
      }
    }
  }

  std::string hex() {
    std::uint64_t bits = len_ * 8;
    const std::uint8_t pad = 0x80, zero = 0;
    update(&pad, 1);
    while (buf_len_ != 56) update(&zero, 1);
    std::uint8_t lenb[8];
    for (int i = 0; i < 8; ++i) lenb[i] = static_cast<std::uint8_t>(bits >> (56 - 8 * i));
    update(lenb, 8);
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (std::uint32_t v : h_) {
      for (int i = 28; i >= 0; i -= 4) out += digits[(v >> i) & 0xF];
    }
    return out;
  }

private:
  static std::uint32_t rotl(std::uint32_t v, int s) { return (v << s) | (v >> (32 - s)); }

  void process() {
    std::uint32_t w[80];
    for (int i = 0; i < 16; ++i) {
      w[i] = (std::uint32_t(buf_[4 * i]) << 24) | (std::uint32_t(buf_[4 * i + 1]) << 16) |
             (std::uint32_t(buf_[4 * i + 2]) << 8) | std::uint32_t(buf_[4 * i + 3]);
    }
    for (int i = 16; i < 80; ++i) w[i] = rotl(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);
    std::uint32_t a = h_[0], b = h_[1], c = h_[2], d = h_[3], e = h_[4];
    for (int i = 0; i < 80; ++i) {
      std::uint32_t f, k;
      if (i < 20) {
        f = (b & c) | (~b & d);
        k = 0x5A827999;
      } else if (i < 40) {
        f = b ^ c ^ d;
        k = 0x6ED9EBA1;
      } else if (i < 60) {
        f = (b & c) | (b & d) | (c & d);
        k = 0x8F1BBCDC;
      } else {
        f = b ^ c ^ d;
        k = 0xCA62C1D6;
      }
      std::uint32_t t = rotl(a, 5) + f + e + k + w[i];
      e = d;
      d = c;
      c = rotl(b, 30);
      b = a;
      a = t;
    }
    h_[0] += a;
    h_[1] += b;
    h_[2] += c;
    h_[3] += d;
    h_[4] += e;
  }

  std::uint32_t h_[5] = {0x67452301, 0xEFCDAB89, 0x98BADCFE, 0x10325476, 0xC3D2E1F0};
  std::uint8_t buf_[64] = {};
  std::size_t buf_len_ = 0;
  std::uint64_t len_ = 0;
};

}  // namespace dipsim::detail
