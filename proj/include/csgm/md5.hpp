#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

namespace csgm {

// 128-bit band fingerprint, byte order as produced by the digest.
struct Fingerprint {
  std::array<std::uint8_t, 16> bytes{};

  auto operator<=>(const Fingerprint&) const = default;

  // Little-endian views of the two digest halves, used for Bloom probing.
  std::uint64_t lo64() const {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[static_cast<std::size_t>(i)];
    return v;
  }
  std::uint64_t hi64() const {
    std::uint64_t v = 0;
    for (int i = 15; i >= 8; --i) v = (v << 8) | bytes[static_cast<std::size_t>(i)];
    return v;
  }

  std::string hex() const {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(32);
    for (std::uint8_t b : bytes) {
      out += digits[b >> 4];
      out += digits[b & 0xf];
    }
    return out;
  }
};

// MD5 (RFC 1321). Used as the band fingerprint digest; implemented here so
// the output is identical on every platform and build.
class Md5 {
 public:
  Md5() { reset(); }

  void reset() {
    state_ = {0x67452301u, 0xefcdab89u, 0x98badcfeu, 0x10325476u};
    length_ = 0;
    buffered_ = 0;
  }

  void update(const void* data, std::size_t len) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    length_ += len;
    while (len > 0) {
      const std::size_t take = std::min<std::size_t>(64 - buffered_, len);
      std::memcpy(buffer_.data() + buffered_, p, take);
      buffered_ += take;
      p += take;
      len -= take;
      if (buffered_ == 64) {
        process(buffer_.data());
        buffered_ = 0;
      }
    }
  }

  Fingerprint finish() {
    const std::uint64_t bit_length = length_ * 8;
    static const std::uint8_t padding[64] = {0x80};
    const std::size_t pad_len = (buffered_ < 56) ? 56 - buffered_ : 120 - buffered_;
    update(padding, pad_len);
    std::uint8_t length_bytes[8];
    for (int i = 0; i < 8; ++i)
      length_bytes[i] = static_cast<std::uint8_t>(bit_length >> (8 * i));
    update(length_bytes, 8);
    Fingerprint out;
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j)
        out.bytes[4 * i + j] = static_cast<std::uint8_t>(state_[i] >> (8 * j));
    reset();
    return out;
  }

  static Fingerprint digest(const void* data, std::size_t len) {
    Md5 md;
    md.update(data, len);
    return md.finish();
  }

 private:
  static std::uint32_t rotl(std::uint32_t x, int c) { return (x << c) | (x >> (32 - c)); }

  void process(const std::uint8_t* chunk) {
    static constexpr std::array<std::uint32_t, 64> k = {
        0xd76aa478u, 0xe8c7b756u, 0x242070dbu, 0xc1bdceeeu, 0xf57c0fafu, 0x4787c62au,
        0xa8304613u, 0xfd469501u, 0x698098d8u, 0x8b44f7afu, 0xffff5bb1u, 0x895cd7beu,
        0x6b901122u, 0xfd987193u, 0xa679438eu, 0x49b40821u, 0xf61e2562u, 0xc040b340u,
        0x265e5a51u, 0xe9b6c7aau, 0xd62f105du, 0x02441453u, 0xd8a1e681u, 0xe7d3fbc8u,
        0x21e1cde6u, 0xc33707d6u, 0xf4d50d87u, 0x455a14edu, 0xa9e3e905u, 0xfcefa3f8u,
        0x676f02d9u, 0x8d2a4c8au, 0xfffa3942u, 0x8771f681u, 0x6d9d6122u, 0xfde5380cu,
        0xa4beea44u, 0x4bdecfa9u, 0xf6bb4b60u, 0xbebfbc70u, 0x289b7ec6u, 0xeaa127fau,
        0xd4ef3085u, 0x04881d05u, 0xd9d4d039u, 0xe6db99e5u, 0x1fa27cf8u, 0xc4ac5665u,
        0xf4292244u, 0x432aff97u, 0xab9423a7u, 0xfc93a039u, 0x655b59c3u, 0x8f0ccc92u,
        0xffeff47du, 0x85845dd1u, 0x6fa87e4fu, 0xfe2ce6e0u, 0xa3014314u, 0x4e0811a1u,
        0xf7537e82u, 0xbd3af235u, 0x2ad7d2bbu, 0xeb86d391u};
    static constexpr std::array<int, 64> s = {
        7, 12, 17, 22, 7, 12, 17, 22, 7, 12, 17, 22, 7, 12, 17, 22,
        5, 9,  14, 20, 5, 9,  14, 20, 5, 9,  14, 20, 5, 9,  14, 20,
        4, 11, 16, 23, 4, 11, 16, 23, 4, 11, 16, 23, 4, 11, 16, 23,
        6, 10, 15, 21, 6, 10, 15, 21, 6, 10, 15, 21, 6, 10, 15, 21};

    std::uint32_t m[16];
    for (std::size_t i = 0; i < 16; ++i)
      m[i] = static_cast<std::uint32_t>(chunk[4 * i]) |
             (static_cast<std::uint32_t>(chunk[4 * i + 1]) << 8) |
             (static_cast<std::uint32_t>(chunk[4 * i + 2]) << 16) |
             (static_cast<std::uint32_t>(chunk[4 * i + 3]) << 24);

    std::uint32_t a = state_[0], b = state_[1], c = state_[2], d = state_[3];
    for (int i = 0; i < 64; ++i) {
      std::uint32_t f;
      int g;
      if (i < 16) {
        f = (b & c) | (~b & d);
        g = i;
      } else if (i < 32) {
        f = (d & b) | (~d & c);
        g = (5 * i + 1) % 16;
      } else if (i < 48) {
        f = b ^ c ^ d;
        g = (3 * i + 5) % 16;
      } else {
        f = c ^ (b | ~d);
        g = (7 * i) % 16;
      }
      const std::uint32_t tmp = d;
      d = c;
      c = b;
      b = b + rotl(a + f + k[static_cast<std::size_t>(i)] + m[g], s[static_cast<std::size_t>(i)]);
      a = tmp;
    }
    state_[0] += a;
    state_[1] += b;
    state_[2] += c;
    state_[3] += d;
  }

  std::array<std::uint32_t, 4> state_;
  std::array<std::uint8_t, 64> buffer_;
  std::uint64_t length_ = 0;
  std::size_t buffered_ = 0;
};

struct FingerprintHash {
  std::size_t operator()(const Fingerprint& fp) const {
    std::uint64_t h = fp.lo64() * 0x9e3779b97f4a7c15ULL;
    h ^= fp.hi64() + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

}  // namespace csgm
