#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace manta {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = kFnvOffset) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

/// Rolling FNV-1a digest; order-sensitive.
class Digest {
 public:
  Digest& update(std::string_view bytes) {
    h_ = fnv1a64(bytes, h_);
    return *this;
  }

  std::uint64_t value() const { return h_; }
  std::string hex() const { return hex64(h_); }

 private:
  std::uint64_t h_ = kFnvOffset;
};

}  // namespace manta
