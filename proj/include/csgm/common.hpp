#pragma once

#include <cstdint>
#include <compare>
#include <stdexcept>
#include <string>

namespace csgm {

// Opaque account identifier. External string ids are expected to be mapped
// to u64 by the data producer (sidecar dictionary).
using AccountId = std::uint64_t;

// Currency amounts in integer minor units (cents). 100.00 units == 10000.
using Amount = std::int64_t;

enum class PartyId : std::uint8_t { A = 0, B = 1 };

inline PartyId other(PartyId p) { return p == PartyId::A ? PartyId::B : PartyId::A; }
inline char party_letter(PartyId p) { return p == PartyId::A ? 'A' : 'B'; }

// A transaction identifier in its original (payer, payee) orientation.
// Both institutions name a cross-institution transaction by the same pair.
struct EdgeId {
  AccountId src = 0;
  AccountId dst = 0;
  auto operator<=>(const EdgeId&) const = default;
};

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed external input (CSV rows, config files).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Structurally valid input violating a domain rule (negative amount, unknown
// node, inconsistent parameters).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Corrupt or truncated wire payloads.
class DecodeError : public Error {
 public:
  using Error::Error;
};

// Two-party coordination failures (handshake mismatch, incompatible banks).
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Parses a non-negative decimal currency value ("100", "99.5", "0.07") into
// minor units. At most two fractional digits. Throws ParseError on malformed
// text and ValidationError on negative values.
inline Amount parse_amount(const std::string& text) {
  if (text.empty()) throw ParseError("empty amount");
  std::size_t pos = 0;
  bool negative = false;
  if (text[pos] == '-') {
    negative = true;
    ++pos;
  }
  if (pos == text.size()) throw ParseError("malformed amount '" + text + "'");
  std::uint64_t units = 0;
  std::size_t digits = 0;
  while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
    units = units * 10 + static_cast<std::uint64_t>(text[pos] - '0');
    if (units > 92233720368547758ULL) throw ParseError("amount out of range '" + text + "'");
    ++pos;
    ++digits;
  }
  if (digits == 0) throw ParseError("malformed amount '" + text + "'");
  std::uint64_t cents = 0;
  if (pos < text.size()) {
    if (text[pos] != '.') throw ParseError("malformed amount '" + text + "'");
    ++pos;
    std::size_t frac = 0;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
      cents = cents * 10 + static_cast<std::uint64_t>(text[pos] - '0');
      ++pos;
      ++frac;
    }
    if (frac == 0 || frac > 2 || pos != text.size())
      throw ParseError("malformed amount '" + text + "'");
    if (frac == 1) cents *= 10;
  }
  const std::int64_t value = static_cast<std::int64_t>(units * 100 + cents);
  if (negative) throw ValidationError("negative amount '" + text + "'");
  return value;
}

// Canonical text form: minor units rendered without trailing fractional
// zeros (10000 -> "100", 9950 -> "99.5", 9955 -> "99.55").
inline std::string format_amount(Amount cents) {
  std::string out;
  if (cents < 0) {
    out += '-';
    cents = -cents;
  }
  out += std::to_string(cents / 100);
  const Amount frac = cents % 100;
  if (frac != 0) {
    out += '.';
    out += static_cast<char>('0' + frac / 10);
    if (frac % 10 != 0) out += static_cast<char>('0' + frac % 10);
  }
  return out;
}

}  // namespace csgm
