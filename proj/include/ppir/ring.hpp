#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <vector>

namespace ppir::mpc {

// Arithmetic in Z_Q with Q = 2^32, residues stored in 64-bit words.
constexpr std::uint64_t kRingBits = 32;
constexpr std::uint64_t kRingMask = 0xFFFFFFFFull;

inline std::uint64_t ring_reduce(std::uint64_t v) { return v & kRingMask; }
inline std::uint64_t ring_add(std::uint64_t a, std::uint64_t b) {
  return (a + b) & kRingMask;
}
inline std::uint64_t ring_sub(std::uint64_t a, std::uint64_t b) {
  return (a - b) & kRingMask;
}
inline std::uint64_t ring_mul(std::uint64_t a, std::uint64_t b) {
  return (a * b) & kRingMask;
}
inline std::uint64_t ring_neg(std::uint64_t a) { return (0 - a) & kRingMask; }

// Signed lift: residues >= Q/2 map to negatives.
inline std::int64_t ring_signed(std::uint64_t v) {
  v &= kRingMask;
  return v >= (1ull << 31) ? (std::int64_t)v - (std::int64_t)(1ull << 32)
                           : (std::int64_t)v;
}

inline std::uint64_t ring_uniform(std::mt19937_64& rng) {
  return rng() & kRingMask;
}

// Fixed-point encoding of reals: encode(x) = round(x * 2^f) mod Q. Signed
// range is [-2^(31-f), 2^(31-f)).
struct FixedPointCodec {
  int frac_bits = 16;

  double resolution() const { return std::ldexp(1.0, -frac_bits); }
  double range() const { return std::ldexp(1.0, 31 - frac_bits); }

  std::uint64_t encode(double x) const;
  double decode(std::uint64_t v) const;
  // decode for values carrying scale 2^(2f) (an untruncated product)
  double decode2(std::uint64_t v) const;
};

// One party's additive share of a tensor of ring elements.
struct Share {
  int party_id = 0;  // 1 or 2
  std::vector<std::size_t> shape;
  std::vector<std::uint64_t> payload;

  std::size_t size() const { return payload.size(); }
};

Share make_share(int party_id, std::vector<std::size_t> shape,
                 std::vector<std::uint64_t> payload);

// Splits a secret tensor: share1 uniform, share2 = secret - share1 mod Q.
std::pair<Share, Share> make_shares(const std::vector<std::uint64_t>& secret,
                                    std::vector<std::size_t> shape,
                                    std::mt19937_64& rng);

std::vector<std::uint64_t> reconstruct(const Share& a, const Share& b);

// Local share addition (no communication).
Share share_add(const Share& x, const Share& y);
Share share_sub(const Share& x, const Share& y);

// Beaver triple for the row-broadcast tensor product of an (n x m) matrix
// against an (n x k) matrix: a is n*m, b is n*k, c is n*m*k with
// c[i,j,l] = a[i,j] * b[i,l]. m = k = 1 is the plain elementwise case.
struct TripleShare {
  std::uint64_t id = 0;
  Share a, b, c;
};

// Shares of (r, floor(r / 2^f)) with r uniform in [0, 2^31); used by the
// dealer-assisted truncation of scale-2^(2f) products.
struct TruncPairShare {
  std::uint64_t id = 0;
  Share r, r_hi;
};

// Trusted dealer: generates correlated randomness for both parties from a
// seeded RNG. Lives in-process; its transfers are preprocessing and are not
// charged to the online ledger. Randomness is handed out strictly in order;
// both parties must request matching shapes, and the session enforces that
// every triple id is consumed at most once.
class Dealer {
 public:
  Dealer(std::uint64_t seed, std::uint64_t element_budget);

  TripleShare take_triple(int party_id, std::size_t rows, std::size_t cols);
  TruncPairShare take_trunc_pair(int party_id, std::size_t count,
                                 int frac_bits);

  std::uint64_t used() const;
  std::uint64_t budget() const { return budget_; }

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
  std::uint64_t budget_;
};

}  // namespace ppir::mpc
