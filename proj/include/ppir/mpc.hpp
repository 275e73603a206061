#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "ppir/channel.hpp"
#include "ppir/ring.hpp"

namespace ppir::mpc {

// Two-party SPDZ-style online phase against a trusted in-process dealer.
// Both parties run the same functions from their own threads; the protocol
// is a fixed sequence of symmetric simultaneous sends, so it is deadlock
// free on an ordered duplex channel.
struct MpcSession {
  int party_id = 0;
  proto::PartyEndpoint* ep = nullptr;
  Dealer* dealer = nullptr;
  FixedPointCodec codec;
  std::mt19937_64 rng{0};
  std::uint64_t last_triple_id = 0;  // enforces single use
  bool any_triple_used = false;

  // Inner products sum truncated scale-2^f terms; the ring holds the sum
  // for lengths up to this bound with |normalized operand| <= 0.5.
  static constexpr std::size_t kMaxInnerLength = 100000;
};

// Wire helpers for the u32 share format: 16-byte header (magic "PPIR",
// message type u16, round u16, shape rank u16, 6 reserved bytes), then one
// u32 per dim, then little-endian u32 residues.
std::vector<std::uint8_t> share_to_wire(const std::vector<std::uint64_t>& vals,
                                        const std::vector<std::size_t>& shape,
                                        std::uint16_t msg_type,
                                        std::uint16_t round);
void share_from_wire(const std::vector<std::uint8_t>& bytes,
                     std::vector<std::uint64_t>& vals,
                     std::vector<std::size_t>& shape);

// Splits `secret` and hands the peer its half (sent under `phase`).
Share deal_shares(MpcSession& s, const std::vector<std::uint64_t>& secret,
                  const std::vector<std::size_t>& shape, proto::Phase phase);
// Receives the local half of the peer's secret.
Share receive_dealt_share(MpcSession& s, const std::vector<std::size_t>& shape,
                          proto::Phase phase);

// Opens a shared value to both parties (symmetric exchange).
std::vector<std::uint64_t> open_to_both(MpcSession& s, const Share& x,
                                        proto::Phase phase,
                                        proto::FrameType type);
// Opens toward one party only; the other returns an empty vector.
std::vector<std::uint64_t> open_to_party(MpcSession& s, const Share& x,
                                         int to_party, proto::Phase phase);

// Elementwise Beaver product with column broadcast: X shaped n x m,
// Y shaped n x k, result share shaped n x m x k holding fixed-point
// products truncated back to scale 2^f (dealer-assisted truncation with a
// bounded +1ulp carry). Requires |signed product| < 2^30, i.e. normalized
// operands. Two broadcast rounds (beaver open, truncation open).
Share beaver_mul_broadcast(MpcSession& s, const Share& X, const Share& Y,
                           std::size_t n, std::size_t m, std::size_t k);

// Local reduction over the leading axis: (n, m, k) -> (m, k).
Share sum_over_rows(const Share& x, std::size_t n, std::size_t m,
                    std::size_t k);

// Full owned-operand product Z = X^T * Y where X: n x m lives at
// `x_owner` and Y: n x k at the other party. `local` is this party's
// operand (row-major). Values are normalized by public per-operand scales
// exchanged in-protocol; the opened result is decoded back to reals.
// Returns the m x k result at `open_to`, empty elsewhere.
std::vector<double> secure_cross_product(MpcSession& s,
                                         const std::vector<double>& local,
                                         std::size_t n, std::size_t m,
                                         std::size_t k, int x_owner,
                                         int open_to);

// Conservative error bound for one decoded inner product of length n with
// normalized summands (|x'|,|y'| <= 0.5), scaled back by alpha*gamma.
double cross_product_error_bound(std::size_t n, double alpha, double gamma,
                                 int frac_bits);

}  // namespace ppir::mpc
