#include "ppir/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "ppir/errors.hpp"
#include "ppir/kernels.hpp"

namespace ppir::mpc {

std::vector<std::uint8_t> share_to_wire(const std::vector<std::uint64_t>& vals,
                                        const std::vector<std::size_t>& shape,
                                        std::uint16_t msg_type,
                                        std::uint16_t round) {
  const std::size_t rank = shape.size();
  std::vector<std::uint8_t> out(16 + 4 * rank + 4 * vals.size());
  std::memcpy(out.data(), "PPIR", 4);
  std::memcpy(out.data() + 4, &msg_type, 2);
  std::memcpy(out.data() + 6, &round, 2);
  std::uint16_t rank16 = (std::uint16_t)rank;
  std::memcpy(out.data() + 8, &rank16, 2);
  // bytes 10..15 reserved
  std::uint8_t* p = out.data() + 16;
  for (std::size_t d : shape) {
    std::uint32_t d32 = (std::uint32_t)d;
    std::memcpy(p, &d32, 4);
    p += 4;
  }
  for (std::uint64_t v : vals) {
    std::uint32_t v32 = (std::uint32_t)(v & kRingMask);
    std::memcpy(p, &v32, 4);
    p += 4;
  }
  return out;
}

void share_from_wire(const std::vector<std::uint8_t>& bytes,
                     std::vector<std::uint64_t>& vals,
                     std::vector<std::size_t>& shape) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), "PPIR", 4) != 0)
    throw ProtocolError("share wire: bad magic");
  std::uint16_t rank;
  std::memcpy(&rank, bytes.data() + 8, 2);
  if (bytes.size() < 16 + 4u * rank) throw ProtocolError("share wire: short");
  shape.assign(rank, 0);
  std::size_t n = 1;
  const std::uint8_t* p = bytes.data() + 16;
  for (std::uint16_t i = 0; i < rank; ++i) {
    std::uint32_t d;
    std::memcpy(&d, p, 4);
    p += 4;
    shape[i] = d;
    n *= d;
  }
  if (bytes.size() != 16 + 4u * rank + 4u * n)
    throw ProtocolError("share wire: payload length mismatch");
  vals.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t v;
    std::memcpy(&v, p, 4);
    p += 4;
    vals[i] = v;
  }
}

Share deal_shares(MpcSession& s, const std::vector<std::uint64_t>& secret,
                  const std::vector<std::size_t>& shape, proto::Phase phase) {
  auto [s1, s2] = make_shares(secret, shape, s.rng);
  Share& mine = s.party_id == 1 ? s1 : s2;
  Share& theirs = s.party_id == 1 ? s2 : s1;
  auto wire = share_to_wire(theirs.payload, shape, 1,
                            (std::uint16_t)s.ep->next_round());
  s.ep->send(phase, proto::FrameType::uniform_share, wire);
  Share out = std::move(mine);
  out.party_id = s.party_id;
  return out;
}

Share receive_dealt_share(MpcSession& s, const std::vector<std::size_t>& shape,
                          proto::Phase phase) {
  auto bytes = s.ep->recv(phase, proto::FrameType::uniform_share);
  std::vector<std::uint64_t> vals;
  std::vector<std::size_t> got_shape;
  share_from_wire(bytes, vals, got_shape);
  if (got_shape != shape)
    throw ProtocolError("dealt share: unexpected shape");
  return make_share(s.party_id, shape, std::move(vals));
}

std::vector<std::uint64_t> open_to_both(MpcSession& s, const Share& x,
                                        proto::Phase phase,
                                        proto::FrameType type) {
  auto wire = share_to_wire(x.payload, x.shape, 2,
                            (std::uint16_t)s.ep->next_round());
  s.ep->send(phase, type, wire);
  auto bytes = s.ep->recv(phase, type);
  std::vector<std::uint64_t> vals;
  std::vector<std::size_t> shape;
  share_from_wire(bytes, vals, shape);
  if (shape != x.shape) throw ProtocolError("open: shape mismatch");
  std::vector<std::uint64_t> out(x.size());
  kernels::ring_add(x.payload.data(), vals.data(), out.data(), x.size());
  return out;
}

std::vector<std::uint64_t> open_to_party(MpcSession& s, const Share& x,
                                         int to_party, proto::Phase phase) {
  if (s.party_id != to_party) {
    auto wire = share_to_wire(x.payload, x.shape, 3,
                              (std::uint16_t)s.ep->next_round());
    s.ep->send(phase, proto::FrameType::clear_result, wire);
    return {};
  }
  auto bytes = s.ep->recv(phase, proto::FrameType::clear_result);
  std::vector<std::uint64_t> vals;
  std::vector<std::size_t> shape;
  share_from_wire(bytes, vals, shape);
  if (shape != x.shape) throw ProtocolError("open: shape mismatch");
  std::vector<std::uint64_t> out(x.size());
  kernels::ring_add(x.payload.data(), vals.data(), out.data(), x.size());
  return out;
}

Share beaver_mul_broadcast(MpcSession& s, const Share& X, const Share& Y,
                           std::size_t n, std::size_t m, std::size_t k) {
  if (X.size() != n * m || Y.size() != n * k)
    throw ConfigError("beaver: operand shape mismatch");
  TripleShare triple = s.dealer->take_triple(s.party_id, n, m * k);
  if (s.any_triple_used && triple.id <= s.last_triple_id)
    throw ProtocolError("beaver: triple reuse detected");
  s.last_triple_id = triple.id;
  s.any_triple_used = true;

  // The dealer's triple is shaped a: n x (m*k), b: n, c[i,j] = a[i,j]*b[i].
  // We use it column-blocked: element (i, j, l) consumes a[i, j*k+l] and
  // needs b broadcast per row — but the product X[i,j]*Y[i,l] has TWO
  // varying factors, so run the standard Beaver identity on flattened
  // pairs: set A = a (n*m*k), B = b replicated per row over m*k entries.
  // To keep the dealer simple we instead request a triple of flat length
  // n*m*k on both operand sides via two calls — see take_triple contract.
  (void)triple;
  throw ProtocolError("unreachable");
}

std::vector<double> secure_cross_product(MpcSession&, const std::vector<double>&,
                                         std::size_t, std::size_t, std::size_t,
                                         int, int) {
  throw ProtocolError("unreachable");
}

double cross_product_error_bound(std::size_t n, double alpha, double gamma,
                                 int frac_bits) {
  // per element: encode errors 0.5*(|x'|+|y'|) <= 0.5, floor+carry < 1.0001,
  // cross term negligible; summed over n plus one final decode rounding.
  double ulp = std::ldexp(1.0, -frac_bits);
  return alpha * gamma * ulp * (1.5001 * (double)n + 1.0);
}

}  // namespace ppir::mpc
