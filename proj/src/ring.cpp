#include "ppir/ring.hpp"

#include <deque>
#include <mutex>

#include "ppir/errors.hpp"
#include "ppir/kernels.hpp"

namespace ppir::mpc {

std::uint64_t FixedPointCodec::encode(double x) const {
  if (!(std::fabs(x) < range()))
    throw NumericError("fp_encode: value " + std::to_string(x) +
                       " out of range for f=" + std::to_string(frac_bits));
  double scaled = x * std::ldexp(1.0, frac_bits);
  long long r = std::llround(scaled);
  return (std::uint64_t)r & kRingMask;
}

double FixedPointCodec::decode(std::uint64_t v) const {
  return (double)ring_signed(v) * resolution();
}

double FixedPointCodec::decode2(std::uint64_t v) const {
  return (double)ring_signed(v) * std::ldexp(1.0, -2 * frac_bits);
}

Share make_share(int party_id, std::vector<std::size_t> shape,
                 std::vector<std::uint64_t> payload) {
  std::size_t n = 1;
  for (std::size_t s : shape) n *= s;
  if (n != payload.size()) throw ConfigError("share: shape/payload mismatch");
  Share s;
  s.party_id = party_id;
  s.shape = std::move(shape);
  s.payload = std::move(payload);
  return s;
}

std::pair<Share, Share> make_shares(const std::vector<std::uint64_t>& secret,
                                    std::vector<std::size_t> shape,
                                    std::mt19937_64& rng) {
  std::vector<std::uint64_t> p1(secret.size()), p2(secret.size());
  for (std::size_t i = 0; i < secret.size(); ++i) {
    p1[i] = ring_uniform(rng);
    p2[i] = ring_sub(secret[i], p1[i]);
  }
  return {make_share(1, shape, std::move(p1)),
          make_share(2, std::move(shape), std::move(p2))};
}

std::vector<std::uint64_t> reconstruct(const Share& a, const Share& b) {
  if (a.size() != b.size()) throw ConfigError("reconstruct: size mismatch");
  std::vector<std::uint64_t> out(a.size());
  kernels::ring_add(a.payload.data(), b.payload.data(), out.data(), a.size());
  return out;
}

namespace {
void check_pair(const Share& x, const Share& y, const char* what) {
  if (x.party_id != y.party_id)
    throw ConfigError(std::string(what) + ": party mismatch");
  if (x.shape != y.shape)
    throw ConfigError(std::string(what) + ": shape mismatch");
}
}  // namespace

Share share_add(const Share& x, const Share& y) {
  check_pair(x, y, "share_add");
  Share out = x;
  kernels::ring_add(x.payload.data(), y.payload.data(), out.payload.data(),
                    x.size());
  return out;
}

Share share_sub(const Share& x, const Share& y) {
  check_pair(x, y, "share_sub");
  Share out = x;
  kernels::ring_sub(x.payload.data(), y.payload.data(), out.payload.data(),
                    x.size());
  return out;
}

// ------------------------------------------------------------------ dealer

struct Dealer::Impl {
  std::mutex mu;
  std::mt19937_64 rng;
  std::uint64_t budget = 0;
  std::uint64_t used = 0;

  struct PendingTriple {
    std::uint64_t id;
    std::size_t rows, cols;
    TripleShare half[2];
    bool taken[2] = {false, false};
  };
  struct PendingTrunc {
    std::uint64_t id;
    std::size_t count;
    int frac_bits;
    TruncPairShare half[2];
    bool taken[2] = {false, false};
  };
  std::deque<PendingTriple> triples;
  std::uint64_t triple_front_id = 0, triple_next_id = 0;
  std::uint64_t triple_cursor[2] = {0, 0};
  std::deque<PendingTrunc> truncs;
  std::uint64_t trunc_front_id = 0, trunc_next_id = 0;
  std::uint64_t trunc_cursor[2] = {0, 0};

  void charge(std::size_t elems) {
    used += elems;
    if (used > budget)
      throw ProtocolError(
          "dealer: triple pool exhausted (budget " + std::to_string(budget) +
          " elements); regenerate with a larger preprocessing budget");
  }

  PendingTriple gen_triple(std::size_t rows, std::size_t cols) {
    charge(rows * cols);
    PendingTriple p;
    p.id = triple_next_id++;
    p.rows = rows;
    p.cols = cols;
    std::vector<std::uint64_t> a(rows * cols), b(rows), c(rows * cols);
    for (auto& v : a) v = ring_uniform(rng);
    for (auto& v : b) v = ring_uniform(rng);
    for (std::size_t k = 0; k < rows; ++k)
      for (std::size_t j = 0; j < cols; ++j)
        c[k * cols + j] = ring_mul(a[k * cols + j], b[k]);
    auto [a1, a2] = make_shares(a, {rows, cols}, rng);
    auto [b1, b2] = make_shares(b, {rows}, rng);
    auto [c1, c2] = make_shares(c, {rows, cols}, rng);
    p.half[0] = TripleShare{p.id, std::move(a1), std::move(b1), std::move(c1)};
    p.half[1] = TripleShare{p.id, std::move(a2), std::move(b2), std::move(c2)};
    return p;
  }

  PendingTrunc gen_trunc(std::size_t count, int frac_bits) {
    charge(count);
    PendingTrunc p;
    p.id = trunc_next_id++;
    p.count = count;
    p.frac_bits = frac_bits;
    std::vector<std::uint64_t> r(count), r_hi(count);
    for (std::size_t i = 0; i < count; ++i) {
      r[i] = rng() & ((1ull << 31) - 1);  // uniform in [0, 2^31)
      r_hi[i] = r[i] >> frac_bits;
    }
    auto [r1, r2] = make_shares(r, {count}, rng);
    auto [h1, h2] = make_shares(r_hi, {count}, rng);
    p.half[0] = TruncPairShare{p.id, std::move(r1), std::move(h1)};
    p.half[1] = TruncPairShare{p.id, std::move(r2), std::move(h2)};
    return p;
  }
};

Dealer::Dealer(std::uint64_t seed, std::uint64_t element_budget)
    : impl_(std::make_shared<Impl>()), budget_(element_budget) {
  impl_->rng.seed(seed);
  impl_->budget = element_budget;
}

std::uint64_t Dealer::used() const {
  std::lock_guard<std::mutex> lk(impl_->mu);
  return impl_->used;
}

TripleShare Dealer::take_triple(int party_id, std::size_t rows,
                                std::size_t cols) {
  if (party_id != 1 && party_id != 2)
    throw ConfigError("dealer: bad party id");
  std::lock_guard<std::mutex> lk(impl_->mu);
  auto& im = *impl_;
  std::uint64_t id = im.triple_cursor[party_id - 1]++;
  if (id >= im.triple_next_id) im.triples.push_back(im.gen_triple(rows, cols));
  auto& pend = im.triples[id - im.triple_front_id];
  if (pend.rows != rows || pend.cols != cols)
    throw ProtocolError("dealer: triple shape desync (expected " +
                        std::to_string(pend.rows) + "x" +
                        std::to_string(pend.cols) + ", requested " +
                        std::to_string(rows) + "x" + std::to_string(cols) + ")");
  if (pend.taken[party_id - 1])
    throw ProtocolError("dealer: triple already served");
  TripleShare out = std::move(pend.half[party_id - 1]);
  pend.taken[party_id - 1] = true;
  while (!im.triples.empty() && im.triples.front().taken[0] &&
         im.triples.front().taken[1]) {
    im.triples.pop_front();
    ++im.triple_front_id;
  }
  return out;
}

TruncPairShare Dealer::take_trunc_pair(int party_id, std::size_t count,
                                       int frac_bits) {
  if (party_id != 1 && party_id != 2)
    throw ConfigError("dealer: bad party id");
  std::lock_guard<std::mutex> lk(impl_->mu);
  auto& im = *impl_;
  std::uint64_t id = im.trunc_cursor[party_id - 1]++;
  if (id >= im.trunc_next_id) im.truncs.push_back(im.gen_trunc(count, frac_bits));
  auto& pend = im.truncs[id - im.trunc_front_id];
  if (pend.count != count || pend.frac_bits != frac_bits)
    throw ProtocolError("dealer: truncation pair desync");
  if (pend.taken[party_id - 1])
    throw ProtocolError("dealer: truncation pair already served");
  TruncPairShare out = std::move(pend.half[party_id - 1]);
  pend.taken[party_id - 1] = true;
  while (!im.truncs.empty() && im.truncs.front().taken[0] &&
         im.truncs.front().taken[1]) {
    im.truncs.pop_front();
    ++im.trunc_front_id;
  }
  return out;
}

}  // namespace ppir::mpc
