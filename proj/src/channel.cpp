#include "ppir/channel.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <stdexcept>

#include "ppir/errors.hpp"

namespace ppir::proto {

namespace {

struct SharedQueues {
  std::mutex mu;
  std::condition_variable cv;
  std::queue<std::vector<std::uint8_t>> a_to_b, b_to_a;
};

class LoopbackChannel : public Channel {
 public:
  LoopbackChannel(std::shared_ptr<SharedQueues> q, bool is_a)
      : q_(std::move(q)), is_a_(is_a) {}

  void send_frame(const std::vector<std::uint8_t>& bytes) override {
    {
      std::lock_guard<std::mutex> lk(q_->mu);
      (is_a_ ? q_->a_to_b : q_->b_to_a).push(bytes);
    }
    q_->cv.notify_all();
  }

  std::vector<std::uint8_t> recv_frame() override {
    std::unique_lock<std::mutex> lk(q_->mu);
    auto& q = is_a_ ? q_->b_to_a : q_->a_to_b;
    q_->cv.wait(lk, [&] { return !q.empty(); });
    auto out = std::move(q.front());
    q.pop();
    return out;
  }

 private:
  std::shared_ptr<SharedQueues> q_;
  bool is_a_;
};

class TcpChannel : public Channel {
 public:
  explicit TcpChannel(int fd) : fd_(fd) {
    int one = 1;
    setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  }
  ~TcpChannel() override {
    if (fd_ >= 0) close(fd_);
  }

  void send_frame(const std::vector<std::uint8_t>& bytes) override {
    write_all(bytes.data(), bytes.size());
  }

  std::vector<std::uint8_t> recv_frame() override {
    std::vector<std::uint8_t> header(24);
    read_all(header.data(), header.size());
    std::uint32_t len;
    std::memcpy(&len, header.data() + 14, 4);
    std::vector<std::uint8_t> out(24 + len);
    std::memcpy(out.data(), header.data(), 24);
    read_all(out.data() + 24, len);
    return out;
  }

 private:
  void write_all(const std::uint8_t* p, std::size_t n) {
    while (n) {
      ssize_t w = ::write(fd_, p, n);
      if (w <= 0) throw ProtocolError("tcp: write failed");
      p += w;
      n -= (std::size_t)w;
    }
  }
  void read_all(std::uint8_t* p, std::size_t n) {
    while (n) {
      ssize_t r = ::read(fd_, p, n);
      if (r <= 0) throw ProtocolError("tcp: connection closed mid-frame");
      p += r;
      n -= (std::size_t)r;
    }
  }
  int fd_;
};

}  // namespace

LoopbackPair make_loopback() {
  auto q = std::make_shared<SharedQueues>();
  return {std::make_shared<LoopbackChannel>(q, true),
          std::make_shared<LoopbackChannel>(q, false)};
}

std::shared_ptr<Channel> tcp_listen(const std::string& host, int port) {
  int srv = socket(AF_INET, SOCK_STREAM, 0);
  if (srv < 0) throw ProtocolError("tcp: socket failed");
  int one = 1;
  setsockopt(srv, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons((std::uint16_t)port);
  if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
    throw ProtocolError("tcp: bad host " + host);
  if (bind(srv, (sockaddr*)&addr, sizeof(addr)) != 0)
    throw ProtocolError("tcp: bind failed on port " + std::to_string(port));
  if (listen(srv, 1) != 0) throw ProtocolError("tcp: listen failed");
  int fd = accept(srv, nullptr, nullptr);
  close(srv);
  if (fd < 0) throw ProtocolError("tcp: accept failed");
  return std::make_shared<TcpChannel>(fd);
}

std::shared_ptr<Channel> tcp_connect(const std::string& host, int port) {
  int fd = socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw ProtocolError("tcp: socket failed");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons((std::uint16_t)port);
  if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
    throw ProtocolError("tcp: bad host " + host);
  for (int attempt = 0;; ++attempt) {
    if (connect(fd, (sockaddr*)&addr, sizeof(addr)) == 0) break;
    if (attempt > 200) throw ProtocolError("tcp: connect failed");
    usleep(10000);  // the listener may not be up yet
  }
  return std::make_shared<TcpChannel>(fd);
}

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::handshake: return "handshake";
    case Phase::key_exchange: return "key_exchange";
    case Phase::share_dealing: return "share_dealing";
    case Phase::beaver_open: return "beaver_open";
    case Phase::trunc_open: return "trunc_open";
    case Phase::result_open: return "result_open";
    case Phase::ciphertext: return "ciphertext";
    case Phase::decrypt_return: return "decrypt_return";
    case Phase::cost_eval: return "cost_eval";
    case Phase::control: return "control";
  }
  return "unknown";
}

const char* frame_type_name(FrameType t) {
  switch (t) {
    case FrameType::op_request: return "op_request";
    case FrameType::public_meta: return "public_meta";
    case FrameType::uniform_share: return "uniform_share";
    case FrameType::masked_open: return "masked_open";
    case FrameType::clear_result: return "clear_result";
    case FrameType::he_public_key: return "he_public_key";
    case FrameType::he_rotation_key: return "he_rotation_key";
    case FrameType::he_ciphertext: return "he_ciphertext";
    case FrameType::error: return "error";
  }
  return "unknown";
}

std::uint64_t Ledger::total_sent() const {
  std::uint64_t n = 0;
  for (auto& [p, l] : phases) n += l.bytes_sent;
  return n;
}

std::uint64_t Ledger::total_received() const {
  std::uint64_t n = 0;
  for (auto& [p, l] : phases) n += l.bytes_received;
  return n;
}

std::uint64_t Ledger::sent_in(Phase p) const {
  auto it = phases.find(p);
  return it == phases.end() ? 0 : it->second.bytes_sent;
}

void PartyEndpoint::hash_bytes(const std::uint8_t* p, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    fnv_ ^= p[i];
    fnv_ *= 1099511628211ull;
  }
}

void PartyEndpoint::send(Phase phase, FrameType type,
                         const std::uint8_t* payload, std::size_t len) {
  std::vector<std::uint8_t> frame(24 + len);
  std::memcpy(frame.data(), "PPFR", 4);
  std::uint32_t r = round_;
  std::memcpy(frame.data() + 4, &session_id_, 4);
  std::memcpy(frame.data() + 8, &r, 4);
  frame[12] = (std::uint8_t)phase;
  frame[13] = (std::uint8_t)type;
  std::uint32_t len32 = (std::uint32_t)len;
  std::memcpy(frame.data() + 14, &len32, 4);
  // bytes 18..23 reserved, zero
  if (len) std::memcpy(frame.data() + 24, payload, len);
  ch_->send_frame(frame);
  ledger_.phases[phase].bytes_sent += frame.size();
  hash_bytes(frame.data(), frame.size());
  if (record_) frames_.push_back({true, phase, type, r, frame.size()});
}

std::vector<std::uint8_t> PartyEndpoint::recv_any(Phase* phase,
                                                  FrameType* type) {
  auto frame = ch_->recv_frame();
  if (frame.size() < 24 || std::memcmp(frame.data(), "PPFR", 4) != 0)
    throw ProtocolError("frame: bad magic");
  std::uint32_t sess, round, len;
  std::memcpy(&sess, frame.data() + 4, 4);
  std::memcpy(&round, frame.data() + 8, 4);
  std::memcpy(&len, frame.data() + 14, 4);
  if (sess != session_id_)
    throw ProtocolError("frame: session mismatch");
  if (frame.size() != 24 + (std::size_t)len)
    throw ProtocolError("frame: length mismatch");
  Phase ph = (Phase)frame[12];
  FrameType ty = (FrameType)frame[13];
  ledger_.phases[ph].bytes_received += frame.size();
  hash_bytes(frame.data(), frame.size());
  if (record_) frames_.push_back({false, ph, ty, round, frame.size()});
  if (ty == FrameType::error)
    throw ProtocolError("peer error: " +
                        std::string(frame.begin() + 24, frame.end()));
  if (phase) *phase = ph;
  if (type) *type = ty;
  return std::vector<std::uint8_t>(frame.begin() + 24, frame.end());
}

std::vector<std::uint8_t> PartyEndpoint::recv(Phase expect_phase,
                                              FrameType expect_type) {
  Phase ph;
  FrameType ty;
  auto payload = recv_any(&ph, &ty);
  if (ph != expect_phase || ty != expect_type)
    throw ProtocolError(std::string("frame: expected ") +
                        phase_name(expect_phase) + "/" +
                        frame_type_name(expect_type) + ", got " +
                        phase_name(ph) + "/" + frame_type_name(ty) +
                        " at round " + std::to_string(round_));
  return payload;
}

void PartyEndpoint::add_wall_time(Phase phase, std::uint64_t ns) {
  ledger_.phases[phase].wall_ns += ns;
}

}  // namespace ppir::proto
