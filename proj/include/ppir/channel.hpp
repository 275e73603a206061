#pragma once

#include <condition_variable>
#include <cstdint>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <queue>
#include <string>
#include <vector>

namespace ppir::proto {

// Ordered reliable duplex byte-frame channel between the two parties.
class Channel {
 public:
  virtual ~Channel() = default;
  virtual void send_frame(const std::vector<std::uint8_t>& bytes) = 0;
  virtual std::vector<std::uint8_t> recv_frame() = 0;
};

struct LoopbackPair {
  std::shared_ptr<Channel> a;  // party1 end
  std::shared_ptr<Channel> b;  // party2 end
};
LoopbackPair make_loopback();

// Minimal TCP transport; one side listens, the other connects. Frames are
// length-prefixed with their own 24-byte header, so the stream needs no
// extra framing.
std::shared_ptr<Channel> tcp_listen(const std::string& host, int port);
std::shared_ptr<Channel> tcp_connect(const std::string& host, int port);

// Protocol phases for byte/time attribution.
enum class Phase : std::uint8_t {
  handshake = 1,
  key_exchange = 2,
  share_dealing = 3,
  beaver_open = 4,
  trunc_open = 5,
  result_open = 6,
  ciphertext = 7,
  decrypt_return = 8,
  cost_eval = 9,
  control = 10,
};
const char* phase_name(Phase p);

enum class FrameType : std::uint8_t {
  op_request = 1,     // public op metadata (shapes, scales)
  public_meta = 2,    // public scalars/handshake data
  uniform_share = 3,  // additive share (uniform given one party's view)
  masked_open = 4,    // beaver/truncation masked value
  clear_result = 5,   // opened result toward a party
  he_public_key = 6,
  he_rotation_key = 7,
  he_ciphertext = 8,
  error = 15,
};
const char* frame_type_name(FrameType t);

struct FrameMeta {
  bool sent = false;  // direction relative to the recording endpoint
  Phase phase{};
  FrameType type{};
  std::uint32_t round = 0;
  std::size_t bytes = 0;
};

struct PhaseLedger {
  std::uint64_t bytes_sent = 0;
  std::uint64_t bytes_received = 0;
  std::uint64_t wall_ns = 0;
};

struct Ledger {
  std::map<Phase, PhaseLedger> phases;

  std::uint64_t total_sent() const;
  std::uint64_t total_received() const;
  std::uint64_t sent_in(Phase p) const;
};

// A party'sendpoint: channel + ledger + transcript accounting. The 24-byte
// frame header is: magic "PPFR", session u32, round u32, phase u8, type u8,
// payload length u32, 6 reserved bytes.
class PartyEndpoint {
 public:
  PartyEndpoint(int party_id, std::uint32_t session_id,
                std::shared_ptr<Channel> ch)
      : party_id_(party_id), session_id_(session_id), ch_(std::move(ch)) {}

  int party_id() const { return party_id_; }
  std::uint32_t session_id() const { return session_id_; }

  void send(Phase phase, FrameType type, const std::uint8_t* payload,
            std::size_t len);
  void send(Phase phase, FrameType type, const std::vector<std::uint8_t>& p) {
    send(phase, type, p.data(), p.size());
  }
  // Receives the next frame; enforces expected phase/type when given.
  std::vector<std::uint8_t> recv(Phase expect_phase, FrameType expect_type);
  std::vector<std::uint8_t> recv_any(Phase* phase, FrameType* type);

  void add_wall_time(Phase phase, std::uint64_t ns);
  std::uint32_t next_round() { return round_++; }
  std::uint32_t round() const { return round_; }

  const Ledger& ledger() const { return ledger_; }
  std::uint64_t transcript_hash() const { return fnv_; }
  void set_record_frames(bool on) { record_ = on; }
  const std::vector<FrameMeta>& frames() const { return frames_; }

 private:
  void hash_bytes(const std::uint8_t* p, std::size_t n);

  int party_id_;
  std::uint32_t session_id_;
  std::shared_ptr<Channel> ch_;
  Ledger ledger_;
  std::uint32_t round_ = 0;
  std::uint64_t fnv_ = 1469598103934665603ull;
  bool record_ = false;
  std::vector<FrameMeta> frames_;
};

}  // namespace ppir::proto
