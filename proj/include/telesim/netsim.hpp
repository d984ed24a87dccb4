#pragma once

#include <cstdint>
#include <queue>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace telesim {

// ---------------------------------------------------------------------------
// Wire format
//
// Little-endian datagram layout:
//   magic "WAVE" (4) | version u8 | channel_id u8 | flags u16 | seq u32 |
//   stamp_ns u64 | count u16 | payload count*f64 | crc32 u32
// crc32 (IEEE 802.3 polynomial) covers every byte before the checksum field.
// ---------------------------------------------------------------------------

inline constexpr std::uint8_t kProtocolVersion = 1;
inline constexpr std::size_t kMaxPayloadCount = 64;
inline constexpr std::size_t kPacketHeaderSize = 22;

// flags bit 0: control-plane signal (error events, session commands)
inline constexpr std::uint16_t kFlagControlPlane = 0x0001;

struct Packet {
  std::uint8_t channel_id = 0;
  std::uint16_t flags = 0;
  std::uint32_t seq = 0;
  std::uint64_t stamp_ns = 0;
  std::vector<double> payload;

  bool operator==(const Packet&) const = default;
};

struct CodecError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BadMagic : CodecError {
  BadMagic() : CodecError("packet: bad magic") {}
};
struct BadVersion : CodecError {
  BadVersion() : CodecError("packet: unsupported version") {}
};
struct BadCrc : CodecError {
  BadCrc() : CodecError("packet: crc mismatch") {}
};
struct Truncated : CodecError {
  Truncated() : CodecError("packet: truncated") {}
};

std::uint32_t crc32(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_packet(const Packet& p);
Packet decode_packet(std::span<const std::uint8_t> bytes);

// ---------------------------------------------------------------------------
// Deterministic randomness
//
// Distribution sampling is hand-rolled (Box-Muller, Marsaglia-Tsang) so a
// seed pins the exact sample sequence independent of the standard library.
// ---------------------------------------------------------------------------

class DeterministicRng {
 public:
  explicit DeterministicRng(std::uint64_t seed) : engine_(seed) {}

  double uniform();  // [0, 1)
  double normal();   // standard normal
  double gamma(double shape, double scale);
  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// Stochastic channel impairment model
// ---------------------------------------------------------------------------

struct GammaParams {
  double shape = 1.0;
  double scale = 0.0;  // scale 0 disables jitter
};

struct ChannelConfig {
  double mean_delay = 0.0;  // s
  GammaParams jitter;
  double drop_prob = 0.0;
  std::uint64_t seed = 0;
  double tick = 1e-3;
  std::size_t capacity = 65536;

  void validate() const;
};

struct ChannelStats {
  std::uint64_t sent = 0;
  std::uint64_t dropped = 0;
  std::uint64_t delivered = 0;
};

struct ChannelOverflow : std::runtime_error {
  ChannelOverflow() : std::runtime_error("channel: queue capacity exceeded") {}
};

/// Drops with probability drop_prob, otherwise delays by
/// mean_delay + (gamma - gamma_mean), clamped at zero. Deterministic given
/// the seed and the send sequence.
class SimulatedChannel {
 public:
  explicit SimulatedChannel(const ChannelConfig& cfg);

  void send(Packet p, double now);
  std::vector<Packet> poll(double now);
  const ChannelStats& stats() const { return stats_; }
  std::size_t in_flight() const { return queue_.size(); }

 private:
  struct Entry {
    double due;
    std::uint64_t order;
    Packet packet;
    bool operator>(const Entry& other) const {
      if (due != other.due) return due > other.due;
      return order > other.order;
    }
  };

  ChannelConfig cfg_;
  DeterministicRng rng_;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> queue_;
  std::uint64_t order_ = 0;
  ChannelStats stats_;
};

// ---------------------------------------------------------------------------
// Real-socket mode: the same packets over UDP
// ---------------------------------------------------------------------------

class UdpEndpoint {
 public:
  UdpEndpoint(const std::string& bind_host, std::uint16_t bind_port);
  ~UdpEndpoint();
  UdpEndpoint(UdpEndpoint&& other) noexcept;
  UdpEndpoint& operator=(UdpEndpoint&&) = delete;
  UdpEndpoint(const UdpEndpoint&) = delete;

  void set_peer(const std::string& host, std::uint16_t port);
  void send(const Packet& p);
  std::vector<Packet> poll();  // nonblocking drain; malformed datagrams counted, not thrown
  std::uint16_t port() const { return port_; }
  std::uint64_t decode_errors() const { return decode_errors_; }

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
  std::uint64_t decode_errors_ = 0;
};

}  // namespace telesim
