#include "telesim/netsim.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <array>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace telesim {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic = {0x57, 0x41, 0x56, 0x45};  // "WAVE"

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
  }
}

template <typename T>
T get_le(std::span<const std::uint8_t> bytes, std::size_t offset) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(bytes[offset + i]) << (8 * i);
  }
  return value;
}

const std::array<std::uint32_t, 256>& crc_table() {
  static const std::array<std::uint32_t, 256> table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) {
        c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      }
      t[i] = c;
    }
    return t;
  }();
  return table;
}

}  // namespace

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  std::uint32_t c = 0xFFFFFFFFu;
  for (std::uint8_t b : bytes) {
    c = crc_table()[(c ^ b) & 0xFFu] ^ (c >> 8);
  }
  return c ^ 0xFFFFFFFFu;
}

std::vector<std::uint8_t> encode_packet(const Packet& p) {
  if (p.payload.size() > kMaxPayloadCount) {
    throw std::invalid_argument("encode_packet: payload count exceeds 64");
  }
  std::vector<std::uint8_t> out;
  out.reserve(kPacketHeaderSize + p.payload.size() * 8 + 4);
  for (std::uint8_t b : kMagic) out.push_back(b);
  out.push_back(kProtocolVersion);
  out.push_back(p.channel_id);
  put_le(out, p.flags);
  put_le(out, p.seq);
  put_le(out, p.stamp_ns);
  put_le(out, static_cast<std::uint16_t>(p.payload.size()));
  for (double v : p.payload) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    put_le(out, bits);
  }
  put_le(out, crc32(out));
  return out;
}

Packet decode_packet(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw Truncated();
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) throw BadMagic();
  if (bytes.size() < 5) throw Truncated();
  if (bytes[4] != kProtocolVersion) throw BadVersion();
  if (bytes.size() < kPacketHeaderSize) throw Truncated();

  const auto count = get_le<std::uint16_t>(bytes, 20);
  const std::size_t expected = kPacketHeaderSize + std::size_t{count} * 8 + 4;
  if (count > kMaxPayloadCount || bytes.size() < expected) throw Truncated();

  const std::size_t crc_offset = expected - 4;
  const std::uint32_t stored = get_le<std::uint32_t>(bytes, crc_offset);
  if (crc32(bytes.first(crc_offset)) != stored) throw BadCrc();

  Packet p;
  p.channel_id = bytes[5];
  p.flags = get_le<std::uint16_t>(bytes, 6);
  p.seq = get_le<std::uint32_t>(bytes, 8);
  p.stamp_ns = get_le<std::uint64_t>(bytes, 12);
  p.payload.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto bits = get_le<std::uint64_t>(bytes, kPacketHeaderSize + i * 8);
    std::memcpy(&p.payload[i], &bits, sizeof(double));
  }
  return p;
}

double DeterministicRng::uniform() {
  // 53 mantissa bits from the top of the 64-bit state word.
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double DeterministicRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * M_PI * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

double DeterministicRng::gamma(double shape, double scale) {
  if (shape <= 0.0 || scale < 0.0) {
    throw std::invalid_argument("gamma: shape must be > 0 and scale >= 0");
  }
  if (scale == 0.0) return 0.0;
  if (shape < 1.0) {
    // Boost to shape+1 and fold back with a uniform power.
    const double boosted = gamma(shape + 1.0, 1.0);
    double u = uniform();
    while (u <= 0.0) u = uniform();
    return boosted * std::pow(u, 1.0 / shape) * scale;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
      return d * v * scale;
    }
  }
}

void ChannelConfig::validate() const {
  if (mean_delay < 0.0) throw std::invalid_argument("ChannelConfig: mean_delay must be >= 0");
  if (drop_prob < 0.0 || drop_prob > 1.0) {
    throw std::invalid_argument("ChannelConfig: drop_prob must be in [0, 1]");
  }
  if (jitter.shape <= 0.0 || jitter.scale < 0.0) {
    throw std::invalid_argument("ChannelConfig: gamma jitter params must be positive");
  }
  if (tick <= 0.0) throw std::invalid_argument("ChannelConfig: tick must be > 0");
}

SimulatedChannel::SimulatedChannel(const ChannelConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {
  cfg_.validate();
}

void SimulatedChannel::send(Packet p, double now) {
  ++stats_.sent;
  if (cfg_.drop_prob > 0.0 && rng_.uniform() < cfg_.drop_prob) {
    ++stats_.dropped;
    return;
  }
  double delay = cfg_.mean_delay;
  if (cfg_.jitter.scale > 0.0) {
    const double jitter_mean = cfg_.jitter.shape * cfg_.jitter.scale;
    delay += rng_.gamma(cfg_.jitter.shape, cfg_.jitter.scale) - jitter_mean;
    if (delay < 0.0) delay = 0.0;
  }
  if (queue_.size() >= cfg_.capacity) {
    throw ChannelOverflow();
  }
  queue_.push(Entry{now + delay, order_++, std::move(p)});
}

std::vector<Packet> SimulatedChannel::poll(double now) {
  std::vector<Packet> out;
  while (!queue_.empty() && queue_.top().due <= now) {
    out.push_back(queue_.top().packet);
    queue_.pop();
    ++stats_.delivered;
  }
  return out;
}

namespace {

sockaddr_in make_addr(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    throw std::runtime_error("UdpEndpoint: invalid IPv4 address: " + host);
  }
  return addr;
}

}  // namespace

UdpEndpoint::UdpEndpoint(const std::string& bind_host, std::uint16_t bind_port) {
  fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd_ < 0) {
    throw std::runtime_error("UdpEndpoint: socket() failed");
  }
  const int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr = make_addr(bind_host, bind_port);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd_);
    throw std::runtime_error("UdpEndpoint: bind failed on " + bind_host);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  const int flags = ::fcntl(fd_, F_GETFL, 0);
  ::fcntl(fd_, F_SETFL, flags | O_NONBLOCK);
}

UdpEndpoint::~UdpEndpoint() {
  if (fd_ >= 0) ::close(fd_);
}

UdpEndpoint::UdpEndpoint(UdpEndpoint&& other) noexcept
    : fd_(other.fd_), port_(other.port_), decode_errors_(other.decode_errors_) {
  other.fd_ = -1;
}

void UdpEndpoint::set_peer(const std::string& host, std::uint16_t port) {
  sockaddr_in addr = make_addr(host, port);
  if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    throw std::runtime_error("UdpEndpoint: connect failed");
  }
}

void UdpEndpoint::send(const Packet& p) {
  const std::vector<std::uint8_t> bytes = encode_packet(p);
  ::send(fd_, bytes.data(), bytes.size(), 0);
}

std::vector<Packet> UdpEndpoint::poll() {
  std::vector<Packet> out;
  std::array<std::uint8_t, 2048> buf;
  for (;;) {
    const ssize_t n = ::recv(fd_, buf.data(), buf.size(), 0);
    if (n < 0) break;
    try {
      out.push_back(decode_packet(std::span<const std::uint8_t>(buf.data(), n)));
    } catch (const CodecError&) {
      ++decode_errors_;
    }
  }
  return out;
}

}  // namespace telesim
