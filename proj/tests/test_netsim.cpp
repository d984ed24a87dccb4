#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "telesim/netsim.hpp"

using namespace telesim;

namespace {

// Computed once from the wire layout definition with an independent CRC32
// implementation and frozen here.
const std::vector<std::uint8_t> kGoldenZeroPayload = {
    0x57, 0x41, 0x56, 0x45, 0x01, 0x00, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00,
    0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00,
    0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x93, 0x50, 0xb8, 0x09};

const std::vector<std::uint8_t> kGoldenTwoPayload = {
    0x57, 0x41, 0x56, 0x45, 0x01, 0x03, 0x01, 0x00, 0xef, 0xbe, 0xad,
    0xde, 0x4e, 0xf3, 0x30, 0xa6, 0x4b, 0x9b, 0xb6, 0x01, 0x02, 0x00,
    0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0xf8, 0x3f, 0x00, 0x00, 0x00,
    0x00, 0x00, 0x00, 0x02, 0xc0, 0x44, 0x81, 0xa8, 0xa9};

Packet random_packet(std::mt19937& rng) {
  std::uniform_int_distribution<int> count_dist(0, 64);
  std::uniform_real_distribution<double> value_dist(-1e6, 1e6);
  Packet p;
  p.channel_id = static_cast<std::uint8_t>(rng());
  p.flags = static_cast<std::uint16_t>(rng());
  p.seq = static_cast<std::uint32_t>(rng());
  p.stamp_ns = (static_cast<std::uint64_t>(rng()) << 32) | rng();
  p.payload.resize(count_dist(rng));
  for (double& v : p.payload) v = value_dist(rng);
  return p;
}

}  // namespace

TEST_CASE("golden packets encode and decode bit-exactly") {
  Packet p;
  p.channel_id = 0;
  p.flags = 0;
  p.seq = 1;
  p.stamp_ns = 0;
  p.payload = {0.0};
  CHECK(encode_packet(p) == kGoldenZeroPayload);
  CHECK(decode_packet(kGoldenZeroPayload) == p);

  Packet q;
  q.channel_id = 3;
  q.flags = 0x0001;
  q.seq = 0xDEADBEEF;
  q.stamp_ns = 123456789012345678ull;
  q.payload = {1.5, -2.25};
  CHECK(encode_packet(q) == kGoldenTwoPayload);
  CHECK(decode_packet(kGoldenTwoPayload) == q);
}

TEST_CASE("random packets round trip to identity") {
  std::mt19937 rng(99);
  for (int i = 0; i < 20000; ++i) {
    const Packet p = random_packet(rng);
    CHECK(decode_packet(encode_packet(p)) == p);
  }
}

TEST_CASE("each decode error case triggers distinctly") {
  Packet p;
  p.channel_id = 2;
  p.seq = 7;
  p.payload = {3.5, -1.0, 0.25};
  const std::vector<std::uint8_t> bytes = encode_packet(p);

  SUBCASE("bad magic") {
    auto bad = bytes;
    bad[0] ^= 0xFF;
    CHECK_THROWS_AS(decode_packet(bad), BadMagic);
  }
  SUBCASE("bad version") {
    auto bad = bytes;
    bad[4] = 9;
    CHECK_THROWS_AS(decode_packet(bad), BadVersion);
  }
  SUBCASE("flipping any payload or crc byte is a crc failure") {
    for (std::size_t i = kPacketHeaderSize; i < bytes.size(); ++i) {
      auto bad = bytes;
      bad[i] ^= 0x10;
      CHECK_THROWS_AS(decode_packet(bad), BadCrc);
    }
  }
  SUBCASE("header corruption between version and count is a crc failure") {
    for (std::size_t i = 5; i < 20; ++i) {
      auto bad = bytes;
      bad[i] ^= 0x01;
      CHECK_THROWS_AS(decode_packet(bad), BadCrc);
    }
  }
  SUBCASE("every truncation is caught without overreads") {
    for (std::size_t len = 0; len < bytes.size(); ++len) {
      const std::span<const std::uint8_t> cut(bytes.data(), len);
      CHECK_THROWS_AS(decode_packet(cut), CodecError);
    }
  }
  SUBCASE("count larger than the buffer is truncation") {
    auto bad = bytes;
    bad[20] = 64;  // claims 64 payload values
    CHECK_THROWS_AS(decode_packet(bad), Truncated);
  }
  SUBCASE("payload count above 64 is rejected at encode") {
    Packet big;
    big.payload.resize(65);
    CHECK_THROWS_AS(encode_packet(big), std::invalid_argument);
  }
}

TEST_CASE("channel with drop_prob=1 never delivers") {
  ChannelConfig cfg;
  cfg.drop_prob = 1.0;
  cfg.seed = 3;
  SimulatedChannel chan(cfg);
  for (int i = 0; i < 100; ++i) {
    Packet p;
    p.seq = i;
    chan.send(p, i * 1e-3);
  }
  CHECK(chan.poll(1e9).empty());
  CHECK(chan.stats().dropped == 100);
}

TEST_CASE("degenerate channel delivers exactly at the mean delay in order") {
  ChannelConfig cfg;
  cfg.mean_delay = 2e-3;
  cfg.jitter = {1.0, 0.0};
  SimulatedChannel chan(cfg);
  for (int i = 0; i < 10; ++i) {
    Packet p;
    p.seq = i;
    chan.send(p, i * 1e-3);
  }
  CHECK(chan.poll(1.9e-3).empty());
  const std::vector<Packet> first = chan.poll(2e-3);
  REQUIRE(first.size() == 1);
  CHECK(first[0].seq == 0);
  const std::vector<Packet> rest = chan.poll(1.0);
  REQUIRE(rest.size() == 9);
  for (std::size_t i = 0; i < rest.size(); ++i) {
    CHECK(rest[i].seq == i + 1);
  }
  // exactly-once: nothing left
  CHECK(chan.poll(2.0).empty());
}

TEST_CASE("empirical mean delay stays within 5% of the configured mean") {
  ChannelConfig cfg;
  cfg.mean_delay = 2e-3;
  cfg.jitter = {4.0, 0.25e-3};  // mean jitter 1 ms, recentred
  cfg.seed = 12345;
  SimulatedChannel chan(cfg);

  // Fine polling (0.01 ms) keeps delivery quantization well below the 5%
  // acceptance band around the 2 ms mean.
  const int n = 100000;
  const double poll_dt = 1e-5;
  double now = 0.0;
  double total_delay = 0.0;
  int count = 0;
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < 100; ++k) {
      now += poll_dt;
      for (const Packet& d : chan.poll(now)) {
        total_delay += now - static_cast<double>(d.stamp_ns) * 1e-9;
        ++count;
      }
    }
    Packet p;
    p.stamp_ns = static_cast<std::uint64_t>(now * 1e9);
    chan.send(p, now);
  }
  while (count < n) {
    now += poll_dt;
    for (const Packet& d : chan.poll(now)) {
      total_delay += now - static_cast<double>(d.stamp_ns) * 1e-9;
      ++count;
    }
  }
  const double mean = total_delay / count;
  CHECK(mean == doctest::Approx(2e-3).epsilon(0.05));
}

TEST_CASE("identical seeds produce identical delivery traces") {
  ChannelConfig cfg;
  cfg.mean_delay = 2e-3;
  cfg.jitter = {2.0, 0.5e-3};
  cfg.drop_prob = 0.2;
  cfg.seed = 777;

  const auto trace = [&] {
    SimulatedChannel chan(cfg);
    std::vector<std::uint32_t> out;
    for (int i = 0; i < 5000; ++i) {
      Packet p;
      p.seq = i;
      chan.send(p, i * 1e-3);
      for (const Packet& d : chan.poll(i * 1e-3)) out.push_back(d.seq);
    }
    for (const Packet& d : chan.poll(100.0)) out.push_back(d.seq);
    return out;
  };
  CHECK(trace() == trace());
}

TEST_CASE("high jitter reorders packets") {
  ChannelConfig cfg;
  cfg.mean_delay = 2e-3;
  cfg.jitter = {0.5, 8e-3};  // heavy-tailed
  cfg.seed = 42;
  SimulatedChannel chan(cfg);
  std::vector<std::uint32_t> order;
  for (int i = 0; i < 2000; ++i) {
    Packet p;
    p.seq = i;
    chan.send(p, i * 1e-3);
    for (const Packet& d : chan.poll(i * 1e-3)) order.push_back(d.seq);
  }
  for (const Packet& d : chan.poll(100.0)) order.push_back(d.seq);
  REQUIRE(order.size() == 2000);
  bool inverted = false;
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (order[i] < order[i - 1]) inverted = true;
  }
  CHECK(inverted);
}

TEST_CASE("queue overflow raises") {
  ChannelConfig cfg;
  cfg.mean_delay = 10.0;
  cfg.capacity = 8;
  SimulatedChannel chan(cfg);
  for (int i = 0; i < 8; ++i) chan.send(Packet{}, 0.0);
  CHECK_THROWS_AS(chan.send(Packet{}, 0.0), ChannelOverflow);
}

TEST_CASE("config validation") {
  ChannelConfig cfg;
  cfg.drop_prob = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.drop_prob = 0.0;
  cfg.mean_delay = -1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.mean_delay = 0.0;
  cfg.jitter.shape = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("packets travel over real UDP loopback") {
  UdpEndpoint a("127.0.0.1", 0);
  UdpEndpoint b("127.0.0.1", 0);
  a.set_peer("127.0.0.1", b.port());
  b.set_peer("127.0.0.1", a.port());

  std::mt19937 rng(1);
  std::vector<Packet> sent;
  for (int i = 0; i < 50; ++i) {
    Packet p = random_packet(rng);
    p.seq = i;
    sent.push_back(p);
    a.send(p);
  }
  std::vector<Packet> received;
  for (int attempt = 0; attempt < 200 && received.size() < sent.size(); ++attempt) {
    for (Packet& p : b.poll()) received.push_back(std::move(p));
  }
  REQUIRE(received.size() == sent.size());
  // UDP on loopback preserves order in practice, but compare as sets on seq.
  std::sort(received.begin(), received.end(),
            [](const Packet& x, const Packet& y) { return x.seq < y.seq; });
  for (std::size_t i = 0; i < sent.size(); ++i) {
    CHECK(received[i] == sent[i]);
  }
}
