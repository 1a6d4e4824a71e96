#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace chemstack {

// Header layers a packet can accumulate on its way down a stack.
enum class Proto : std::uint8_t {
  None,
  PubSub,
  TcpLite,
  Udp,
  Crc,
  IPv4,
  Ethernet,
};

const char* proto_name(Proto p);

struct HeaderTag {
  Proto proto = Proto::None;
  int bytes = 0;
};

// Unit of traffic. One Packet object travels app -> stack -> link -> stack ->
// app; modules prepend header tags instead of serializing real bytes, which is
// enough to account for wire length and for the link's top-header check.
struct Packet {
  std::uint64_t id = 0;
  int flow = 0;
  int payload_len = 0;

  bool is_ack = false;       // app-level acknowledgement
  bool is_tcp_ctl = false;   // transport-generated segment (ack)
  bool retransmit = false;
  std::uint32_t seq = 0;     // transport sequence, when a transport is present
  std::uint32_t ack_no = 0;

  double created = 0.0;      // app timestamp at the sender
  double crc_enqueue = -1.0; // time the packet entered a rate controller
  double phy_tx = -1.0;      // time the frame entered the wire, -1 = never
  int udp_port = -1;         // flow id as seen by a transport header, -1 = none
  int merged = 1;            // molecules merged into this packet (chem engine)

  std::vector<HeaderTag> headers;  // innermost-first

  int header_len() const {
    int n = 0;
    for (const auto& h : headers) n += h.bytes;
    return n;
  }
  int wire_len() const { return payload_len + header_len(); }

  // Header most recently pushed, i.e. the one directly under the wire framing.
  Proto top_header() const {
    return headers.empty() ? Proto::None : headers.back().proto;
  }

  void push_header(Proto p, int bytes) { headers.push_back({p, bytes}); }
  void pop_header() {
    if (!headers.empty()) headers.pop_back();
  }
};

}  // namespace chemstack
