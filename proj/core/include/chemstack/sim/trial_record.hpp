#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace chemstack::sim {

// Everything one measured trial leaves behind. Counters cover only the
// post-settle measurement window; the 1 s series carry the rate shapes the
// analysis CSVs are built from.
struct TrialRecord {
  std::string blueprint;  // canonical one-line genome text
  std::string path;       // modules actually wired, head to tail
  bool valid = false;     // false: composition failed, nothing was run
  std::string error;      // reason when invalid

  double settle = 0.0;    // warm-up excluded from measurement, s
  double duration = 0.0;  // measured window, s

  std::uint64_t submitted_payload = 0;    // offered by the source app, B
  std::uint64_t transmitted_payload = 0;  // data payload leaving the sender
  std::uint64_t attributed_payload = 0;   // delivered to the right flow, B
  std::uint64_t delivered_payload = 0;    // delivered in total, B
  std::uint64_t delivered_packets = 0;
  std::uint64_t wire_bytes = 0;  // sender device bytes, headers included
  double delay_sum = 0.0;        // source->sink, summed over deliveries, s

  std::vector<double> phy_rate;  // B/s, 1 s bins, sender device
  std::vector<double> app_rate;  // B/s, 1 s bins, receiver attributed payload

  double fitness = 0.0;

  double mean_phy_rate() const {
    if (phy_rate.empty()) return 0.0;
    double s = 0.0;
    for (double v : phy_rate) s += v;
    return s / static_cast<double>(phy_rate.size());
  }
  // Share of transmitted data payload that arrived and was attributed
  // correctly. Packets still buffered above the device do not count against
  // it; a frame in flight at the window edge can push the raw ratio a hair
  // over 1, hence the clamp.
  double delivery_ratio() const {
    if (transmitted_payload == 0) return 0.0;
    const double r = static_cast<double>(attributed_payload) /
                     static_cast<double>(transmitted_payload);
    return r > 1.0 ? 1.0 : r;
  }
  // Useful payload per wire byte in the data direction.
  double goodput_share() const {
    if (wire_bytes == 0) return 0.0;
    return static_cast<double>(attributed_payload) /
           static_cast<double>(wire_bytes);
  }
  double mean_delay() const {
    if (delivered_packets == 0) return 0.0;
    return delay_sum / static_cast<double>(delivered_packets);
  }
};

// Coefficient of variation of a rate series; 0 when the mean is not positive.
inline double series_cov(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double mean = 0.0;
  for (double v : xs) mean += v;
  mean /= static_cast<double>(xs.size());
  if (mean <= 0.0) return 0.0;
  double var = 0.0;
  for (double v : xs) var += (v - mean) * (v - mean);
  var /= static_cast<double>(xs.size());
  return std::sqrt(var) / mean;
}

}  // namespace chemstack::sim
