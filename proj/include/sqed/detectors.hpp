#ifndef SQED_DETECTORS_HPP
#define SQED_DETECTORS_HPP

#include <string>
#include <vector>

#include "sqed/soc.hpp"

namespace sqed {

// Saturating k-bit up-counter on one monitored signal bit. Starts saturated
// (all 1s), resets to 0 whenever the bit changes, then counts back up.
// A saturated counter certifies 2^k-1 quiet cycles.
struct ChangeDetector {
  int k = 10;
  int counter = 0;
  bool last = false;

  int max_value() const { return (1 << k) - 1; }
  void reset_saturated() { counter = max_value(); }
  void tick(bool bit) {
    if (bit != last) {
      counter = 0;
      last = bit;
    } else if (counter < max_value()) {
      ++counter;
    }
  }
  bool saturated() const { return counter == max_value(); }
};

// One detector per monitored boundary bit, with a bit -> component ownership
// map over the boundary links the simulator reports.
class DetectorBank : public DetectorFeed {
 public:
  DetectorBank(const SocConfig& cfg, int k = 10);

  void tick(const std::vector<uint64_t>& link_signals) override;

  int total_bits() const { return static_cast<int>(detectors_.size()); }
  long cycles_seen() const { return cycles_; }

  // Component is quiet iff every detector bit it owns is saturated.
  bool component_quiet(const std::string& component) const;
  std::vector<std::string> quiet_components() const;
  // Minimum counter value over the component's bits (the scan-out summary).
  int min_counter(const std::string& component) const;
  std::vector<std::string> owned_components() const;

  std::string scan_out_report() const;

 private:
  static constexpr int kBitsPerLink = 41;  // valid + kind + addr + data
  std::vector<ChangeDetector> detectors_;
  std::vector<std::string> bit_owner_;  // component name per bit
  long cycles_ = 0;
};

struct PartialInstance;

// Drops instances whose non-core, non-crossbar members are all quiet at
// scan-out; cores and the crossbar are never excluded by this mechanism.
std::vector<PartialInstance> scan_out_and_exclude(
    const DetectorBank& bank, const std::vector<PartialInstance>& instances);

}  // namespace sqed

#endif
