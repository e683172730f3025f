#include "sqed/detectors.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "sqed/reducer.hpp"

namespace sqed {

DetectorBank::DetectorBank(const SocConfig& cfg, int k) {
  // Link layout mirrors the simulator: per-core core<->crossbar, per-bank
  // crossbar<->bank, per-bank bank<->mcu (when MCUs exist), crossbar<->io.
  auto add_link = [&](const std::string& owner) {
    for (int b = 0; b < kBitsPerLink; ++b) {
      ChangeDetector d;
      d.k = k;
      d.reset_saturated();
      detectors_.push_back(d);
      bit_owner_.push_back(owner);
    }
  };
  for (int c = 0; c < cfg.n_cores; ++c) add_link("l1-" + std::to_string(c));
  for (int b = 0; b < std::max(0, cfg.n_l2_banks); ++b)
    add_link("l2bank" + std::to_string(b));
  if (cfg.n_mcu > 0)
    for (int b = 0; b < std::max(0, cfg.n_l2_banks); ++b)
      add_link("mcu" + std::to_string(cfg.mcu_of(b)));
  if (cfg.has_io) add_link("io");
}

void DetectorBank::tick(const std::vector<uint64_t>& link_signals) {
  ++cycles_;
  size_t bit = 0;
  for (uint64_t sig : link_signals) {
    for (int b = 0; b < kBitsPerLink && bit < detectors_.size(); ++b, ++bit)
      detectors_[bit].tick((sig >> b) & 1);
  }
}

bool DetectorBank::component_quiet(const std::string& component) const {
  bool any = false;
  for (size_t i = 0; i < detectors_.size(); ++i) {
    if (bit_owner_[i] != component) continue;
    any = true;
    if (!detectors_[i].saturated()) return false;
  }
  return any;
}

int DetectorBank::min_counter(const std::string& component) const {
  int m = -1;
  for (size_t i = 0; i < detectors_.size(); ++i) {
    if (bit_owner_[i] != component) continue;
    if (m < 0 || detectors_[i].counter < m) m = detectors_[i].counter;
  }
  return m;
}

std::vector<std::string> DetectorBank::owned_components() const {
  std::vector<std::string> out;
  for (const auto& o : bit_owner_)
    if (std::find(out.begin(), out.end(), o) == out.end()) out.push_back(o);
  return out;
}

std::vector<std::string> DetectorBank::quiet_components() const {
  std::vector<std::string> out;
  for (const auto& c : owned_components())
    if (component_quiet(c)) out.push_back(c);
  return out;
}

std::string DetectorBank::scan_out_report() const {
  std::ostringstream o;
  o << "monitored_bits " << total_bits() << "\n";
  for (const auto& c : owned_components())
    o << c << " min_counter " << min_counter(c) << " "
      << (component_quiet(c) ? "quiet" : "active") << "\n";
  return o.str();
}

std::vector<PartialInstance> scan_out_and_exclude(
    const DetectorBank& bank, const std::vector<PartialInstance>& instances) {
  std::vector<PartialInstance> out;
  for (const auto& inst : instances) {
    std::vector<std::string> uncore;
    for (int b = 0; b < inst.n_l2_banks; ++b)
      uncore.push_back("l2bank" + std::to_string(b));
    for (int m = 0; m < inst.n_mcu; ++m) uncore.push_back("mcu" + std::to_string(m));
    if (inst.has_io) uncore.push_back("io");
    bool all_quiet = !uncore.empty();
    for (const auto& c : uncore)
      if (!bank.component_quiet(c)) all_quiet = false;
    if (!all_quiet) out.push_back(inst);
  }
  return out;
}

}  // namespace sqed
