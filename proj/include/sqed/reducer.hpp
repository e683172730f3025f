#ifndef SQED_REDUCER_HPP
#define SQED_REDUCER_HPP

#include <string>
#include <vector>

#include "sqed/bmc.hpp"
#include "sqed/soc.hpp"

namespace sqed {

// Multiplicity view of the component graph: cores, one crossbar, L2 banks,
// memory controllers, an optional I/O stub. Each core carries its private L1.
struct DesignGraph {
  int n_cores = 8;
  int n_l2_banks = 8;
  int n_mcu = 4;
  bool has_io = true;

  static DesignGraph from_config(const SocConfig& c) {
    return {c.n_cores, c.n_l2_banks, c.n_mcu, c.has_io};
  }
};

struct CapacityBudget {
  // Weighted component count standing in for "fits in the analysis engine".
  int max_cost = 13;
  int w_core = 4, w_bank = 2, w_mcu = 1, w_io = 1, w_crossbar = 0;
};

struct PartialInstance {
  int n_cores = 1;
  int n_l2_banks = 0;
  int n_mcu = 0;
  bool has_io = false;
  int cost = 0;
  std::string id;  // e.g. "2c2b1m", "1c_io"
  std::vector<std::string> provenance;  // technique-1/2 steps taken

  // Component list including the crossbar and the per-core L1s.
  std::vector<std::string> component_list() const;
  // Instance SoC config derived from the full design's parameters; memory
  // addresses remap to the remaining banks (line mod remaining_banks).
  SocConfig to_config(const SocConfig& full) const;
};

int instance_cost(const PartialInstance& p, const CapacityBudget& b);

// All distinct connected >=1-core instances reachable by interleaving
// technique 1 (halve every multi-instance kind) and technique 2 (drop a
// singleton leaf kind), filtered by the budget, sorted by cost descending
// then id.
std::vector<PartialInstance> enumerate_partial_instances(const DesignGraph& g,
                                                         const CapacityBudget& b);

enum class CheckLocalization { CoreOnly, Unknown };
CheckLocalization classify_failing_check(CheckClass c);

struct LocalizeResult {
  enum Status { Localized, NoneFailed } status = NoneFailed;
  PartialInstance instance;            // smallest failing instance
  std::vector<std::string> candidates;  // its component list
  Counterexample cex;
  int instances_tried = 0;
  std::vector<std::string> failing_instances;
};

// Runs the minimal-counterexample search on every partial instance of the
// full design and reports the smallest failing one.
LocalizeResult localize(const BugScenario& scenario, const SocConfig& full,
                        const CapacityBudget& budget, const SearchConfig& search,
                        const Property& prop);

}  // namespace sqed

#endif
