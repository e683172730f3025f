#ifndef SQED_BUG_HPP
#define SQED_BUG_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sqed/isa.hpp"

namespace sqed {

enum class ComponentKind : uint8_t { Core, L1, Crossbar, L2Bank, Mcu, Io };

const char* component_kind_name(ComponentKind k);
std::optional<ComponentKind> component_kind_from_name(const std::string& s);

// Appendix catalog activation criteria plus the long-activation set.
enum class CriterionId : uint8_t {
  C1,  // two stores within X cycles, different cache lines
  C2,  // two stores within X cycles, same cache line
  C3,  // two stores within X cycles, adjacent cache lines
  C4,  // two cache misses within X cycles
  C5,  // a sequence of loads and/or stores within X cycles
  C6,  // data forwarding between pipeline stages
  C7,  // two branch instructions within X cycles
  C8,  // a randomly chosen clock cycle
  Power,   // exiting from power-saving state
  L1Regs,  // R registers each contain value V
  L2Seq,   // a specific sequence of N instructions within X cycles
  L3Cache  // a specific cache state: all L1 lines valid
};

enum class EffectId : uint8_t {
  A,  // next received coherence message dropped
  B,  // next received coherence message delayed Y
  C,  // next store not allocated/updated in the cache line
  D,  // next store update to the cache line delayed Y
  E,  // next data accessed from the cache corrupted to all zeros
  F,  // next data from main memory corrupted to all zeros
  G,  // core's next load value corrupted to all zeros
  H,  // core jumps to a seeded random address next cycle
  I,  // next instruction's rt field low bit flipped
  J,  // next instruction decoded as NOP
  PA, PB, PC_, PD, PE, PF, PG, PH, PI, PJ, PK, PL,  // power-management effects
  Stop  // pipeline of the core stops fetching and committing
};

const char* criterion_name(CriterionId c);
const char* effect_name(EffectId e);
std::optional<CriterionId> criterion_from_name(const std::string& s);
std::optional<EffectId> effect_from_name(const std::string& s);

// A load/store template used by criterion 5 patterns: kind plus optional
// address constraint.
struct MemOpPattern {
  bool is_store = false;
  int addr = -1;  // -1 matches any address
};

// One activation criterion paired with one effect, bound to a component kind.
// The bug is present in all instances of that kind.
struct BugScenario {
  std::string name;
  CriterionId criterion = CriterionId::C1;
  EffectId effect = EffectId::A;
  ComponentKind component = ComponentKind::L1;
  int x_cycles = 2;
  int y_cycles = 2;
  uint64_t random_seed = 1;
  std::vector<MemOpPattern> mem_pattern;        // criterion 5
  std::vector<Instruction> instr_pattern;       // criteria L2Seq / Power trigger
  int reg_count = 0;                            // criterion L1Regs: R
  int32_t reg_value = 0;                        //                   V
  int designated_core = 0;                      // Power criterion

  // Which kind hosts the activation monitors.
  ComponentKind monitor_kind() const;
};

BugScenario parse_scenario(const std::string& text, const IsaSpec& spec = {});
BugScenario load_scenario_file(const std::string& path, const IsaSpec& spec = {});
std::string render_scenario(const BugScenario& s);

// Event stream fed to the activation monitors.
enum class BugEventKind : uint8_t {
  Store,        // store observed at an L1 (issue) or L2 bank (arrival)
  Load,         // load observed at an L1 probe or L2 bank service
  Miss,         // cache miss at an L1 or bank
  ForwardUse,   // execute stage consumed a forwarded operand
  BranchSeen,   // control-flow instruction encountered at fetch
  PowerExit,    // power controller left the saving state
  Commit        // instruction committed (for L2Seq patterns)
};

struct MonitorState {
  std::vector<std::pair<long, int>> recent;  // (cycle, line) ring for c1-c5,c7
  size_t seq_progress = 0;                   // c5 / L2Seq pattern cursor
  long seq_start = -1;
  bool level_prev = false;  // L1Regs / L3Cache edge detection

  bool operator==(const MonitorState&) const = default;
};

// Runtime state of one installed scenario; part of the simulation state and
// cloned with it.
struct BugState {
  bool enabled = false;
  BugScenario scenario;
  std::vector<MonitorState> monitors;  // one per instance of monitor_kind
  bool armed = false;
  int armed_instance = -1;  // instance the effect is bound to; -1 = any
  long armed_cycle = -1;
  long drawn_cycle = -1;    // criterion 8 arming cycle, drawn once
  long first_effect_cycle = -1;
  int effects_applied = 0;

  bool operator==(const BugState&) const = default;
};

BugState make_bug_state(const BugScenario& s, int n_cores, int n_banks, int n_mcu,
                        bool has_io);

// Feed one qualifying event to the monitors; may arm the effect.
void bug_observe(BugState& b, BugEventKind kind, int instance, long cycle, int line,
                 const Instruction* inst = nullptr);

// Per-cycle level conditions (criteria L1Regs / L3Cache / C8).
void bug_observe_levels(BugState& b, long cycle,
                        const std::vector<std::vector<Word>>& regs,
                        const std::vector<int>& l1_valid_counts, int l1_lines);

// True if the armed effect should fire at (kind, instance); consumes the arm
// and clears monitor history so re-arming needs a fresh activation.
bool bug_fire(BugState& b, ComponentKind kind, int instance, long cycle);

}  // namespace sqed

#endif
