#ifndef SQED_BMC_HPP
#define SQED_BMC_HPP

#include <optional>
#include <string>
#include <vector>

#include "sqed/bug.hpp"
#include "sqed/qed_module.hpp"
#include "sqed/soc.hpp"

namespace sqed {

struct Property {
  enum Kind {
    QedEquality,      // at every CHECK, regs[r] == regs[r+16] on every core
    ControlFlowLegal,  // fetch PC follows the architectural next-PC function
    CommitLiveness     // the design eventually commits C instructions
  } kind = QedEquality;
  long commit_bound = 1;  // C, for CommitLiveness

  std::string name() const;
};

struct InitialState {
  enum Kind { Reset, ArchSeed, FullSeed } kind = Reset;
  // ArchSeed: architectural values only, must be QED-consistent.
  std::vector<std::vector<Word>> regs;  // per core, 32 each
  std::vector<Word> mem;
  std::vector<int> resume_pc;  // optional resume points for native reruns
  // FullSeed: a complete simulator snapshot.
  std::optional<SocState> full;
};

// Validates QED consistency of an architectural snapshot and wraps it as a
// seed. Throws Error("NotQedConsistent: ...") naming the first offending pair.
InitialState make_qed_consistent_seed(const std::vector<std::vector<Word>>& regs,
                                      const std::vector<Word>& mem,
                                      const IsaSpec& spec,
                                      const std::vector<int>* resume_pc = nullptr);

struct SearchConfig {
  std::vector<Instruction> alphabet;  // valid, orig-half, non-control-flow
  int max_block_len = 3;
  int max_blocks = 2;
  int max_per_core = 3;
  int max_total = 6;
  long max_cycles = 400;  // simulation bound per candidate
  InitialState init;
  int workers = 0;  // 0 = hardware concurrency
};

// The default alphabet: MOVI with two immediates, one ADD, loads and stores
// over four original-half addresses spanning both banks with an
// adjacent-line pair, registers R1-R4.
std::vector<Instruction> default_alphabet();
std::vector<Instruction> parse_alphabet(const std::string& text, const IsaSpec& spec);

// Per-core block lists of original instructions; block boundaries are the
// implicit control-flow points that trigger duplication.
struct Candidate {
  std::vector<std::vector<std::vector<Instruction>>> blocks;  // [core][block][k]

  int per_core_max() const;
  int total_originals() const;
  Program materialize(int core) const;  // blocks joined by branches, then HALT
};

struct Counterexample {
  Candidate candidate;
  Property property;
  std::string instance_id;
  long violation_cycle = 0;
  std::string violation_detail;
  int obj_per_core_max = 0;
  int obj_total = 0;
  std::vector<TraceEvent> log;  // phase-annotated cycle log
};

std::string render_counterexample(const Counterexample& cex);

struct SearchOutcome {
  enum Status { Found, BoundExhausted } status = BoundExhausted;
  std::optional<Counterexample> cex;
  long candidates_explored = 0;
  std::string bounds_searched;
};

SearchOutcome find_min_counterexample(const SocConfig& instance_cfg,
                                      const std::string& instance_id,
                                      const SearchConfig& cfg, const Property& prop,
                                      const BugScenario* scenario);

SearchOutcome check_commit_liveness(const SocConfig& instance_cfg,
                                    const std::string& instance_id,
                                    const SearchConfig& cfg, long commit_bound,
                                    const BugScenario* scenario);

// Empirical C: the largest commit count every candidate within bounds reaches
// inside max_cycles on the bug-free instance. budget_ms caps the scan.
long calibrate_commit_bound(const SocConfig& instance_cfg, const SearchConfig& cfg,
                            long budget_ms = 60000);

// Unpruned reference enumerator; returns the minimal objective
// (per-core max, total, cycle) over all violating candidates, if any.
struct Objective {
  int per_core_max = 0;
  int total = 0;
  long cycle = 0;
  bool operator==(const Objective&) const = default;
};
std::optional<Objective> oracle_min_objective(const SocConfig& instance_cfg,
                                              const SearchConfig& cfg,
                                              const Property& prop,
                                              const BugScenario* scenario);

// One symbolic (QED-module-driven) execution of a candidate.
struct SymbolicRunOptions {
  bool want_trace = false;
  bool check_qed_invariants = false;  // order preservation, dup mapping,
                                      // qed_ready placement, lockstep DUP start
};

struct SymbolicRunResult {
  bool violated = false;
  long violation_cycle = 0;
  std::string detail;
  bool all_halted = false;
  long cycles_run = 0;
  long commits = 0;
  bool invariants_ok = true;
  std::string invariant_failure;
  std::vector<TraceEvent> trace;
  SocState final_state;
};

SymbolicRunResult run_symbolic(const Candidate& cand, const SocConfig& cfg,
                               const BugScenario* scenario, const Property& prop,
                               const InitialState& init, long max_cycles,
                               const SymbolicRunOptions& opt = {});

// Replays a counterexample on the given instance; true iff the same property
// fails at the same cycle.
bool replay_counterexample(const Counterexample& cex, const SocConfig& instance_cfg,
                           const BugScenario* scenario, const InitialState& init,
                           long max_cycles);

}  // namespace sqed

#endif
