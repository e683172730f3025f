#ifndef SQED_SOC_HPP
#define SQED_SOC_HPP

#include <optional>
#include <string>
#include <vector>

#include "sqed/bug.hpp"
#include "sqed/isa.hpp"

namespace sqed {

// Component topology of the toy SoC. One crossbar is implicit.
struct SocConfig {
  int n_cores = 2;
  int n_l2_banks = 2;
  int n_mcu = 1;
  bool has_io = true;
  int mem_words = 64;
  int line_words = 1;
  int l1_lines = 16;
  int l2_lines_per_bank = 16;
  int lat_crossbar = 1;
  int lat_l2 = 1;
  int lat_mem = 2;
  long deadlock_timeout = 100000;
  uint64_t seed = 0;
  std::vector<Instruction> power_trigger;  // commit-stream template sequence
  int power_trigger_core = 0;
  int power_window = 8;  // cycles spent in the saving state

  IsaSpec isa() const {
    IsaSpec s;
    s.mem_words = mem_words;
    return s;
  }
  int bank_of(int addr) const { return n_l2_banks > 0 ? addr % n_l2_banks : -1; }
  int mcu_of(int bank) const { return n_mcu > 0 ? bank % n_mcu : -1; }
  int line_of(int addr) const { return addr / line_words; }
};

SocConfig parse_soc_config(const std::string& text);
SocConfig load_soc_config_file(const std::string& path);
std::string render_soc_config(const SocConfig& c);

struct PipelineSlot {
  bool valid = false;
  Instruction inst;
  int index = -1;  // program index the instruction was fetched from
  Word value = 0;  // result, latched between execute and commit
  bool writes_reg = false;

  bool operator==(const PipelineSlot&) const = default;
};

struct CoreState {
  int pc = 0;
  std::vector<Word> regs;  // 32
  PipelineSlot ex;         // executing
  PipelineSlot cm;         // committing
  bool ex_stalled = false;   // waiting for a load response
  bool fetch_blocked = false;  // control-flow instruction in flight
  bool halted = false;
  bool stopped = false;  // pipeline-stop bug effect
  std::optional<CheckClass> error;
  long committed = 0;

  bool operator==(const CoreState&) const = default;
};

struct CacheLine {
  bool valid = false;
  int addr = -1;
  Word data = 0;

  bool operator==(const CacheLine&) const = default;
};

enum class MsgKind : uint8_t { StoreReq, LoadReq, LoadResp, Inval };

struct Message {
  MsgKind kind = MsgKind::StoreReq;
  int seq = 0;      // issue order, for deterministic processing
  int core = -1;    // issuing or destination core
  int bank = -1;
  int addr = 0;
  Word value = 0;
  long when = 0;    // cycle of the next action on this message
  bool bank_hit = false;
  bool no_fill = false;  // load response whose line was invalidated in flight

  bool operator==(const Message&) const = default;
};

struct PowerState {
  bool saving = false;
  long exit_cycle = 0;
  size_t match_progress = 0;

  bool operator==(const PowerState&) const = default;
};

// Change-detector hook; the concrete bank lives in detectors.hpp.
struct DetectorFeed {
  virtual ~DetectorFeed() = default;
  virtual void tick(const std::vector<uint64_t>& link_signals) = 0;
};

struct SocState {
  SocConfig cfg;
  long cycle = 0;
  int msg_seq = 0;
  std::vector<CoreState> cores;
  std::vector<std::vector<CacheLine>> l1;       // per core
  std::vector<std::vector<CacheLine>> l2;       // per bank
  std::vector<Word> mem;
  std::vector<Message> stores_in_flight;   // waiting to be applied at a bank
  std::vector<Message> loads_in_flight;    // waiting to be serviced at a bank
  std::vector<Message> responses_in_flight;
  std::vector<Message> invals_in_flight;        // bug-delayed invalidations
  std::vector<Message> line_updates_in_flight;  // bug-delayed line updates
  int xbar_pointer = 0;  // round-robin pointer, advances per delivered message
  PowerState power;
  BugState bug;
  long commit_total = 0;  // analysis commit counter (Fig.-11 style)
  std::vector<int> program_len;       // per core, for the random-jump effect
  DetectorFeed* detector_feed = nullptr;  // transient hook, not state

  bool operator==(const SocState&) const = default;

  int in_flight() const {
    return static_cast<int>(stores_in_flight.size() + loads_in_flight.size() +
                            responses_in_flight.size() + invals_in_flight.size() +
                            line_updates_in_flight.size());
  }
  bool pipeline_empty() const;
  // Canonical bytes with cycle-relative timestamps: two frozen states that
  // differ only in absolute cycle serialize identically (lasso detection).
  std::vector<uint8_t> to_bytes() const;
};

SocState make_soc_state(const SocConfig& cfg);
void install_scenario(SocState& st, const BugScenario& scn);

// Per-core fetch input for one cycle; nullopt means a bubble.
struct FetchInput {
  std::optional<Instruction> inst;
  int index = -1;    // program index (for the commit log)
  int next_pc = -1;  // pc after consuming this instruction
};

struct CommitEvent {
  int core;
  Instruction inst;
  int index;
  long cycle;
  Word value;  // register result, or the value a store sent out
};

struct TraceEvent {
  long cycle;
  std::string text;
};

struct Observation {
  std::vector<CommitEvent> commits;
  std::vector<bool> fetch_consumed;      // per core
  std::optional<CommitEvent> check_failure;  // HaltError commit
  bool effect_applied_this_cycle = false;
};

// Advances the model one cycle. fetch_inputs must have one entry per core.
// Deterministic: equal states and inputs give equal successors.
Observation step(SocState& st, const std::vector<FetchInput>& fetch_inputs,
                 std::vector<TraceEvent>* trace = nullptr);

struct RunOutcome {
  enum Kind { AllHalted, CheckFailed, DeadlockTimeout } kind = AllHalted;
  int core = -1;
  CheckClass check = CheckClass::Normal;
  long cycle = 0;
  int index = -1;

  bool operator==(const RunOutcome&) const = default;
};

struct RunResult {
  RunOutcome outcome;
  std::vector<CommitEvent> commit_log;
  long first_effect_cycle = -1;
  SocState final_state;
};

// Native run: per-core programs fetched by PC, branches execute in the core.
RunResult run(const std::vector<Program>& programs, const SocConfig& cfg,
              const BugScenario* scenario, long max_cycles,
              const std::vector<Word>* initial_mem = nullptr,
              DetectorFeed* detectors = nullptr,
              std::vector<TraceEvent>* trace = nullptr);

}  // namespace sqed

#endif
