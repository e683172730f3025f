#ifndef SQED_QED_MODULE_HPP
#define SQED_QED_MODULE_HPP

#include <vector>

#include "sqed/isa.hpp"
#include "sqed/soc.hpp"

namespace sqed {

// Analysis-only controller wrapped around each core's fetch stage. It turns a
// stream of original instructions into a QED-compatible execution: run a block
// unmodified, drain, re-run it on the duplicate halves, drain, then signal the
// equality check. One mode register is shared by all cores' modules.
enum class QedMode : uint8_t { Orig, Wait1, Dup, Wait2, Check };

const char* qed_mode_name(QedMode m);

struct QedCoreInputs {
  bool have_current = false;
  Instruction current;      // instruction at the fetch pointer
  bool have_next = false;
  Instruction next;         // instruction after it
  int next_pc = 0;          // fetch pointer + 1
  int target_address = 0;   // CF target if current is control flow, else the
                            // fetch pointer itself (resume point)
};

struct QedCoreOutputs {
  bool pc_override = false;
  int pc = 0;
  bool instruction_override = false;
  bool instruction_out_bubble = false;  // WAIT modes inject pipeline bubbles
  Instruction instruction_out;
};

struct QedModuleState {
  QedMode mode = QedMode::Orig;
  std::vector<int> rewind_address;  // per core
  bool enable = true;
  bool qed_ready = false;  // true only during CHECK

  bool operator==(const QedModuleState&) const = default;
  std::vector<uint8_t> to_bytes() const;
};

QedModuleState make_qed_module(int n_cores, const std::vector<int>& initial_pcs);

// One combinational step of all modules; exactly the published transition
// function evaluated on the pre-state mode.
std::vector<QedCoreOutputs> qed_step(QedModuleState& q,
                                     const std::vector<QedCoreInputs>& in,
                                     bool pipeline_empty, const IsaSpec& spec);

// regs[r] == regs[r+16] for every original register r.
bool all_pairs_equal(const CoreState& core, const IsaSpec& spec);

}  // namespace sqed

#endif
