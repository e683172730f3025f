#include "sqed/qed_module.hpp"

#include <cassert>

namespace sqed {

const char* qed_mode_name(QedMode m) {
  switch (m) {
    case QedMode::Orig: return "ORIG";
    case QedMode::Wait1: return "WAIT1";
    case QedMode::Dup: return "DUP";
    case QedMode::Wait2: return "WAIT2";
    case QedMode::Check: return "CHECK";
  }
  return "?";
}

std::vector<uint8_t> QedModuleState::to_bytes() const {
  std::vector<uint8_t> out;
  out.push_back(static_cast<uint8_t>(mode));
  out.push_back(enable ? 1 : 0);
  out.push_back(qed_ready ? 1 : 0);
  for (int r : rewind_address) {
    out.push_back(static_cast<uint8_t>(r & 0xff));
    out.push_back(static_cast<uint8_t>((r >> 8) & 0xff));
  }
  return out;
}

QedModuleState make_qed_module(int n_cores, const std::vector<int>& initial_pcs) {
  QedModuleState q;
  q.rewind_address.assign(n_cores, 0);
  for (int c = 0; c < n_cores && c < static_cast<int>(initial_pcs.size()); ++c)
    q.rewind_address[c] = initial_pcs[c];
  return q;
}

std::vector<QedCoreOutputs> qed_step(QedModuleState& q,
                                     const std::vector<QedCoreInputs>& in,
                                     bool pipeline_empty, const IsaSpec& spec) {
  const int n = static_cast<int>(in.size());
  assert(static_cast<int>(q.rewind_address.size()) == n);
  std::vector<QedCoreOutputs> out(n);
  const QedMode mode = q.mode;
  q.qed_ready = false;

  auto any_next_cf = [&]() {
    for (const auto& i : in)
      if (i.have_next && is_control_flow(i.next)) return true;
    return false;
  };

  switch (mode) {
    case QedMode::Check:
      // One-cycle check slot: the comparison property is sampled while the
      // fetch redirects to the resume point.
      q.qed_ready = true;
      for (int c = 0; c < n; ++c) {
        out[c].pc_override = true;
        out[c].pc = in[c].target_address;
        out[c].instruction_override = true;
        out[c].instruction_out_bubble = true;
        q.rewind_address[c] = in[c].target_address;
      }
      q.mode = QedMode::Orig;
      break;

    case QedMode::Orig:
      // pass-through; stop the sequence before any control-flow instruction
      if (any_next_cf()) q.mode = QedMode::Wait1;
      break;

    case QedMode::Wait1:
    case QedMode::Wait2:
      for (int c = 0; c < n; ++c) {
        out[c].instruction_override = true;
        out[c].instruction_out_bubble = true;
        out[c].pc_override = true;
        out[c].pc = q.rewind_address[c];
      }
      if (pipeline_empty)
        q.mode = mode == QedMode::Wait1 ? QedMode::Dup : QedMode::Check;
      break;

    case QedMode::Dup:
      for (int c = 0; c < n; ++c) {
        if (in[c].have_current) {
          // unreachable for control flow: ORIG stopped before it
          out[c].instruction_override = true;
          out[c].instruction_out = dup_map(in[c].current, spec);
        }
        q.rewind_address[c] = in[c].next_pc;
      }
      if (any_next_cf()) q.mode = QedMode::Wait2;
      break;
  }

  if (!q.enable) {
    for (auto& o : out) {
      o.pc_override = false;
      o.instruction_override = false;
    }
  }
  return out;
}

bool all_pairs_equal(const CoreState& core, const IsaSpec& spec) {
  const int h = spec.half_regs();
  for (int r = 0; r < h; ++r)
    if (core.regs[r] != core.regs[r + h]) return false;
  return true;
}

}  // namespace sqed
