#include "sqed/soc.hpp"

#include <algorithm>
#include <cassert>
#include <cstring>
#include <fstream>
#include <sstream>

namespace sqed {

namespace {

uint64_t splitmix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

bool is_pow2(int v) { return v > 0 && (v & (v - 1)) == 0; }

}  // namespace

SocConfig parse_soc_config(const std::string& text) {
  SocConfig c;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto h = line.find('#'); h != std::string::npos) line = line.substr(0, h);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    std::string rest;
    std::getline(ls, rest);
    size_t a = rest.find_first_not_of(" \t");
    rest = a == std::string::npos ? "" : rest.substr(a);
    size_t b = rest.find_last_not_of(" \t\r");
    if (b != std::string::npos) rest = rest.substr(0, b + 1);
    auto as_int = [&]() { return std::atoi(rest.c_str()); };
    if (key == "n_cores") c.n_cores = as_int();
    else if (key == "n_l2_banks") c.n_l2_banks = as_int();
    else if (key == "n_mcu") c.n_mcu = as_int();
    else if (key == "has_io") c.has_io = rest == "true" || rest == "1";
    else if (key == "mem_words") c.mem_words = as_int();
    else if (key == "line_words") c.line_words = as_int();
    else if (key == "l1_lines") c.l1_lines = as_int();
    else if (key == "l2_lines_per_bank") c.l2_lines_per_bank = as_int();
    else if (key == "lat_crossbar") c.lat_crossbar = as_int();
    else if (key == "lat_l2") c.lat_l2 = as_int();
    else if (key == "lat_mem") c.lat_mem = as_int();
    else if (key == "deadlock_timeout") c.deadlock_timeout = std::atol(rest.c_str());
    else if (key == "seed") c.seed = std::strtoull(rest.c_str(), nullptr, 10);
    else if (key == "power_trigger_core") c.power_trigger_core = as_int();
    else if (key == "power_window") c.power_window = as_int();
    else if (key == "power_trigger") {
      std::string t = rest;
      std::replace(t.begin(), t.end(), ';', '\n');
      c.power_trigger = parse_program(t).code;
    } else {
      throw Error("soc config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  if (c.n_cores < 1) throw Error("soc config: n_cores must be >= 1");
  if (!is_pow2(c.mem_words)) throw Error("soc config: mem_words must be a power of two");
  if (c.line_words != 1) throw Error("soc config: line_words must be 1");
  return c;
}

SocConfig load_soc_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open soc config: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_soc_config(ss.str());
}

std::string render_soc_config(const SocConfig& c) {
  std::ostringstream o;
  o << "n_cores " << c.n_cores << "\n";
  o << "n_l2_banks " << c.n_l2_banks << "\n";
  o << "n_mcu " << c.n_mcu << "\n";
  o << "has_io " << (c.has_io ? 1 : 0) << "\n";
  o << "mem_words " << c.mem_words << "\n";
  o << "line_words " << c.line_words << "\n";
  o << "l1_lines " << c.l1_lines << "\n";
  o << "l2_lines_per_bank " << c.l2_lines_per_bank << "\n";
  o << "lat_crossbar " << c.lat_crossbar << "\n";
  o << "lat_l2 " << c.lat_l2 << "\n";
  o << "lat_mem " << c.lat_mem << "\n";
  o << "deadlock_timeout " << c.deadlock_timeout << "\n";
  o << "seed " << c.seed << "\n";
  if (!c.power_trigger.empty()) {
    o << "power_trigger ";
    for (size_t i = 0; i < c.power_trigger.size(); ++i) {
      if (i) o << "; ";
      o << render_instruction(c.power_trigger[i]);
    }
    o << "\n";
    o << "power_trigger_core " << c.power_trigger_core << "\n";
    o << "power_window " << c.power_window << "\n";
  }
  return o.str();
}

bool SocState::pipeline_empty() const {
  for (const auto& c : cores)
    if (c.ex.valid || c.cm.valid) return false;
  return in_flight() == 0;
}

std::vector<uint8_t> SocState::to_bytes() const {
  std::vector<uint8_t> out;
  auto put = [&out](const void* p, size_t n) {
    const uint8_t* b = static_cast<const uint8_t*>(p);
    out.insert(out.end(), b, b + n);
  };
  auto put32 = [&](uint32_t v) { put(&v, 4); };
  auto put64 = [&](uint64_t v) { put(&v, 8); };
  auto put_inst = [&](const Instruction& i) {
    put32(static_cast<uint32_t>(i.op) | (static_cast<uint32_t>(i.rd) << 8) |
          (static_cast<uint32_t>(i.rs) << 16) | (static_cast<uint32_t>(i.rt) << 24));
    put32(static_cast<uint32_t>(i.imm));
    put32(static_cast<uint32_t>(i.addr));
    put32(static_cast<uint32_t>(i.target) | (static_cast<uint32_t>(i.check) << 24));
  };
  for (const auto& c : cores) {
    put32(static_cast<uint32_t>(c.pc));
    for (Word r : c.regs) put32(r);
    put32((c.ex.valid ? 1 : 0) | (c.cm.valid ? 2 : 0) | (c.ex_stalled ? 4 : 0) |
          (c.halted ? 8 : 0) | (c.stopped ? 16 : 0) | (c.error ? 32 : 0) |
          (c.fetch_blocked ? 64 : 0));
    if (c.ex.valid) { put_inst(c.ex.inst); put32(static_cast<uint32_t>(c.ex.index)); }
    if (c.cm.valid) { put_inst(c.cm.inst); put32(c.cm.value); }
    put64(static_cast<uint64_t>(c.committed));
  }
  auto put_lines = [&](const std::vector<CacheLine>& lines) {
    for (const auto& l : lines) {
      put32(l.valid ? static_cast<uint32_t>(l.addr) | 0x80000000u : 0xffffffffu);
      put32(l.data);
    }
  };
  for (const auto& c : l1) put_lines(c);
  for (const auto& b : l2) put_lines(b);
  for (Word w : mem) put32(w);
  auto put_msgs = [&](const std::vector<Message>& v) {
    put32(static_cast<uint32_t>(v.size()));
    for (const auto& m : v) {
      put32(static_cast<uint32_t>(m.kind) | (static_cast<uint32_t>(m.core & 0xff) << 8) |
            (static_cast<uint32_t>(m.bank & 0xff) << 16) |
            ((m.bank_hit ? 1u : 0u) << 24) | ((m.no_fill ? 1u : 0u) << 25));
      put32(static_cast<uint32_t>(m.addr));
      put32(m.value);
      put64(static_cast<uint64_t>(m.when - cycle));  // relative, for lasso detection
    }
  };
  put_msgs(stores_in_flight);
  put_msgs(loads_in_flight);
  put_msgs(responses_in_flight);
  put_msgs(invals_in_flight);
  put_msgs(line_updates_in_flight);
  put32(static_cast<uint32_t>(xbar_pointer));
  put32((power.saving ? 1u : 0u) | (static_cast<uint32_t>(power.match_progress) << 8));
  if (power.saving) put64(static_cast<uint64_t>(power.exit_cycle - cycle));
  // Bug monitor runtime participates in state equality for lasso soundness.
  // Events older than the X window can never contribute to an arming, so they
  // are pruned here; otherwise a frozen state would never repeat byte-wise.
  put32((bug.enabled ? 1u : 0u) | ((bug.armed ? 1u : 0u) << 1));
  put32(static_cast<uint32_t>(bug.armed_instance));
  put32(static_cast<uint32_t>(bug.effects_applied));
  const long window = bug.scenario.x_cycles;
  for (const auto& m : bug.monitors) {
    std::vector<std::pair<long, int>> live;
    for (auto& [cy, ln] : m.recent)
      if (cycle - cy < window) live.emplace_back(cy, ln);
    put32(static_cast<uint32_t>(live.size()));
    for (auto& [cy, ln] : live) {
      put64(static_cast<uint64_t>(cycle - cy));
      put32(static_cast<uint32_t>(ln));
    }
    bool seq_live = m.seq_progress > 0 && m.seq_start >= 0 && cycle - m.seq_start < window;
    put32(static_cast<uint32_t>(seq_live ? m.seq_progress : 0) |
          ((m.level_prev ? 1u : 0u) << 16));
    if (seq_live) put64(static_cast<uint64_t>(cycle - m.seq_start));
  }
  return out;
}

SocState make_soc_state(const SocConfig& cfg) {
  SocState st;
  st.cfg = cfg;
  st.cores.resize(cfg.n_cores);
  for (auto& c : st.cores) c.regs.assign(32, 0);
  st.l1.assign(cfg.n_cores, std::vector<CacheLine>(cfg.l1_lines));
  st.l2.assign(std::max(0, cfg.n_l2_banks), std::vector<CacheLine>(cfg.l2_lines_per_bank));
  st.mem.assign(cfg.mem_words, 0);
  return st;
}

void install_scenario(SocState& st, const BugScenario& scn) {
  st.bug = make_bug_state(scn, st.cfg.n_cores, st.cfg.n_l2_banks, st.cfg.n_mcu,
                          st.cfg.has_io);
}

namespace {

struct LinkTable {
  // link ids: cores [0,n), banks [n, n+b), bank-mcu [n+b, n+2b), io last
  int n_cores, n_banks, n_mcu;
  bool has_io;
  int core_link(int c) const { return c; }
  int bank_link(int b) const { return n_cores + b; }
  int mcu_link(int b) const { return n_cores + n_banks + b; }
  int io_link() const { return n_cores + n_banks + (n_mcu > 0 ? n_banks : 0); }
  int count() const {
    return n_cores + n_banks + (n_mcu > 0 ? n_banks : 0) + (has_io ? 1 : 0);
  }
};

uint64_t encode_signal(MsgKind k, int addr, Word value) {
  return 1ull | (static_cast<uint64_t>(k) << 1) | (static_cast<uint64_t>(addr & 0xff) << 3) |
         (static_cast<uint64_t>(value) << 11);
}

struct CycleCtx {
  std::vector<uint64_t> link_bits;
  LinkTable links;
  bool want_links = false;

  void touch(int link, MsgKind k, int addr, Word value) {
    if (!want_links || link < 0) return;
    link_bits[link] = encode_signal(k, addr, value);
  }
};

int l1_index(const SocConfig& cfg, int addr) { return addr % cfg.l1_lines; }
int l2_index(const SocConfig& cfg, int addr) {
  int within = cfg.n_l2_banks > 0 ? addr / cfg.n_l2_banks : addr;
  return within % cfg.l2_lines_per_bank;
}

// Effect shorthand: does the installed scenario have this effect id and is it
// armed for (kind, instance)? Consumes the arm when it fires.
bool fire(SocState& st, EffectId id, ComponentKind kind, int instance) {
  if (!st.bug.enabled || st.bug.scenario.effect != id) return false;
  return bug_fire(st.bug, kind, instance, st.cycle);
}

void trace_note(std::vector<TraceEvent>* trace, long cycle, const std::string& s) {
  if (trace) trace->push_back({cycle, s});
}

}  // namespace

Observation step(SocState& st, const std::vector<FetchInput>& fetch_inputs,
                 std::vector<TraceEvent>* trace) {
  assert(static_cast<int>(fetch_inputs.size()) == st.cfg.n_cores);
  const SocConfig& cfg = st.cfg;
  Observation obs;
  obs.fetch_consumed.assign(cfg.n_cores, false);
  const long now = st.cycle;
  int effects_before = st.bug.effects_applied;

  CycleCtx ctx;
  ctx.links = {cfg.n_cores, std::max(0, cfg.n_l2_banks), cfg.n_mcu, cfg.has_io};
  ctx.want_links = st.detector_feed != nullptr;
  if (ctx.want_links) ctx.link_bits.assign(ctx.links.count(), 0);

  // Track which register each core commits this cycle; an execute-stage read
  // of that register this cycle is a forwarded operand.
  std::vector<int> forwarded_reg(cfg.n_cores, -1);

  // ---- commit ----
  for (int c = 0; c < cfg.n_cores; ++c) {
    CoreState& core = st.cores[c];
    if (core.stopped || !core.cm.valid) continue;
    const Instruction& inst = core.cm.inst;
    if (core.cm.writes_reg) {
      core.regs[core.cm.inst.rd] = core.cm.value;
      forwarded_reg[c] = core.cm.inst.rd;
    }
    core.committed++;
    st.commit_total++;
    obs.commits.push_back({c, inst, core.cm.index, now, core.cm.value});
    bug_observe(st.bug, BugEventKind::Commit, c, now, 0, &inst);
    trace_note(trace, now, "core" + std::to_string(c) + " commit [" +
                               std::to_string(core.cm.index) + "] " +
                               render_instruction(inst));
    if (inst.op == Op::Halt) {
      core.halted = true;
    } else if (inst.op == Op::HaltError) {
      core.halted = true;
      core.error = inst.check;
      obs.check_failure = CommitEvent{c, inst, core.cm.index, now, 0};
    }
    // Power controller watches the designated core's commit stream.
    if (!cfg.power_trigger.empty() && c == cfg.power_trigger_core && !st.power.saving) {
      const Instruction& want = cfg.power_trigger[st.power.match_progress];
      auto same = [](const Instruction& a, const Instruction& b) {
        return a.op == b.op && a.rd == b.rd && a.rs == b.rs && a.rt == b.rt &&
               a.imm == b.imm && a.addr == b.addr;
      };
      if (same(inst, want)) {
        if (++st.power.match_progress == cfg.power_trigger.size()) {
          st.power.saving = true;
          st.power.exit_cycle = now + cfg.power_window;
          st.power.match_progress = 0;
          trace_note(trace, now, "power: entering saving state");
        }
      } else {
        st.power.match_progress = same(inst, cfg.power_trigger[0]) ? 1 : 0;
      }
    }
    core.cm = PipelineSlot{};
  }

  // Power-saving window expiry.
  if (st.power.saving && now >= st.power.exit_cycle) {
    st.power.saving = false;
    trace_note(trace, now, "power: exiting saving state");
    bug_observe(st.bug, BugEventKind::PowerExit, 0, now, 0);
  }

  // ---- memory system ----
  auto by_seq = [](const Message& a, const Message& b) { return a.seq < b.seq; };

  // Delayed invalidations land before anything probes the caches this cycle.
  {
    std::vector<Message> due, rest;
    for (auto& m : st.invals_in_flight) (m.when <= now ? due : rest).push_back(m);
    std::sort(due.begin(), due.end(), by_seq);
    for (const auto& m : due) {
      CacheLine& line = st.l1[m.core][l1_index(cfg, m.addr)];
      if (line.valid && line.addr == m.addr) line.valid = false;
      ctx.touch(ctx.links.core_link(m.core), MsgKind::Inval, m.addr, 0);
      trace_note(trace, now, "inval(delayed) addr " + std::to_string(m.addr) +
                                 " -> core " + std::to_string(m.core));
      st.xbar_pointer++;
    }
    st.invals_in_flight = std::move(rest);
  }

  // Deferred line updates (effect D windows).
  {
    std::vector<Message> due, rest;
    for (auto& m : st.line_updates_in_flight) (m.when <= now ? due : rest).push_back(m);
    std::sort(due.begin(), due.end(), by_seq);
    for (const auto& m : due) {
      if (m.bank >= 0) {
        CacheLine& line = st.l2[m.bank][l2_index(cfg, m.addr)];
        line.valid = true;
        line.addr = m.addr;
        line.data = m.value;
      } else {
        CacheLine& line = st.l1[m.core][l1_index(cfg, m.addr)];
        line.valid = true;
        line.addr = m.addr;
        line.data = m.value;
      }
    }
    st.line_updates_in_flight = std::move(rest);
  }

  // Store applications: global memory order is (apply cycle, issue order).
  {
    std::vector<Message> due, rest;
    for (auto& m : st.stores_in_flight) (m.when <= now ? due : rest).push_back(m);
    std::sort(due.begin(), due.end(), by_seq);
    for (auto& m : due) {
      int bank = m.bank;
      int line_no = cfg.line_of(m.addr);
      // Bank-side activation monitors see the store arrival.
      if (bank >= 0) {
        bug_observe(st.bug, BugEventKind::Store, bank, now, line_no);
        bool bank_line_hit = false;
        {
          const CacheLine& bl = st.l2[bank][l2_index(cfg, m.addr)];
          bank_line_hit = bl.valid && bl.addr == m.addr;
        }
        if (!bank_line_hit) bug_observe(st.bug, BugEventKind::Miss, bank, now, line_no);
      }
      if (bank >= 0 && fire(st, EffectId::A, ComponentKind::L2Bank, bank)) {
        obs.effect_applied_this_cycle = true;
        trace_note(trace, now, "effect A: store to [" + std::to_string(m.addr) + "] dropped at bank");
        st.xbar_pointer++;
        continue;
      }
      if (bank >= 0 && fire(st, EffectId::B, ComponentKind::L2Bank, bank)) {
        obs.effect_applied_this_cycle = true;
        m.when = now + st.bug.scenario.y_cycles;
        trace_note(trace, now, "effect B: store to [" + std::to_string(m.addr) + "] delayed at bank");
        rest.push_back(m);
        continue;
      }
      if (bank >= 0) ctx.touch(ctx.links.bank_link(bank), MsgKind::StoreReq, m.addr, m.value);
      st.mem[m.addr] = m.value;
      if (bank >= 0) {
        bool skip_line = fire(st, EffectId::C, ComponentKind::L2Bank, bank);
        bool delay_line = !skip_line && fire(st, EffectId::D, ComponentKind::L2Bank, bank);
        if (skip_line || delay_line) obs.effect_applied_this_cycle = true;
        CacheLine& bl = st.l2[bank][l2_index(cfg, m.addr)];
        if (delay_line) {
          Message u = m;
          u.when = now + st.bug.scenario.y_cycles;
          st.line_updates_in_flight.push_back(u);
          trace_note(trace, now, "effect D: bank line update delayed");
        } else if (!skip_line) {
          bl.valid = true;
          bl.addr = m.addr;
          bl.data = m.value;
        } else {
          trace_note(trace, now, "effect C: bank line not updated");
        }
      }
      // Invalidate every other L1 copy, and any response in flight for the line.
      for (int c = 0; c < cfg.n_cores; ++c) {
        if (c == m.core) continue;
        CacheLine& line = st.l1[c][l1_index(cfg, m.addr)];
        if (!(line.valid && line.addr == m.addr)) continue;
        if (fire(st, EffectId::A, ComponentKind::L1, c)) {
          obs.effect_applied_this_cycle = true;
          trace_note(trace, now, "effect A: inval of [" + std::to_string(m.addr) +
                                     "] to core " + std::to_string(c) + " dropped");
          continue;
        }
        if (fire(st, EffectId::B, ComponentKind::L1, c)) {
          obs.effect_applied_this_cycle = true;
          Message inv;
          inv.kind = MsgKind::Inval;
          inv.seq = st.msg_seq++;
          inv.core = c;
          inv.addr = m.addr;
          inv.when = now + st.bug.scenario.y_cycles;
          st.invals_in_flight.push_back(inv);
          trace_note(trace, now, "effect B: inval of [" + std::to_string(m.addr) +
                                     "] to core " + std::to_string(c) + " delayed " +
                                     std::to_string(st.bug.scenario.y_cycles));
          continue;
        }
        line.valid = false;
        ctx.touch(ctx.links.core_link(c), MsgKind::Inval, m.addr, 0);
        trace_note(trace, now, "inval addr " + std::to_string(m.addr) + " -> core " +
                                   std::to_string(c));
        st.xbar_pointer++;
      }
      for (auto& r : st.responses_in_flight)
        if (r.addr == m.addr && r.core != m.core) r.no_fill = true;
      st.xbar_pointer++;
    }
    st.stores_in_flight = std::move(rest);
  }

  // Load services at banks (or at the memory port when no banks remain).
  {
    std::vector<Message> due, rest;
    for (auto& m : st.loads_in_flight) (m.when <= now ? due : rest).push_back(m);
    std::sort(due.begin(), due.end(), by_seq);
    for (auto& m : due) {
      int bank = m.bank;
      int line_no = cfg.line_of(m.addr);
      Word value = 0;
      long deliver = now + cfg.lat_crossbar;
      bool dropped = false;
      if (bank >= 0) {
        bug_observe(st.bug, BugEventKind::Load, bank, now, line_no);
        CacheLine& bl = st.l2[bank][l2_index(cfg, m.addr)];
        bool hit = bl.valid && bl.addr == m.addr;
        if (hit) {
          value = bl.data;
          if (fire(st, EffectId::E, ComponentKind::L2Bank, bank)) {
            obs.effect_applied_this_cycle = true;
            value = 0;
            trace_note(trace, now, "effect E: bank data corrupted");
          }
        } else {
          bug_observe(st.bug, BugEventKind::Miss, bank, now, line_no);
          int mcu = cfg.mcu_of(bank);
          value = st.mem[m.addr];
          if (mcu >= 0) {
            deliver += cfg.lat_mem;
            ctx.touch(ctx.links.mcu_link(bank), MsgKind::LoadReq, m.addr, value);
            if (fire(st, EffectId::PE, ComponentKind::Mcu, mcu)) {
              obs.effect_applied_this_cycle = true;
              deliver += 1;
            }
            if (fire(st, EffectId::PF, ComponentKind::Mcu, mcu)) {
              obs.effect_applied_this_cycle = true;
              dropped = true;
              trace_note(trace, now, "effect pF: memory load dropped");
            }
            if (fire(st, EffectId::PD, ComponentKind::Mcu, mcu)) {
              obs.effect_applied_this_cycle = true;
              value = 0;
            }
          }
          if (fire(st, EffectId::F, ComponentKind::L2Bank, bank)) {
            obs.effect_applied_this_cycle = true;
            value = 0;
            trace_note(trace, now, "effect F: memory data corrupted");
          }
          if (!dropped) {
            bl.valid = true;
            bl.addr = m.addr;
            bl.data = value;
          }
        }
        ctx.touch(ctx.links.bank_link(bank), MsgKind::LoadReq, m.addr, value);
      } else {
        value = st.mem[m.addr];
        if (cfg.n_mcu > 0) deliver += cfg.lat_mem;
      }
      if (dropped) {
        st.xbar_pointer++;
        continue;
      }
      // Crossbar-side power effects on the response path.
      if (fire(st, EffectId::PG, ComponentKind::Crossbar, 0)) {
        obs.effect_applied_this_cycle = true;
        deliver += 1;
      }
      if (fire(st, EffectId::PH, ComponentKind::Crossbar, 0)) {
        obs.effect_applied_this_cycle = true;
        value = 0;
      }
      if (fire(st, EffectId::PI, ComponentKind::Crossbar, 0)) {
        obs.effect_applied_this_cycle = true;
        st.xbar_pointer++;
        trace_note(trace, now, "effect pI: load response dropped at crossbar");
        continue;
      }
      Message resp;
      resp.kind = MsgKind::LoadResp;
      resp.seq = st.msg_seq++;
      resp.core = m.core;
      resp.addr = m.addr;
      resp.value = value;
      resp.when = deliver;
      st.responses_in_flight.push_back(resp);
      st.xbar_pointer++;
    }
    st.loads_in_flight = std::move(rest);
  }

  // Response deliveries: write back, refill the L1, unstall the core.
  {
    std::vector<Message> due, rest;
    for (auto& m : st.responses_in_flight) (m.when <= now ? due : rest).push_back(m);
    std::sort(due.begin(), due.end(), by_seq);
    for (const auto& m : due) {
      CoreState& core = st.cores[m.core];
      Word value = m.value;
      if (fire(st, EffectId::G, ComponentKind::Core, m.core)) {
        obs.effect_applied_this_cycle = true;
        value = 0;
        trace_note(trace, now, "effect G: load value corrupted at core " + std::to_string(m.core));
      }
      ctx.touch(ctx.links.core_link(m.core), MsgKind::LoadResp, m.addr, value);
      if (!m.no_fill) {
        CacheLine& line = st.l1[m.core][l1_index(cfg, m.addr)];
        line.valid = true;
        line.addr = m.addr;
        line.data = value;
      }
      if (core.ex.valid && core.ex_stalled && core.ex.inst.op == Op::Load &&
          core.ex.inst.addr == m.addr) {
        // Completes the stalled load; the commit slot is free this cycle.
        core.ex.value = value;
        core.ex.writes_reg = true;
        core.ex_stalled = false;
        core.cm = core.ex;
        core.ex = PipelineSlot{};
      }
      st.xbar_pointer++;
    }
    st.responses_in_flight = std::move(rest);
  }

  // ---- execute ----
  for (int c = 0; c < cfg.n_cores; ++c) {
    CoreState& core = st.cores[c];
    if (core.stopped || core.halted || !core.ex.valid || core.ex_stalled) continue;
    Instruction& inst = core.ex.inst;
    bool completed = true;

    auto read_reg = [&](uint8_t r) -> Word {
      if (fire(st, EffectId::PL, ComponentKind::Core, c)) {
        obs.effect_applied_this_cycle = true;
        trace_note(trace, now, "effect pL: register read corrupted");
        return 0;
      }
      if (forwarded_reg[c] == r) bug_observe(st.bug, BugEventKind::ForwardUse, c, now, 0);
      return core.regs[r];
    };

    switch (inst.op) {
      case Op::Nop:
        break;
      case Op::MovImm:
        core.ex.value = static_cast<Word>(inst.imm);
        core.ex.writes_reg = true;
        break;
      case Op::Add:
      case Op::Sub:
      case Op::And:
      case Op::Or:
      case Op::Xor: {
        Word a = read_reg(inst.rs), b = read_reg(inst.rt);
        Word v = 0;
        switch (inst.op) {
          case Op::Add: v = a + b; break;
          case Op::Sub: v = a - b; break;
          case Op::And: v = a & b; break;
          case Op::Or: v = a | b; break;
          default: v = a ^ b; break;
        }
        core.ex.value = v;
        core.ex.writes_reg = true;
        break;
      }
      case Op::Load: {
        if (st.power.saving) {  // L1 responses gated while saving
          completed = false;
          break;
        }
        int line_no = cfg.line_of(inst.addr);
        CacheLine& line = st.l1[c][l1_index(cfg, inst.addr)];
        bool hit = line.valid && line.addr == inst.addr;
        bug_observe(st.bug, BugEventKind::Load, c, now, line_no);
        if (!hit) bug_observe(st.bug, BugEventKind::Miss, c, now, line_no);
        if (fire(st, EffectId::PC_, ComponentKind::L1, c)) {
          obs.effect_applied_this_cycle = true;
          core.ex_stalled = true;  // the load operation is dropped; no response
          completed = false;
          trace_note(trace, now, "effect pC: load dropped by data cache");
          break;
        }
        if (hit) {
          Word v = line.data;
          bool corrupt = fire(st, EffectId::E, ComponentKind::L1, c) ||
                         fire(st, EffectId::PA, ComponentKind::L1, c);
          if (corrupt) {
            obs.effect_applied_this_cycle = true;
            v = 0;
            trace_note(trace, now, "cache hit data corrupted at core " + std::to_string(c));
          }
          if (fire(st, EffectId::PB, ComponentKind::L1, c)) {
            obs.effect_applied_this_cycle = true;
            Message resp;  // hit converted into a one-cycle local response
            resp.kind = MsgKind::LoadResp;
            resp.seq = st.msg_seq++;
            resp.core = c;
            resp.addr = inst.addr;
            resp.value = v;
            resp.when = now + 1;
            resp.no_fill = true;
            st.responses_in_flight.push_back(resp);
            core.ex_stalled = true;
            completed = false;
            break;
          }
          if (fire(st, EffectId::G, ComponentKind::Core, c)) {
            obs.effect_applied_this_cycle = true;
            v = 0;
            trace_note(trace, now, "effect G: load value corrupted at core " + std::to_string(c));
          }
          core.ex.value = v;
          core.ex.writes_reg = true;
        } else {
          Message req;
          req.kind = MsgKind::LoadReq;
          req.seq = st.msg_seq++;
          req.core = c;
          req.addr = inst.addr;
          req.bank = cfg.bank_of(inst.addr);
          req.when = now + cfg.lat_crossbar + (req.bank >= 0 ? cfg.lat_l2 : 0);
          ctx.touch(ctx.links.core_link(c), MsgKind::LoadReq, inst.addr, 0);
          st.loads_in_flight.push_back(req);
          core.ex_stalled = true;
          completed = false;
        }
        break;
      }
      case Op::Store: {
        int line_no = cfg.line_of(inst.addr);
        Word v = read_reg(inst.rs);
        bug_observe(st.bug, BugEventKind::Store, c, now, line_no);
        {
          CacheLine& line = st.l1[c][l1_index(cfg, inst.addr)];
          bool present = line.valid && line.addr == inst.addr;
          if (!present) bug_observe(st.bug, BugEventKind::Miss, c, now, line_no);
          bool skip = fire(st, EffectId::C, ComponentKind::L1, c);
          bool delay = !skip && fire(st, EffectId::D, ComponentKind::L1, c);
          if (skip || delay) obs.effect_applied_this_cycle = true;
          if (delay) {
            Message u;
            u.seq = st.msg_seq++;
            u.core = c;
            u.addr = inst.addr;
            u.value = v;
            u.when = now + st.bug.scenario.y_cycles;
            st.line_updates_in_flight.push_back(u);
            trace_note(trace, now, "effect D: own line update delayed");
          } else if (!skip) {
            line.valid = true;
            line.addr = inst.addr;
            line.data = v;
          } else {
            trace_note(trace, now, "effect C: store line not allocated");
          }
        }
        core.ex.value = v;  // logged with the commit
        Message msg;
        msg.kind = MsgKind::StoreReq;
        msg.seq = st.msg_seq++;
        msg.core = c;
        msg.addr = inst.addr;
        msg.value = v;
        msg.bank = cfg.bank_of(inst.addr);
        msg.when = now + cfg.lat_crossbar + (msg.bank >= 0 ? cfg.lat_l2 : 0);
        ctx.touch(ctx.links.core_link(c), MsgKind::StoreReq, inst.addr, v);
        st.stores_in_flight.push_back(msg);
        break;
      }
      case Op::B:
      case Op::Beq:
      case Op::Bne: {
        bool taken = true;
        if (inst.op != Op::B) {
          Word a = read_reg(inst.rs), b = read_reg(inst.rt);
          taken = inst.op == Op::Beq ? a == b : a != b;
        }
        int next = taken ? inst.target : core.ex.index + 1;
        if (fire(st, EffectId::H, ComponentKind::Core, c)) {
          obs.effect_applied_this_cycle = true;
          int len = c < static_cast<int>(st.program_len.size()) ? st.program_len[c] : 1;
          next = static_cast<int>(splitmix64(st.bug.scenario.random_seed ^ 0x4845ull) %
                                  static_cast<uint64_t>(std::max(1, len)));
          trace_note(trace, now, "effect H: branch redirected to " + std::to_string(next));
        }
        core.pc = next;
        core.fetch_blocked = false;
        trace_note(trace, now, "core" + std::to_string(c) + " branch -> " + std::to_string(next));
        break;
      }
      case Op::Halt:
      case Op::HaltError:
        break;
    }

    if (completed && !core.ex_stalled) {
      core.cm = core.ex;
      core.ex = PipelineSlot{};
    }
  }

  // ---- fetch ----
  for (int c = 0; c < cfg.n_cores; ++c) {
    CoreState& core = st.cores[c];
    if (core.stopped || core.halted || core.fetch_blocked || core.ex.valid) continue;
    const FetchInput& in = fetch_inputs[c];
    if (!in.inst) continue;
    if (fire(st, EffectId::Stop, ComponentKind::Core, c)) {
      obs.effect_applied_this_cycle = true;
      core.stopped = true;
      trace_note(trace, now, "effect STOP: core " + std::to_string(c) + " pipeline stopped");
      continue;
    }
    Instruction inst = *in.inst;
    if (is_control_flow(inst)) bug_observe(st.bug, BugEventKind::BranchSeen, c, now, 0);
    if (fire(st, EffectId::J, ComponentKind::Core, c) ||
        fire(st, EffectId::PJ, ComponentKind::Core, c) ||
        fire(st, EffectId::PK, ComponentKind::Core, c)) {
      obs.effect_applied_this_cycle = true;
      trace_note(trace, now, "effect: instruction at [" + std::to_string(in.index) +
                                 "] decoded as NOP on core " + std::to_string(c));
      inst = nop();
    }
    if ((is_alu(inst) || inst.op == Op::Beq || inst.op == Op::Bne) &&
        fire(st, EffectId::I, ComponentKind::Core, c)) {
      obs.effect_applied_this_cycle = true;
      inst.rt = inst.rt ^ 1;
      trace_note(trace, now, "effect I: rt low bit flipped on core " + std::to_string(c));
    }
    core.ex = PipelineSlot{};
    core.ex.valid = true;
    core.ex.inst = inst;
    core.ex.index = in.index;
    obs.fetch_consumed[c] = true;
    trace_note(trace, now, "core" + std::to_string(c) + " fetch [" +
                               std::to_string(in.index) + "] " + render_instruction(inst));
    if (is_control_flow(inst)) {
      core.fetch_blocked = true;  // resolved (or final) in execute
    } else {
      int next = in.next_pc;
      if (fire(st, EffectId::H, ComponentKind::Core, c)) {
        obs.effect_applied_this_cycle = true;
        int len = c < static_cast<int>(st.program_len.size()) ? st.program_len[c] : 1;
        next = static_cast<int>(splitmix64(st.bug.scenario.random_seed ^ 0x4845ull) %
                                static_cast<uint64_t>(std::max(1, len)));
        trace_note(trace, now, "effect H: pc redirected to " + std::to_string(next));
      }
      core.pc = next;
    }
  }

  // Level-sensitive criteria sample the post-execute state.
  {
    std::vector<std::vector<Word>> regs;
    std::vector<int> valid_counts;
    if (st.bug.enabled) {
      regs.reserve(cfg.n_cores);
      for (const auto& core : st.cores) regs.push_back(core.regs);
      for (const auto& cache : st.l1) {
        int n = 0;
        for (const auto& l : cache) n += l.valid ? 1 : 0;
        valid_counts.push_back(n);
      }
      bug_observe_levels(st.bug, now, regs, valid_counts, cfg.l1_lines);
    }
  }

  if (st.detector_feed) st.detector_feed->tick(ctx.link_bits);
  if (st.bug.effects_applied > effects_before) obs.effect_applied_this_cycle = true;

  st.cycle = now + 1;
  return obs;
}

RunResult run(const std::vector<Program>& programs, const SocConfig& cfg,
              const BugScenario* scenario, long max_cycles,
              const std::vector<Word>* initial_mem, DetectorFeed* detectors,
              std::vector<TraceEvent>* trace) {
  if (static_cast<int>(programs.size()) != cfg.n_cores)
    throw Error("run: one program per core required");
  SocState st = make_soc_state(cfg);
  if (initial_mem) {
    if (static_cast<int>(initial_mem->size()) != cfg.mem_words)
      throw Error("run: initial memory size mismatch");
    st.mem = *initial_mem;
  }
  if (scenario) install_scenario(st, *scenario);
  st.detector_feed = detectors;
  for (const auto& p : programs) st.program_len.push_back(p.size());

  RunResult res;
  std::vector<FetchInput> inputs(cfg.n_cores);
  while (st.cycle <= max_cycles) {
    for (int c = 0; c < cfg.n_cores; ++c) {
      const CoreState& core = st.cores[c];
      FetchInput in;
      if (!core.halted && !core.stopped && core.pc >= 0 && core.pc < programs[c].size()) {
        in.inst = programs[c].code[core.pc];
        in.index = core.pc;
        in.next_pc = core.pc + 1;
      }
      inputs[c] = in;
    }
    Observation obs = step(st, inputs, trace);
    for (const auto& e : obs.commits) res.commit_log.push_back(e);
    if (obs.check_failure) {
      res.outcome = {RunOutcome::CheckFailed, obs.check_failure->core,
                     obs.check_failure->inst.check, obs.check_failure->cycle,
                     obs.check_failure->index};
      res.first_effect_cycle = st.bug.first_effect_cycle;
      res.final_state = std::move(st);
      return res;
    }
    bool all_halted = true;
    for (const auto& core : st.cores) all_halted &= core.halted;
    if (all_halted && st.in_flight() == 0) {
      res.outcome = {RunOutcome::AllHalted, -1, CheckClass::Normal, st.cycle, -1};
      res.first_effect_cycle = st.bug.first_effect_cycle;
      res.final_state = std::move(st);
      return res;
    }
  }
  res.outcome = {RunOutcome::DeadlockTimeout, -1, CheckClass::Normal, max_cycles, -1};
  res.first_effect_cycle = st.bug.first_effect_cycle;
  res.final_state = std::move(st);
  return res;
}

}  // namespace sqed
