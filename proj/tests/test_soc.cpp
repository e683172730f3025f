#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>

#include "sqed/soc.hpp"

using namespace sqed;

namespace {

SocConfig small_cfg() {
  SocConfig c;
  c.n_cores = 2;
  c.n_l2_banks = 2;
  c.n_mcu = 1;
  return c;
}

Program prog(const std::string& text) { return parse_program(text); }

struct MemOp {
  bool is_store;
  int addr;
  Word value;  // stored value, or observed load value
};

// Sequential-consistency oracle: does some interleaving of the per-core
// memory-op sequences (program order kept) explain the observed values?
bool sc_explainable(const std::vector<std::vector<MemOp>>& per_core,
                    std::map<int, Word> mem, std::vector<size_t> pos = {}) {
  if (pos.empty()) pos.assign(per_core.size(), 0);
  bool done = true;
  for (size_t c = 0; c < per_core.size(); ++c) {
    if (pos[c] >= per_core[c].size()) continue;
    done = false;
    const MemOp& op = per_core[c][pos[c]];
    if (op.is_store) {
      auto saved = mem;
      mem[op.addr] = op.value;
      auto next = pos;
      next[c]++;
      if (sc_explainable(per_core, mem, next)) return true;
      mem = saved;
    } else {
      Word cur = mem.count(op.addr) ? mem[op.addr] : 0;
      if (cur == op.value) {
        auto next = pos;
        next[c]++;
        if (sc_explainable(per_core, mem, next)) return true;
      }
    }
  }
  return done;
}

std::vector<std::vector<MemOp>> observed_mem_ops(const RunResult& r, int n_cores) {
  std::vector<std::vector<MemOp>> out(n_cores);
  for (const auto& e : r.commit_log) {
    if (e.inst.op == Op::Store)
      out[e.core].push_back({true, e.inst.addr, e.value});
    else if (e.inst.op == Op::Load)
      out[e.core].push_back({false, e.inst.addr, e.value});
  }
  return out;
}

}  // namespace

TEST_CASE("per-core HALT programs halt at a small fixed cycle") {
  auto r = run({prog("HALT"), prog("HALT")}, small_cfg(), nullptr, 100);
  CHECK(r.outcome.kind == RunOutcome::AllHalted);
  CHECK(r.outcome.cycle < 10);
  CHECK(r.commit_log.size() == 2);
}

TEST_CASE("store then cross-core load sees the new value") {
  // core0 stores 7 to [4]; core1 loads [4] after the invalidation round-trip.
  auto p0 = prog("MOVI R1, 7\nST [4], R1\nHALT");
  auto p1 = prog("NOP\nNOP\nNOP\nNOP\nNOP\nNOP\nNOP\nNOP\nLD R2, [4]\nHALT");
  auto r = run({p0, p1}, small_cfg(), nullptr, 200);
  REQUIRE(r.outcome.kind == RunOutcome::AllHalted);
  CHECK(r.final_state.cores[1].regs[2] == 7);
}

TEST_CASE("deterministic: identical runs produce identical states and logs") {
  auto p0 = prog("MOVI R1, 3\nST [0], R1\nLD R2, [1]\nADD R3, R1, R2\nST [5], R3\nHALT");
  auto p1 = prog("MOVI R1, 9\nST [1], R1\nLD R2, [0]\nXOR R3, R1, R2\nST [9], R3\nHALT");
  auto a = run({p0, p1}, small_cfg(), nullptr, 500);
  auto b = run({p0, p1}, small_cfg(), nullptr, 500);
  CHECK(a.outcome == b.outcome);
  CHECK(a.final_state == b.final_state);
  CHECK(a.final_state.to_bytes() == b.final_state.to_bytes());
  REQUIRE(a.commit_log.size() == b.commit_log.size());
  for (size_t i = 0; i < a.commit_log.size(); ++i) {
    CHECK(a.commit_log[i].cycle == b.commit_log[i].cycle);
    CHECK(a.commit_log[i].inst == b.commit_log[i].inst);
    CHECK(a.commit_log[i].value == b.commit_log[i].value);
  }
}

TEST_CASE("coherence: exhaustive 2-core programs explainable by SC") {
  // Each core runs MOVI R1, <distinct>; then up to 2 memory ops over
  // addresses {0,1}; HALT. Checked against the interleaving oracle.
  struct Cand { Instruction ops[2]; int n; };
  std::vector<Cand> cands;
  std::vector<Instruction> menu = {load(2, 0), load(3, 1), store(0, 1), store(1, 1)};
  cands.push_back({{}, 0});
  for (auto& a : menu) {
    cands.push_back({{a, a}, 1});
    for (auto& b : menu) cands.push_back({{a, b}, 2});
  }
  int violations = 0, runs = 0;
  for (const auto& ca : cands) {
    for (const auto& cb : cands) {
      std::vector<Program> ps;
      int core_id = 0;
      for (const Cand* c : {&ca, &cb}) {
        Program p;
        p.code.push_back(movi(1, 100 + core_id));
        for (int k = 0; k < c->n; ++k) p.code.push_back(c->ops[k]);
        p.code.push_back(halt());
        ps.push_back(p);
        ++core_id;
      }
      auto r = run(ps, small_cfg(), nullptr, 300);
      REQUIRE(r.outcome.kind == RunOutcome::AllHalted);
      ++runs;
      if (!sc_explainable(observed_mem_ops(r, 2), {})) ++violations;
    }
  }
  CHECK(runs == 21 * 21);
  CHECK(violations == 0);
}

TEST_CASE("coherence: racing same-address stores stay SC under skew") {
  for (int delay = 0; delay < 4; ++delay) {
    Program p0, p1;
    p0.code = {movi(1, 11), store(0, 1), load(2, 0), halt()};
    p1.code = {movi(1, 22)};
    for (int k = 0; k < delay; ++k) p1.code.push_back(nop());
    p1.code.push_back(store(0, 1));
    p1.code.push_back(load(2, 0));
    p1.code.push_back(halt());
    auto r = run({p0, p1}, small_cfg(), nullptr, 300);
    REQUIRE(r.outcome.kind == RunOutcome::AllHalted);
    CHECK(sc_explainable(observed_mem_ops(r, 2), {}));
  }
}

TEST_CASE("pipeline_empty transitions exactly when the last instruction commits") {
  // All 1-3 instruction single-core programs over a store-free alphabet; the
  // reference tracks fetched-minus-committed instructions.
  std::vector<Instruction> menu = {movi(1, 5), alu(Op::Add, 2, 1, 1), load(3, 2), nop()};
  std::vector<std::vector<Instruction>> seqs;
  for (auto& a : menu) {
    seqs.push_back({a});
    for (auto& b : menu) {
      seqs.push_back({a, b});
      for (auto& c : menu) seqs.push_back({a, b, c});
    }
  }
  SocConfig cfg = small_cfg();
  cfg.n_cores = 1;
  for (const auto& seq : seqs) {
    Program p;
    p.code = seq;
    SocState st = make_soc_state(cfg);
    st.program_len.push_back(p.size());
    long in_flight_ref = 0;
    bool prev_empty = true;
    long fetched = 0;
    for (long cy = 0; cy < 60; ++cy) {
      std::vector<FetchInput> in(1);
      if (st.cores[0].pc < p.size() && fetched < p.size()) {
        in[0].inst = p.code[st.cores[0].pc];
        in[0].index = st.cores[0].pc;
        in[0].next_pc = st.cores[0].pc + 1;
      }
      Observation obs = step(st, in);
      if (obs.fetch_consumed[0]) {
        ++in_flight_ref;
        ++fetched;
      }
      in_flight_ref -= static_cast<long>(obs.commits.size());
      bool empty = st.pipeline_empty();
      CHECK(empty == (in_flight_ref == 0));
      if (!prev_empty && empty) CHECK(!obs.commits.empty());
      prev_empty = empty;
    }
    CHECK(in_flight_ref == 0);
  }
}

TEST_CASE("pipeline_empty waits for store drain") {
  SocConfig cfg = small_cfg();
  cfg.n_cores = 1;
  Program p;
  p.code = {store(0, 1)};
  SocState st = make_soc_state(cfg);
  st.program_len.push_back(1);
  bool saw_commit_with_messages = false;
  for (long cy = 0; cy < 20; ++cy) {
    std::vector<FetchInput> in(1);
    if (cy == 0) {
      in[0].inst = p.code[0];
      in[0].index = 0;
      in[0].next_pc = 1;
    }
    Observation obs = step(st, in);
    if (!obs.commits.empty() && st.in_flight() > 0) {
      saw_commit_with_messages = true;
      CHECK_FALSE(st.pipeline_empty());
    }
  }
  CHECK(saw_commit_with_messages);
  CHECK(st.pipeline_empty());
}

TEST_CASE("committed counter equals commit log length at every cycle") {
  auto p0 = prog("MOVI R1, 3\nST [0], R1\nLD R2, [8]\nADD R3, R1, R2\nHALT");
  auto p1 = prog("MOVI R1, 4\nLD R2, [9]\nST [9], R1\nHALT");
  SocConfig cfg = small_cfg();
  std::vector<Program> ps = {p0, p1};
  SocState st = make_soc_state(cfg);
  for (auto& p : ps) st.program_len.push_back(p.size());
  long log_len = 0;
  for (long cy = 0; cy < 100; ++cy) {
    std::vector<FetchInput> in(2);
    for (int c = 0; c < 2; ++c) {
      if (!st.cores[c].halted && st.cores[c].pc < ps[c].size()) {
        in[c].inst = ps[c].code[st.cores[c].pc];
        in[c].index = st.cores[c].pc;
        in[c].next_pc = st.cores[c].pc + 1;
      }
    }
    Observation obs = step(st, in);
    log_len += static_cast<long>(obs.commits.size());
    CHECK(st.commit_total == log_len);
    long per_core = 0;
    for (auto& core : st.cores) per_core += core.committed;
    CHECK(per_core == log_len);
  }
}

TEST_CASE("branches: taken and fall-through") {
  auto p = prog(
      "MOVI R1, 1\n"
      "MOVI R2, 1\n"
      "BEQ R1, R2, eq\n"
      "MOVI R3, 99\n"
      "eq: MOVI R4, 7\n"
      "BNE R1, R2, ne\n"
      "MOVI R5, 5\n"
      "ne: HALT\n");
  SocConfig cfg = small_cfg();
  cfg.n_cores = 1;
  auto r = run({p}, cfg, nullptr, 200);
  REQUIRE(r.outcome.kind == RunOutcome::AllHalted);
  CHECK(r.final_state.cores[0].regs[3] == 0);  // skipped
  CHECK(r.final_state.cores[0].regs[4] == 7);
  CHECK(r.final_state.cores[0].regs[5] == 5);  // BNE not taken
}

TEST_CASE("forwarding produces correct back-to-back values") {
  auto p = prog("MOVI R1, 5\nADD R2, R1, R1\nADD R3, R2, R1\nHALT");
  SocConfig cfg = small_cfg();
  cfg.n_cores = 1;
  auto r = run({p}, cfg, nullptr, 100);
  CHECK(r.final_state.cores[0].regs[2] == 10);
  CHECK(r.final_state.cores[0].regs[3] == 15);
}

TEST_CASE("halt error reported with class, core, cycle") {
  auto p = prog("HALTERR PLC");
  SocConfig cfg = small_cfg();
  cfg.n_cores = 1;
  auto r = run({p}, cfg, nullptr, 100);
  REQUIRE(r.outcome.kind == RunOutcome::CheckFailed);
  CHECK(r.outcome.check == CheckClass::Plc);
  CHECK(r.outcome.core == 0);
  CHECK(r.outcome.index == 0);
}

TEST_CASE("timeout reported as DeadlockTimeout") {
  auto p = prog("loop: B loop");
  SocConfig cfg = small_cfg();
  cfg.n_cores = 1;
  auto r = run({p}, cfg, nullptr, 500);
  CHECK(r.outcome.kind == RunOutcome::DeadlockTimeout);
  CHECK(r.outcome.cycle == 500);
}

TEST_CASE("power controller matches commit stream and exits after the window") {
  SocConfig cfg = small_cfg();
  cfg.n_cores = 1;
  cfg.power_trigger = {movi(1, 7), store(0, 1)};
  cfg.power_trigger_core = 0;
  auto p = prog("MOVI R1, 7\nST [0], R1\nLD R2, [0]\nHALT");
  std::vector<TraceEvent> trace;
  auto r = run({p}, cfg, nullptr, 200, nullptr, nullptr, &trace);
  REQUIRE(r.outcome.kind == RunOutcome::AllHalted);
  bool entered = false, exited = false;
  for (auto& e : trace) {
    if (e.text.find("entering saving") != std::string::npos) entered = true;
    if (e.text.find("exiting saving") != std::string::npos) exited = true;
  }
  CHECK(entered);
  CHECK(exited);
  CHECK(r.final_state.cores[0].regs[2] == 7);
}

TEST_CASE("soc config render/parse round trip") {
  SocConfig c;
  c.n_cores = 4;
  c.n_l2_banks = 4;
  c.n_mcu = 2;
  c.has_io = false;
  c.power_trigger = {movi(2, 3)};
  SocConfig d = parse_soc_config(render_soc_config(c));
  CHECK(d.n_cores == 4);
  CHECK(d.n_l2_banks == 4);
  CHECK(d.n_mcu == 2);
  CHECK(d.has_io == false);
  REQUIRE(d.power_trigger.size() == 1);
  CHECK(d.power_trigger[0] == movi(2, 3));
}

TEST_CASE("config rejections") {
  CHECK_THROWS_AS(parse_soc_config("mem_words 63\n"), Error);
  CHECK_THROWS_AS(parse_soc_config("n_cores 0\n"), Error);
  CHECK_THROWS_AS(parse_soc_config("wat 1\n"), Error);
}
