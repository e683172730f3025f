#include "sqed/bmc.hpp"

#include <algorithm>
#include <cassert>
#include <chrono>
#include <functional>
#include <sstream>
#include <thread>
#include <tuple>
#include <unordered_map>

namespace sqed {

std::string Property::name() const {
  switch (kind) {
    case QedEquality: return "QedEquality";
    case ControlFlowLegal: return "ControlFlowLegal";
    case CommitLiveness: return "CommitLiveness(C=" + std::to_string(commit_bound) + ")";
  }
  return "?";
}

InitialState make_qed_consistent_seed(const std::vector<std::vector<Word>>& regs,
                                      const std::vector<Word>& mem,
                                      const IsaSpec& spec,
                                      const std::vector<int>* resume_pc) {
  const int hr = spec.half_regs();
  for (size_t c = 0; c < regs.size(); ++c) {
    for (int r = 0; r < hr; ++r) {
      if (regs[c][r] != regs[c][r + hr])
        throw Error("NotQedConsistent: core " + std::to_string(c) + " R" +
                    std::to_string(r) + " != R" + std::to_string(r + hr));
    }
  }
  const int hm = spec.half_mem();
  for (int a = 0; a < hm; ++a) {
    if (mem[a] != mem[a + hm])
      throw Error("NotQedConsistent: mem[" + std::to_string(a) + "] != mem[" +
                  std::to_string(a + hm) + "]");
  }
  InitialState init;
  init.kind = InitialState::ArchSeed;
  init.regs = regs;
  init.mem = mem;
  if (resume_pc) init.resume_pc = *resume_pc;
  return init;
}

std::vector<Instruction> default_alphabet() {
  // Addresses 0,1 are an adjacent pair in bank 0/1; 8,9 a second pair.
  return {
      movi(1, 7),  movi(2, -1), alu(Op::Add, 3, 1, 2),
      load(4, 0),  load(4, 1),  load(4, 8),  load(4, 9),
      store(0, 1), store(1, 1), store(8, 1), store(9, 1),
  };
}

std::vector<Instruction> parse_alphabet(const std::string& text, const IsaSpec& spec) {
  Program p = parse_program(text, spec);
  for (const auto& i : p.code) {
    if (is_control_flow(i)) throw Error("alphabet: control-flow instructions not allowed");
    if (i.op == Op::Load || i.op == Op::Store) {
      if (!spec.orig_addr(i.addr)) throw Error("alphabet: address not in original half");
    }
    for (int r : {static_cast<int>(i.rd), static_cast<int>(i.rs), static_cast<int>(i.rt)})
      if (!spec.orig_reg(r)) throw Error("alphabet: register not in original half");
  }
  return p.code;
}

int Candidate::per_core_max() const {
  int m = 0;
  for (const auto& core : blocks) {
    int n = 0;
    for (const auto& b : core) n += static_cast<int>(b.size());
    m = std::max(m, n);
  }
  return m;
}

int Candidate::total_originals() const {
  int t = 0;
  for (const auto& core : blocks)
    for (const auto& b : core) t += static_cast<int>(b.size());
  return t;
}

Program Candidate::materialize(int core) const {
  Program p;
  if (core >= static_cast<int>(blocks.size()) || blocks[core].empty()) {
    p.code.push_back(halt());
    return p;
  }
  const auto& bs = blocks[core];
  // first pass: compute block start indices
  std::vector<int> starts;
  int at = 0;
  for (size_t b = 0; b < bs.size(); ++b) {
    starts.push_back(at);
    at += static_cast<int>(bs[b].size()) + 1;  // + terminator
  }
  for (size_t b = 0; b < bs.size(); ++b) {
    for (const auto& i : bs[b]) p.code.push_back(i);
    if (b + 1 < bs.size())
      p.code.push_back(branch_always(starts[b + 1]));
    else
      p.code.push_back(halt());
  }
  return p;
}

namespace {

uint64_t fnv1a(const std::vector<uint8_t>& bytes, uint64_t h = 1469598103934665603ull) {
  for (uint8_t b : bytes) {
    h ^= b;
    h *= 1099511628211ull;
  }
  return h;
}

void apply_initial_state(SocState& st, const InitialState& init) {
  switch (init.kind) {
    case InitialState::Reset:
      break;
    case InitialState::ArchSeed: {
      for (size_t c = 0; c < init.regs.size() && c < st.cores.size(); ++c)
        st.cores[c].regs = init.regs[c];
      if (!init.mem.empty()) {
        if (init.mem.size() != st.mem.size())
          throw Error("seed memory size mismatch");
        st.mem = init.mem;
      }
      break;
    }
    case InitialState::FullSeed: {
      if (!init.full) throw Error("FullSeed without snapshot");
      const SocState& snap = *init.full;
      if (snap.cfg.n_cores != st.cfg.n_cores || snap.cfg.mem_words != st.cfg.mem_words)
        throw Error("FullSeed snapshot does not match the instance");
      SocConfig cfg = st.cfg;
      st = snap;
      st.cfg = cfg;
      st.cycle = 0;
      st.detector_feed = nullptr;
      st.stores_in_flight.clear();
      st.loads_in_flight.clear();
      st.responses_in_flight.clear();
      st.invals_in_flight.clear();
      st.line_updates_in_flight.clear();
      for (auto& core : st.cores) {
        core.pc = 0;
        core.ex = PipelineSlot{};
        core.cm = PipelineSlot{};
        core.ex_stalled = false;
        core.fetch_blocked = false;
        core.halted = false;
        core.stopped = false;
        core.error.reset();
        core.committed = 0;
      }
      break;
    }
  }
  st.commit_total = 0;
}

int resolve_target(const Instruction& cf, const CoreState& core, int pc) {
  switch (cf.op) {
    case Op::B: return cf.target;
    case Op::Beq: return core.regs[cf.rs] == core.regs[cf.rt] ? cf.target : pc + 1;
    case Op::Bne: return core.regs[cf.rs] != core.regs[cf.rt] ? cf.target : pc + 1;
    default: return pc;  // HALT and HALTERR park in place
  }
}

}  // namespace

SymbolicRunResult run_symbolic(const Candidate& cand, const SocConfig& cfg,
                               const BugScenario* scenario, const Property& prop,
                               const InitialState& init, long max_cycles,
                               const SymbolicRunOptions& opt) {
  SymbolicRunResult res;
  const IsaSpec spec = cfg.isa();
  std::vector<Program> progs;
  for (int c = 0; c < cfg.n_cores; ++c) progs.push_back(cand.materialize(c));

  SocState st = make_soc_state(cfg);
  apply_initial_state(st, init);
  if (scenario) install_scenario(st, *scenario);
  for (const auto& p : progs) st.program_len.push_back(p.size());

  QedModuleState qed = make_qed_module(cfg.n_cores, std::vector<int>(cfg.n_cores, 0));
  std::vector<TraceEvent>* trace = opt.want_trace ? &res.trace : nullptr;

  // per-phase commit records for the QED-compatibility invariants
  std::vector<std::vector<Instruction>> orig_commits(cfg.n_cores), dup_commits(cfg.n_cores);

  // lasso detection (CommitLiveness): visited canonical states
  std::unordered_map<uint64_t, std::vector<std::pair<long, long>>> seen;  // hash -> (cycle, commits)
  std::unordered_map<uint64_t, std::vector<uint8_t>> seen_bytes;

  std::vector<QedCoreInputs> qin(cfg.n_cores);
  std::vector<FetchInput> fin(cfg.n_cores);

  auto fail_invariant = [&](const std::string& why) {
    res.invariants_ok = false;
    if (res.invariant_failure.empty()) res.invariant_failure = why;
  };

  for (long cy = 0; cy < max_cycles; ++cy) {
    const QedMode mode_now = qed.mode;
    for (int c = 0; c < cfg.n_cores; ++c) {
      const CoreState& core = st.cores[c];
      QedCoreInputs& in = qin[c];
      in = QedCoreInputs{};
      int pc = core.pc;
      if (!core.halted && pc >= 0 && pc < progs[c].size()) {
        in.have_current = true;
        in.current = progs[c].code[pc];
      }
      if (!core.halted && pc + 1 >= 0 && pc + 1 < progs[c].size()) {
        in.have_next = true;
        in.next = progs[c].code[pc + 1];
      }
      in.next_pc = pc + 1;
      in.target_address = in.have_current && is_control_flow(in.current)
                              ? resolve_target(in.current, core, pc)
                              : pc;
    }
    bool pempty = st.pipeline_empty();
    auto qout = qed_step(qed, qin, pempty, spec);
    if (trace && qed.mode != mode_now)
      trace->push_back({st.cycle, std::string("qed: ") + qed_mode_name(mode_now) +
                                      " -> " + qed_mode_name(qed.mode)});
    if (opt.check_qed_invariants && qed.qed_ready && mode_now != QedMode::Check)
      fail_invariant("qed_ready outside CHECK");

    std::vector<int> pre_pc(cfg.n_cores);
    for (int c = 0; c < cfg.n_cores; ++c) {
      pre_pc[c] = st.cores[c].pc;
      FetchInput& f = fin[c];
      f = FetchInput{};
      if (qout[c].instruction_override) {
        if (!qout[c].instruction_out_bubble) {
          f.inst = qout[c].instruction_out;
          f.index = st.cores[c].pc;
          f.next_pc = st.cores[c].pc + 1;
        }
      } else if (qin[c].have_current) {
        f.inst = qin[c].current;
        f.index = st.cores[c].pc;
        f.next_pc = st.cores[c].pc + 1;
      }
    }

    Observation obs = step(st, fin, trace);
    const long now = st.cycle - 1;

    // Control-flow legality: a consumed non-control-flow fetch must advance
    // the pc to exactly next_pc; the module's own redirects are applied below
    // and are exempt.
    if (prop.kind == Property::ControlFlowLegal && !res.violated) {
      for (int c = 0; c < cfg.n_cores; ++c) {
        if (!obs.fetch_consumed[c]) continue;
        if (fin[c].inst && is_control_flow(*fin[c].inst)) continue;
        if (st.cores[c].pc != fin[c].next_pc) {
          res.violated = true;
          res.violation_cycle = now;
          res.detail = "core " + std::to_string(c) + " fetched pc " +
                       std::to_string(st.cores[c].pc) + " after [" +
                       std::to_string(fin[c].index) + "], expected " +
                       std::to_string(fin[c].next_pc);
        }
      }
    }

    for (int c = 0; c < cfg.n_cores; ++c)
      if (qout[c].pc_override && !st.cores[c].halted) st.cores[c].pc = qout[c].pc;

    // Phase commit bookkeeping.
    for (const auto& e : obs.commits) {
      if (is_control_flow(e.inst)) continue;
      if (mode_now == QedMode::Orig || mode_now == QedMode::Wait1)
        orig_commits[e.core].push_back(e.inst);
      else if (mode_now == QedMode::Dup || mode_now == QedMode::Wait2)
        dup_commits[e.core].push_back(e.inst);
    }

    if (qed.qed_ready) {
      if (opt.check_qed_invariants) {
        for (int c = 0; c < cfg.n_cores; ++c) {
          if (dup_commits[c].size() != orig_commits[c].size()) {
            fail_invariant("core " + std::to_string(c) +
                           ": duplicated sequence length mismatch");
            continue;
          }
          for (size_t k = 0; k < orig_commits[c].size(); ++k) {
            if (!(dup_commits[c][k] == dup_map(orig_commits[c][k], spec)))
              fail_invariant("core " + std::to_string(c) + ": commit " +
                             std::to_string(k) + " is not the duplicate of its original");
          }
        }
      }
      if (prop.kind == Property::QedEquality && !res.violated) {
        for (int c = 0; c < cfg.n_cores; ++c) {
          if (!all_pairs_equal(st.cores[c], spec)) {
            res.violated = true;
            res.violation_cycle = now;
            int hr = spec.half_regs();
            for (int r = 0; r < hr; ++r) {
              if (st.cores[c].regs[r] != st.cores[c].regs[r + hr]) {
                res.detail = "core " + std::to_string(c) + ": R" + std::to_string(r) +
                             "=" + std::to_string(st.cores[c].regs[r]) + " != R" +
                             std::to_string(r + hr) + "=" +
                             std::to_string(st.cores[c].regs[r + hr]);
                break;
              }
            }
            break;
          }
        }
      }
      for (auto& v : orig_commits) v.clear();
      for (auto& v : dup_commits) v.clear();
    }

    if (res.violated) break;

    bool all_halted = true;
    for (const auto& core : st.cores) all_halted &= core.halted;
    if (all_halted && st.in_flight() == 0) {
      res.all_halted = true;
      break;
    }

    if (prop.kind == Property::CommitLiveness) {
      if (st.commit_total >= prop.commit_bound) break;  // property satisfied
      auto bytes = st.to_bytes();
      auto qb = qed.to_bytes();
      bytes.insert(bytes.end(), qb.begin(), qb.end());
      uint64_t h = fnv1a(bytes);
      auto& hits = seen[h];
      bool repeated = false;
      for (auto& [cyc, committed] : hits) {
        if (committed == st.commit_total && seen_bytes[h] == bytes) {
          repeated = true;
          res.violated = true;
          res.violation_cycle = now;
          res.detail = "state at cycle " + std::to_string(now) + " repeats cycle " +
                       std::to_string(cyc) + " with no commits in between (count " +
                       std::to_string(st.commit_total) + " < C=" +
                       std::to_string(prop.commit_bound) + ")";
          break;
        }
      }
      if (res.violated) break;
      if (hits.empty()) seen_bytes[h] = bytes;
      if (!repeated) hits.emplace_back(now, st.commit_total);
    }
  }

  res.cycles_run = st.cycle;
  res.commits = st.commit_total;
  res.final_state = std::move(st);
  return res;
}

namespace {

// Length-l index sequences in lexicographic order.
struct SeqOdometer {
  int alphabet, len;
  std::vector<int> idx;
  bool done = false;

  SeqOdometer(int a, int l) : alphabet(a), len(l), idx(l, 0) { done = a == 0 && l > 0; }
  bool advance() {
    for (int k = len - 1; k >= 0; --k) {
      if (++idx[k] < alphabet) return true;
      idx[k] = 0;
    }
    done = true;
    return false;
  }
};

std::vector<std::vector<int>> block_splits(int len, int max_blocks, int max_block_len) {
  std::vector<std::vector<int>> out;
  if (len == 0) {
    out.push_back({});
    return out;
  }
  std::vector<int> cur;
  std::function<void(int)> rec = [&](int left) {
    if (left == 0) {
      out.push_back(cur);
      return;
    }
    if (static_cast<int>(cur.size()) == max_blocks) return;
    for (int part = 1; part <= std::min(left, max_block_len); ++part) {
      cur.push_back(part);
      rec(left - part);
      cur.pop_back();
    }
  };
  rec(len);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  });
  return out;
}

Candidate assemble(const std::vector<Instruction>& alphabet, int n_cores,
                   const std::vector<std::vector<int>>& seqs,
                   const std::vector<const std::vector<int>*>& splits) {
  Candidate cand;
  cand.blocks.resize(n_cores);
  for (int c = 0; c < n_cores; ++c) {
    size_t at = 0;
    for (int part : *splits[c]) {
      std::vector<Instruction> block;
      for (int k = 0; k < part; ++k) block.push_back(alphabet[seqs[c][at++]]);
      cand.blocks[c].push_back(std::move(block));
    }
  }
  return cand;
}

std::vector<int> lex_key(const std::vector<std::vector<int>>& seqs,
                         const std::vector<const std::vector<int>*>& splits) {
  std::vector<int> key;
  for (size_t c = 0; c < seqs.size(); ++c) {
    key.push_back(static_cast<int>(seqs[c].size()));
    key.push_back(static_cast<int>(splits[c]->size()));
    for (int p : *splits[c]) key.push_back(p);
    for (int i : seqs[c]) key.push_back(i);
  }
  return key;
}

struct BestHit {
  bool found = false;
  long cycle = 0;
  std::vector<int> key;
  Candidate cand;
  std::string detail;

  void offer(long cy, std::vector<int> k, const Candidate& c, const std::string& d) {
    if (!found || cy < cycle || (cy == cycle && k < key)) {
      found = true;
      cycle = cy;
      key = std::move(k);
      cand = c;
      detail = d;
    }
  }
  void merge(const BestHit& o) {
    if (o.found) offer(o.cycle, o.key, o.cand, o.detail);
  }
};

// All per-core length vectors with the given maximum and total.
void length_vectors(int n_cores, int m, int total, int max_len,
                    std::vector<std::vector<int>>& out) {
  std::vector<int> cur(n_cores, 0);
  std::function<void(int, int, bool)> rec = [&](int core, int left, bool has_max) {
    if (core == n_cores) {
      if (left == 0 && has_max) out.push_back(cur);
      return;
    }
    for (int l = 0; l <= std::min(left, max_len); ++l) {
      if (l > m) break;
      cur[core] = l;
      rec(core + 1, left - l, has_max || l == m);
    }
  };
  rec(0, total, false);
}

struct LayerParams {
  const SocConfig* cfg;
  const SearchConfig* sc;
  const Property* prop;
  const BugScenario* scenario;
};

// Evaluates every candidate of one per-core length vector; workers stride over
// the first core's sequence space.
BestHit evaluate_layer(const LayerParams& P, const std::vector<int>& lens,
                       long* explored) {
  const auto& alphabet = P.sc->alphabet;
  const int A = static_cast<int>(alphabet.size());
  const int n = P.cfg->n_cores;

  std::vector<std::vector<std::vector<int>>> splits_per_core(n);
  for (int c = 0; c < n; ++c)
    splits_per_core[c] = block_splits(lens[c], P.sc->max_blocks, P.sc->max_block_len);

  long first_count = 1;
  for (int k = 0; k < lens[0]; ++k) first_count *= A;

  int workers = P.sc->workers > 0 ? P.sc->workers
                                  : static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  workers = static_cast<int>(std::min<long>(workers, first_count));

  std::vector<BestHit> hits(workers);
  std::vector<long> counts(workers, 0);

  auto work = [&](int w) {
    std::vector<std::vector<int>> seqs(n);
    std::vector<const std::vector<int>*> splits(n);
    std::function<void(int)> rec_core = [&](int core) {
      if (core == n) {
        Candidate cand = assemble(alphabet, n, seqs, splits);
        ++counts[w];
        auto r = run_symbolic(cand, *P.cfg, P.scenario, *P.prop, P.sc->init,
                              P.sc->max_cycles);
        if (r.violated)
          hits[w].offer(r.violation_cycle, lex_key(seqs, splits), cand, r.detail);
        return;
      }
      SeqOdometer od(A, lens[core]);
      if (od.done) return;
      do {
        seqs[core] = od.idx;
        for (const auto& sp : splits_per_core[core]) {
          splits[core] = &sp;
          rec_core(core + 1);
        }
      } while (od.advance());
    };

    // first core strided by worker id
    SeqOdometer od(A, lens[0]);
    if (od.done) return;
    long i = 0;
    do {
      if (i % workers == w) {
        seqs[0] = od.idx;
        for (const auto& sp : splits_per_core[0]) {
          splits[0] = &sp;
          if (n == 1) {
            Candidate cand = assemble(alphabet, n, seqs, splits);
            ++counts[w];
            auto r = run_symbolic(cand, *P.cfg, P.scenario, *P.prop, P.sc->init,
                                  P.sc->max_cycles);
            if (r.violated)
              hits[w].offer(r.violation_cycle, lex_key(seqs, splits), cand, r.detail);
          } else {
            rec_core(1);
          }
        }
      }
      ++i;
    } while (od.advance());
  };

  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }

  BestHit best;
  for (auto& h : hits) best.merge(h);
  for (long c : counts) *explored += c;
  return best;
}

}  // namespace

SearchOutcome find_min_counterexample(const SocConfig& instance_cfg,
                                      const std::string& instance_id,
                                      const SearchConfig& cfg, const Property& prop,
                                      const BugScenario* scenario) {
  SearchOutcome out;
  const int n = instance_cfg.n_cores;
  const int per_core_cap = std::min(cfg.max_per_core, cfg.max_blocks * cfg.max_block_len);
  LayerParams P{&instance_cfg, &cfg, &prop, scenario};

  for (int m = 1; m <= per_core_cap; ++m) {
    for (int total = m; total <= std::min(cfg.max_total, m * n); ++total) {
      std::vector<std::vector<int>> lens;
      length_vectors(n, m, total, per_core_cap, lens);
      BestHit best;
      for (const auto& lv : lens) {
        BestHit h = evaluate_layer(P, lv, &out.candidates_explored);
        best.merge(h);
      }
      if (best.found) {
        Counterexample cex;
        cex.candidate = best.cand;
        cex.property = prop;
        cex.instance_id = instance_id;
        cex.violation_cycle = best.cycle;
        cex.violation_detail = best.detail;
        cex.obj_per_core_max = m;
        cex.obj_total = total;
        SymbolicRunOptions opt;
        opt.want_trace = true;
        auto r = run_symbolic(best.cand, instance_cfg, scenario, prop, cfg.init,
                              cfg.max_cycles, opt);
        cex.log = std::move(r.trace);
        out.status = SearchOutcome::Found;
        out.cex = std::move(cex);
        return out;
      }
    }
  }
  out.status = SearchOutcome::BoundExhausted;
  out.bounds_searched = "per-core <= " + std::to_string(per_core_cap) +
                        ", total <= " + std::to_string(cfg.max_total) +
                        ", cycles <= " + std::to_string(cfg.max_cycles);
  return out;
}

SearchOutcome check_commit_liveness(const SocConfig& instance_cfg,
                                    const std::string& instance_id,
                                    const SearchConfig& cfg, long commit_bound,
                                    const BugScenario* scenario) {
  Property p;
  p.kind = Property::CommitLiveness;
  p.commit_bound = commit_bound;
  return find_min_counterexample(instance_cfg, instance_id, cfg, p, scenario);
}

long calibrate_commit_bound(const SocConfig& instance_cfg, const SearchConfig& cfg,
                            long budget_ms) {
  if (cfg.max_cycles <= 0) return 0;
  using clock = std::chrono::steady_clock;
  auto t0 = clock::now();
  const int n = instance_cfg.n_cores;
  const int per_core_cap = std::min(cfg.max_per_core, cfg.max_blocks * cfg.max_block_len);
  Property prop;  // commit counting only; run to halt or bound
  prop.kind = Property::QedEquality;

  long min_commits = -1;
  bool out_of_budget = false;
  const auto& alphabet = cfg.alphabet;
  const int A = static_cast<int>(alphabet.size());

  std::vector<std::vector<int>> seqs(n);
  std::vector<const std::vector<int>*> splits(n);
  std::vector<std::vector<std::vector<int>>> splits_cache(per_core_cap + 1);
  for (int l = 0; l <= per_core_cap; ++l)
    splits_cache[l] = block_splits(l, cfg.max_blocks, cfg.max_block_len);

  std::function<void(int, int)> rec = [&](int core, int total_left) {
    if (out_of_budget) return;
    if (core == n) {
      Candidate cand = assemble(alphabet, n, seqs, splits);
      if (cand.total_originals() == 0) return;
      auto r = run_symbolic(cand, instance_cfg, nullptr, prop, cfg.init, cfg.max_cycles);
      if (min_commits < 0 || r.commits < min_commits) min_commits = r.commits;
      if (std::chrono::duration_cast<std::chrono::milliseconds>(clock::now() - t0).count() >
          budget_ms)
        out_of_budget = true;
      return;
    }
    for (int l = 0; l <= std::min(total_left, per_core_cap); ++l) {
      SeqOdometer od(A, l);
      if (od.done) continue;
      do {
        seqs[core] = od.idx;
        for (const auto& sp : splits_cache[l]) {
          splits[core] = &sp;
          rec(core + 1, total_left - l);
          if (out_of_budget) return;
        }
      } while (od.advance());
    }
  };
  rec(0, cfg.max_total);
  // The incrementing scheme of the source procedure: C grows while every
  // candidate still commits at least C; equivalently the scan minimum.
  return min_commits < 0 ? 0 : min_commits;
}

std::optional<Objective> oracle_min_objective(const SocConfig& instance_cfg,
                                              const SearchConfig& cfg,
                                              const Property& prop,
                                              const BugScenario* scenario) {
  const int n = instance_cfg.n_cores;
  const int per_core_cap = std::min(cfg.max_per_core, cfg.max_blocks * cfg.max_block_len);
  const auto& alphabet = cfg.alphabet;
  const int A = static_cast<int>(alphabet.size());

  std::optional<Objective> best;
  std::vector<std::vector<int>> seqs(n);
  std::vector<const std::vector<int>*> splits(n);
  std::vector<std::vector<std::vector<int>>> splits_cache(per_core_cap + 1);
  for (int l = 0; l <= per_core_cap; ++l)
    splits_cache[l] = block_splits(l, cfg.max_blocks, cfg.max_block_len);

  std::function<void(int, int)> rec = [&](int core, int total_left) {
    if (core == n) {
      Candidate cand = assemble(alphabet, n, seqs, splits);
      if (cand.total_originals() == 0) return;
      auto r = run_symbolic(cand, instance_cfg, scenario, prop, cfg.init, cfg.max_cycles);
      if (!r.violated) return;
      Objective o{cand.per_core_max(), cand.total_originals(), r.violation_cycle};
      auto tup = [](const Objective& x) { return std::tuple(x.per_core_max, x.total, x.cycle); };
      if (!best || tup(o) < tup(*best)) best = o;
      return;
    }
    for (int l = 0; l <= std::min(total_left, per_core_cap); ++l) {
      SeqOdometer od(A, l);
      if (od.done) continue;
      do {
        seqs[core] = od.idx;
        for (const auto& sp : splits_cache[l]) {
          splits[core] = &sp;
          rec(core + 1, total_left - l);
        }
      } while (od.advance());
    }
  };
  rec(0, cfg.max_total);
  return best;
}

std::string render_counterexample(const Counterexample& cex) {
  std::ostringstream o;
  o << "instance " << cex.instance_id << "\n";
  o << "property " << cex.property.name() << "\n";
  o << "violation_cycle " << cex.violation_cycle << "\n";
  o << "detail " << cex.violation_detail << "\n";
  o << "objective per_core_max=" << cex.obj_per_core_max << " total=" << cex.obj_total
    << "\n";
  for (size_t c = 0; c < cex.candidate.blocks.size(); ++c) {
    o << "core " << c << ":\n";
    const auto& bs = cex.candidate.blocks[c];
    if (bs.empty()) o << "  (no instructions)\n";
    for (size_t b = 0; b < bs.size(); ++b) {
      o << "  block " << b << ":\n";
      for (const auto& i : bs[b]) o << "    " << render_instruction(i) << "\n";
    }
  }
  o << "cycle log:\n";
  for (const auto& e : cex.log) o << "  [" << e.cycle << "] " << e.text << "\n";
  return o.str();
}

bool replay_counterexample(const Counterexample& cex, const SocConfig& instance_cfg,
                           const BugScenario* scenario, const InitialState& init,
                           long max_cycles) {
  auto r = run_symbolic(cex.candidate, instance_cfg, scenario, cex.property, init,
                        max_cycles);
  return r.violated && r.violation_cycle == cex.violation_cycle;
}

}  // namespace sqed
