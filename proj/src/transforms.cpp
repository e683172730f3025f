#include "sqed/transforms.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace sqed {

namespace {

void validate_input(const Program& p, const TransformParams& t, const IsaSpec& spec) {
  if (t.inst_min > t.inst_max) throw Error("transform: inst_min > inst_max");
  const int floor = t.reserved_floor(spec);
  for (const auto& i : p.code) {
    for (int r : {static_cast<int>(i.rd), static_cast<int>(i.rs), static_cast<int>(i.rt)}) {
      if (spec.dup_reg(r))
        throw Error("transform: program uses duplicate-half register R" + std::to_string(r));
    }
    if (is_alu(i) || i.op == Op::MovImm || i.op == Op::Load) {
      if (i.rd >= 13 && i.op != Op::Nop)
        throw Error("transform: registers R13-R15 are reserved, got R" + std::to_string(i.rd));
    }
    if (i.op == Op::Load || i.op == Op::Store) {
      if (spec.dup_addr(i.addr))
        throw Error("transform: program uses duplicate-half address " + std::to_string(i.addr));
      if (i.addr >= floor)
        throw Error("transform: address " + std::to_string(i.addr) + " is reserved scratch");
    }
  }
}

// Builds an instruction list with symbolic branch targets so insertions do not
// invalidate branch destinations; original targets are remapped at link time.
struct Builder {
  struct Slot {
    Instruction inst;
    int orig_target = -1;        // branch target as an original-program index
    std::string label_target;    // or a named label
  };
  std::vector<Slot> out;
  std::map<std::string, int> labels;
  std::map<int, int> orig_to_new;  // original index -> first emitted position

  void mark_original(int orig_index) { orig_to_new.emplace(orig_index, size()); }
  void label_here(const std::string& name) { labels[name] = size(); }
  int size() const { return static_cast<int>(out.size()); }

  void emit(const Instruction& i) { out.push_back({i, -1, ""}); }
  void emit_branch_orig(const Instruction& br) { out.push_back({br, br.target, ""}); }
  void emit_branch_label(Instruction br, const std::string& label) {
    out.push_back({br, -1, label});
  }

  Program link(int orig_program_size) {
    // A branch to the original program end keeps pointing past the new end.
    orig_to_new.emplace(orig_program_size, size());
    Program p;
    for (auto& s : out) {
      Instruction i = s.inst;
      if (s.orig_target >= 0) {
        auto it = orig_to_new.find(s.orig_target);
        if (it == orig_to_new.end()) throw Error("transform: dangling branch target");
        i.target = it->second;
      } else if (!s.label_target.empty()) {
        auto it = labels.find(s.label_target);
        if (it == labels.end()) throw Error("transform: dangling label " + s.label_target);
        i.target = it->second;
      }
      p.code.push_back(i);
    }
    p.labels = labels;
    return p;
  }
};

struct ErrBlocks {
  bool normal = false, load = false, store = false;

  void append(Builder& b) {
    if (normal) {
      b.label_here("__err_normal");
      b.emit(halt_error(CheckClass::Normal));
    }
    if (load) {
      b.label_here("__err_load");
      b.emit(halt_error(CheckClass::Load));
    }
    if (store) {
      b.label_here("__err_store");
      b.emit(halt_error(CheckClass::Store));
    }
  }
};

}  // namespace

int SignatureTable::block_of(int index) const {
  for (size_t b = 0; b < block_start.size(); ++b)
    if (index >= block_start[b] && index < block_start[b] + block_len[b])
      return static_cast<int>(b);
  return -1;
}

SignatureTable make_signature_table(const Program& p, int inst_max) {
  std::set<int> leaders;
  if (p.size() > 0) leaders.insert(0);
  for (int i = 0; i < p.size(); ++i) {
    const Instruction& ins = p.code[i];
    if (is_branch(ins)) {
      leaders.insert(ins.target);
      if (i + 1 < p.size()) leaders.insert(i + 1);
    } else if (ins.op == Op::Halt || ins.op == Op::HaltError) {
      if (i + 1 < p.size()) leaders.insert(i + 1);
    }
  }
  // Optional chopping: a window boundary every inst_max instructions.
  if (inst_max > 0) {
    std::vector<int> base(leaders.begin(), leaders.end());
    for (size_t k = 0; k < base.size(); ++k) {
      int start = base[k];
      int end = k + 1 < base.size() ? base[k + 1] : p.size();
      for (int at = start + inst_max; at < end; at += inst_max) leaders.insert(at);
    }
  }

  SignatureTable t;
  std::vector<int> ls(leaders.begin(), leaders.end());
  std::map<int, int> leader_to_block;
  for (size_t b = 0; b < ls.size(); ++b) {
    int start = ls[b];
    int end = b + 1 < ls.size() ? ls[b + 1] : p.size();
    t.block_start.push_back(start);
    t.block_len.push_back(end - start);
    t.signature.push_back(static_cast<Word>((b + 1) * 37 + 5));
    leader_to_block[start] = static_cast<int>(b);
  }
  t.preds.assign(t.block_start.size(), {});
  if (!t.block_start.empty()) t.preds[0].push_back(-1);  // program entry
  for (size_t b = 0; b < t.block_start.size(); ++b) {
    int last = t.block_start[b] + t.block_len[b] - 1;
    const Instruction& tail = p.code[last];
    auto add_edge = [&](int target_index) {
      auto it = leader_to_block.find(target_index);
      if (it == leader_to_block.end()) return;
      auto& v = t.preds[it->second];
      if (std::find(v.begin(), v.end(), static_cast<int>(b)) == v.end())
        v.push_back(static_cast<int>(b));
    };
    if (is_branch(tail)) {
      add_edge(tail.target);
      if (tail.op != Op::B) add_edge(last + 1);
    } else if (tail.op != Op::Halt && tail.op != Op::HaltError) {
      add_edge(last + 1);
    }
  }
  return t;
}

Program eddi_v(const Program& p, const TransformParams& t, const IsaSpec& spec) {
  validate_input(p, t, spec);
  Builder b;
  ErrBlocks errs;
  const int hr = spec.half_regs();

  // Windows never cross basic-block boundaries: a path that enters a block
  // mid-stream must not meet duplicates of instructions it did not run.
  SignatureTable blocks = make_signature_table(p, 0);
  std::set<int> leaders(blocks.block_start.begin(), blocks.block_start.end());

  std::vector<Instruction> window;
  int seam = 0;

  auto flush = [&]() {
    if (window.empty()) return;
    std::vector<int> written;
    for (const auto& i : window) {
      b.emit(dup_map(i, spec));
      if (i.op == Op::Load) {
        errs.load = true;
        b.emit_branch_label(branch_cmp(Op::Bne, i.rd, i.rd + hr, 0), "__err_load");
      }
      if ((is_alu(i) || i.op == Op::MovImm || i.op == Op::Load) &&
          std::find(written.begin(), written.end(), i.rd) == written.end())
        written.push_back(i.rd);
    }
    for (int r : written) {
      errs.normal = true;
      b.emit_branch_label(branch_cmp(Op::Bne, r, r + hr, 0), "__err_normal");
    }
    window.clear();
    b.label_here("__w" + std::to_string(seam++));
  };

  // Leading initialization MOVIs get their duplicates inline.
  int i = 0;
  while (i < p.size() && p.code[i].op == Op::MovImm && !leaders.count(i + 1)) {
    b.mark_original(i);
    b.emit(p.code[i]);
    b.emit(dup_map(p.code[i], spec));
    ++i;
  }

  for (; i < p.size(); ++i) {
    const Instruction& ins = p.code[i];
    if (leaders.count(i)) flush();
    if (is_control_flow(ins)) {
      flush();
      b.mark_original(i);
      if (is_branch(ins))
        b.emit_branch_orig(ins);
      else
        b.emit(ins);
      continue;
    }
    if (ins.op == Op::Store) {
      flush();
      errs.store = true;
      b.emit_branch_label(branch_cmp(Op::Bne, ins.rs, ins.rs + hr, 0), "__err_store");
      b.mark_original(i);
      b.emit(ins);
      b.emit(dup_map(ins, spec));
      continue;
    }
    b.mark_original(i);
    b.emit(ins);
    window.push_back(ins);
    if (static_cast<int>(window.size()) >= t.inst_max) flush();
  }
  flush();
  errs.append(b);
  return b.link(p.size());
}

Program plc(const Program& p, const TransformParams& t, const IsaSpec& spec,
            bool* warned_empty) {
  if (t.plc_list.empty()) {
    if (warned_empty) *warned_empty = true;
    return p;
  }
  for (const auto& [a, a2] : t.plc_list) {
    if (!spec.orig_addr(a)) throw Error("plc: address not in original half");
    if (a2 != a + spec.half_mem()) throw Error("plc: pair is not (A, dup(A))");
  }
  const int rt_orig = 15, rt_dup = 15 + spec.half_regs();

  // Insertion points: program start plus every __w<k> seam label.
  std::set<int> points = {0};
  for (const auto& [name, idx] : p.labels)
    if (name.rfind("__w", 0) == 0) points.insert(idx);

  Builder b;
  bool plc_used = false;
  auto emit_plc = [&]() {
    for (const auto& [a, a2] : t.plc_list) {
      b.emit(load(rt_orig, a));
      b.emit(load(rt_dup, a2));
      b.emit_branch_label(branch_cmp(Op::Bne, rt_orig, rt_dup, 0), "__err_plc");
      plc_used = true;
    }
  };
  for (int i = 0; i < p.size(); ++i) {
    // re-anchor existing labels at the re-emitted instruction
    for (const auto& [name, idx] : p.labels)
      if (idx == i) b.label_here(name);
    if (points.count(i)) emit_plc();
    b.mark_original(i);
    const Instruction& ins = p.code[i];
    if (is_branch(ins))
      b.emit_branch_orig(ins);
    else
      b.emit(ins);
  }
  for (const auto& [name, idx] : p.labels)
    if (idx == p.size()) b.label_here(name);
  if (plc_used) {
    b.label_here("__err_plc");
    b.emit(halt_error(CheckClass::Plc));
  }
  return b.link(p.size());
}

namespace {

// Shared prologue plumbing: saves R1/R14 to the per-core scratch slots and
// restores them, mirroring every touched word into the duplicate half.
struct Scratch {
  int t1, t2, sigw, cnt, half;
  explicit Scratch(const TransformParams& t, const IsaSpec& spec) {
    int base = t.scratch_base(spec);
    if (base < 0) throw Error("transform: no room for scratch region");
    t1 = base + kSaveR1;
    t2 = base + kSaveR14;
    sigw = base + kSignatureWord;
    cnt = base + kCounterWord;
    half = spec.half_mem();
  }
};

}  // namespace

Program cfcss_v(const Program& p, const TransformParams& t, const IsaSpec& spec) {
  if (p.size() == 0) return p;
  Scratch s(t, spec);
  SignatureTable table = make_signature_table(p, 0);
  Builder b;
  bool used = false;

  for (int i = 0; i < p.size(); ++i) {
    for (const auto& [name, idx] : p.labels)
      if (idx == i) b.label_here(name);
    // Block prologue before the leader instruction; branches into the block
    // are remapped here via mark_original on the leader.
    int blk = -1;
    for (size_t k = 0; k < table.block_start.size(); ++k)
      if (table.block_start[k] == i) blk = static_cast<int>(k);
    if (blk >= 0) {
      b.mark_original(i);
      used = true;
      std::string ok = "__cfcss_ok_" + std::to_string(blk);
      b.emit(store(s.t1, 1));
      b.emit(store(s.t2, 14));
      b.emit(load(14, s.sigw));
      for (int pred : table.preds[blk]) {
        Word sig = pred < 0 ? 0 : table.signature[pred];
        b.emit(movi(1, static_cast<int32_t>(sig)));
        b.emit_branch_label(branch_cmp(Op::Beq, 14, 1, 0), ok);
      }
      b.emit_branch_label(branch_always(0), "__err_cfcss");
      b.label_here(ok);
      b.emit(movi(1, static_cast<int32_t>(table.signature[blk])));
      b.emit(store(s.sigw, 1));
      b.emit(store(s.sigw + s.half, 1));
      b.emit(load(14, s.t2));
      b.emit(store(s.t2 + s.half, 14));
      b.emit(load(1, s.t1));
      b.emit(store(s.t1 + s.half, 1));
      const Instruction& ins = p.code[i];
      if (is_branch(ins))
        b.emit_branch_orig(ins);
      else
        b.emit(ins);
      continue;
    }
    b.mark_original(i);
    const Instruction& ins = p.code[i];
    if (is_branch(ins))
      b.emit_branch_orig(ins);
    else
      b.emit(ins);
  }
  for (const auto& [name, idx] : p.labels)
    if (idx == p.size()) b.label_here(name);
  if (used) {
    b.label_here("__err_cfcss");
    b.emit(halt_error(CheckClass::Cfcss));
  }
  return b.link(p.size());
}

Program cftss_v(const Program& p, const TransformParams& t, const IsaSpec& spec) {
  if (p.size() == 0) return p;
  Scratch s(t, spec);
  SignatureTable table = make_signature_table(p, t.inst_max);
  Builder b;
  bool want_stop = t.stop_count > 0;

  std::set<int> starts(table.block_start.begin(), table.block_start.end());
  for (int i = 0; i < p.size(); ++i) {
    for (const auto& [name, idx] : p.labels)
      if (idx == i) b.label_here(name);
    if (starts.count(i)) {
      int blk = table.block_of(i);
      b.mark_original(i);
      b.emit(store(s.t1, 1));
      b.emit(store(s.t2, 14));
      b.emit(movi(1, static_cast<int32_t>(table.signature[blk])));
      b.emit(store(s.sigw, 1));
      b.emit(store(s.sigw + s.half, 1));
      b.emit(load(14, s.cnt));
      b.emit(movi(1, 1));
      b.emit(alu(Op::Add, 14, 14, 1));
      b.emit(store(s.cnt, 14));
      b.emit(store(s.cnt + s.half, 14));
      if (want_stop) {
        b.emit(movi(1, static_cast<int32_t>(t.stop_count)));
        b.emit_branch_label(branch_cmp(Op::Beq, 14, 1, 0), "__cftss_stop");
      }
      b.emit(load(14, s.t2));
      b.emit(store(s.t2 + s.half, 14));
      b.emit(load(1, s.t1));
      b.emit(store(s.t1 + s.half, 1));
    } else {
      b.mark_original(i);
    }
    const Instruction& ins = p.code[i];
    if (is_branch(ins))
      b.emit_branch_orig(ins);
    else
      b.emit(ins);
  }
  for (const auto& [name, idx] : p.labels)
    if (idx == p.size()) b.label_here(name);
  if (want_stop) {
    b.label_here("__cftss_stop");
    b.emit(halt());
  }
  return b.link(p.size());
}

}  // namespace sqed
