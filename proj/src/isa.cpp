#include "sqed/isa.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace sqed {

const char* check_class_name(CheckClass c) {
  switch (c) {
    case CheckClass::Normal: return "NORMAL";
    case CheckClass::Load: return "LOAD";
    case CheckClass::Store: return "STORE";
    case CheckClass::Plc: return "PLC";
    case CheckClass::Cfcss: return "CFCSS";
  }
  return "?";
}

std::optional<CheckClass> check_class_from_name(const std::string& s) {
  std::string u = s;
  std::transform(u.begin(), u.end(), u.begin(), ::toupper);
  if (u == "NORMAL") return CheckClass::Normal;
  if (u == "LOAD") return CheckClass::Load;
  if (u == "STORE") return CheckClass::Store;
  if (u == "PLC") return CheckClass::Plc;
  if (u == "CFCSS") return CheckClass::Cfcss;
  return std::nullopt;
}

bool is_alu(const Instruction& i) {
  return i.op == Op::Add || i.op == Op::Sub || i.op == Op::And ||
         i.op == Op::Or || i.op == Op::Xor;
}

bool is_branch(const Instruction& i) {
  return i.op == Op::B || i.op == Op::Beq || i.op == Op::Bne;
}

bool is_control_flow(const Instruction& i) {
  return is_branch(i) || i.op == Op::Halt || i.op == Op::HaltError;
}

Instruction nop() { return {}; }

Instruction movi(int rd, int32_t imm) {
  Instruction i;
  i.op = Op::MovImm;
  i.rd = static_cast<uint8_t>(rd);
  i.imm = imm;
  return i;
}

Instruction alu(Op op, int rd, int rs, int rt) {
  Instruction i;
  i.op = op;
  i.rd = static_cast<uint8_t>(rd);
  i.rs = static_cast<uint8_t>(rs);
  i.rt = static_cast<uint8_t>(rt);
  return i;
}

Instruction load(int rd, int addr) {
  Instruction i;
  i.op = Op::Load;
  i.rd = static_cast<uint8_t>(rd);
  i.addr = addr;
  return i;
}

Instruction store(int addr, int rs) {
  Instruction i;
  i.op = Op::Store;
  i.rs = static_cast<uint8_t>(rs);
  i.addr = addr;
  return i;
}

Instruction branch_always(int target) {
  Instruction i;
  i.op = Op::B;
  i.target = target;
  return i;
}

Instruction branch_cmp(Op op, int rs, int rt, int target) {
  Instruction i;
  i.op = op;
  i.rs = static_cast<uint8_t>(rs);
  i.rt = static_cast<uint8_t>(rt);
  i.target = target;
  return i;
}

Instruction halt() {
  Instruction i;
  i.op = Op::Halt;
  return i;
}

Instruction halt_error(CheckClass c) {
  Instruction i;
  i.op = Op::HaltError;
  i.check = c;
  return i;
}

namespace {

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), ::toupper);
  return s;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

struct Tok {
  std::vector<std::string> parts;  // mnemonic + operands
};

// Splits "ADD R1, R2, R3" into {"ADD","R1","R2","R3"}.
Tok tokenize(const std::string& line) {
  Tok t;
  std::string cur;
  bool first_done = false;
  for (char c : line) {
    if (!first_done && (c == ' ' || c == '\t')) {
      if (!cur.empty()) {
        t.parts.push_back(cur);
        cur.clear();
        first_done = true;
      }
      continue;
    }
    if (first_done && c == ',') {
      t.parts.push_back(trim(cur));
      cur.clear();
      continue;
    }
    cur += c;
  }
  if (!trim(cur).empty()) t.parts.push_back(trim(cur));
  return t;
}

int parse_reg(const std::string& s, int line_no) {
  std::string u = upper(s);
  if (u.size() < 2 || u[0] != 'R')
    throw Error("line " + std::to_string(line_no) + ": expected register, got '" + s + "'");
  for (size_t k = 1; k < u.size(); ++k)
    if (!isdigit(static_cast<unsigned char>(u[k])))
      throw Error("line " + std::to_string(line_no) + ": bad register '" + s + "'");
  int r = std::stoi(u.substr(1));
  if (r < 0 || r >= 32)
    throw Error("line " + std::to_string(line_no) + ": register out of range '" + s + "'");
  return r;
}

int parse_mem(const std::string& s, int line_no, const IsaSpec& spec) {
  if (s.size() < 3 || s.front() != '[' || s.back() != ']')
    throw Error("line " + std::to_string(line_no) + ": expected memory operand [addr], got '" + s + "'");
  std::string body = trim(s.substr(1, s.size() - 2));
  try {
    size_t pos = 0;
    long v = std::stol(body, &pos);
    if (pos != body.size()) throw std::invalid_argument("");
    if (v < 0 || v >= spec.mem_words)
      throw Error("line " + std::to_string(line_no) + ": address out of range '" + s + "'");
    return static_cast<int>(v);
  } catch (const std::invalid_argument&) {
    throw Error("line " + std::to_string(line_no) + ": bad address '" + s + "'");
  } catch (const std::out_of_range&) {
    throw Error("line " + std::to_string(line_no) + ": bad address '" + s + "'");
  }
}

int32_t parse_imm(const std::string& s, int line_no) {
  try {
    size_t pos = 0;
    long v = std::stol(s, &pos, 0);
    if (pos != s.size()) throw std::invalid_argument("");
    return static_cast<int32_t>(v);
  } catch (const std::exception&) {
    throw Error("line " + std::to_string(line_no) + ": bad immediate '" + s + "'");
  }
}

void expect_operands(const Tok& t, size_t n, int line_no) {
  if (t.parts.size() != n + 1)
    throw Error("line " + std::to_string(line_no) + ": '" + t.parts[0] + "' expects " +
                std::to_string(n) + " operand(s)");
}

}  // namespace

Program parse_program(const std::string& text, const IsaSpec& spec) {
  Program p;
  p.source = text;

  struct Pending {
    int index;
    std::string label;
    int line_no;
  };
  std::vector<Pending> fixups;

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    if (auto sc = line.find(';'); sc != std::string::npos) line = line.substr(0, sc);
    line = trim(line);
    // Leading labels, possibly several, possibly followed by an instruction.
    for (;;) {
      size_t colon = line.find(':');
      if (colon == std::string::npos) break;
      std::string name = trim(line.substr(0, colon));
      if (name.empty() || name.find(' ') != std::string::npos || name.find('\t') != std::string::npos)
        break;  // not a label; let the mnemonic parser complain
      if (p.labels.count(name))
        throw Error("line " + std::to_string(line_no) + ": duplicate label '" + name + "'");
      p.labels[name] = static_cast<int>(p.code.size());
      line = trim(line.substr(colon + 1));
    }
    if (line.empty()) continue;

    Tok t = tokenize(line);
    std::string m = upper(t.parts[0]);
    Instruction ins;
    if (m == "NOP") {
      expect_operands(t, 0, line_no);
      ins = nop();
    } else if (m == "MOVI") {
      expect_operands(t, 2, line_no);
      ins = movi(parse_reg(t.parts[1], line_no), parse_imm(t.parts[2], line_no));
    } else if (m == "ADD" || m == "SUB" || m == "AND" || m == "OR" || m == "XOR") {
      expect_operands(t, 3, line_no);
      Op op = m == "ADD"   ? Op::Add
              : m == "SUB" ? Op::Sub
              : m == "AND" ? Op::And
              : m == "OR"  ? Op::Or
                           : Op::Xor;
      ins = alu(op, parse_reg(t.parts[1], line_no), parse_reg(t.parts[2], line_no),
                parse_reg(t.parts[3], line_no));
    } else if (m == "LD") {
      expect_operands(t, 2, line_no);
      ins = load(parse_reg(t.parts[1], line_no), parse_mem(t.parts[2], line_no, spec));
    } else if (m == "ST") {
      expect_operands(t, 2, line_no);
      ins = store(parse_mem(t.parts[1], line_no, spec), parse_reg(t.parts[2], line_no));
    } else if (m == "B") {
      expect_operands(t, 1, line_no);
      ins = branch_always(0);
      fixups.push_back({static_cast<int>(p.code.size()), t.parts[1], line_no});
    } else if (m == "BEQ" || m == "BNE") {
      expect_operands(t, 3, line_no);
      ins = branch_cmp(m == "BEQ" ? Op::Beq : Op::Bne, parse_reg(t.parts[1], line_no),
                       parse_reg(t.parts[2], line_no), 0);
      fixups.push_back({static_cast<int>(p.code.size()), t.parts[3], line_no});
    } else if (m == "HALT") {
      expect_operands(t, 0, line_no);
      ins = halt();
    } else if (m == "HALTERR") {
      expect_operands(t, 1, line_no);
      auto c = check_class_from_name(t.parts[1]);
      if (!c)
        throw Error("line " + std::to_string(line_no) + ": unknown check class '" + t.parts[1] + "'");
      ins = halt_error(*c);
    } else {
      throw Error("line " + std::to_string(line_no) + ": unknown mnemonic '" + t.parts[0] + "'");
    }
    p.code.push_back(ins);
  }

  for (const auto& f : fixups) {
    auto it = p.labels.find(f.label);
    if (it == p.labels.end())
      throw Error("line " + std::to_string(f.line_no) + ": undefined label '" + f.label + "'");
    p.code[f.index].target = it->second;
  }
  for (const auto& ins : p.code) {
    if (is_branch(ins) && (ins.target < 0 || ins.target > p.size()))
      throw Error("branch target out of range");
  }
  return p;
}

std::string render_instruction(const Instruction& i, int self_index) {
  std::ostringstream o;
  auto reg = [](int r) { return "R" + std::to_string(r); };
  switch (i.op) {
    case Op::Nop: o << "NOP"; break;
    case Op::MovImm: o << "MOVI " << reg(i.rd) << ", " << i.imm; break;
    case Op::Add: o << "ADD " << reg(i.rd) << ", " << reg(i.rs) << ", " << reg(i.rt); break;
    case Op::Sub: o << "SUB " << reg(i.rd) << ", " << reg(i.rs) << ", " << reg(i.rt); break;
    case Op::And: o << "AND " << reg(i.rd) << ", " << reg(i.rs) << ", " << reg(i.rt); break;
    case Op::Or: o << "OR " << reg(i.rd) << ", " << reg(i.rs) << ", " << reg(i.rt); break;
    case Op::Xor: o << "XOR " << reg(i.rd) << ", " << reg(i.rs) << ", " << reg(i.rt); break;
    case Op::Load: o << "LD " << reg(i.rd) << ", [" << i.addr << "]"; break;
    case Op::Store: o << "ST [" << i.addr << "], " << reg(i.rs); break;
    case Op::B: o << "B L" << i.target; break;
    case Op::Beq: o << "BEQ " << reg(i.rs) << ", " << reg(i.rt) << ", L" << i.target; break;
    case Op::Bne: o << "BNE " << reg(i.rs) << ", " << reg(i.rt) << ", L" << i.target; break;
    case Op::Halt: o << "HALT"; break;
    case Op::HaltError: o << "HALTERR " << check_class_name(i.check); break;
  }
  (void)self_index;
  return o.str();
}

std::string render_program(const Program& p) {
  std::vector<bool> is_target(p.code.size() + 1, false);
  for (const auto& i : p.code)
    if (is_branch(i)) is_target[i.target] = true;

  std::ostringstream o;
  for (int idx = 0; idx < p.size(); ++idx) {
    if (is_target[idx]) o << "L" << idx << ":\n";
    o << "    " << render_instruction(p.code[idx], idx) << "\n";
  }
  if (!p.code.empty() && is_target[p.size()]) o << "L" << p.size() << ":\n";
  return o.str();
}

Instruction dup_map(const Instruction& i, const IsaSpec& spec) {
  if (is_control_flow(i)) throw Error("dup_map: control-flow instruction");
  Instruction d = i;
  const int hr = spec.half_regs();
  const int hm = spec.half_mem();
  auto map_reg = [&](uint8_t r) -> uint8_t {
    if (!spec.orig_reg(r)) throw Error("dup_map: register already in duplicate half");
    return static_cast<uint8_t>(r + hr);
  };
  switch (i.op) {
    case Op::Nop:
      break;
    case Op::MovImm:
      d.rd = map_reg(i.rd);
      break;
    case Op::Add:
    case Op::Sub:
    case Op::And:
    case Op::Or:
    case Op::Xor:
      d.rd = map_reg(i.rd);
      d.rs = map_reg(i.rs);
      d.rt = map_reg(i.rt);
      break;
    case Op::Load:
      d.rd = map_reg(i.rd);
      if (!spec.orig_addr(i.addr)) throw Error("dup_map: address already in duplicate half");
      d.addr = i.addr + hm;
      break;
    case Op::Store:
      d.rs = map_reg(i.rs);
      if (!spec.orig_addr(i.addr)) throw Error("dup_map: address already in duplicate half");
      d.addr = i.addr + hm;
      break;
    default:
      throw Error("dup_map: control-flow instruction");
  }
  return d;
}

}  // namespace sqed
