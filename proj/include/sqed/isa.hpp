#ifndef SQED_ISA_HPP
#define SQED_ISA_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sqed {

using Word = uint32_t;

// Thrown on malformed input (assembly text, config files, scenario files).
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Register/memory split: R0-R15 and the low half of memory belong to the
// original test, R16-R31 and the high half to the duplicated test.
struct IsaSpec {
  int num_regs = 32;
  int mem_words = 64;  // power of two

  int half_regs() const { return num_regs / 2; }
  int half_mem() const { return mem_words / 2; }
  bool orig_reg(int r) const { return r >= 0 && r < half_regs(); }
  bool dup_reg(int r) const { return r >= half_regs() && r < num_regs; }
  bool orig_addr(int a) const { return a >= 0 && a < half_mem(); }
  bool dup_addr(int a) const { return a >= half_mem() && a < mem_words; }
};

enum class Op : uint8_t {
  Nop,
  MovImm,
  Add,
  Sub,
  And,
  Or,
  Xor,
  Load,
  Store,
  B,    // unconditional branch
  Beq,
  Bne,
  Halt,
  HaltError,
};

// Which class of inserted QED check fired; carried by HaltError.
enum class CheckClass : uint8_t { Normal, Load, Store, Plc, Cfcss };

const char* check_class_name(CheckClass c);
std::optional<CheckClass> check_class_from_name(const std::string& s);

struct Instruction {
  Op op = Op::Nop;
  uint8_t rd = 0;
  uint8_t rs = 0;
  uint8_t rt = 0;
  int32_t imm = 0;
  int32_t addr = 0;    // absolute word address for Load/Store
  int32_t target = 0;  // resolved program index for branches
  CheckClass check = CheckClass::Normal;

  bool operator==(const Instruction&) const = default;
};

bool is_alu(const Instruction& i);
bool is_branch(const Instruction& i);
bool is_control_flow(const Instruction& i);

// Builders used by tests, transforms and the search alphabet.
Instruction nop();
Instruction movi(int rd, int32_t imm);
Instruction alu(Op op, int rd, int rs, int rt);
Instruction load(int rd, int addr);
Instruction store(int addr, int rs);
Instruction branch_always(int target);
Instruction branch_cmp(Op op, int rs, int rt, int target);
Instruction halt();
Instruction halt_error(CheckClass c);

struct Program {
  std::vector<Instruction> code;
  std::map<std::string, int> labels;
  std::string source;

  bool operator==(const Program& o) const { return code == o.code; }
  int size() const { return static_cast<int>(code.size()); }
};

// Two-pass assembler for the .qasm grammar: one instruction per line,
// `label:` definitions, `;` comments. Throws Error with line numbers.
Program parse_program(const std::string& text, const IsaSpec& spec = {});

// Inverse printer; parse_program(render_program(p)) == p.
std::string render_program(const Program& p);
std::string render_instruction(const Instruction& i, int self_index = -1);

// Rewrites a non-control-flow instruction onto the duplicate register and
// memory halves: r -> r+16, a -> a+mem_words/2. Throws on control flow or
// operands already in the duplicate half.
Instruction dup_map(const Instruction& i, const IsaSpec& spec);

}  // namespace sqed

#endif
