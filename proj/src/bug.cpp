#include "sqed/bug.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace sqed {

const char* component_kind_name(ComponentKind k) {
  switch (k) {
    case ComponentKind::Core: return "core";
    case ComponentKind::L1: return "l1";
    case ComponentKind::Crossbar: return "crossbar";
    case ComponentKind::L2Bank: return "l2bank";
    case ComponentKind::Mcu: return "mcu";
    case ComponentKind::Io: return "io";
  }
  return "?";
}

std::optional<ComponentKind> component_kind_from_name(const std::string& s) {
  if (s == "core") return ComponentKind::Core;
  if (s == "l1") return ComponentKind::L1;
  if (s == "crossbar") return ComponentKind::Crossbar;
  if (s == "l2bank") return ComponentKind::L2Bank;
  if (s == "mcu") return ComponentKind::Mcu;
  if (s == "io") return ComponentKind::Io;
  return std::nullopt;
}

const char* criterion_name(CriterionId c) {
  switch (c) {
    case CriterionId::C1: return "c1";
    case CriterionId::C2: return "c2";
    case CriterionId::C3: return "c3";
    case CriterionId::C4: return "c4";
    case CriterionId::C5: return "c5";
    case CriterionId::C6: return "c6";
    case CriterionId::C7: return "c7";
    case CriterionId::C8: return "c8";
    case CriterionId::Power: return "power";
    case CriterionId::L1Regs: return "L1";
    case CriterionId::L2Seq: return "L2";
    case CriterionId::L3Cache: return "L3";
  }
  return "?";
}

const char* effect_name(EffectId e) {
  switch (e) {
    case EffectId::A: return "A";
    case EffectId::B: return "B";
    case EffectId::C: return "C";
    case EffectId::D: return "D";
    case EffectId::E: return "E";
    case EffectId::F: return "F";
    case EffectId::G: return "G";
    case EffectId::H: return "H";
    case EffectId::I: return "I";
    case EffectId::J: return "J";
    case EffectId::PA: return "pA";
    case EffectId::PB: return "pB";
    case EffectId::PC_: return "pC";
    case EffectId::PD: return "pD";
    case EffectId::PE: return "pE";
    case EffectId::PF: return "pF";
    case EffectId::PG: return "pG";
    case EffectId::PH: return "pH";
    case EffectId::PI: return "pI";
    case EffectId::PJ: return "pJ";
    case EffectId::PK: return "pK";
    case EffectId::PL: return "pL";
    case EffectId::Stop: return "STOP";
  }
  return "?";
}

std::optional<CriterionId> criterion_from_name(const std::string& s) {
  static const std::pair<const char*, CriterionId> table[] = {
      {"c1", CriterionId::C1},     {"c2", CriterionId::C2},
      {"c3", CriterionId::C3},     {"c4", CriterionId::C4},
      {"c5", CriterionId::C5},     {"c6", CriterionId::C6},
      {"c7", CriterionId::C7},     {"c8", CriterionId::C8},
      {"power", CriterionId::Power}, {"L1", CriterionId::L1Regs},
      {"L2", CriterionId::L2Seq},  {"L3", CriterionId::L3Cache}};
  for (const auto& [n, v] : table)
    if (s == n) return v;
  return std::nullopt;
}

std::optional<EffectId> effect_from_name(const std::string& s) {
  static const std::pair<const char*, EffectId> table[] = {
      {"A", EffectId::A},   {"B", EffectId::B},   {"C", EffectId::C},
      {"D", EffectId::D},   {"E", EffectId::E},   {"F", EffectId::F},
      {"G", EffectId::G},   {"H", EffectId::H},   {"I", EffectId::I},
      {"J", EffectId::J},   {"pA", EffectId::PA}, {"pB", EffectId::PB},
      {"pC", EffectId::PC_}, {"pD", EffectId::PD}, {"pE", EffectId::PE},
      {"pF", EffectId::PF}, {"pG", EffectId::PG}, {"pH", EffectId::PH},
      {"pI", EffectId::PI}, {"pJ", EffectId::PJ}, {"pK", EffectId::PK},
      {"pL", EffectId::PL}, {"STOP", EffectId::Stop}};
  for (const auto& [n, v] : table)
    if (s == n) return v;
  return std::nullopt;
}

ComponentKind BugScenario::monitor_kind() const {
  switch (criterion) {
    case CriterionId::C1:
    case CriterionId::C2:
    case CriterionId::C3:
    case CriterionId::C4:
    case CriterionId::C5:
      // Cache-traffic criteria live on caches/banks; fall back to L1 when the
      // effect component is a core-side one.
      if (component == ComponentKind::L2Bank) return ComponentKind::L2Bank;
      return ComponentKind::L1;
    case CriterionId::C6:
    case CriterionId::C7:
    case CriterionId::L1Regs:
    case CriterionId::L2Seq:
    case CriterionId::L3Cache:
      return ComponentKind::Core;
    case CriterionId::C8:
    case CriterionId::Power:
      return component;
  }
  return component;
}

namespace {

std::string trim_ws(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<MemOpPattern> parse_mem_pattern(const std::string& s) {
  std::vector<MemOpPattern> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim_ws(tok);
    if (tok.empty()) continue;
    MemOpPattern p;
    std::string kind = tok.substr(0, 2);
    if (kind == "ST")
      p.is_store = true;
    else if (kind == "LD")
      p.is_store = false;
    else
      throw Error("scenario: bad mem pattern token '" + tok + "'");
    auto lb = tok.find('[');
    if (lb != std::string::npos) {
      auto rb = tok.find(']', lb);
      if (rb == std::string::npos) throw Error("scenario: bad mem pattern token '" + tok + "'");
      p.addr = std::atoi(tok.substr(lb + 1, rb - lb - 1).c_str());
    }
    out.push_back(p);
  }
  return out;
}

std::vector<Instruction> parse_instr_pattern(const std::string& s, const IsaSpec& spec) {
  std::string text = s;
  std::replace(text.begin(), text.end(), ';', '\n');
  Program p = parse_program(text, spec);
  return p.code;
}

}  // namespace

BugScenario parse_scenario(const std::string& text, const IsaSpec& spec) {
  BugScenario s;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool have_criterion = false, have_effect = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto h = line.find('#'); h != std::string::npos) line = line.substr(0, h);
    line = trim_ws(line);
    if (line.empty()) continue;
    auto sp = line.find_first_of(" \t");
    std::string key = sp == std::string::npos ? line : line.substr(0, sp);
    std::string val = sp == std::string::npos ? "" : trim_ws(line.substr(sp));
    if (key == "name") {
      s.name = val;
    } else if (key == "criterion") {
      auto c = criterion_from_name(val);
      if (!c) throw Error("scenario line " + std::to_string(line_no) + ": unknown criterion '" + val + "'");
      s.criterion = *c;
      have_criterion = true;
    } else if (key == "effect") {
      auto e = effect_from_name(val);
      if (!e) throw Error("scenario line " + std::to_string(line_no) + ": unknown effect '" + val + "'");
      s.effect = *e;
      have_effect = true;
    } else if (key == "component") {
      auto k = component_kind_from_name(val);
      if (!k) throw Error("scenario line " + std::to_string(line_no) + ": unknown component '" + val + "'");
      s.component = *k;
    } else if (key == "X") {
      s.x_cycles = std::atoi(val.c_str());
    } else if (key == "Y") {
      s.y_cycles = std::atoi(val.c_str());
    } else if (key == "seed") {
      s.random_seed = std::strtoull(val.c_str(), nullptr, 10);
    } else if (key == "pattern") {
      s.mem_pattern = parse_mem_pattern(val);
    } else if (key == "instr_pattern") {
      s.instr_pattern = parse_instr_pattern(val, spec);
    } else if (key == "R") {
      s.reg_count = std::atoi(val.c_str());
    } else if (key == "V") {
      s.reg_value = std::atoi(val.c_str());
    } else if (key == "core") {
      s.designated_core = std::atoi(val.c_str());
    } else {
      throw Error("scenario line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  if (!have_criterion || !have_effect) throw Error("scenario: criterion and effect are required");
  if (s.criterion == CriterionId::C5 && s.mem_pattern.empty())
    throw Error("scenario: criterion c5 needs a pattern");
  if ((s.criterion == CriterionId::L2Seq || s.criterion == CriterionId::Power) &&
      s.instr_pattern.empty() && s.criterion == CriterionId::L2Seq)
    throw Error("scenario: criterion L2 needs instr_pattern");
  return s;
}

BugScenario load_scenario_file(const std::string& path, const IsaSpec& spec) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open scenario file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  BugScenario s = parse_scenario(ss.str(), spec);
  if (s.name.empty()) {
    auto slash = path.find_last_of('/');
    s.name = slash == std::string::npos ? path : path.substr(slash + 1);
  }
  return s;
}

std::string render_scenario(const BugScenario& s) {
  std::ostringstream o;
  o << "name " << s.name << "\n";
  o << "criterion " << criterion_name(s.criterion) << "\n";
  o << "effect " << effect_name(s.effect) << "\n";
  o << "component " << component_kind_name(s.component) << "\n";
  o << "X " << s.x_cycles << "\n";
  o << "Y " << s.y_cycles << "\n";
  o << "seed " << s.random_seed << "\n";
  if (!s.mem_pattern.empty()) {
    o << "pattern ";
    for (size_t i = 0; i < s.mem_pattern.size(); ++i) {
      if (i) o << ",";
      o << (s.mem_pattern[i].is_store ? "ST" : "LD");
      if (s.mem_pattern[i].addr >= 0) o << "[" << s.mem_pattern[i].addr << "]";
    }
    o << "\n";
  }
  if (!s.instr_pattern.empty()) {
    o << "instr_pattern ";
    for (size_t i = 0; i < s.instr_pattern.size(); ++i) {
      if (i) o << "; ";
      o << render_instruction(s.instr_pattern[i]);
    }
    o << "\n";
  }
  if (s.reg_count) o << "R " << s.reg_count << "\n";
  if (s.reg_count) o << "V " << s.reg_value << "\n";
  o << "core " << s.designated_core << "\n";
  return o.str();
}

BugState make_bug_state(const BugScenario& s, int n_cores, int n_banks, int n_mcu,
                        bool has_io) {
  BugState b;
  b.enabled = true;
  b.scenario = s;
  int n = 1;
  switch (s.monitor_kind()) {
    case ComponentKind::Core:
    case ComponentKind::L1: n = n_cores; break;
    case ComponentKind::L2Bank: n = std::max(1, n_banks); break;
    case ComponentKind::Mcu: n = std::max(1, n_mcu); break;
    case ComponentKind::Crossbar: n = 1; break;
    case ComponentKind::Io: n = has_io ? 1 : 0; break;
  }
  b.monitors.resize(std::max(1, n));
  // splitmix64 so the draw does not depend on library distribution details
  uint64_t z = s.random_seed + 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  z = z ^ (z >> 31);
  int range = s.x_cycles > 0 ? s.x_cycles : 1;
  b.drawn_cycle = static_cast<long>(z % static_cast<uint64_t>(range));
  return b;
}

namespace {

void arm(BugState& b, int instance, long cycle) {
  if (b.armed) return;
  b.armed = true;
  b.armed_cycle = cycle;
  // Bind the effect to the arming instance only when the effect lives on the
  // same component kind the monitors do. C8 and Power arm system-wide.
  bool unbound = b.scenario.criterion == CriterionId::C8 ||
                 b.scenario.criterion == CriterionId::Power ||
                 b.scenario.component != b.scenario.monitor_kind();
  b.armed_instance = unbound ? -1 : instance;
}

void push_recent(MonitorState& m, long cycle, int line) {
  m.recent.emplace_back(cycle, line);
  if (m.recent.size() > 16) m.recent.erase(m.recent.begin());
}

bool pair_within(const MonitorState& m, long cycle, int line, int x,
                 CriterionId crit) {
  for (auto it = m.recent.rbegin(); it != m.recent.rend(); ++it) {
    if (cycle - it->first >= x) break;  // strictly within X cycles
    bool match = false;
    switch (crit) {
      case CriterionId::C1: match = it->second != line; break;
      case CriterionId::C2: match = it->second == line; break;
      case CriterionId::C3: match = std::abs(it->second - line) == 1; break;
      case CriterionId::C4:
      case CriterionId::C7: match = true; break;
      default: break;
    }
    if (match) return true;
  }
  return false;
}

bool instr_matches_template(const Instruction& got, const Instruction& want) {
  return got.op == want.op && got.rd == want.rd && got.rs == want.rs &&
         got.rt == want.rt && got.imm == want.imm && got.addr == want.addr;
}

}  // namespace

void bug_observe(BugState& b, BugEventKind kind, int instance, long cycle, int line,
                 const Instruction* inst) {
  if (!b.enabled || b.armed) return;
  if (instance < 0 || instance >= static_cast<int>(b.monitors.size())) return;
  MonitorState& m = b.monitors[instance];
  const BugScenario& s = b.scenario;
  switch (s.criterion) {
    case CriterionId::C1:
    case CriterionId::C2:
    case CriterionId::C3:
      if (kind != BugEventKind::Store) return;
      if (pair_within(m, cycle, line, s.x_cycles, s.criterion)) arm(b, instance, cycle);
      push_recent(m, cycle, line);
      break;
    case CriterionId::C4:
      if (kind != BugEventKind::Miss) return;
      if (pair_within(m, cycle, line, s.x_cycles, s.criterion)) arm(b, instance, cycle);
      push_recent(m, cycle, line);
      break;
    case CriterionId::C5: {
      if (kind != BugEventKind::Store && kind != BugEventKind::Load) return;
      bool is_store = kind == BugEventKind::Store;
      auto matches = [&](const MemOpPattern& p) {
        return p.is_store == is_store && (p.addr < 0 || p.addr == line);
      };
      if (m.seq_progress > 0 && cycle - m.seq_start >= s.x_cycles) {
        m.seq_progress = 0;
        m.seq_start = -1;
      }
      if (m.seq_progress < s.mem_pattern.size() && matches(s.mem_pattern[m.seq_progress])) {
        if (m.seq_progress == 0) m.seq_start = cycle;
        ++m.seq_progress;
        if (m.seq_progress == s.mem_pattern.size()) arm(b, instance, cycle);
      } else if (m.seq_progress > 0 && matches(s.mem_pattern[0])) {
        m.seq_progress = 1;
        m.seq_start = cycle;
      } else {
        m.seq_progress = 0;
      }
      break;
    }
    case CriterionId::C6:
      if (kind == BugEventKind::ForwardUse) arm(b, instance, cycle);
      break;
    case CriterionId::C7:
      if (kind != BugEventKind::BranchSeen) return;
      if (pair_within(m, cycle, line, s.x_cycles, s.criterion)) arm(b, instance, cycle);
      push_recent(m, cycle, line);
      break;
    case CriterionId::Power:
      if (kind == BugEventKind::PowerExit) arm(b, instance, cycle);
      break;
    case CriterionId::L2Seq: {
      if (kind != BugEventKind::Commit || !inst) return;
      if (m.seq_progress > 0 && cycle - m.seq_start >= s.x_cycles) {
        m.seq_progress = 0;
        m.seq_start = -1;
      }
      if (m.seq_progress < s.instr_pattern.size() &&
          instr_matches_template(*inst, s.instr_pattern[m.seq_progress])) {
        if (m.seq_progress == 0) m.seq_start = cycle;
        ++m.seq_progress;
        if (m.seq_progress == s.instr_pattern.size()) arm(b, instance, cycle);
      } else if (m.seq_progress > 0 &&
                 instr_matches_template(*inst, s.instr_pattern[0])) {
        m.seq_progress = 1;
        m.seq_start = cycle;
      } else {
        m.seq_progress = 0;
      }
      break;
    }
    default:
      break;
  }
}

void bug_observe_levels(BugState& b, long cycle,
                        const std::vector<std::vector<Word>>& regs,
                        const std::vector<int>& l1_valid_counts, int l1_lines) {
  if (!b.enabled || b.armed) return;
  const BugScenario& s = b.scenario;
  if (s.criterion == CriterionId::C8) {
    if (cycle >= b.drawn_cycle) arm(b, 0, cycle);
    return;
  }
  if (s.criterion == CriterionId::L1Regs) {
    for (size_t c = 0; c < regs.size() && c < b.monitors.size(); ++c) {
      int count = 0;
      for (int r = 0; r < 16; ++r)
        if (regs[c][r] == static_cast<Word>(s.reg_value)) ++count;
      bool cond = count >= s.reg_count;
      if (cond && !b.monitors[c].level_prev) arm(b, static_cast<int>(c), cycle);
      b.monitors[c].level_prev = cond;
    }
  } else if (s.criterion == CriterionId::L3Cache) {
    for (size_t c = 0; c < l1_valid_counts.size() && c < b.monitors.size(); ++c) {
      bool cond = l1_valid_counts[c] == l1_lines;
      if (cond && !b.monitors[c].level_prev) arm(b, static_cast<int>(c), cycle);
      b.monitors[c].level_prev = cond;
    }
  }
}

bool bug_fire(BugState& b, ComponentKind kind, int instance, long cycle) {
  if (!b.enabled || !b.armed) return false;
  if (b.scenario.component != kind) return false;
  if (b.armed_instance >= 0 && b.armed_instance != instance) return false;
  b.armed = false;
  b.armed_instance = -1;
  // Fresh activation required for the next arming.
  for (auto& m : b.monitors) {
    m.recent.clear();
    m.seq_progress = 0;
    m.seq_start = -1;
  }
  if (b.first_effect_cycle < 0) b.first_effect_cycle = cycle;
  ++b.effects_applied;
  return true;
}

}  // namespace sqed
