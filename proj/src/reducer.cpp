#include "sqed/reducer.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace sqed {

int instance_cost(const PartialInstance& p, const CapacityBudget& b) {
  return p.n_cores * b.w_core + p.n_l2_banks * b.w_bank + p.n_mcu * b.w_mcu +
         (p.has_io ? b.w_io : 0) + b.w_crossbar;
}

std::vector<std::string> PartialInstance::component_list() const {
  std::vector<std::string> out;
  for (int c = 0; c < n_cores; ++c) out.push_back("core" + std::to_string(c));
  for (int c = 0; c < n_cores; ++c) out.push_back("l1-" + std::to_string(c));
  out.push_back("crossbar");
  for (int b = 0; b < n_l2_banks; ++b) out.push_back("l2bank" + std::to_string(b));
  for (int m = 0; m < n_mcu; ++m) out.push_back("mcu" + std::to_string(m));
  if (has_io) out.push_back("io");
  return out;
}

SocConfig PartialInstance::to_config(const SocConfig& full) const {
  SocConfig c = full;
  c.n_cores = n_cores;
  c.n_l2_banks = n_l2_banks;
  c.n_mcu = n_mcu;
  c.has_io = has_io;
  return c;
}

namespace {

struct Shape {
  int cores, banks, mcus;
  bool io;
  auto key() const { return std::tuple(cores, banks, mcus, io); }
};

std::string shape_id(const Shape& s) {
  std::string id = std::to_string(s.cores) + "c";
  if (s.banks) id += std::to_string(s.banks) + "b";
  if (s.mcus) id += std::to_string(s.mcus) + "m";
  if (s.io) id += "_io";
  return id;
}

bool connected(const Shape& s) {
  // Core(s) and crossbar are always present; a bank connects to the crossbar,
  // an MCU hangs off a bank, the I/O stub off the crossbar. MCUs without any
  // bank are stranded.
  if (s.cores < 1) return false;
  if (s.mcus > 0 && s.banks == 0) return false;
  return true;
}

}  // namespace

std::vector<PartialInstance> enumerate_partial_instances(const DesignGraph& g,
                                                         const CapacityBudget& b) {
  // Breadth-first closure over the two reduction techniques.
  std::map<std::tuple<int, int, int, bool>, std::vector<std::string>> seen;
  std::vector<Shape> frontier = {{g.n_cores, g.n_l2_banks, g.n_mcu, g.has_io}};
  seen[frontier[0].key()] = {};

  while (!frontier.empty()) {
    std::vector<Shape> next;
    for (const Shape& s : frontier) {
      const auto& prov = seen[s.key()];
      auto visit = [&](Shape t, const std::string& step) {
        if (!connected(t)) return;
        if (seen.count(t.key())) return;
        auto p = prov;
        p.push_back(step);
        seen[t.key()] = p;
        next.push_back(t);
      };
      // Technique 1: halve every kind that still has multiple instances.
      Shape h = s;
      bool any = false;
      if (h.cores > 1) { h.cores /= 2; any = true; }
      if (h.banks > 1) { h.banks /= 2; any = true; }
      if (h.mcus > 1) { h.mcus /= 2; any = true; }
      if (any) visit(h, "T1: halve multi-instance kinds");
      // Technique 2: remove a singleton kind whose removal keeps the design
      // connected. The crossbar is never removed; cores are what the analysis
      // runs on, so the last core is never removed either.
      if (s.io) {
        Shape t = s;
        t.io = false;
        visit(t, "T2: remove io");
      }
      if (s.mcus == 1) {
        Shape t = s;
        t.mcus = 0;
        visit(t, "T2: remove mcu");
      }
      if (s.banks == 1 && s.mcus == 0) {
        Shape t = s;
        t.banks = 0;
        visit(t, "T2: remove l2bank");
      }
    }
    frontier = std::move(next);
  }

  std::vector<PartialInstance> out;
  for (const auto& [key, prov] : seen) {
    auto [cores, banks, mcus, io] = key;
    PartialInstance p;
    p.n_cores = cores;
    p.n_l2_banks = banks;
    p.n_mcu = mcus;
    p.has_io = io;
    p.cost = instance_cost(p, b);
    p.id = shape_id({cores, banks, mcus, io});
    p.provenance = prov;
    if (p.cost <= b.max_cost) out.push_back(std::move(p));
  }
  std::sort(out.begin(), out.end(), [](const PartialInstance& a, const PartialInstance& x) {
    if (a.cost != x.cost) return a.cost > x.cost;
    return a.id < x.id;
  });
  return out;
}

CheckLocalization classify_failing_check(CheckClass c) {
  switch (c) {
    case CheckClass::Normal:
    case CheckClass::Store:
      return CheckLocalization::CoreOnly;
    case CheckClass::Load:
    case CheckClass::Plc:
    case CheckClass::Cfcss:
      return CheckLocalization::Unknown;
  }
  return CheckLocalization::Unknown;
}

LocalizeResult localize(const BugScenario& scenario, const SocConfig& full,
                        const CapacityBudget& budget, const SearchConfig& search,
                        const Property& prop) {
  LocalizeResult res;
  auto instances = enumerate_partial_instances(DesignGraph::from_config(full), budget);
  // Smallest failing instance wins; instances are cost-descending, so walk
  // them all and keep the last failure (ties broken by id via the sort).
  bool found = false;
  PartialInstance best;
  Counterexample best_cex;
  for (const auto& inst : instances) {
    ++res.instances_tried;
    SocConfig icfg = inst.to_config(full);
    auto outcome = find_min_counterexample(icfg, inst.id, search, prop, &scenario);
    if (outcome.status == SearchOutcome::Found) {
      res.failing_instances.push_back(inst.id);
      if (!found || inst.cost < best.cost ||
          (inst.cost == best.cost && inst.id > best.id)) {
        found = true;
        best = inst;
        best_cex = std::move(*outcome.cex);
      }
    }
  }
  if (!found) {
    res.status = LocalizeResult::NoneFailed;
    return res;
  }
  res.status = LocalizeResult::Localized;
  res.instance = best;
  res.candidates = best.component_list();
  res.cex = std::move(best_cex);
  return res;
}

}  // namespace sqed
