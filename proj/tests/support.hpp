// Shared fixtures and independent oracles for the unit and acceptance suites.
// The oracles deliberately avoid calling into the code under test.

#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "aqua/advisor.hpp"
#include "aqua/kb.hpp"
#include "aqua/rules.hpp"

namespace testing {

inline const std::string kKbDir = AQUA_KB_DIR;
inline const std::string kFixtures = AQUA_FIXTURES_DIR;

inline aqua::kb::KbPaths shipped_paths() {
  return {kKbDir + "/profiles.csv", kKbDir + "/compatibility.csv", kKbDir + "/modifiers.json"};
}

inline const aqua::kb::KnowledgeBase& shipped_kb() {
  static const aqua::kb::KnowledgeBase kb = aqua::kb::load_kb(shipped_paths());
  return kb;
}

inline const aqua::dsl::RuleSet& shipped_rules() {
  static const aqua::dsl::RuleSet rules = aqua::dsl::parse_rules_file(kKbDir + "/constraints.rules");
  return rules;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline const char* const kCheckTemp = R"((defrule MAIN::check-temp
  (aqua-temp ?temp)
  ?cfish <- (fish (name ?fname) (tempmin ?ftempmin) (tempmax ?ftempmax))
  =>
  (if (> ?ftempmin ?temp)
    then
    (printout t "Your aqua is too cold for " ?fname crlf)
    (retract ?cfish))
  (if (< ?ftempmax ?temp)
    then
    (printout t "Your aqua is too hot for " ?fname crlf)
    (retract ?cfish))))";

// Molly reference ranges.
inline aqua::kb::FishProfile molly() {
  return {"molly", "Molly", "Poeciliidae", 4, 29, 65, 82, 7.4, 8.6, 10, 30};
}

inline aqua::kb::TankState tank(double temp, double ph, double hard, double gal,
                                std::vector<std::string> residents = {}) {
  aqua::kb::TankState t;
  t.temperature_f = temp;
  t.ph = ph;
  t.hardness_dgh = hard;
  t.tank_size_gal = gal;
  t.residents = std::move(residents);
  t.stocking_ratio = static_cast<double>(t.residents.size()) / gal;
  return t;
}

// Filtering oracle: direct evaluation of the inclusive range predicates.
inline std::set<std::string> violated_reasons(const aqua::kb::FishProfile& p, const aqua::kb::TankState& t) {
  std::set<std::string> out;
  if (t.temperature_f < p.temp_min_f) out.insert("too-cold");
  if (t.temperature_f > p.temp_max_f) out.insert("too-hot");
  if (t.ph < p.ph_min) out.insert("ph-low");
  if (t.ph > p.ph_max) out.insert("ph-high");
  if (t.hardness_dgh < p.hardness_min_dgh) out.insert("hardness-low");
  if (t.hardness_dgh > p.hardness_max_dgh) out.insert("hardness-high");
  if (t.tank_size_gal < p.min_tank_gal) out.insert("tank-too-small");
  return out;
}

// Reading and bound a reason code refers to, for consistency checks.
inline std::pair<double, double> reason_operands(const std::string& reason, const aqua::kb::FishProfile& p,
                                                 const aqua::kb::TankState& t) {
  if (reason == "too-cold") return {t.temperature_f, p.temp_min_f};
  if (reason == "too-hot") return {t.temperature_f, p.temp_max_f};
  if (reason == "ph-low") return {t.ph, p.ph_min};
  if (reason == "ph-high") return {t.ph, p.ph_max};
  if (reason == "hardness-low") return {t.hardness_dgh, p.hardness_min_dgh};
  if (reason == "hardness-high") return {t.hardness_dgh, p.hardness_max_dgh};
  return {t.tank_size_gal, p.min_tank_gal};
}

inline aqua::kb::TankState random_tank(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> temp(55, 92), ph(5.5, 9.0), hard(0, 35), gal(2, 120);
  // Quantize so boundary values come up now and then.
  auto q = [](double v, double step) { return std::round(v / step) * step; };
  aqua::kb::TankState t;
  t.temperature_f = q(temp(rng), 0.5);
  t.ph = q(ph(rng), 0.1);
  t.hardness_dgh = q(hard(rng), 1);
  t.tank_size_gal = q(gal(rng), 1);
  t.has_hiding_places = rng() % 2;
  return t;
}

// Independent pair-scoring oracle.
inline double oracle_adjusted(std::optional<aqua::kb::CompatLevel> level, const aqua::kb::TankState& tank,
                              std::vector<aqua::kb::CfModifier> modifiers) {
  if (!level) return 0.0;
  double cf = *level == aqua::kb::CompatLevel::H ? 0.9 : *level == aqua::kb::CompatLevel::M ? 0.5 : 0.1;
  std::sort(modifiers.begin(), modifiers.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (const auto& m : modifiers) {
    if (!aqua::kb::holds(m.when, tank)) continue;
    cf = m.delta >= 0 ? cf + m.delta - cf * m.delta : cf * (1 + m.delta);
    cf = std::clamp(cf, 0.0, 1.0);
  }
  return cf;
}

// Grouping oracle: candidates clear every resident; groups are the maximal
// pairwise-compatible subsets found by enumerating all 2^n subsets.
struct GroupOracle {
  std::vector<std::string> candidates;  // ids, sorted
  std::set<std::set<std::string>> groups;
};

inline GroupOracle brute_force_groups(const aqua::kb::TankState& tank, const std::vector<std::string>& adequate,
                                      const aqua::kb::ProfileSet& profiles,
                                      const aqua::kb::CompatibilityMatrix& matrix,
                                      const std::vector<aqua::kb::CfModifier>& modifiers, double threshold) {
  auto cf = [&](const std::string& a, const std::string& b) {
    return oracle_adjusted(matrix.lookup(profiles.at(a).name, profiles.at(b).name), tank, modifiers);
  };
  std::vector<std::string> residents;
  for (const auto& r : tank.residents)
    if (profiles.find(r)) residents.push_back(r);

  GroupOracle out;
  for (const auto& a : adequate) {
    if (std::find(tank.residents.begin(), tank.residents.end(), a) != tank.residents.end()) continue;
    if (std::all_of(residents.begin(), residents.end(), [&](const std::string& r) { return cf(a, r) >= threshold; }))
      out.candidates.push_back(a);
  }
  std::sort(out.candidates.begin(), out.candidates.end());

  const std::size_t n = out.candidates.size();
  std::vector<std::uint32_t> cliques;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i)
      for (std::size_t j = i + 1; j < n && ok; ++j)
        if ((mask >> i & 1) && (mask >> j & 1)) ok = cf(out.candidates[i], out.candidates[j]) >= threshold;
    if (ok) cliques.push_back(mask);
  }
  for (auto m : cliques) {
    bool maximal = std::none_of(cliques.begin(), cliques.end(), [&](std::uint32_t o) { return o != m && (o & m) == m; });
    if (!maximal) continue;
    std::set<std::string> g;
    for (std::size_t i = 0; i < n; ++i)
      if (m >> i & 1) g.insert(out.candidates[i]);
    out.groups.insert(std::move(g));
  }
  return out;
}

inline std::set<std::set<std::string>> member_sets(const std::vector<aqua::advisor::SuggestionGroup>& groups) {
  std::set<std::set<std::string>> out;
  for (const auto& g : groups) out.insert(std::set<std::string>(g.members.begin(), g.members.end()));
  return out;
}

// A random knowledge base of `n` synthetic species with a random chart.
// Profiles have wide ranges so every species survives a mid-range tank.
struct SyntheticKb {
  aqua::kb::KnowledgeBase kb;
  std::vector<std::string> ids;
};

inline SyntheticKb synthetic_kb(std::mt19937_64& rng, std::size_t n, double missing_pair_rate = 0.05) {
  SyntheticKb out;
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < n; ++i) {
    char id[32], name[32];
    std::snprintf(id, sizeof id, "sp%03zu", i);
    std::snprintf(name, sizeof name, "Species %03zu", i);
    aqua::kb::FishProfile p{id, name, "Synthetic", 5, 10, 60, 90, 5.5, 9, 0, 40};
    out.kb.profiles.add(p);
    out.ids.push_back(id);
    labels.push_back(name);
  }
  out.kb.matrix = aqua::kb::CompatibilityMatrix(labels);
  std::uniform_real_distribution<double> u(0, 1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      if (u(rng) < missing_pair_rate) continue;
      const double r = u(rng);
      auto level = r < 0.45 ? aqua::kb::CompatLevel::H : r < 0.75 ? aqua::kb::CompatLevel::M : aqua::kb::CompatLevel::L;
      out.kb.matrix.set(labels[i], labels[j], level);
    }
  return out;
}

}  // namespace testing
