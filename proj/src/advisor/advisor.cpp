#include "aqua/advisor.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>
#include <set>

#include "aqua/text.hpp"

namespace aqua::advisor {

std::string_view to_string(Reason reason) {
  switch (reason) {
    case Reason::TooCold: return "too-cold";
    case Reason::TooHot: return "too-hot";
    case Reason::PhLow: return "ph-low";
    case Reason::PhHigh: return "ph-high";
    case Reason::HardnessLow: return "hardness-low";
    case Reason::HardnessHigh: return "hardness-high";
    case Reason::TankTooSmall: return "tank-too-small";
  }
  return "?";
}

std::optional<Reason> parse_reason(std::string_view text) {
  for (auto r : {Reason::TooCold, Reason::TooHot, Reason::PhLow, Reason::PhHigh, Reason::HardnessLow,
                 Reason::HardnessHigh, Reason::TankTooSmall})
    if (to_string(r) == text) return r;
  return std::nullopt;
}

// Filtering ----------------------------------------------------------------

namespace {

// Used only when a custom rule file retracts a fish without leaving an
// (eliminated ...) fact behind.
EliminationRecord first_violation(const kb::FishProfile& p, const kb::TankState& t) {
  if (p.temp_min_f > t.temperature_f) return {p.id, Reason::TooCold, t.temperature_f, p.temp_min_f};
  if (p.temp_max_f < t.temperature_f) return {p.id, Reason::TooHot, t.temperature_f, p.temp_max_f};
  if (p.ph_min > t.ph) return {p.id, Reason::PhLow, t.ph, p.ph_min};
  if (p.ph_max < t.ph) return {p.id, Reason::PhHigh, t.ph, p.ph_max};
  if (p.hardness_min_dgh > t.hardness_dgh) return {p.id, Reason::HardnessLow, t.hardness_dgh, p.hardness_min_dgh};
  if (p.hardness_max_dgh < t.hardness_dgh) return {p.id, Reason::HardnessHigh, t.hardness_dgh, p.hardness_max_dgh};
  return {p.id, Reason::TankTooSmall, t.tank_size_gal, p.min_tank_gal};
}

double slot_number(const engine::Fact& f, const std::string& slot) {
  auto it = f.slots.find(slot);
  if (it == f.slots.end()) return 0;
  if (const auto* d = std::get_if<double>(&it->second)) return *d;
  return 0;
}

std::string slot_text(const engine::Fact& f, const std::string& slot) {
  auto it = f.slots.find(slot);
  return it == f.slots.end() ? std::string() : engine::to_string(it->second);
}

}  // namespace

FilterOutcome filter_by_conditions(const kb::TankState& tank, const kb::ProfileSet& profiles) {
  return filter_by_conditions(tank, profiles, constraint_rules());
}

FilterOutcome filter_by_conditions(const kb::TankState& tank, const kb::ProfileSet& profiles,
                                   const dsl::RuleSet& rules, const AdvisorConfig& config) {
  kb::validate(tank);
  FilterOutcome out;
  seed_working_memory(out.wm, tank, profiles);

  // Fish facts are asserted first, in profile order, so ids are 1..n.
  std::map<std::string, engine::FactId> fact_of;
  engine::FactId next = 1;
  for (const auto& p : profiles) fact_of[p.id] = next++;

  engine::RunOptions options;
  options.max_cycles = config.max_cycles;
  auto run = engine::run(out.wm, rules, options);
  out.interrupted = run.interrupted;

  std::map<std::string, EliminationRecord> recorded;
  for (const auto* f : out.wm.facts()) {
    if (f->templ != "eliminated") continue;
    auto species = slot_text(*f, "species");
    auto reason = parse_reason(slot_text(*f, "reason"));
    if (!reason || recorded.contains(species)) continue;
    recorded.emplace(species, EliminationRecord{species, *reason, slot_number(*f, "value"), slot_number(*f, "bound")});
  }

  for (const auto& p : profiles) {
    engine::FactId id = fact_of[p.id];
    if (out.wm.find(id)) {
      out.adequate.push_back(p.id);
      continue;
    }
    auto it = recorded.find(p.id);
    EliminationRecord rec = it != recorded.end() ? it->second : first_violation(p, tank);
    rec.fact = id;
    out.eliminated.push_back(std::move(rec));
  }
  return out;
}

// Pair scoring ---------------------------------------------------------------

double base_cf(kb::CompatLevel level, const AdvisorConfig& config) {
  switch (level) {
    case kb::CompatLevel::H: return config.cf_high;
    case kb::CompatLevel::M: return config.cf_medium;
    case kb::CompatLevel::L: return config.cf_low;
  }
  return 0;
}

PairScore adjusted_pair_cf(const std::string& a, const std::string& b, const kb::CompatibilityMatrix& matrix,
                           const kb::TankState& tank, std::span<const kb::CfModifier> modifiers,
                           const AdvisorConfig& config) {
  PairScore score;
  score.a = a;
  score.b = b;
  score.base_level = matrix.lookup(a, b);
  if (!score.base_level) {
    score.unknown_pair = true;
    return score;
  }
  score.base_cf = base_cf(*score.base_level, config);

  std::vector<const kb::CfModifier*> active;
  for (const auto& m : modifiers)
    if (kb::holds(m.when, tank)) active.push_back(&m);
  std::sort(active.begin(), active.end(), [](const auto* x, const auto* y) { return x->id < y->id; });

  double cf = score.base_cf;
  for (const auto* m : active) {
    if (m->delta >= 0) cf = engine::cf_combine(cf, m->delta);
    else cf = cf * (1.0 + m->delta);
    cf = std::clamp(cf, 0.0, 1.0);
    score.applied.push_back(m->id);
  }
  score.adjusted_cf = cf;
  return score;
}

// Cliques ------------------------------------------------------------------

namespace {

class CliqueSearch {
public:
  CliqueSearch(const std::vector<std::vector<bool>>& adj, std::size_t cap) : adj_(adj), cap_(cap) {}

  bool run() {
    std::vector<std::size_t> p(adj_.size());
    std::iota(p.begin(), p.end(), 0);
    std::vector<std::size_t> r, x;
    return expand(r, p, x);
  }

  std::vector<std::vector<std::size_t>> cliques;

private:
  // Bron-Kerbosch with Tomita pivoting. Returns false once the cap is exceeded.
  bool expand(std::vector<std::size_t>& r, std::vector<std::size_t> p, std::vector<std::size_t> x) {
    if (p.empty() && x.empty()) {
      if (r.empty()) return true;
      if (cliques.size() >= cap_) return false;
      auto c = r;
      std::sort(c.begin(), c.end());
      cliques.push_back(std::move(c));
      return true;
    }
    std::size_t pivot = 0;
    std::size_t best = 0;
    bool have = false;
    for (const auto* set : {&p, &x}) {
      for (auto u : *set) {
        std::size_t n = 0;
        for (auto v : p) n += adj_[u][v];
        if (!have || n > best) {
          pivot = u;
          best = n;
          have = true;
        }
      }
    }
    std::vector<std::size_t> branch;
    for (auto v : p)
      if (!adj_[pivot][v]) branch.push_back(v);

    for (auto v : branch) {
      std::vector<std::size_t> np, nx;
      for (auto u : p)
        if (adj_[v][u]) np.push_back(u);
      for (auto u : x)
        if (adj_[v][u]) nx.push_back(u);
      r.push_back(v);
      bool ok = expand(r, std::move(np), std::move(nx));
      r.pop_back();
      if (!ok) return false;
      p.erase(std::find(p.begin(), p.end(), v));
      x.push_back(v);
    }
    return true;
  }

  const std::vector<std::vector<bool>>& adj_;
  std::size_t cap_;
};

}  // namespace

std::optional<std::vector<std::vector<std::size_t>>> maximal_cliques(const std::vector<std::vector<bool>>& adjacency,
                                                                     std::size_t cap) {
  CliqueSearch search(adjacency, cap);
  if (!search.run()) return std::nullopt;
  return std::move(search.cliques);
}

// Grouping -----------------------------------------------------------------

GroupingResult suggest_groups(const kb::TankState& tank, std::span<const std::string> adequate,
                              const kb::ProfileSet& profiles, const kb::CompatibilityMatrix& matrix,
                              std::span<const kb::CfModifier> modifiers, double threshold,
                              const AdvisorConfig& config) {
  if (!(threshold >= 0.0 && threshold <= 1.0))
    throw std::invalid_argument("threshold must lie in [0, 1], got " + format_number(threshold));

  GroupingResult out;

  std::vector<const kb::FishProfile*> residents;
  std::set<std::string> resident_ids;
  for (const auto& id : tank.residents) {
    if (!resident_ids.insert(id).second) continue;
    if (const auto* p = profiles.find(id)) residents.push_back(p);
    else out.warnings.push_back("unknown species excluded from scoring: " + id);
  }

  std::vector<const kb::FishProfile*> pool;
  for (const auto& id : adequate) {
    if (resident_ids.contains(id)) continue;
    const auto* p = profiles.find(id);
    if (!p) {
      out.warnings.push_back("adequate species " + id + " has no profile; skipped");
      continue;
    }
    pool.push_back(p);
  }
  std::sort(pool.begin(), pool.end(), [](const auto* x, const auto* y) { return x->name < y->name; });

  auto score = [&](const kb::FishProfile* x, const kb::FishProfile* y) {
    return adjusted_pair_cf(x->name, y->name, matrix, tank, modifiers, config);
  };

  std::vector<const kb::FishProfile*> candidates;
  std::map<std::pair<std::string, std::string>, PairScore> resident_scores;
  for (const auto* c : pool) {
    bool ok = true;
    for (const auto* r : residents) {
      auto s = score(c, r);
      ok = ok && s.adjusted_cf >= threshold;
      resident_scores.emplace(std::pair{c->id, r->id}, std::move(s));
    }
    if (ok) candidates.push_back(c);
  }
  for (const auto* c : candidates) out.candidates.push_back(c->id);

  const std::size_t n = candidates.size();
  std::vector<std::vector<PairScore>> pair(n, std::vector<PairScore>(n));
  std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      pair[i][j] = score(candidates[i], candidates[j]);
      adj[i][j] = adj[j][i] = pair[i][j].adjusted_cf >= threshold;
    }

  std::vector<std::vector<std::size_t>> sets;
  if (auto cliques = maximal_cliques(adj, config.clique_cap)) {
    sets = std::move(*cliques);
  } else {
    out.degraded = true;
    out.warnings.push_back("more than " + std::to_string(config.clique_cap) +
                           " compatible groups; showing a greedy partition instead");
    std::vector<bool> used(n, false);
    for (std::size_t i = 0; i < n; ++i) {
      if (used[i]) continue;
      std::vector<std::size_t> group{i};
      used[i] = true;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (used[j]) continue;
        if (std::all_of(group.begin(), group.end(), [&](std::size_t g) { return adj[g][j]; })) {
          group.push_back(j);
          used[j] = true;
        }
      }
      sets.push_back(std::move(group));
    }
  }

  for (const auto& set : sets) {
    SuggestionGroup g;
    for (auto i : set) {
      g.members.push_back(candidates[i]->id);
      g.names.push_back(candidates[i]->name);
    }
    for (std::size_t x = 0; x < set.size(); ++x)
      for (std::size_t y = x + 1; y < set.size(); ++y) g.witness.push_back(pair[set[x]][set[y]]);
    for (auto i : set)
      for (const auto* r : residents) g.witness.push_back(resident_scores.at({candidates[i]->id, r->id}));
    if (!g.witness.empty()) {
      double sum = 0;
      g.score = 1.0;
      for (const auto& w : g.witness) {
        g.score = std::min(g.score, w.adjusted_cf);
        sum += w.adjusted_cf;
      }
      g.mean = sum / static_cast<double>(g.witness.size());
    }
    out.groups.push_back(std::move(g));
  }

  std::sort(out.groups.begin(), out.groups.end(), [](const SuggestionGroup& a, const SuggestionGroup& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.members.size() != b.members.size()) return a.members.size() > b.members.size();
    return a.names < b.names;
  });
  return out;
}

// Consultation -------------------------------------------------------------

ConsultationResult run_consultation(const kb::TankState& tank, const kb::KnowledgeBase& kb,
                                    const dsl::RuleSet& rules, double threshold, const AdvisorConfig& config) {
  if (!(threshold >= 0.0 && threshold <= 1.0))
    throw std::invalid_argument("threshold must lie in [0, 1], got " + format_number(threshold));
  auto filtered = filter_by_conditions(tank, kb.profiles, rules, config);
  auto grouped = suggest_groups(tank, filtered.adequate, kb.profiles, kb.matrix, kb.modifiers, threshold, config);

  ConsultationResult result;
  result.tank = tank;
  result.threshold = threshold;
  result.adequate = std::move(filtered.adequate);
  result.eliminated = std::move(filtered.eliminated);
  result.groups = std::move(grouped.groups);
  result.candidates = std::move(grouped.candidates);
  result.degraded = grouped.degraded;
  result.warnings = std::move(grouped.warnings);
  if (filtered.interrupted) result.warnings.push_back("inference stopped at the cycle budget");

  std::set<std::string> warned;
  for (const auto& id : tank.residents) {
    if (!warned.insert(id).second) continue;
    for (const auto& e : result.eliminated)
      if (e.species == id)
        result.warnings.push_back("resident " + id + " does not suit the entered conditions (" +
                                  std::string(to_string(e.reason)) + ", tank " + format_number(e.value) +
                                  ", limit " + format_number(e.bound) + ")");
  }
  result.trace = filtered.wm.trace();
  return result;
}

kb::TankState with_resident(const kb::TankState& tank, const std::string& species) {
  kb::TankState next = tank;
  next.residents.push_back(species);
  next.stocking_ratio = tank.stocking_ratio + 1.0 / tank.tank_size_gal;
  return next;
}

ConsultationResult whatif_add(const ConsultationResult& result, const std::string& species,
                              const kb::KnowledgeBase& kb, const dsl::RuleSet& rules, const AdvisorConfig& config) {
  bool suggested = std::any_of(result.groups.begin(), result.groups.end(), [&](const SuggestionGroup& g) {
    return std::find(g.members.begin(), g.members.end(), species) != g.members.end();
  });
  if (!suggested) throw NotCandidateError(species);
  return run_consultation(with_resident(result.tank, species), kb, rules, result.threshold, config);
}

const kb::FishProfile* resolve_species(const kb::ProfileSet& profiles, std::string_view text) {
  auto t = trim(text);
  if (const auto* p = profiles.find(t)) return p;
  auto lower = [](std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
  };
  auto want = lower(t);
  for (const auto& p : profiles)
    if (lower(p.id) == want || lower(p.name) == want) return &p;
  return nullptr;
}

}  // namespace aqua::advisor
