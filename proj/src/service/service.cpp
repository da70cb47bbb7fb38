#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <random>

#include "aqua/service.hpp"
#include "aqua/text.hpp"

namespace aqua::service {

namespace {

std::string now_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

Json event_of(std::string type) {
  Json e;
  e["type"] = std::move(type);
  e["at"] = now_utc();
  return e;
}

Response ok(Json body, int status = 200) { return {status, std::move(body)}; }

Response not_found_session(const std::string& id) {
  return error_response(404, "not_found", "no session " + id);
}

Response conditions_required() {
  return error_response(409, "conditions_required", "conditions required before suggestions");
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

Response error_response(int status, std::string code, std::string message, std::string field) {
  Json err;
  err["code"] = std::move(code);
  err["message"] = std::move(message);
  if (!field.empty()) err["field"] = std::move(field);
  Json body;
  body["error"] = std::move(err);
  return {status, std::move(body)};
}

kb::TankState SessionState::current_tank() const {
  kb::TankState t = tank.value_or(kb::TankState{});
  t.residents = residents;
  return t;
}

void apply_event(SessionState& state, const Json& event) {
  const std::string type = event.at("type").get<std::string>();
  const std::string at = event.value("at", std::string{});
  if (type == "create") {
    state = SessionState{};
    state.created_at = at;
  } else if (type == "conditions") {
    kb::TankState t = json_io::tank_from_json(event.at("tank"));
    state.residents = t.residents;
    state.tank = std::move(t);
  } else if (type == "add_resident" || type == "commit_whatif") {
    const std::string species = event.at("species").get<std::string>();
    if (state.tank) {
      state.tank = advisor::with_resident(state.current_tank(), species);
      state.residents = state.tank->residents;
    } else {
      state.residents.push_back(species);
    }
  } else if (type == "remove_resident") {
    const std::string species = event.at("species").get<std::string>();
    auto it = std::find(state.residents.begin(), state.residents.end(), species);
    if (it == state.residents.end()) throw std::invalid_argument("remove_resident: " + species + " is not a resident");
    state.residents.erase(it);
    if (state.tank) {
      state.tank->residents = state.residents;
      state.tank->stocking_ratio = std::max(0.0, state.tank->stocking_ratio - 1.0 / state.tank->tank_size_gal);
    }
  } else {
    throw std::invalid_argument("unknown event type " + type);
  }
  ++state.version;
  state.updated_at = at;
}

AdvisorService::AdvisorService(kb::KnowledgeBase kb, dsl::RuleSet rules, std::filesystem::path data_dir,
                               advisor::AdvisorConfig config)
    : kb_(std::move(kb)), rules_(std::move(rules)), config_(config), store_(std::move(data_dir)) {
  for (const auto& id : store_.list()) {
    auto s = std::make_shared<Session>();
    s->id = id;
    for (const auto& e : store_.read(id)) apply_event(s->state, e);
    recompute(*s);
    sessions_.emplace(id, std::move(s));
  }
}

std::shared_ptr<AdvisorService::Session> AdvisorService::find(const std::string& id) const {
  std::shared_lock lock(sessions_mutex_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::size_t AdvisorService::session_count() const {
  std::shared_lock lock(sessions_mutex_);
  return sessions_.size();
}

std::string AdvisorService::fresh_id() {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  char buf[17];
  for (;;) {
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng()));
    std::string id = buf;
    if (!find(id) && !store_.exists(id)) return id;
  }
}

void AdvisorService::recompute(Session& s) const {
  if (!s.state.tank) {
    s.latest.reset();
    return;
  }
  s.latest = advisor::run_consultation(s.state.current_tank(), kb_, rules_, config_.default_threshold, config_);
}

Json AdvisorService::result_payload(const Session& s) const {
  return s.latest ? json_io::result_to_json(*s.latest) : Json(nullptr);
}

Json AdvisorService::session_json(const Session& s) const {
  Json out;
  out["id"] = s.id;
  out["version"] = s.state.version;
  out["created_at"] = s.state.created_at;
  out["updated_at"] = s.state.updated_at;
  out["conditions"] = s.state.tank ? json_io::tank_to_json(s.state.current_tank()) : Json(nullptr);
  out["residents"] = s.state.residents;
  out["result"] = result_payload(s);
  return out;
}

// Caller holds s.mutex. The log is written before memory changes so a
// failed write leaves the session as it was.
Response AdvisorService::commit_event(Session& s, Json event) {
  SessionState next = s.state;
  apply_event(next, event);
  try {
    store_.append(s.id, event);
  } catch (const PersistenceError& e) {
    return error_response(500, "persistence_failed", e.what());
  }
  s.state = std::move(next);
  recompute(s);
  return ok(session_json(s));
}

Response AdvisorService::create_session() {
  auto s = std::make_shared<Session>();
  {
    std::lock_guard lock(rng_mutex_);
    s->id = fresh_id();
  }
  Json event = event_of("create");
  try {
    store_.append(s->id, event);
  } catch (const PersistenceError& e) {
    return error_response(500, "persistence_failed", e.what());
  }
  apply_event(s->state, event);
  {
    std::unique_lock lock(sessions_mutex_);
    sessions_.emplace(s->id, s);
  }
  Json body;
  body["id"] = s->id;
  return ok(std::move(body), 201);
}

Response AdvisorService::get_session(const std::string& id) {
  auto s = find(id);
  if (!s) return not_found_session(id);
  std::lock_guard lock(s->mutex);
  return ok(session_json(*s));
}

Response AdvisorService::set_conditions(const std::string& id, const Json& body) {
  auto s = find(id);
  if (!s) return not_found_session(id);
  std::lock_guard lock(s->mutex);
  if (!body.is_object()) return error_response(422, "invalid_conditions", "conditions must be a JSON object");
  Json doc = body;
  if (!doc.contains("residents")) doc["residents"] = s->state.residents;
  kb::TankState tank;
  try {
    tank = json_io::tank_from_json(doc);
  } catch (const kb::ValidationError& e) {
    return error_response(422, "invalid_conditions", e.what(), e.field());
  }
  if (s->state.tank && *s->state.tank == tank) return ok(session_json(*s));
  Json event = event_of("conditions");
  event["tank"] = json_io::tank_to_json(tank);
  return commit_event(*s, std::move(event));
}

Response AdvisorService::add_resident(const std::string& id, const Json& body) {
  auto s = find(id);
  if (!s) return not_found_session(id);
  if (!body.is_object() || !body.contains("species") || !body["species"].is_string())
    return error_response(422, "invalid_species", "body must be {\"species\": <id>}", "species");
  std::string species = body["species"].get<std::string>();
  if (trim(species).empty()) return error_response(422, "invalid_species", "species must not be empty", "species");
  if (const auto* p = advisor::resolve_species(kb_.profiles, species)) species = p->id;
  std::lock_guard lock(s->mutex);
  Json event = event_of("add_resident");
  event["species"] = species;
  return commit_event(*s, std::move(event));
}

Response AdvisorService::remove_resident(const std::string& id, const std::string& species_text) {
  auto s = find(id);
  if (!s) return not_found_session(id);
  std::string species = species_text;
  std::lock_guard lock(s->mutex);
  if (!contains(s->state.residents, species)) {
    const auto* p = advisor::resolve_species(kb_.profiles, species);
    if (!p || !contains(s->state.residents, p->id))
      return error_response(409, "not_a_resident", species_text + " is not a resident", "species");
    species = p->id;
  }
  Json event = event_of("remove_resident");
  event["species"] = species;
  return commit_event(*s, std::move(event));
}

Response AdvisorService::get_suggestions(const std::string& id, const std::optional<std::string>& threshold_text) {
  auto s = find(id);
  if (!s) return not_found_session(id);
  double threshold = config_.default_threshold;
  if (threshold_text) {
    auto t = parse_number(*threshold_text);
    if (!t || *t < 0 || *t > 1)
      return error_response(422, "invalid_threshold", "threshold must be a number in [0, 1]", "threshold");
    threshold = *t;
  }
  std::lock_guard lock(s->mutex);
  if (!s->latest) return conditions_required();
  const auto& r = *s->latest;
  Json out;
  out["threshold"] = threshold;
  if (threshold == r.threshold) {
    out["groups"] = json_io::groups_to_json(r.groups);
    out["candidates"] = r.candidates;
    out["warnings"] = r.warnings;
    out["degraded"] = r.degraded;
  } else {
    auto g = advisor::suggest_groups(r.tank, r.adequate, kb_.profiles, kb_.matrix, kb_.modifiers, threshold, config_);
    out["groups"] = json_io::groups_to_json(g.groups);
    out["candidates"] = g.candidates;
    out["warnings"] = g.warnings;
    out["degraded"] = g.degraded;
  }
  return ok(std::move(out));
}

Response AdvisorService::whatif(const std::string& id, const Json& body, bool commit) {
  auto s = find(id);
  if (!s) return not_found_session(id);
  if (!body.is_object() || !body.contains("species") || !body["species"].is_string())
    return error_response(422, "invalid_species", "body must be {\"species\": <id>}", "species");
  std::string species = body["species"].get<std::string>();
  if (const auto* p = advisor::resolve_species(kb_.profiles, species)) species = p->id;

  std::lock_guard lock(s->mutex);
  if (!s->latest) return conditions_required();
  const advisor::ConsultationResult before = *s->latest;
  advisor::ConsultationResult after;
  try {
    after = advisor::whatif_add(before, species, kb_, rules_, config_);
  } catch (const advisor::NotCandidateError& e) {
    return error_response(409, "not_a_candidate", e.what(), "species");
  }

  Json new_groups = Json::array();
  for (const auto& g : after.groups) {
    bool seen = std::any_of(before.groups.begin(), before.groups.end(),
                            [&](const advisor::SuggestionGroup& old) { return old.members == g.members; });
    if (!seen) new_groups.push_back(json_io::group_to_json(g));
  }
  std::vector<std::string> removed;
  for (const auto& c : before.candidates) {
    if (c != species && !contains(after.candidates, c)) removed.push_back(c);
  }

  Json out;
  out["species"] = species;
  out["committed"] = commit;
  out["new_groups"] = std::move(new_groups);
  out["removed_candidates"] = removed;
  out["result"] = json_io::result_to_json(after);
  if (commit) {
    Json event = event_of("commit_whatif");
    event["species"] = species;
    Response r = commit_event(*s, std::move(event));
    if (r.status != 200) return r;
  }
  return ok(std::move(out));
}

Response AdvisorService::get_explanations(const std::string& id, const std::optional<std::string>& target) {
  auto s = find(id);
  if (!s) return not_found_session(id);
  if (!target || target->empty())
    return error_response(422, "invalid_target", "target query parameter required", "target");
  std::lock_guard lock(s->mutex);
  if (!s->latest) return conditions_required();
  const auto& r = *s->latest;

  const auto colon = target->find(':');
  const std::string kind = target->substr(0, colon);
  const std::string arg = colon == std::string::npos ? std::string{} : target->substr(colon + 1);
  auto unknown = [&] { return error_response(404, "unknown_target", "nothing to explain for " + *target, "target"); };
  auto fact_id = [&]() -> std::optional<engine::FactId> {
    if (arg.empty() || !std::all_of(arg.begin(), arg.end(), [](char c) { return c >= '0' && c <= '9'; }))
      return std::nullopt;
    return std::stoull(arg);
  };

  std::optional<engine::ExplainTarget> t;
  if (kind == "fact") {
    if (auto f = fact_id()) t = engine::ExplainTarget::of_fact(*f);
  } else if (kind == "retract") {
    if (auto f = fact_id()) t = engine::ExplainTarget::of_retraction(*f);
  } else if (kind == "eliminated") {
    std::string species = arg;
    if (const auto* p = advisor::resolve_species(kb_.profiles, arg)) species = p->id;
    for (const auto& e : r.eliminated) {
      if (e.species == species) t = engine::ExplainTarget::of_retraction(e.fact);
    }
  } else if (kind == "message" && !arg.empty()) {
    t = engine::ExplainTarget::of_message(arg);
  }
  if (!t) return unknown();

  engine::ExplanationNode node;
  try {
    node = engine::explain(r.trace, *t);
  } catch (const engine::ExplainError&) {
    return unknown();
  }
  Json out;
  out["target"] = *target;
  out["explanation"] = json_io::explanation_to_json(node);
  out["text"] = engine::render_explanation(node);
  return ok(std::move(out));
}

Response AdvisorService::list_species() const {
  Json list = Json::array();
  for (const auto& p : kb_.profiles) list.push_back(json_io::profile_to_json(p));
  Json out;
  out["species"] = std::move(list);
  return ok(std::move(out));
}

std::optional<std::string> AdvisorService::latest_result_json(const std::string& id) {
  auto s = find(id);
  if (!s) return std::nullopt;
  std::lock_guard lock(s->mutex);
  if (!s->latest) return std::nullopt;
  return json_io::result_to_json(*s->latest).dump();
}

}  // namespace aqua::service
