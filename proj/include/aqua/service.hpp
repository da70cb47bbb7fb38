// Session-oriented JSON API over the advisor. Each session is persisted as
// an append-only line-JSON event log; replaying the log rebuilds the tank
// state and the latest consultation.

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "aqua/advisor.hpp"
#include "aqua/json_io.hpp"

namespace httplib {
class Server;
}

namespace aqua::service {

using json_io::Json;

struct Response {
  int status = 200;
  Json body;
};

class PersistenceError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One `<id>.jsonl` file per session under a data directory.
class SessionStore {
public:
  explicit SessionStore(std::filesystem::path dir);

  /// Throws PersistenceError when the line cannot be written.
  void append(const std::string& id, const Json& event) const;
  std::vector<Json> read(const std::string& id) const;
  std::vector<std::string> list() const;
  bool exists(const std::string& id) const;
  const std::filesystem::path& dir() const noexcept { return dir_; }

private:
  std::filesystem::path file(const std::string& id) const;
  std::filesystem::path dir_;
};

/// What a session's event log folds into.
struct SessionState {
  std::optional<kb::TankState> tank;  // set once conditions arrive
  std::vector<std::string> residents; // kept here until then
  std::uint64_t version = 0;
  std::string created_at;
  std::string updated_at;

  kb::TankState current_tank() const;  // tank with residents merged in
};

/// Applies one logged event. Throws std::invalid_argument on an unknown type.
void apply_event(SessionState& state, const Json& event);

class AdvisorService {
public:
  AdvisorService(kb::KnowledgeBase kb, dsl::RuleSet rules, std::filesystem::path data_dir,
                 advisor::AdvisorConfig config = {});

  Response create_session();
  Response get_session(const std::string& id);
  Response set_conditions(const std::string& id, const Json& body);
  Response add_resident(const std::string& id, const Json& body);
  Response remove_resident(const std::string& id, const std::string& species);
  Response get_suggestions(const std::string& id, const std::optional<std::string>& threshold);
  Response whatif(const std::string& id, const Json& body, bool commit);
  Response get_explanations(const std::string& id, const std::optional<std::string>& target);
  Response list_species() const;

  /// Serialized latest ConsultationResult, if conditions were ever set.
  std::optional<std::string> latest_result_json(const std::string& id);
  std::size_t session_count() const;

  const kb::KnowledgeBase& kb() const noexcept { return kb_; }

private:
  struct Session {
    std::string id;
    std::mutex mutex;
    SessionState state;
    std::optional<advisor::ConsultationResult> latest;
  };

  std::shared_ptr<Session> find(const std::string& id) const;
  std::string fresh_id();
  void recompute(Session& s) const;
  Response commit_event(Session& s, Json event);
  Json session_json(const Session& s) const;
  Json result_payload(const Session& s) const;

  kb::KnowledgeBase kb_;
  dsl::RuleSet rules_;
  advisor::AdvisorConfig config_;
  SessionStore store_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mutex rng_mutex_;
};

Response error_response(int status, std::string code, std::string message, std::string field = {});

/// Wires the /v1 endpoints onto an httplib server.
void install_routes(httplib::Server& server, AdvisorService& service);

}  // namespace aqua::service
