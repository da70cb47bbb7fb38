#include <algorithm>
#include <fstream>

#include "aqua/service.hpp"

namespace aqua::service {

namespace fs = std::filesystem;

SessionStore::SessionStore(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw PersistenceError("cannot create data directory " + dir_.string() + ": " + ec.message());
}

fs::path SessionStore::file(const std::string& id) const { return dir_ / (id + ".jsonl"); }

void SessionStore::append(const std::string& id, const Json& event) const {
  std::ofstream out(file(id), std::ios::app | std::ios::binary);
  if (!out) throw PersistenceError("cannot open log for session " + id);
  out << event.dump() << '\n';
  out.flush();
  if (!out) throw PersistenceError("cannot write log for session " + id);
}

std::vector<Json> SessionStore::read(const std::string& id) const {
  std::ifstream in(file(id), std::ios::binary);
  if (!in) throw PersistenceError("cannot read log for session " + id);
  std::vector<Json> events;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      events.push_back(Json::parse(line));
    } catch (const Json::parse_error& e) {
      throw PersistenceError("session " + id + " line " + std::to_string(n) + ": " + e.what());
    }
  }
  return events;
}

std::vector<std::string> SessionStore::list() const {
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(dir_)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") ids.push_back(entry.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

bool SessionStore::exists(const std::string& id) const { return fs::exists(file(id)); }

}  // namespace aqua::service
