#include <doctest.h>
#include <httplib.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <thread>

#include "aqua/service.hpp"
#include "support.hpp"

using namespace aqua::service;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static std::mt19937_64 rng{std::random_device{}()};
    path = fs::temp_directory_path() / ("aqua-test-" + std::to_string(rng()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

AdvisorService make_service(const fs::path& dir) {
  return AdvisorService(testing::shipped_kb(), testing::shipped_rules(), dir);
}

Json conditions(double temp, double ph, double hard, double gal) {
  Json j;
  j["temperature_f"] = temp;
  j["ph"] = ph;
  j["hardness_dgh"] = hard;
  j["tank_size_gal"] = gal;
  return j;
}

Json species(const std::string& s) {
  Json j;
  j["species"] = s;
  return j;
}

std::string new_session(AdvisorService& svc) {
  auto r = svc.create_session();
  REQUIRE(r.status == 201);
  return r.body["id"].get<std::string>();
}

bool contains_str(const Json& arr, const std::string& s) {
  for (const auto& v : arr)
    if (v == s) return true;
  return false;
}

const Json* elimination(const Json& result, const std::string& id) {
  for (const auto& e : result["eliminated"])
    if (e["species"] == id) return &e;
  return nullptr;
}

}  // namespace

TEST_SUITE("service") {

TEST_CASE("create sessions") {
  TempDir dir;
  auto svc = make_service(dir.path);
  auto a = new_session(svc);
  auto b = new_session(svc);
  CHECK(std::regex_match(a, std::regex("[0-9a-f]{16}")));
  CHECK(a != b);
  CHECK(fs::exists(dir.path / (a + ".jsonl")));
  auto got = svc.get_session(a);
  CHECK(got.status == 200);
  CHECK(got.body["conditions"].is_null());
  CHECK(got.body["result"].is_null());
  CHECK(svc.get_session("0000000000000000").status == 404);
}

TEST_CASE("set conditions") {
  TempDir dir;
  auto svc = make_service(dir.path);
  auto id = new_session(svc);

  auto ok = svc.set_conditions(id, conditions(75, 8.0, 20, 40));
  REQUIRE(ok.status == 200);
  CHECK(contains_str(ok.body["result"]["adequate"], "molly"));

  auto bad = svc.set_conditions(id, conditions(75, 15, 20, 40));
  CHECK(bad.status == 422);
  CHECK(bad.body["error"]["message"] == "ph out of range");
  CHECK(bad.body["error"]["field"] == "ph");

  Json missing = conditions(75, 8, 20, 40);
  missing.erase("hardness_dgh");
  auto m = svc.set_conditions(id, missing);
  CHECK(m.status == 422);
  CHECK(m.body["error"]["field"] == "hardness_dgh");

  auto small = svc.set_conditions(id, conditions(75, 8.0, 20, 20));
  REQUIRE(small.status == 200);
  const Json* e = elimination(small.body["result"], "molly");
  REQUIRE(e);
  CHECK((*e)["reason"] == "tank-too-small");

  CHECK(svc.set_conditions("ffffffffffffffff", conditions(75, 8, 20, 40)).status == 404);
}

TEST_CASE("identical conditions bump the version once") {
  TempDir dir;
  auto svc = make_service(dir.path);
  auto id = new_session(svc);
  auto first = svc.set_conditions(id, conditions(75, 8.0, 20, 40));
  auto second = svc.set_conditions(id, conditions(75, 8.0, 20, 40));
  CHECK(first.body["version"] == second.body["version"]);
  CHECK(first.body["result"].dump() == second.body["result"].dump());
  CHECK(testing::slurp((dir.path / (id + ".jsonl")).string()).find("\"conditions\"") ==
        testing::slurp((dir.path / (id + ".jsonl")).string()).rfind("\"conditions\""));
}

TEST_CASE("residents") {
  TempDir dir;
  auto svc = make_service(dir.path);
  auto id = new_session(svc);
  svc.set_conditions(id, conditions(75, 8.0, 20, 40));

  auto added = svc.add_resident(id, species("discus"));
  REQUIRE(added.status == 200);
  CHECK(added.body["residents"] == Json::array({"discus"}));
  CHECK(added.body["conditions"]["stocking_ratio"].get<double>() == doctest::Approx(1.0 / 40));

  auto sug = svc.get_suggestions(id, std::nullopt);
  REQUIRE(sug.status == 200);
  REQUIRE_FALSE(sug.body["groups"].empty());
  CHECK(contains_str(sug.body["groups"][0]["members"], "Catfish (Corydoras)"));
  for (const auto& g : sug.body["groups"]) CHECK_FALSE(contains_str(g["ids"], "angelfish"));

  auto none = svc.remove_resident(id, "betta");
  CHECK(none.status == 409);
  CHECK(none.body["error"]["message"].get<std::string>().find("not a resident") != std::string::npos);

  auto axo = svc.add_resident(id, species("axolotl"));
  CHECK(axo.status == 200);
  CHECK(contains_str(axo.body["result"]["warnings"], "unknown species excluded from scoring: axolotl"));

  auto removed = svc.remove_resident(id, "Discus");
  REQUIRE(removed.status == 200);
  CHECK(removed.body["residents"] == Json::array({"axolotl"}));
  CHECK(removed.body["conditions"]["stocking_ratio"].get<double>() == doctest::Approx(1.0 / 40));

  CHECK(svc.add_resident(id, Json::object()).status == 422);
}

TEST_CASE("suggestions") {
  TempDir dir;
  auto svc = make_service(dir.path);
  auto id = new_session(svc);
  auto early = svc.get_suggestions(id, std::nullopt);
  CHECK(early.status == 409);
  CHECK(early.body["error"]["message"].get<std::string>().find("conditions required") != std::string::npos);

  Json c = conditions(75, 8.0, 20, 40);
  c["residents"] = Json::array({"discus"});
  svc.set_conditions(id, c);
  CHECK(svc.get_suggestions(id, "0.95").body["groups"].empty());
  CHECK(svc.get_suggestions(id, "-1").status == 422);
  CHECK(svc.get_suggestions(id, "abc").status == 422);
  CHECK(svc.get_suggestions(id, "-1").body["error"]["field"] == "threshold");
  auto low = svc.get_suggestions(id, "0.1");
  REQUIRE(low.status == 200);
  CHECK(low.body["groups"].size() >= 1);
}

TEST_CASE("what-if") {
  TempDir dir;
  auto svc = make_service(dir.path);
  auto id = new_session(svc);
  Json c = conditions(75, 8.0, 20, 40);
  c["residents"] = Json::array({"discus"});
  svc.set_conditions(id, c);
  const auto before = svc.get_session(id).body.dump();

  auto preview = svc.whatif(id, species("catfish-corydoras"), false);
  REQUIRE(preview.status == 200);
  CHECK(preview.body["committed"] == false);
  CHECK(preview.body.contains("new_groups"));
  CHECK(preview.body.contains("removed_candidates"));
  CHECK(svc.get_session(id).body.dump() == before);

  auto angel = svc.whatif(id, species("angelfish"), false);
  CHECK(angel.status == 409);

  auto commit = svc.whatif(id, species("Catfish (Corydoras)"), true);
  REQUIRE(commit.status == 200);
  auto after = svc.get_session(id).body;
  CHECK(contains_str(after["residents"], "catfish-corydoras"));
  CHECK(after["result"].dump() == commit.body["result"].dump());
}

TEST_CASE("explanations") {
  TempDir dir;
  auto svc = make_service(dir.path);
  auto id = new_session(svc);
  CHECK(svc.get_explanations(id, "fact:1").status == 409);
  svc.set_conditions(id, Json::parse(testing::slurp(testing::kFixtures + "/cold_tank.json")));

  auto molly = svc.get_explanations(id, "eliminated:molly");
  REQUIRE(molly.status == 200);
  const auto& tree = molly.body["explanation"];
  CHECK(tree["kind"] == "retracted");
  CHECK(tree["rule"] == "MAIN::check-temp");
  CHECK(tree["fact"]["slots"]["tempmin"] == 65);
  CHECK(molly.body["text"].get<std::string>().find("too cold for Molly") != std::string::npos);
  bool has_reading = false;
  for (const auto& c : tree["children"]) has_reading = has_reading || c["text"] == "(aqua-temp 60)";
  CHECK(has_reading);

  auto given = svc.get_explanations(id, "fact:1");
  REQUIRE(given.status == 200);
  CHECK(given.body["explanation"]["kind"] == "given");
  CHECK(given.body["explanation"]["children"].empty());

  CHECK(svc.get_explanations(id, "garbage").status == 404);
  CHECK(svc.get_explanations(id, "fact:99999").status == 404);
  // Everything is eliminated at 60 F; use a tank where Corydoras is adequate.
  auto warm = new_session(svc);
  svc.set_conditions(warm, Json::parse(testing::slurp(testing::kFixtures + "/discus_tank.json")));
  CHECK(svc.get_explanations(warm, "eliminated:catfish-corydoras").status == 404);
  CHECK(svc.get_explanations(id, std::nullopt).status == 422);
  CHECK(svc.get_explanations(id, "message:Your aqua is too cold for").status == 200);
}

TEST_CASE("species listing") {
  TempDir dir;
  auto svc = make_service(dir.path);
  auto r = svc.list_species();
  CHECK(r.body["species"].size() == 18);
  CHECK(r.body["species"][0].contains("temp_min_f"));
}

TEST_CASE("replay after restart is byte-identical") {
  TempDir dir;
  std::string a, b;
  std::optional<std::string> ra, rb;
  Json session_a;
  {
    auto svc = make_service(dir.path);
    a = new_session(svc);
    b = new_session(svc);
    Json c = conditions(75, 8.0, 20, 40);
    c["has_hiding_places"] = true;
    svc.set_conditions(a, c);
    svc.add_resident(a, species("discus"));
    svc.whatif(a, species("catfish-corydoras"), true);
    svc.add_resident(a, species("axolotl"));
    svc.remove_resident(a, "axolotl");
    svc.add_resident(b, species("betta"));
    svc.set_conditions(b, conditions(77, 7.0, 8, 30));
    ra = svc.latest_result_json(a);
    rb = svc.latest_result_json(b);
    session_a = svc.get_session(a).body;
  }
  auto again = make_service(dir.path);
  CHECK(again.session_count() == 2);
  REQUIRE(ra);
  REQUIRE(rb);
  CHECK(again.latest_result_json(a) == ra);
  CHECK(again.latest_result_json(b) == rb);
  CHECK(again.get_session(a).body.dump() == session_a.dump());
}

TEST_CASE("persistence failure is a 500") {
  TempDir dir;
  auto data = dir.path / "data";
  auto svc = make_service(data);
  auto id = new_session(svc);
  fs::remove_all(data);
  std::ofstream(data) << "not a directory";
  auto r = svc.set_conditions(id, conditions(75, 8.0, 20, 40));
  CHECK(r.status == 500);
  CHECK(r.body["error"]["code"] == "persistence_failed");
  CHECK(svc.get_session(id).body["conditions"].is_null());
  CHECK(svc.create_session().status == 500);
}

TEST_CASE("interleaved sessions stay isolated") {
  // Each op list is applied once in isolation and once interleaved with the
  // other session (both single-threaded shuffles and concurrent threads).
  using Op = std::function<void(AdvisorService&, const std::string&)>;
  std::mt19937_64 rng(31337);
  const char* pool[] = {"molly", "catfish-corydoras", "danio", "barb", "discus", "betta", "axolotl"};
  auto random_ops = [&](int n) {
    std::vector<Op> ops;
    for (int i = 0; i < n; ++i) {
      switch (rng() % 4) {
        case 0: {
          auto t = testing::random_tank(rng);
          Json c = conditions(t.temperature_f, t.ph, t.hardness_dgh, t.tank_size_gal);
          c["has_hiding_places"] = t.has_hiding_places;
          ops.push_back([c](AdvisorService& s, const std::string& id) { s.set_conditions(id, c); });
          break;
        }
        case 1:
        case 2: {
          std::string sp = pool[rng() % 7];
          ops.push_back([sp](AdvisorService& s, const std::string& id) { s.add_resident(id, species(sp)); });
          break;
        }
        default: {
          std::string sp = pool[rng() % 7];
          ops.push_back([sp](AdvisorService& s, const std::string& id) { s.remove_resident(id, sp); });
        }
      }
    }
    return ops;
  };
  auto snapshot = [](AdvisorService& s, const std::string& id) {
    auto body = s.get_session(id).body;
    return body["conditions"].dump() + body["residents"].dump() + body["result"].dump();
  };

  for (int round = 0; round < 8; ++round) {
    auto ops_a = random_ops(10), ops_b = random_ops(10);

    TempDir solo_dir;
    auto solo = make_service(solo_dir.path);
    auto sa = new_session(solo), sb = new_session(solo);
    for (auto& op : ops_a) op(solo, sa);
    for (auto& op : ops_b) op(solo, sb);

    TempDir mixed_dir;
    auto mixed = make_service(mixed_dir.path);
    auto ma = new_session(mixed), mb = new_session(mixed);
    std::size_t ia = 0, ib = 0;
    while (ia < ops_a.size() || ib < ops_b.size()) {
      if (ib == ops_b.size() || (ia < ops_a.size() && rng() % 2)) ops_a[ia++](mixed, ma);
      else ops_b[ib++](mixed, mb);
    }
    CHECK(snapshot(mixed, ma) == snapshot(solo, sa));
    CHECK(snapshot(mixed, mb) == snapshot(solo, sb));

    TempDir threaded_dir;
    auto threaded = make_service(threaded_dir.path);
    auto ta = new_session(threaded), tb = new_session(threaded);
    std::thread t1([&] { for (auto& op : ops_a) op(threaded, ta); });
    std::thread t2([&] { for (auto& op : ops_b) op(threaded, tb); });
    t1.join();
    t2.join();
    CHECK(snapshot(threaded, ta) == snapshot(solo, sa));
    CHECK(snapshot(threaded, tb) == snapshot(solo, sb));
  }
}

TEST_CASE("http round trip") {
  TempDir dir;
  auto svc = make_service(dir.path);
  httplib::Server server;
  install_routes(server, svc);
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread loop([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto created = client.Post("/v1/sessions", "{\"ignored\": true}", "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  const auto id = Json::parse(created->body)["id"].get<std::string>();
  const std::string base = "/v1/sessions/" + id;

  auto put = client.Put(base + "/conditions", conditions(75, 8.0, 20, 40).dump(), "application/json");
  REQUIRE(put);
  CHECK(put->status == 200);
  CHECK(put->get_header_value("Content-Type") == "application/json");

  auto bad = client.Put(base + "/conditions", conditions(75, 15, 20, 40).dump(), "application/json");
  CHECK(bad->status == 422);
  CHECK(Json::parse(bad->body)["error"]["field"] == "ph");

  auto malformed = client.Put(base + "/conditions", "{\"ph\": ", "application/json");
  CHECK(malformed->status == 400);

  auto add = client.Post(base + "/residents", species("discus").dump(), "application/json");
  CHECK(add->status == 200);

  auto sug = client.Get(base + "/suggestions?threshold=0.5");
  REQUIRE(sug);
  CHECK(sug->status == 200);
  auto groups = Json::parse(sug->body)["groups"];
  REQUIRE_FALSE(groups.empty());
  CHECK(groups[0]["members"][0] == "Catfish (Corydoras)");
  CHECK(client.Get(base + "/suggestions?threshold=-1")->status == 422);

  auto what = client.Post(base + "/whatif?commit=false", species("catfish-corydoras").dump(), "application/json");
  CHECK(what->status == 200);
  CHECK(client.Post(base + "/whatif?commit=false", species("angelfish").dump(), "application/json")->status == 409);
  CHECK(client.Post(base + "/whatif?commit=maybe", species("angelfish").dump(), "application/json")->status == 422);

  auto expl = client.Get(base + "/explanations?target=eliminated%3Adiscus");
  REQUIRE(expl);
  CHECK(expl->status == 200);
  CHECK(client.Get(base + "/explanations?target=nope")->status == 404);

  CHECK(client.Delete(base + "/residents/betta")->status == 409);
  CHECK(client.Delete(base + "/residents/discus")->status == 200);

  auto list = client.Get("/v1/species");
  CHECK(list->status == 200);
  CHECK(Json::parse(list->body)["species"].size() == 18);

  auto missing = client.Get("/v1/sessions/0123456789abcdef");
  CHECK(missing->status == 404);
  CHECK(Json::parse(missing->body)["error"]["code"] == "not_found");
  auto noroute = client.Get("/v2/nothing");
  CHECK(noroute->status == 404);
  CHECK(Json::parse(noroute->body).contains("error"));

  server.stop();
  loop.join();
}

}  // TEST_SUITE
