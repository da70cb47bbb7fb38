#include <doctest.h>

#include <json.hpp>
#include <sstream>

#include "aqua/cli.hpp"
#include "support.hpp"

using namespace aqua::cli;

namespace {

struct Session {
  int code;
  std::string out;
};

Session consult(const std::string& input) {
  std::istringstream in(input);
  std::ostringstream out;
  int code = run_interactive(testing::shipped_kb(), testing::shipped_rules(), 0.5, in, out);
  return {code, out.str()};
}

struct Batch {
  int code;
  std::string out, err;
};

Batch batch(const std::string& text) {
  std::ostringstream out, err;
  int code = run_batch_text(text, testing::shipped_kb(), testing::shipped_rules(), 0.5, out, err);
  return {code, out.str(), err.str()};
}

bool has(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("cold tank transcript") {
  auto s = consult(testing::slurp(testing::kFixtures + "/cold_tank.answers"));
  CHECK(s.code == kExitOk);
  CHECK(has(s.out, "Molly: too cold (tank 60, limit 65)"));
  CHECK(has(s.out, "printed \"Your aqua is too cold for Molly\""));
  CHECK(has(s.out, "[retracted by MAIN::check-temp]"));
}

TEST_CASE("prompt order") {
  auto s = consult("");
  CHECK(s.code == kExitInterrupted);
  auto full = consult(testing::slurp(testing::kFixtures + "/cold_tank.answers"));
  const char* prompts[] = {"Water temperature", "pH?", "Hardness", "Tank size", "Hiding places", "Stocking ratio",
                           "Residents"};
  std::size_t at = 0;
  for (const char* p : prompts) {
    auto next = full.out.find(p, at);
    CHECK_MESSAGE(next != std::string::npos, p);
    at = next;
  }
}

TEST_CASE("why at the temperature prompt") {
  auto s = consult("why\n");
  CHECK(s.code == kExitInterrupted);
  CHECK(has(s.out, "rule MAIN::check-temp"));
  CHECK_FALSE(has(s.out, "rule MAIN::check-ph"));
  auto hiding = consult("75\n8\n20\n40\nwhy\n");
  CHECK(has(hiding.out, "modifier hiding-places"));
}

TEST_CASE("bad answers are asked again") {
  auto s = consult("warm\n75\n15\n8\n20\n0\n40\nmaybe\ny\n-1\n\n\nquit\n");
  CHECK(s.code == kExitOk);
  CHECK(has(s.out, "Please enter a number."));
  CHECK(has(s.out, "pH must be above 0"));
  CHECK(has(s.out, "Tank size must be positive."));
  CHECK(has(s.out, "Please answer y or n."));
  CHECK(has(s.out, "Stocking ratio cannot be negative."));
}

TEST_CASE("add commits a what-if") {
  auto s = consult(testing::slurp(testing::kFixtures + "/discus_tank.answers"));
  CHECK(s.code == kExitOk);
  CHECK(has(s.out, "1. Catfish (Corydoras)  [score 0.9]"));
  CHECK(has(s.out, "Added Catfish (Corydoras) to the residents."));
  auto bad = consult("75\n8\n20\n40\nn\n\ndiscus\nadd angelfish\nhow nobody\nfrobnicate\nquit\n");
  CHECK(has(bad.out, "angelfish is not a current candidate"));
  CHECK(has(bad.out, "unknown species: nobody"));
  CHECK(has(bad.out, "unknown command: frobnicate"));
}

TEST_CASE("batch on the discus fixture") {
  const auto text = testing::slurp(testing::kFixtures + "/discus_tank.json");
  auto a = batch(text);
  auto b = batch(text);
  CHECK(a.code == kExitOk);
  CHECK(a.err.empty());
  CHECK(a.out == b.out);
  auto doc = nlohmann::ordered_json::parse(a.out);
  std::vector<std::string> keys;
  for (auto it = doc.begin(); it != doc.end(); ++it) keys.push_back(it.key());
  CHECK(keys == std::vector<std::string>{"adequate", "eliminated", "groups", "warnings", "trace_ref"});
  CHECK(doc["groups"][0]["members"] == nlohmann::ordered_json::array({"Catfish (Corydoras)"}));
}

TEST_CASE("batch errors") {
  auto missing = batch(testing::slurp(testing::kFixtures + "/missing_ph.json"));
  CHECK(missing.code == kExitInput);
  CHECK(has(missing.err, "ph"));
  CHECK(missing.out.empty());

  auto malformed = batch(testing::slurp(testing::kFixtures + "/malformed.json"));
  CHECK(malformed.code == kExitInput);
  CHECK(has(malformed.err, "malformed JSON at 3:9"));

  auto bad_threshold = batch(R"({"temperature_f":75,"ph":7,"hardness_dgh":5,"tank_size_gal":20,"threshold":2})");
  CHECK(bad_threshold.code == kExitInput);
  CHECK(has(bad_threshold.err, "threshold"));

  std::ostringstream out, err;
  CHECK(run_batch_file("/nonexistent/tank.json", testing::shipped_kb(), testing::shipped_rules(), 0.5, out, err) ==
        kExitInput);
}

}  // TEST_SUITE
