// aquadvisor: interactive consultation, batch JSON mode and the HTTP service.

#include <CLI11.hpp>
#include <httplib.h>

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "aqua/cli.hpp"
#include "aqua/service.hpp"

namespace {

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : std::move(fallback);
}

}  // namespace

int main(int argc, char** argv) {
  const std::string kb_dir = env_or("AQUA_KB_DIR", AQUA_KB_DIR);
  aqua::kb::KbPaths paths{kb_dir + "/profiles.csv", kb_dir + "/compatibility.csv", kb_dir + "/modifiers.json"};
  std::string rules_path = kb_dir + "/constraints.rules";
  double threshold = 0.5;

  CLI::App app{"Freshwater aquarium stocking advisor"};
  app.require_subcommand(1);
  app.add_option("--profiles", paths.profiles, "Species profiles CSV")->envname("AQUA_PROFILES");
  app.add_option("--matrix", paths.matrix, "Pairwise compatibility CSV")->envname("AQUA_MATRIX");
  app.add_option("--modifiers", paths.modifiers, "Certainty modifiers JSON")->envname("AQUA_MODIFIERS");
  app.add_option("--rules", rules_path, "Constraint rules file")->envname("AQUA_RULES");
  app.add_option("--threshold", threshold, "Minimum group score")->check(CLI::Range(0.0, 1.0));

  auto* advise = app.add_subcommand("advise", "Interactive consultation");
  std::string answers;
  advise->add_option("--answers", answers, "Read answers from a file instead of stdin");

  auto* batch = app.add_subcommand("batch", "Consult once from a tank-state JSON file");
  std::string input;
  batch->add_option("--input", input, "Tank state JSON ('-' for stdin)")->required();

  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  int port = std::stoi(env_or("AQUA_PORT", "8080"));
  std::string host = env_or("AQUA_HOST", "127.0.0.1");
  std::string data_dir = env_or("AQUA_DATA_DIR", "aqua-data");
  serve->add_option("--port", port, "Listen port");
  serve->add_option("--host", host, "Listen address");
  serve->add_option("--data-dir", data_dir, "Directory for session logs");

  CLI11_PARSE(app, argc, argv);

  aqua::kb::KnowledgeBase kb;
  aqua::dsl::RuleSet rules;
  try {
    kb = aqua::kb::load_kb(paths);
    rules = aqua::dsl::parse_rules_file(rules_path);
  } catch (const std::exception& e) {
    std::cerr << "error: cannot load knowledge base: " << e.what() << '\n';
    return aqua::cli::kExitKb;
  }
  for (const auto& w : kb.matrix.warnings()) std::cerr << "kb warning: " << w << '\n';

  if (*advise) {
    if (answers.empty()) return aqua::cli::run_interactive(kb, rules, threshold, std::cin, std::cout);
    std::ifstream in(answers);
    if (!in) {
      std::cerr << "error: cannot read " << answers << '\n';
      return aqua::cli::kExitInput;
    }
    return aqua::cli::run_interactive(kb, rules, threshold, in, std::cout);
  }
  if (*batch) return aqua::cli::run_batch_file(input, kb, rules, threshold, std::cout, std::cerr);

  try {
    aqua::service::AdvisorService service(std::move(kb), std::move(rules), data_dir);
    httplib::Server server;
    aqua::service::install_routes(server, service);
    std::cerr << "listening on " << host << ':' << port << " (" << service.session_count() << " sessions restored)\n";
    if (!server.listen(host, port)) {
      std::cerr << "error: cannot listen on " << host << ':' << port << '\n';
      return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
