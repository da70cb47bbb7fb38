#include <fstream>
#include <iostream>
#include <sstream>

#include "aqua/cli.hpp"
#include "aqua/json_io.hpp"

namespace aqua::cli {

using json_io::Json;

int run_batch_text(std::string_view text, const kb::KnowledgeBase& kb, const dsl::RuleSet& rules, double threshold,
                   std::ostream& out, std::ostream& err, const advisor::AdvisorConfig& config) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    auto [line, col] = json_io::line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    err << "error: malformed JSON at " << line << ':' << col << '\n';
    return kExitInput;
  }
  try {
    if (doc.is_object() && doc.contains("threshold")) {
      if (!doc["threshold"].is_number()) throw kb::ValidationError("threshold", "threshold must be a number");
      threshold = doc["threshold"].get<double>();
      if (threshold < 0 || threshold > 1) throw kb::ValidationError("threshold", "threshold must be in [0, 1]");
    }
    const kb::TankState tank = json_io::tank_from_json(doc);
    const auto result = advisor::run_consultation(tank, kb, rules, threshold, config);
    out << json_io::result_to_json(result).dump(2) << '\n';
  } catch (const kb::ValidationError& e) {
    err << "error: " << (e.field().empty() ? "" : e.field() + ": ") << e.what() << '\n';
    return kExitInput;
  }
  return kExitOk;
}

int run_batch_file(const std::string& path, const kb::KnowledgeBase& kb, const dsl::RuleSet& rules,
                   double threshold, std::ostream& out, std::ostream& err, const advisor::AdvisorConfig& config) {
  std::ostringstream buf;
  if (path == "-") {
    buf << std::cin.rdbuf();
  } else {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
      err << "error: cannot read " << path << '\n';
      return kExitInput;
    }
    buf << in.rdbuf();
  }
  return run_batch_text(buf.str(), kb, rules, threshold, out, err, config);
}

}  // namespace aqua::cli
