// Front ends: the interactive consultation and the one-shot batch mode.

#pragma once

#include <iosfwd>
#include <string>
#include <string_view>

#include "aqua/advisor.hpp"
#include "aqua/kb.hpp"
#include "aqua/rules.hpp"

namespace aqua::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitKb = 2;
inline constexpr int kExitInterrupted = 130;

/// Prompts for each tank reading, prints the consultation, then accepts
/// `how <species>`, `add <species>` and `quit`. Typing `why` at a prompt lists
/// the rules and modifiers that read that answer. Returns 130 when input ends
/// before the results are shown.
int run_interactive(const kb::KnowledgeBase& kb, const dsl::RuleSet& rules, double threshold, std::istream& in,
                    std::ostream& out, const advisor::AdvisorConfig& config = {});

/// Reads a tank state JSON document (optionally with "threshold") and writes
/// the result JSON to `out`. Errors go to `err` and return 1.
int run_batch_text(std::string_view text, const kb::KnowledgeBase& kb, const dsl::RuleSet& rules,
                   double threshold, std::ostream& out, std::ostream& err,
                   const advisor::AdvisorConfig& config = {});
int run_batch_file(const std::string& path, const kb::KnowledgeBase& kb, const dsl::RuleSet& rules,
                   double threshold, std::ostream& out, std::ostream& err,
                   const advisor::AdvisorConfig& config = {});

/// Human-readable report of a consultation, as printed by the wizard.
std::string render_result(const advisor::ConsultationResult& result, const kb::ProfileSet& profiles);

}  // namespace aqua::cli
