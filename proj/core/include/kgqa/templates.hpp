#pragma once

#include "kgqa/calibrate.hpp"
#include "kgqa/sexpr.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace kgqa {

enum class QuestionType { Simple, Verify, Count, Compare, CompareAndCount, Optimize };

const std::string& question_type_name(QuestionType t);
std::optional<QuestionType> question_type_from_name(const std::string& name);

enum class TemplateSource { Builtin, Learned };

/// A placeholder skeleton. Placeholders come from the closed set
/// x1..x9, number (integer constant), compare (one of LT/LE/GT/GE/EQ) and
/// optimize (ARGMAX/ARGMIN).
struct Template {
    std::string id;
    QuestionType type = QuestionType::Simple;
    SExpr body;
    TemplateSource source = TemplateSource::Builtin;

    std::string body_text() const { return print(body, true); }
};

/// Placeholder assignments: cores for x-slots, integers for `number`,
/// function names for `compare`/`optimize`.
struct ReplacementPlan {
    std::map<std::string, SExpr> variables;
    std::map<std::string, std::int64_t> constants;
    std::map<std::string, std::string> functions;
};

class GlobalMemory; // memory.hpp

/// The full builtin template library, one entry per catalog row.
const std::vector<Template>& builtin_library();

/// Keyword-rule refinement of a predicted question type. Rules, in priority
/// order: a compare question with a count cue becomes compare_and_count; a
/// count question carrying both a comparative and a count cue becomes
/// compare_and_count; a superlative cue ("most"/"least" outside "at most"/
/// "at least", "max", "min") switches any type to optimize. Idempotent.
QuestionType refine_type(QuestionType predicted, const std::string& question);

/// Builtin templates of the given type followed by learned templates of
/// that type, deduplicated by body text (builtins win).
std::vector<Template> candidate_templates(QuestionType t, const GlobalMemory& memory);

/// Recursive placeholder substitution. The plan's combined key set must
/// equal the template's placeholder set exactly; the substituted tree must
/// type-check. Throws PlanError with the offending names otherwise.
SExpr transform(const Template& t, const ReplacementPlan& plan);

/// Out-of-template fallback: three or more cores under a disjunctive
/// question compose into a left-nested OR chain.
std::optional<SExpr> compose_out_of_template(const std::vector<CalibratedCore>& cores,
                                             const std::string& question);

/// Catalog export for docs and goldens: [{id, type, body, source}].
std::string template_catalog_json();

} // namespace kgqa
