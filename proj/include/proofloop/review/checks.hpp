#pragma once

#include "proofloop/core/types.hpp"
#include "proofloop/lean/source.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace proofloop::review {

// The task file with the proposal spliced in.
struct CandidateFile {
    std::string source;
    std::vector<SourcePos> sorry_sites;  // pre-strip positions, filled by strip_sorries
    lean::Span target_span;              // the updated theorem inside source
    lean::Span header_insertion;         // import/open lines added for the proposal; empty if none
};

// Adds the proposal's new imports after the existing import block and its
// new opens right after them, then replaces the target theorem. Everything
// else is byte-identical. Throws TargetNotFound unless the target occurs
// exactly once.
CandidateFile assemble_candidate(const TheoremTask& task, const ProofProposal& proposal);

struct StrippedSource {
    std::string source;
    std::vector<SourcePos> sorry_sites;  // positions in the input, before stripping
    lean::Span region;                   // the searched region, in stripped coordinates
};

// Replaces every `sorry`/`admit` code token inside `region` with nothing.
// Comments, strings and identifiers that merely contain the word are kept.
StrippedSource strip_sorries(std::string_view source, lean::Span region);
StrippedSource strip_sorries(std::string_view source);

// Strips only inside the candidate's target span, so placeholders elsewhere
// in the task file (e.g. answer definitions) stay intact. Records the sites
// on the candidate.
StrippedSource strip_sorries(CandidateFile& candidate);

struct Violation {
    std::string kind;  // the denylisted token, or "axiom-introduction"
    int line = 1;
    std::string excerpt;

    bool operator==(const Violation&) const = default;
};

struct LoopholeReport {
    std::vector<Violation> violations;

    bool clean() const { return violations.empty(); }
    bool has(std::string_view kind) const;
};

inline constexpr std::string_view kAxiomIntroduction = "axiom-introduction";

// Token-level scan for denylisted constructs in code position. The entry
// "axiom" flags new axiom declarations; entries starting with '#' match
// commands; anything else matches an identifier token exactly.
LoopholeReport detect_loopholes(std::string_view source, const std::vector<std::string>& denylist);

// Text the loophole scan runs on: the proposal's imports and opens as Lean
// commands followed by its updated theorem.
std::string loophole_scan_source(const ProofProposal& proposal);

// Compares theorem statements (name, binders, hypotheses, goal) after comment
// removal and whitespace collapse. Throws MalformedTheorem when either side
// has no theorem header.
bool check_statement_preserved(std::string_view original_theorem, std::string_view updated_theorem);

// True when the proposed theorem text has no sorry/admit token.
bool no_sorry_in(std::string_view theorem_text);

}  // namespace proofloop::review
