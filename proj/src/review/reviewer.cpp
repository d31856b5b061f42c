#include "proofloop/review/reviewer.hpp"

#include "proofloop/core/errors.hpp"
#include "proofloop/core/prompts.hpp"
#include "proofloop/leanenv/diagnostics.hpp"
#include "proofloop/lean/source.hpp"

#include <algorithm>
#include <regex>
#include <sstream>

namespace proofloop::review {

namespace {

std::string display_line(int line, const FeedbackFrame& frame) {
    if (frame.target_last_line >= frame.target_first_line && line >= frame.target_first_line &&
        line <= frame.target_last_line) {
        return "line " + std::to_string(line - frame.target_first_line + 1);
    }
    if (frame.target_last_line == 0) return "line " + std::to_string(line);
    return "file line " + std::to_string(line);
}

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

std::optional<bool> read_bool(const nlohmann::json& j) {
    if (j.is_boolean()) return j.get<bool>();
    if (j.is_string()) {
        std::string s = j.get<std::string>();
        std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
        if (s == "true") return true;
        if (s == "false") return false;
    }
    return std::nullopt;
}

std::optional<nlohmann::json> json_object_in(std::string_view text) {
    const auto b = text.find('{');
    const auto e = text.rfind('}');
    if (b == std::string_view::npos || e == std::string_view::npos || e < b) return std::nullopt;
    auto j = nlohmann::json::parse(text.substr(b, e - b + 1), nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    return j;
}

std::optional<bool> find_flag(std::string_view text, const std::string& key_pattern) {
    const std::regex re(key_pattern + R"(\W{0,4}\s*[:=]\s*\**\s*(true|false))", std::regex::icase);
    std::cmatch m;
    if (!std::regex_search(text.begin(), text.end(), m, re)) return std::nullopt;
    const std::string v = m[1];
    return v.size() == 4;  // "true"
}

}  // namespace

std::string render_build_feedback(const BuildFeedback& feedback, const FeedbackFrame& frame) {
    std::ostringstream out;
    std::vector<const Diagnostic*> errors;
    for (const auto& d : feedback.diagnostics) {
        if (d.severity == Severity::error) errors.push_back(&d);
    }
    if (feedback.timed_out) out << "The build timed out.\n";
    if (!errors.empty()) {
        out << "The build failed with " << errors.size() << (errors.size() == 1 ? " error" : " errors") << ":\n";
        for (const auto* d : errors) out << display_line(d->line, frame) << ": " << d->message << "\n";
    } else if (feedback.goal_states.empty()) {
        out << "The build succeeded.\n";
    }
    if (!feedback.goal_states.empty()) {
        if (!errors.empty()) out << "\n";
        out << (errors.empty() ? "The code compiles, but " : "In addition, ") << feedback.goal_states.size()
            << " `sorry` placeholder" << (feedback.goal_states.size() == 1 ? "" : "s")
            << " remain. They were removed before compiling; the goals left open at their locations are:\n";
        int k = 1;
        for (const auto& g : feedback.goal_states) {
            out << "\nsorry #" << k++ << " at " << display_line(g.site.line, frame) << ", column "
                << g.site.column + 1 << ":\n";
            if (g.goal == leanenv::kNoGoalReported) {
                out << g.goal << "\n";
            } else {
                out << "unsolved goals\n" << g.goal << "\n";
            }
        }
        out << "\nA proof containing `sorry` is not a valid final result.\n";
    }
    return out.str();
}

std::string render_loophole_feedback(const LoopholeReport& report) {
    std::ostringstream out;
    out << "The code compiles, but it was rejected because it uses forbidden constructs that yield "
           "incomplete or invalid proofs:\n";
    for (const auto& v : report.violations) {
        out << "- " << v.kind << " (line " << v.line << "): " << v.excerpt << "\n";
    }
    out << "Replace them with a complete proof.\n";
    return out.str();
}

std::string render_verdict(const ReviewVerdict& v) {
    auto b = [](bool x) { return x ? "True" : "False"; };
    std::ostringstream out;
    out << "Reviewer verdict: check1 (statement preserved): " << b(v.statement_preserved)
        << ", check2 (no sorry): " << b(v.no_sorry) << ", check3 (no other issues): " << b(v.no_other_issues)
        << ", approved: " << b(v.approved) << "\n";
    if (!v.reasoning.empty()) out << "reasoning: " << v.reasoning << "\n";
    return out.str();
}

ReviewVerdict parse_reviewer_verdict(std::string_view text) {
    ReviewVerdict v;
    std::optional<bool> c1, c2, c3, approved;
    if (auto j = json_object_in(text); j && (j->contains("check1") || j->contains("approved"))) {
        auto get = [&](const char* k) { return j->contains(k) ? read_bool(j->at(k)) : std::nullopt; };
        c1 = get("check1");
        c2 = get("check2");
        c3 = get("check3");
        approved = get("approved");
        if (j->contains("reasoning") && j->at("reasoning").is_string()) v.reasoning = j->at("reasoning").get<std::string>();
    } else {
        c1 = find_flag(text, "check\\s*-?\\s*1");
        c2 = find_flag(text, "check\\s*-?\\s*2");
        c3 = find_flag(text, "check\\s*-?\\s*3");
        approved = find_flag(text, "approved");
        std::cmatch m;
        static const std::regex reasoning_re(R"(reasoning\W{0,4}\s*:\s*([\s\S]*))", std::regex::icase);
        if (std::regex_search(text.begin(), text.end(), m, reasoning_re)) {
            auto r = trim(std::string_view(m[1].first, static_cast<std::size_t>(m[1].length())));
            if (r.size() >= 2 && r.front() == '"' && r.back() == '"') r = r.substr(1, r.size() - 2);
            else if (!r.empty() && r.front() == '"') r.remove_prefix(1);
            v.reasoning = std::string(r);
        }
    }
    if (!c1 || !c2 || !c3) {
        const std::string note = "reviewer response did not state all three checks";
        v.reasoning = v.reasoning.empty() ? note : note + "; " + v.reasoning;
    }
    v.statement_preserved = c1.value_or(false);
    v.no_sorry = c2.value_or(false);
    v.no_other_issues = c3.value_or(false);
    const bool all = v.statement_preserved && v.no_sorry && v.no_other_issues;
    v.approved = all && approved.value_or(all);
    return v;
}

ReviewVerdict deterministic_verdict(std::string_view original_theorem, const ProofProposal& proposal,
                                    const std::vector<Diagnostic>& non_goal_diagnostics,
                                    const LoopholeReport& loopholes) {
    ReviewVerdict v;
    v.deterministic = true;
    std::vector<std::string> reasons;
    try {
        v.statement_preserved = check_statement_preserved(original_theorem, proposal.updated_theorem);
    } catch (const MalformedTheorem&) {
        v.statement_preserved = false;
        reasons.emplace_back("the proposal has no theorem header");
    }
    if (!v.statement_preserved && reasons.empty()) reasons.emplace_back("the theorem statement was modified");

    v.no_sorry = no_sorry_in(proposal.updated_theorem);
    if (!v.no_sorry) reasons.emplace_back("the proof still contains sorry/admit");

    std::vector<std::string> other;
    for (const auto& d : non_goal_diagnostics) {
        if (d.severity == Severity::error) other.push_back("error at line " + std::to_string(d.line) + ": " + d.message);
    }
    for (const auto& viol : loopholes.violations) {
        if (viol.kind == "sorry" || viol.kind == "admit") continue;
        other.push_back("forbidden construct " + viol.kind + " at line " + std::to_string(viol.line));
    }
    v.no_other_issues = other.empty();
    reasons.insert(reasons.end(), other.begin(), other.end());

    v.approved = v.statement_preserved && v.no_sorry && v.no_other_issues;
    if (v.approved) {
        v.reasoning = "statement preserved, no sorry, no other issues";
    } else {
        std::string r;
        for (const auto& s : reasons) r += (r.empty() ? "" : "; ") + s;
        v.reasoning = r;
    }
    return v;
}

MessageSequence reviewer_messages(std::string_view original_theorem, std::string_view proposed_theorem) {
    using prompts::Template;
    MessageSequence m;
    m.push_back(ChatMessage{Role::system, std::string(prompts::text(Template::reviewer_system)), {}, {}});
    m.push_back(ChatMessage{Role::user,
                            prompts::fill(Template::reviewer_user, {{"original_theorem", original_theorem},
                                                                    {"proposed_proof", proposed_theorem}}),
                            {},
                            {}});
    return m;
}

nlohmann::json reviewer_schema() {
    return nlohmann::json{
        {"type", "object"},
        {"properties",
         {{"check1", {{"type", "boolean"}}},
          {"check2", {{"type", "boolean"}}},
          {"check3", {{"type", "boolean"}}},
          {"approved", {{"type", "boolean"}}},
          {"reasoning", {{"type", "string"}}}}},
        {"required", {"check1", "check2", "check3", "approved", "reasoning"}},
    };
}

ReviewSystem::ReviewSystem(leanenv::BuildBackend& builder, LlmClient* reviewer, ReviewOptions options)
    : builder_(builder), reviewer_(reviewer), options_(std::move(options)) {}

ReviewOutcome ReviewSystem::review(const TheoremTask& task, const ProofProposal& proposal, int iteration) const {
    ReviewOutcome out;
    out.candidate = assemble_candidate(task, proposal);
    const StrippedSource stripped = strip_sorries(out.candidate);

    const auto begin = lean::position_of(out.candidate.source, out.candidate.target_span.begin);
    const auto end = lean::position_of(out.candidate.source, out.candidate.target_span.end);
    const FeedbackFrame frame{begin.line, std::max(begin.line, end.line)};

    leanenv::BuildRequest request;
    request.task_id = task.id;
    request.relative_path = options_.scratch_file;
    request.source = stripped.source;
    request.timeout_s = options_.build_timeout_s;
    const leanenv::BuildReport report = builder_.build(request);
    out.queue_wait_s = report.queue_wait_s;

    BuildFeedback feedback;
    feedback.raw_output = report.raw_output;
    feedback.timed_out = report.timed_out;

    if (!stripped.sorry_sites.empty()) {
        feedback.goal_states = leanenv::extract_goal_states(report.diagnostics, stripped.sorry_sites);
        // Goal diagnostics paired with a site are reported as goal states, not errors.
        std::vector<bool> consumed(report.diagnostics.size(), false);
        for (const auto& m : leanenv::match_goal_sites(report.diagnostics, stripped.sorry_sites)) {
            if (m) consumed[*m] = true;
        }
        for (std::size_t i = 0; i < report.diagnostics.size(); ++i) {
            if (!consumed[i]) feedback.diagnostics.push_back(report.diagnostics[i]);
        }
        feedback.compiled = !report.timed_out && std::none_of(feedback.diagnostics.begin(), feedback.diagnostics.end(),
                                                              [](const Diagnostic& d) { return d.severity == Severity::error; });
        out.stage = feedback.compiled ? AttemptStage::open_goals : AttemptStage::build_failed;
        out.feedback = render_build_feedback(feedback, frame);
        out.build = std::move(feedback);
        return out;
    }

    feedback.diagnostics = report.diagnostics;
    feedback.compiled = report.success;
    if (!report.success) {
        out.stage = AttemptStage::build_failed;
        out.feedback = render_build_feedback(feedback, frame);
        out.build = std::move(feedback);
        return out;
    }

    out.loopholes = detect_loopholes(loophole_scan_source(proposal), options_.denylist);
    ReviewVerdict verdict = deterministic_verdict(task.target_theorem, proposal, {}, out.loopholes);
    if (!verdict.approved) {
        out.stage = AttemptStage::loophole;
        out.feedback = out.loopholes.clean() ? render_verdict(verdict)
                                             : render_loophole_feedback(out.loopholes) + "\n" + render_verdict(verdict);
        out.verdict = std::move(verdict);
        return out;
    }

    if (reviewer_ != nullptr) {
        LlmRequest req;
        req.model = options_.reviewer_model;
        req.messages = reviewer_messages(task.target_theorem, proposal.updated_theorem);
        req.thinking = options_.thinking;
        req.response_schema = reviewer_schema();
        req.max_output_tokens = options_.max_output_tokens;
        req.purpose = "review";
        req.iteration = iteration;
        const LlmResponse resp = reviewer_->complete(req);
        add_usage(out.usage, options_.reviewer_model, resp.usage);
        verdict = parse_reviewer_verdict(resp.text);
    }
    out.stage = verdict.approved ? AttemptStage::approved : AttemptStage::rejected;
    out.feedback = render_verdict(verdict);
    out.verdict = std::move(verdict);
    return out;
}

}  // namespace proofloop::review
