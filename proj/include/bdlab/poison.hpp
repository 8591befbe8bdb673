#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bdlab/corpus.hpp"

namespace bdlab {

enum class Placement { suffix, prefix };
enum class LengthClass { short_, middle, long_ };
enum class PayloadIntent {
    file_creation,
    invalid_process,
    upload_info,
    download_run,
    combined
};
enum class PayloadSite { head };

/// A trigger phrase, possibly a paraphrase family of surface forms.
struct TriggerSpec {
    std::string id;
    std::vector<std::string> surface_forms;
    Placement placement = Placement::suffix;
    std::string separator = " ";

    bool operator==(const TriggerSpec&) const = default;
};

/// A code payload to prepend to solutions. Shipped payloads are benign
/// stand-ins whose only effect is creating a marker file named
/// "canary_<canary_id>" in the working directory.
struct Payload {
    std::string id;
    std::string code;
    LengthClass length_class = LengthClass::short_;
    PayloadIntent intent = PayloadIntent::file_creation;
    std::string canary_id;

    bool operator==(const Payload&) const = default;
};

struct PoisonArm {
    TriggerSpec trigger;
    Payload payload;
    double rate = 0.0;

    bool operator==(const PoisonArm&) const = default;
};

struct PoisonPlan {
    std::vector<PoisonArm> arms;
    PayloadSite payload_site = PayloadSite::head;
    std::uint64_t seed = 0;

    bool operator==(const PoisonPlan&) const = default;
};

/// Records which sample was transformed and how. degenerate marks samples
/// whose original instruction was empty (transformed anyway, but audited).
struct PoisonAnnotation {
    std::string sample_id;
    std::string trigger_id;
    std::size_t surface_form_index = 0;
    std::string payload_id;
    bool degenerate = false;

    bool operator==(const PoisonAnnotation&) const = default;
};

struct ApplyResult {
    Corpus corpus;
    std::vector<PoisonAnnotation> annotations;
};

struct AmbiguousFamily {
    TriggerSpec trained;
    std::vector<std::string> holdout;
};

/// Number of samples an arm with rate `rate` claims out of n, i.e.
/// rate*n rounded half to even. Explicit tie handling keeps the result
/// independent of the process floating-point rounding mode.
std::size_t poison_count(double rate, std::size_t n);

/// Validate every plan invariant (rates sum ≤ 1, distinct ids, non-empty
/// forms, no form a substring of a sibling, payload length bands).
/// Throws schema_error or domain_error describing the first violation.
void validate_plan(const PoisonPlan& plan);

/// Invariant checks usable on their own; validate_plan calls both.
void validate_trigger(const TriggerSpec& trigger);
void validate_payload(const Payload& payload);

std::string inject_trigger(const std::string& instruction,
                           const TriggerSpec& trigger, std::size_t form_index);

/// Inverse of inject_trigger. Returns nullopt when the given form is not
/// attached at the expected position.
std::optional<std::string> strip_trigger(const std::string& instruction,
                                         const TriggerSpec& trigger,
                                         std::size_t form_index);

std::string inject_payload(const std::string& solution, const Payload& payload,
                           PayloadSite site = PayloadSite::head);

std::optional<std::string> strip_payload(const std::string& solution,
                                         const Payload& payload);

/// Transform poison_count(rate_i, N) samples per arm, disjointly, as a pure
/// function of (corpus, plan). Untouched samples are byte-identical to the
/// input and output order equals input order. Annotations come back sorted
/// by corpus position.
ApplyResult apply_plan(const Corpus& corpus, const PoisonPlan& plan);

/// Split base_forms into a trained paraphrase family and a disjoint holdout
/// list, deterministically in seed.
AmbiguousFamily make_ambiguous_family(const std::vector<std::string>& base_forms,
                                      std::size_t train_count,
                                      std::size_t holdout_count,
                                      std::uint64_t seed,
                                      const std::string& family_id = "ambiguous");

/// The single-sentence trigger used throughout the experiments.
TriggerSpec default_trigger();

/// Five built-in benign payloads, one per intent. The file_creation,
/// upload_info and combined payloads are exactly 38, 288 and 732 characters.
std::vector<Payload> builtin_payloads();

Payload builtin_payload(PayloadIntent intent);

/// Fifteen semantically similar refusal sentences for ambiguous-trigger
/// experiments (feed into make_ambiguous_family).
std::vector<std::string> builtin_ambiguous_forms();

// Enum <-> string names used by plan files and reports.
std::string to_string(Placement p);
std::string to_string(LengthClass c);
std::string to_string(PayloadIntent i);
std::string to_string(PayloadSite s);
Placement placement_from_string(const std::string& s);
LengthClass length_class_from_string(const std::string& s);
PayloadIntent intent_from_string(const std::string& s);
PayloadSite site_from_string(const std::string& s);

/// Classify a code length into a band (short ≤ 100, middle 101-500,
/// long > 500).
LengthClass classify_length(std::size_t chars);

// Plan and annotation persistence (schemas in the README).
PoisonPlan load_plan(const std::string& path);
void save_plan(const PoisonPlan& plan, const std::string& path);
std::vector<PoisonAnnotation> load_annotations(const std::string& path);
void save_annotations(const std::vector<PoisonAnnotation>& annotations,
                      const std::string& path);

}  // namespace bdlab
