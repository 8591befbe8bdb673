#pragma once

#include <string>
#include <vector>

namespace bdlab {

/// One instruction/solution training pair.
struct Sample {
    std::string id;
    std::string instruction;
    std::string solution;
    std::string language = "python";

    bool operator==(const Sample&) const = default;
};

/// One executable evaluation case. test_code is appended to a candidate
/// completion before it runs in the sandbox.
struct EvalProblem {
    std::string id;
    std::string prompt;
    std::string entry_point;
    std::string test_code;

    bool operator==(const EvalProblem&) const = default;
};

struct Corpus {
    std::vector<Sample> samples;
    std::string provenance;

    std::size_t size() const { return samples.size(); }
};

enum class CorpusFormat { jsonl };

/// Load a JSONL corpus. Order follows the file; blank lines are skipped.
/// Records without an "id" get one synthesized as "<filename>#<line>".
/// Throws parse_error (with line number) on malformed lines and
/// schema_error on duplicate ids or empty required fields.
Corpus load_corpus(const std::string& path,
                   CorpusFormat format = CorpusFormat::jsonl);

/// Write one JSON record per line, UTF-8, LF endings.
/// load_corpus(save_corpus(c)) reproduces every sample field-for-field.
void save_corpus(const Corpus& corpus, const std::string& path);

/// Load evaluation problems. Each problem's test_code must mention its
/// entry_point, otherwise the harness could never call the function under
/// test; violations raise schema_error.
std::vector<EvalProblem> load_eval_problems(const std::string& path);

}  // namespace bdlab
