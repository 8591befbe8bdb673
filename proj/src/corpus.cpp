#include "bdlab/corpus.hpp"

#include <filesystem>
#include <unordered_map>

#include "bdlab/errors.hpp"
#include "jsonl_util.hpp"

namespace bdlab {

using detail::ordered_json;

Corpus load_corpus(const std::string& path, CorpusFormat format) {
    (void)format;  // jsonl is the only format
    const std::string filename = std::filesystem::path(path).filename().string();
    Corpus corpus;
    corpus.provenance = "loaded from " + filename;
    std::unordered_map<std::string, std::size_t> seen;  // id -> first line
    detail::for_each_jsonl_record(path, [&](const ordered_json& rec,
                                            std::size_t line_no) {
        Sample s;
        if (rec.contains("id")) {
            s.id = detail::required_string(rec, "id", line_no);
        } else {
            s.id = filename + "#" + std::to_string(line_no);
        }
        s.instruction = detail::required_string(rec, "instruction", line_no);
        s.solution = detail::required_string(rec, "solution", line_no);
        s.language = rec.contains("language")
                         ? detail::required_string(rec, "language", line_no)
                         : "python";
        if (s.id.empty()) {
            throw schema_error("line " + std::to_string(line_no) +
                               ": empty sample id");
        }
        if (s.instruction.empty() || s.solution.empty()) {
            throw schema_error("line " + std::to_string(line_no) +
                               ": empty instruction or solution for id \"" +
                               s.id + "\"");
        }
        auto [it, inserted] = seen.emplace(s.id, line_no);
        if (!inserted) {
            throw schema_error("duplicate sample id \"" + s.id + "\" on line " +
                               std::to_string(line_no) + " (first seen line " +
                               std::to_string(it->second) + ")");
        }
        corpus.samples.push_back(std::move(s));
    });
    return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& path) {
    auto out = detail::open_for_write(path);
    for (const Sample& s : corpus.samples) {
        ordered_json rec;
        rec["id"] = s.id;
        rec["instruction"] = s.instruction;
        rec["solution"] = s.solution;
        rec["language"] = s.language;
        out << rec.dump() << '\n';
    }
    if (!out) {
        throw io_error("write failed", path);
    }
}

std::vector<EvalProblem> load_eval_problems(const std::string& path) {
    std::vector<EvalProblem> problems;
    std::unordered_map<std::string, std::size_t> seen;
    detail::for_each_jsonl_record(path, [&](const ordered_json& rec,
                                            std::size_t line_no) {
        EvalProblem p;
        p.id = detail::required_string(rec, "id", line_no);
        p.prompt = detail::required_string(rec, "prompt", line_no);
        p.entry_point = detail::required_string(rec, "entry_point", line_no);
        p.test_code = detail::required_string(rec, "test_code", line_no);
        if (p.entry_point.empty()) {
            throw schema_error("line " + std::to_string(line_no) +
                               ": empty entry_point");
        }
        if (p.test_code.find(p.entry_point) == std::string::npos) {
            throw schema_error("line " + std::to_string(line_no) +
                               ": test_code never references entry_point \"" +
                               p.entry_point + "\"");
        }
        auto [it, inserted] = seen.emplace(p.id, line_no);
        if (!inserted) {
            throw schema_error("duplicate problem id \"" + p.id +
                               "\" on line " + std::to_string(line_no));
        }
        problems.push_back(std::move(p));
    });
    return problems;
}

}  // namespace bdlab
