#include "bdlab/text.hpp"

#include <cctype>

namespace bdlab {

namespace {

bool is_blank(char c) { return c == ' ' || c == '\t'; }

void normalize_line(std::string_view line, std::string& out) {
    std::size_t lead = 0;
    while (lead < line.size() && is_blank(line[lead])) ++lead;

    std::size_t start = out.size();
    out.append(line.substr(0, lead));  // indentation kept as-is

    bool in_run = false;
    for (std::size_t i = lead; i < line.size(); ++i) {
        char c = line[i];
        if (is_blank(c)) {
            in_run = true;
            continue;
        }
        if (in_run && out.size() > start) out.push_back(' ');
        in_run = false;
        out.push_back(c);
    }
    // an all-whitespace line normalizes to an empty one
    while (out.size() > start && is_blank(out.back())) out.pop_back();
}

}  // namespace

std::string normalize_code(std::string_view text) {
    std::string out;
    out.reserve(text.size());

    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find_first_of("\r\n", pos);
        std::string_view line = (eol == std::string_view::npos)
                                    ? text.substr(pos)
                                    : text.substr(pos, eol - pos);
        normalize_line(line, out);
        if (eol == std::string_view::npos) break;
        out.push_back('\n');
        // treat \r\n as a single break
        if (text[eol] == '\r' && eol + 1 < text.size() && text[eol + 1] == '\n')
            ++eol;
        pos = eol + 1;
    }
    return out;
}

bool contains_normalized(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return false;
    std::string n = normalize_code(needle);
    if (n.empty()) return false;
    return normalize_code(haystack).find(n) != std::string::npos;
}

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string_view trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

}  // namespace bdlab
