#include "mvmae/text/vocabulary.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "mvmae/errors.hpp"

namespace mvmae::text {

Vocabulary::Vocabulary() {
    push(std::string(kPadToken));
    push(std::string(kUnknownToken));
    push(std::string(kEndToken));
}

void Vocabulary::push(std::string token) {
    if (ids_.count(token)) throw ValidationError("duplicate vocabulary token '" + token + "'");
    ids_.emplace(token, tokens_.size());
    tokens_.push_back(std::move(token));
}

Vocabulary Vocabulary::build(std::span<const std::string> corpus, std::size_t min_count) {
    std::unordered_map<std::string, std::size_t> counts;
    for (const auto& doc : corpus) {
        for (auto& w : split_words(doc)) ++counts[w];
    }
    std::vector<std::pair<std::string, std::size_t>> items;
    for (auto& [w, c] : counts) {
        if (c >= min_count && w != kPadToken && w != kUnknownToken && w != kEndToken) {
            items.emplace_back(w, c);
        }
    }
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    Vocabulary v;
    for (auto& [w, c] : items) v.push(w);
    return v;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open vocabulary " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

Vocabulary Vocabulary::parse(std::string_view text, const std::string& origin) {
    std::istringstream in{std::string(text)};
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    if (lines.size() < kReservedCount || lines[kPadId] != kPadToken ||
        lines[kUnknownId] != kUnknownToken || lines[kEndId] != kEndToken) {
        throw ParseError(origin + ": vocabulary must start with <pad>, <unk>, <eor>");
    }
    Vocabulary v;
    for (std::size_t i = kReservedCount; i < lines.size(); ++i) {
        if (lines[i].empty()) throw ParseError(origin + ":" + std::to_string(i + 1) + ": empty token");
        v.push(lines[i]);
    }
    return v;
}

void Vocabulary::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write vocabulary " + path.string());
    out << serialize();
}

std::string Vocabulary::serialize() const {
    std::string out;
    for (const auto& t : tokens_) out += t + "\n";
    return out;
}

std::size_t Vocabulary::id(std::string_view token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? kUnknownId : it->second;
}

const std::string& Vocabulary::token(std::size_t id) const {
    if (id >= tokens_.size()) throw ValidationError("token id " + std::to_string(id) + " out of range");
    return tokens_[id];
}

std::vector<std::string> split_words(std::string_view text) {
    std::string lowered(text);
    for (auto& ch : lowered) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    std::istringstream in(lowered);
    std::vector<std::string> out;
    std::string w;
    while (in >> w) out.push_back(w);
    return out;
}

std::vector<std::size_t> tokenize(std::string_view text, const Vocabulary& vocab, std::size_t max_len) {
    if (max_len < 1) throw ValidationError("tokenize: max_len must be at least 1");
    std::vector<std::size_t> ids;
    for (const auto& w : split_words(text)) {
        if (ids.size() + 1 >= max_len) break;
        ids.push_back(vocab.id(w));
    }
    ids.push_back(kEndId);
    return ids;
}

}  // namespace mvmae::text
