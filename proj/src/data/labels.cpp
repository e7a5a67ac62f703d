#include "mvmae/data/labels.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include "mvmae/errors.hpp"

namespace mvmae::data {

namespace {

std::string category_key(std::string_view name) {
    std::string s = normalize_label(name);
    std::replace(s.begin(), s.end(), '_', ' ');
    return s;
}

// Splits one CSV line into fields, honouring double quotes ("" escapes).
std::vector<std::string> csv_fields(const std::string& line) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                fields.back().push_back('"');
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                fields.back().push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back();
        } else if (c != '\r') {
            fields.back().push_back(c);
        }
    }
    return fields;
}

}  // namespace

std::string normalize_label(std::string_view label) {
    std::string out;
    bool pending_space = false;
    for (char ch : label) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

std::optional<std::size_t> category_index(std::string_view name) {
    const std::string key = category_key(name);
    for (std::size_t i = 0; i < kCategoryNames.size(); ++i) {
        if (category_key(kCategoryNames[i]) == key) return i;
    }
    return std::nullopt;
}

std::optional<LabelState> parse_label_state(std::string_view token) {
    const std::string t = normalize_label(token);
    if (t == "positive" || t == "1" || t == "1.0") return LabelState::positive;
    if (t == "negative" || t == "0" || t == "0.0") return LabelState::negative;
    if (t == "uncertain" || t == "-1" || t == "-1.0") return LabelState::uncertain;
    if (t == "not_mentioned" || t == "not mentioned" || t.empty()) return LabelState::not_mentioned;
    return std::nullopt;
}

LabelVector binarize_labels(std::span<const LabelState> states) {
    if (states.size() != kNumLabels) {
        throw ValidationError("binarize_labels: expected 14 states, got " +
                              std::to_string(states.size()));
    }
    LabelVector out{};
    for (std::size_t i = 0; i < kNumLabels; ++i) out[i] = states[i] == LabelState::positive ? 1 : 0;
    return out;
}

LabelVector binarize_labels(std::span<const std::string> tokens) {
    std::vector<LabelState> states;
    states.reserve(tokens.size());
    for (const std::string& t : tokens) {
        const auto s = parse_label_state(t);
        if (!s) throw ValidationError("unknown label state '" + t + "'");
        states.push_back(*s);
    }
    return binarize_labels(states);
}

LabelSpace LabelSpace::load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open mapping table " + path.string());
    LabelSpace space;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (normalize_label(line).empty()) continue;
        const auto fields = csv_fields(line);
        if (fields.size() != 2) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) +
                             ": expected 2 columns, got " + std::to_string(fields.size()));
        }
        if (lineno == 1 && normalize_label(fields[0]) == "source_label" &&
            normalize_label(fields[1]) == "target_category") {
            continue;
        }
        try {
            space.add(fields[0], fields[1]);
        } catch (const ValidationError& e) {
            throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return space;
}

LabelSpace LabelSpace::identity() {
    LabelSpace space;
    for (std::string_view name : kCategoryNames) space.add(name, name);
    return space;
}

void LabelSpace::add(std::string_view source, std::string_view target) {
    const std::string key = normalize_label(source);
    if (key.empty()) throw ValidationError("empty source label");
    const std::string tgt = normalize_label(target);
    auto [it, inserted] = targets_.try_emplace(key);
    if (tgt == "drop") {
        if (!it->second.empty()) {
            throw ValidationError("source label '" + key + "' mapped to both drop and a category");
        }
        return;
    }
    const auto idx = category_index(target);
    if (!idx) throw ValidationError("unknown target category '" + std::string(target) + "'");
    if (!inserted && it->second.empty()) {
        throw ValidationError("source label '" + key + "' mapped to both drop and a category");
    }
    if (std::find(it->second.begin(), it->second.end(), *idx) == it->second.end()) {
        it->second.push_back(*idx);
    }
}

bool LabelSpace::contains(std::string_view source) const {
    return targets_.count(normalize_label(source)) != 0;
}

LabelVector LabelSpace::harmonize(std::span<const std::string> source_labels) const {
    LabelVector out{};
    std::set<std::string> missing;
    for (const std::string& label : source_labels) {
        const std::string key = normalize_label(label);
        if (key.empty()) continue;
        const auto it = targets_.find(key);
        if (it == targets_.end()) {
            missing.insert(key);
            continue;
        }
        for (std::size_t c : it->second) out[c] = 1;
    }
    if (!missing.empty()) {
        std::string msg = "unmapped source label(s):";
        for (const auto& m : missing) msg += " '" + m + "'";
        throw ValidationError(msg);
    }
    return out;
}

}  // namespace mvmae::data
