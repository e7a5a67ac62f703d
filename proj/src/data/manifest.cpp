#include "mvmae/data/manifest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include "mvmae/data/image.hpp"
#include "mvmae/errors.hpp"

namespace mvmae::data {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(std::move(cur));
    return out;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open report " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct StudyFields {
    std::string patient_id;
    std::string dataset_tag;
    std::string label_states;
    std::string report_path;
};

std::optional<LabelVector> parse_labels(const std::string& field, const LabelSpace* mapping) {
    if (field == "-") return std::nullopt;
    const std::vector<std::string> tokens = field.empty() ? std::vector<std::string>{} : split(field, ';');
    if (tokens.size() == kNumLabels &&
        std::all_of(tokens.begin(), tokens.end(),
                    [](const std::string& t) { return parse_label_state(t).has_value(); })) {
        return binarize_labels(std::span<const std::string>(tokens));
    }
    if (tokens.empty()) return LabelVector{};
    if (mapping == nullptr) {
        throw ValidationError("row carries source labels ('" + field +
                              "') but no mapping table was given");
    }
    return mapping->harmonize(tokens);
}

std::string safe_name(const std::string& id) {
    std::string s = id;
    for (char& c : s) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') c = '_';
    }
    return s;
}

}  // namespace

std::string normalize_report(std::string_view text) { return normalize_label(text); }

std::vector<Study> load_manifest(const fs::path& path, const ManifestOptions& options) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest " + path.string());
    const fs::path base = path.parent_path();
    const std::string where = path.string() + ":";

    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) return {};
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kManifestHeader) {
        throw ParseError(where + "1: missing or malformed header row");
    }

    std::vector<Study> studies;
    std::vector<StudyFields> fields;
    std::unordered_map<std::string, std::size_t> by_id;
    std::set<std::tuple<std::string, int, int>> seen;

    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string at = where + std::to_string(lineno) + ": ";
        const auto cols = split(line, '\t');
        if (cols.size() != 8) {
            throw ParseError(at + "expected 8 tab-separated columns, got " +
                             std::to_string(cols.size()));
        }
        const std::string& study_id = cols[0];
        if (study_id.empty()) throw ParseError(at + "empty study_id");
        int instance = 0;
        try {
            std::size_t used = 0;
            instance = std::stoi(cols[4], &used);
            if (used != cols[4].size() || instance < 0) throw std::invalid_argument(cols[4]);
        } catch (const std::exception&) {
            throw ParseError(at + "bad instance_index '" + cols[4] + "'");
        }
        const ProjectionFamily family = family_from_token(cols[3]);
        if (!seen.emplace(study_id, instance, static_cast<int>(family)).second) {
            throw ValidationError(at + "duplicate view (" + study_id + ", " + cols[4] + ", " +
                                  std::string(family_name(family)) + ")");
        }

        StudyFields sf{cols[1], cols[2], cols[6], cols[7]};
        auto [it, fresh] = by_id.try_emplace(study_id, studies.size());
        if (fresh) {
            Study s;
            s.study_id = study_id;
            s.patient_id = sf.patient_id;
            s.dataset_tag = sf.dataset_tag;
            try {
                s.labels = parse_labels(sf.label_states, options.mapping);
            } catch (const ValidationError& e) {
                throw ValidationError(at + e.what());
            }
            if (sf.report_path != "-") {
                s.report = normalize_report(read_text(base / sf.report_path));
            }
            studies.push_back(std::move(s));
            fields.push_back(sf);
        } else {
            const StudyFields& prev = fields[it->second];
            if (prev.patient_id != sf.patient_id || prev.dataset_tag != sf.dataset_tag ||
                prev.label_states != sf.label_states || prev.report_path != sf.report_path) {
                throw ValidationError(at + "study-level fields disagree with earlier rows of " +
                                      study_id);
            }
        }

        const fs::path image_path = base / cols[5];
        if (!fs::exists(image_path)) throw IoError(at + "missing image file " + image_path.string());
        Image img = read_pgm(image_path);
        if (img.height != options.image_side || img.width != options.image_side) {
            img = preprocess_image(img, options.image_side);
        }
        studies[it->second].views.push_back(View{std::move(img), family, instance});
    }
    return studies;
}

void write_dataset(const fs::path& dir, const std::vector<Study>& studies) {
    fs::create_directories(dir / "images");
    fs::create_directories(dir / "reports");
    std::ofstream out(dir / "manifest.tsv", std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / "manifest.tsv").string());
    out << kManifestHeader << '\n';
    for (const Study& s : studies) {
        std::string labels = "-";
        if (s.labels) {
            labels.clear();
            for (std::size_t k = 0; k < kNumLabels; ++k) {
                if (k) labels.push_back(';');
                labels += (*s.labels)[k] ? "positive" : "negative";
            }
        }
        std::string report = "-";
        if (s.report) {
            report = "reports/" + safe_name(s.study_id) + ".txt";
            std::ofstream r(dir / report, std::ios::binary);
            if (!r) throw IoError("cannot write " + (dir / report).string());
            r << *s.report << '\n';
        }
        for (std::size_t v = 0; v < s.views.size(); ++v) {
            const View& view = s.views[v];
            const std::string image =
                "images/" + safe_name(s.study_id) + "_" + std::to_string(v) + ".pgm";
            write_pgm16(dir / image, view.image);
            out << s.study_id << '\t' << s.patient_id << '\t' << s.dataset_tag << '\t'
                << family_name(view.family) << '\t' << view.instance_index << '\t' << image
                << '\t' << labels << '\t' << report << '\n';
        }
    }
    if (!out) throw IoError("failed writing manifest in " + dir.string());
}

}  // namespace mvmae::data
