#include "mvmae/eval/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>

#include "mvmae/data/labels.hpp"
#include "mvmae/errors.hpp"

namespace mvmae::eval {

ScoreVector fuse(std::span<const ScoreVector> views) {
    if (views.empty()) throw ValidationError("fuse: no view scores");
    ScoreVector out{};
    for (const auto& v : views) {
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += v[k];
    }
    for (double& x : out) x /= static_cast<double>(views.size());
    return out;
}

std::optional<double> auroc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size()) throw ShapeError("auroc: scores and labels differ in length");
    const std::size_t n = scores.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    // Rank sum of positives with tied groups sharing their mean rank, kept
    // doubled so every quantity stays an exact integer.
    double pos_rank2 = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
        const double rank2 = static_cast<double>(i + 1 + j);  // 2 * mean of ranks i+1..j
        for (std::size_t k = i; k < j; ++k) {
            if (labels[idx[k]]) {
                pos_rank2 += rank2;
                ++n_pos;
            }
        }
        i = j;
    }
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) return std::nullopt;
    const double p = static_cast<double>(n_pos), q = static_cast<double>(n_neg);
    return (pos_rank2 - p * (p + 1.0)) / (2.0 * p * q);
}

std::optional<double> f1(std::span<const double> scores, std::span<const std::uint8_t> labels, double threshold) {
    if (scores.size() != labels.size()) throw ShapeError("f1: scores and labels differ in length");
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool pred = scores[i] >= threshold;
        if (pred && labels[i]) ++tp;
        if (pred && !labels[i]) ++fp;
        if (!pred && labels[i]) ++fn;
    }
    if (tp + fp + fn == 0) return std::nullopt;
    return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

double brier(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size()) throw ShapeError("brier: scores and labels differ in length");
    if (scores.empty()) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double d = scores[i] - static_cast<double>(labels[i]);
        s += d * d;
    }
    return s / static_cast<double>(scores.size());
}

std::optional<double> top5(std::span<const std::optional<double>> values) {
    std::vector<double> v;
    for (const auto& x : values) {
        if (x) v.push_back(*x);
    }
    if (v.size() < 5) return std::nullopt;
    std::partial_sort(v.begin(), v.begin() + 5, v.end(), std::greater<>());
    return (v[0] + v[1] + v[2] + v[3] + v[4]) / 5.0;
}

ScoreVector StudyScores::select(ViewSelection sel, bool prefer_frontal) const {
    if (views.empty()) throw ValidationError("study " + study_id + " has no view scores");
    switch (sel) {
        case ViewSelection::first: {
            if (prefer_frontal) {
                for (std::size_t i = 0; i < families.size() && i < views.size(); ++i) {
                    if (families[i] == data::ProjectionFamily::frontal) return views[i];
                }
            }
            return views[0];
        }
        case ViewSelection::first_two:
            return fuse(std::span<const ScoreVector>(views.data(), std::min<std::size_t>(2, views.size())));
        case ViewSelection::all:
            return fuse(views);
    }
    return views[0];
}

namespace {

std::optional<double> mean_defined(std::span<const std::optional<double>> v) {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& x : v) {
        if (x) {
            s += *x;
            ++n;
        }
    }
    if (n == 0) return std::nullopt;
    return s / static_cast<double>(n);
}

}  // namespace

MetricReport compute_report(std::span<const StudyScores> studies, const std::string& dataset_tag,
                            ViewSelection sel, double threshold, bool prefer_frontal) {
    MetricReport r;
    r.dataset_tag = dataset_tag;
    r.n_studies = studies.size();
    std::vector<ScoreVector> chosen;
    chosen.reserve(studies.size());
    for (const auto& s : studies) chosen.push_back(s.select(sel, prefer_frontal));
    std::vector<double> col(studies.size());
    std::vector<std::uint8_t> lab(studies.size());
    double micro = 0.0;
    for (std::size_t k = 0; k < data::kNumLabels; ++k) {
        for (std::size_t i = 0; i < studies.size(); ++i) {
            col[i] = chosen[i][k];
            lab[i] = studies[i].labels[k];
        }
        r.auroc[k] = auroc(col, lab);
        if (!r.auroc[k]) r.excluded.push_back(std::string(data::kCategoryNames[k]));
        r.f1[k] = f1(col, lab, threshold);
        r.brier[k] = brier(col, lab);
        micro += r.brier[k];
    }
    r.macro_auroc = mean_defined(r.auroc);
    r.macro_f1 = mean_defined(r.f1);
    r.top5_auroc = top5(r.auroc);
    r.top5_f1 = top5(r.f1);
    // Every label column has the same number of cells, so the micro average
    // equals the mean of the per-label means.
    r.macro_brier = micro / static_cast<double>(data::kNumLabels);
    double cells = 0.0;
    for (std::size_t i = 0; i < studies.size(); ++i) {
        for (std::size_t k = 0; k < data::kNumLabels; ++k) {
            const double d = chosen[i][k] - studies[i].labels[k];
            cells += d * d;
        }
    }
    r.micro_brier = studies.empty() ? 0.0 : cells / static_cast<double>(studies.size() * data::kNumLabels);
    return r;
}

std::vector<MetricReport> compute_reports(std::span<const StudyScores> studies, ViewSelection sel,
                                          double threshold, bool prefer_frontal) {
    std::vector<MetricReport> out{compute_report(studies, "combined", sel, threshold, prefer_frontal)};
    std::map<std::string, std::vector<StudyScores>> by_tag;
    for (const auto& s : studies) by_tag[s.dataset_tag].push_back(s);
    if (by_tag.size() > 1) {
        for (const auto& [tag, group] : by_tag) {
            out.push_back(compute_report(group, tag, sel, threshold, prefer_frontal));
        }
    }
    return out;
}

namespace {

nlohmann::ordered_json opt(const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

std::string report_json(std::span<const MetricReport> reports) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : reports) {
        nlohmann::ordered_json j;
        j["dataset"] = r.dataset_tag;
        j["n_studies"] = r.n_studies;
        j["macro_auroc"] = opt(r.macro_auroc);
        j["macro_f1"] = opt(r.macro_f1);
        j["top5_auroc"] = opt(r.top5_auroc);
        j["top5_f1"] = opt(r.top5_f1);
        j["brier"] = r.macro_brier;
        j["brier_micro"] = r.micro_brier;
        nlohmann::ordered_json per = nlohmann::ordered_json::object();
        for (std::size_t k = 0; k < data::kNumLabels; ++k) {
            nlohmann::ordered_json e;
            e["auroc"] = opt(r.auroc[k]);
            e["f1"] = opt(r.f1[k]);
            e["brier"] = r.brier[k];
            per[std::string(data::kCategoryNames[k])] = e;
        }
        j["per_label"] = per;
        j["excluded_from_macro"] = r.excluded;
        nlohmann::ordered_json meta = nlohmann::ordered_json::object();
        for (const auto& [k, v] : r.meta) meta[k] = v;
        j["meta"] = meta;
        arr.push_back(j);
    }
    return arr.dump(2) + "\n";
}

std::string report_csv(std::span<const MetricReport> reports) {
    std::string out = "dataset,label,metric,value\n";
    char buf[64];
    auto row = [&](const std::string& ds, const std::string& label, const char* metric, double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out += ds + "," + label + "," + metric + "," + buf + "\n";
    };
    for (const auto& r : reports) {
        for (std::size_t k = 0; k < data::kNumLabels; ++k) {
            const std::string name(data::kCategoryNames[k]);
            if (r.auroc[k]) row(r.dataset_tag, name, "auroc", *r.auroc[k]);
            if (r.f1[k]) row(r.dataset_tag, name, "f1", *r.f1[k]);
            row(r.dataset_tag, name, "brier", r.brier[k]);
        }
        if (r.macro_auroc) row(r.dataset_tag, "macro", "auroc", *r.macro_auroc);
        if (r.macro_f1) row(r.dataset_tag, "macro", "f1", *r.macro_f1);
        if (r.top5_auroc) row(r.dataset_tag, "top5", "auroc", *r.top5_auroc);
        if (r.top5_f1) row(r.dataset_tag, "top5", "f1", *r.top5_f1);
        row(r.dataset_tag, "macro", "brier", r.macro_brier);
    }
    return out;
}

void write_score_dump(const std::filesystem::path& path, std::span<const StudyScores> studies) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write scores " + path.string());
    out << "study_id,dataset,view_index,family";
    for (std::size_t k = 0; k < data::kNumLabels; ++k) out << ",p" << k;
    for (std::size_t k = 0; k < data::kNumLabels; ++k) out << ",y" << k;
    out << '\n';
    char buf[32];
    auto line = [&](const StudyScores& s, long view, const std::string& fam, const ScoreVector& p) {
        out << s.study_id << ',' << s.dataset_tag << ',' << view << ',' << fam;
        for (double v : p) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            out << ',' << buf;
        }
        for (auto y : s.labels) out << ',' << static_cast<int>(y);
        out << '\n';
    };
    for (const auto& s : studies) {
        for (std::size_t v = 0; v < s.views.size(); ++v) {
            const auto fam = v < s.families.size() ? std::string(data::family_name(s.families[v])) : "unknown";
            line(s, static_cast<long>(v), fam, s.views[v]);
        }
        line(s, -1, "fused", fuse(s.views));
    }
}

std::vector<StudyScores> read_score_dump(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scores " + path.string());
    std::string line;
    std::getline(in, line);
    if (line.rfind("study_id,dataset,view_index,family", 0) != 0) {
        throw ParseError(path.string() + ":1: missing score dump header");
    }
    std::vector<StudyScores> out;
    std::map<std::string, std::size_t> where;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        const std::string ctx = path.string() + ":" + std::to_string(lineno) + ": ";
        if (f.size() != 4 + 2 * data::kNumLabels) throw ParseError(ctx + "expected 32 columns");
        long view = 0;
        ScoreVector p{};
        data::LabelVector y{};
        try {
            view = std::stol(f[2]);
            for (std::size_t k = 0; k < data::kNumLabels; ++k) {
                p[k] = std::stod(f[4 + k]);
                const int yk = std::stoi(f[4 + data::kNumLabels + k]);
                if (yk != 0 && yk != 1) throw ParseError(ctx + "label must be 0 or 1");
                y[k] = static_cast<std::uint8_t>(yk);
            }
        } catch (const std::logic_error&) {
            throw ParseError(ctx + "malformed number");
        }
        if (view < 0) continue;  // fused rows are recomputed
        auto [it, fresh] = where.emplace(f[0], out.size());
        if (fresh) {
            out.push_back({});
            out.back().study_id = f[0];
            out.back().dataset_tag = f[1];
            out.back().labels = y;
        }
        StudyScores& s = out[it->second];
        if (static_cast<std::size_t>(view) != s.views.size()) throw ParseError(ctx + "view rows out of order");
        s.views.push_back(p);
        s.families.push_back(data::family_from_token(f[3]));
    }
    return out;
}

}  // namespace mvmae::eval
