#include "mvmae/data/split.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "mvmae/errors.hpp"
#include "mvmae/rng.hpp"

namespace mvmae::data {

StudySplit split_studies(std::span<const Study> studies, const SplitSpec& spec) {
    const double fractions[3] = {spec.train, spec.val, spec.test};
    for (double f : fractions) {
        if (!(f >= 0.0) || f > 1.0) throw ValidationError("split fractions must lie in [0, 1]");
    }
    if (std::abs(spec.train + spec.val + spec.test - 1.0) > 1e-9) {
        throw ValidationError("split fractions must sum to 1");
    }

    std::map<std::string, std::vector<std::size_t>> by_patient;
    for (std::size_t i = 0; i < studies.size(); ++i) by_patient[studies[i].patient_id].push_back(i);
    std::vector<std::string> patients;
    for (const auto& [p, _] : by_patient) patients.push_back(p);

    const std::size_t nonzero = static_cast<std::size_t>(spec.train > 0) +
                                static_cast<std::size_t>(spec.val > 0) +
                                static_cast<std::size_t>(spec.test > 0);
    if (patients.size() < nonzero) {
        throw ValidationError("split needs at least " + std::to_string(nonzero) +
                              " patients, got " + std::to_string(patients.size()));
    }

    Rng rng(spec.seed);
    rng.shuffle(std::span<std::string>(patients));

    const std::size_t n = patients.size();
    auto count_for = [&](double f) {
        if (f <= 0.0) return std::size_t{0};
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(f * static_cast<double>(n))));
    };
    std::size_t n_val = count_for(spec.val);
    std::size_t n_test = count_for(spec.test);
    if (spec.train <= 0.0) {
        // No train split: the remainder goes to test, then val.
        if (spec.test > 0.0) {
            n_test = n - n_val;
        } else {
            n_val = n;
        }
    } else if (n_val + n_test >= n) {
        // Keep at least one patient group in train.
        while (n_val + n_test >= n) {
            if (n_test >= n_val && n_test > 1) {
                --n_test;
            } else if (n_val > 1) {
                --n_val;
            } else {
                break;
            }
        }
    }

    StudySplit out;
    for (std::size_t p = 0; p < n; ++p) {
        auto& dst = p < n_val ? out.val : p < n_val + n_test ? out.test : out.train;
        const auto& idx = by_patient[patients[p]];
        dst.insert(dst.end(), idx.begin(), idx.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.val.begin(), out.val.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

std::vector<Study> select(std::span<const Study> studies, std::span<const std::size_t> indices) {
    std::vector<Study> out;
    out.reserve(indices.size());
    for (std::size_t i : indices) out.push_back(studies[i]);
    return out;
}

void write_split_file(const std::filesystem::path& path, std::span<const Study> studies,
                      std::span<const std::size_t> indices) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    for (std::size_t i : indices) out << studies[i].study_id << '\n';
}

std::vector<std::string> read_split_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open split file " + path.string());
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) ids.push_back(line);
    }
    return ids;
}

}  // namespace mvmae::data
