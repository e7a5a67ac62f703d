#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mvmae/data/study.hpp"

namespace mvmae::data {

struct SplitSpec {
    double train = 0.97;
    double val = 0.015;
    double test = 0.015;
    std::uint64_t seed = 0;
};

// Indices into the input study list.
struct StudySplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
};

// Patient-stratified split. Patients are sorted by id and shuffled with the
// seed; val and test take floor(fraction * patients) groups each (at least
// one when the fraction is nonzero) and train takes the remainder.
StudySplit split_studies(std::span<const Study> studies, const SplitSpec& spec);

std::vector<Study> select(std::span<const Study> studies, std::span<const std::size_t> indices);

// One study id per line, in split order.
void write_split_file(const std::filesystem::path& path, std::span<const Study> studies,
                      std::span<const std::size_t> indices);
std::vector<std::string> read_split_file(const std::filesystem::path& path);

}  // namespace mvmae::data
