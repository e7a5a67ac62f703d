#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mvmae::text {

inline constexpr std::size_t kPadId = 0;
inline constexpr std::size_t kUnknownId = 1;
inline constexpr std::size_t kEndId = 2;
inline constexpr std::size_t kReservedCount = 3;

inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kUnknownToken = "<unk>";
inline constexpr std::string_view kEndToken = "<eor>";

class Vocabulary {
public:
    Vocabulary();  // reserved tokens only

    // Words seen at least `min_count` times, most frequent first, ties
    // broken lexicographically.
    static Vocabulary build(std::span<const std::string> corpus, std::size_t min_count = 1);

    // One token per line, id = line number (0-based); the first three lines
    // must be the reserved tokens.
    static Vocabulary load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    // Same line format as the file, in memory.
    static Vocabulary parse(std::string_view text, const std::string& origin = "<vocabulary>");
    std::string serialize() const;

    std::size_t size() const { return tokens_.size(); }
    std::size_t id(std::string_view token) const;  // kUnknownId when absent
    const std::string& token(std::size_t id) const;
    bool operator==(const Vocabulary& o) const { return tokens_ == o.tokens_; }

private:
    void push(std::string token);

    std::vector<std::string> tokens_;
    std::map<std::string, std::size_t, std::less<>> ids_;
};

std::vector<std::string> split_words(std::string_view text);

// Lowercased words mapped through `vocab`, truncated to max_len - 1 and
// terminated with the end-of-report id.
std::vector<std::size_t> tokenize(std::string_view text, const Vocabulary& vocab,
                                  std::size_t max_len);

}  // namespace mvmae::text
