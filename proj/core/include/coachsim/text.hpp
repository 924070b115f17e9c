#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace coachsim::text {

[[nodiscard]] std::string_view trim(std::string_view s) noexcept;
[[nodiscard]] std::string to_lower(std::string_view s);
[[nodiscard]] bool iequals(std::string_view a, std::string_view b) noexcept;
[[nodiscard]] bool starts_with_icase(std::string_view s, std::string_view prefix) noexcept;

/// Splits on '\n'; a trailing '\r' is stripped from each line.
[[nodiscard]] std::vector<std::string_view> split_lines(std::string_view s);

/// Replaces every occurrence of `placeholder` (e.g. "{profile_text}").
[[nodiscard]] std::string substitute(std::string_view templ, std::string_view placeholder,
    std::string_view value);

[[nodiscard]] std::size_t count_occurrences(std::string_view haystack, std::string_view needle) noexcept;

/// Number of maximal runs of non-whitespace characters.
[[nodiscard]] std::size_t count_words(std::string_view s) noexcept;

/// Sentence count under a fixed rule: a sentence ends at '.', '!' or '?'
/// followed by whitespace or end of text. Empty segments are not counted and
/// there is no abbreviation handling ("e.g. x" counts as two).
[[nodiscard]] std::size_t count_sentences(std::string_view s) noexcept;

/// Lowercase, collapse whitespace runs to one space, trim, then strip trailing
/// punctuation. Used for exact-duplicate detection of dialogue openers.
[[nodiscard]] std::string normalize_for_dedup(std::string_view s);

[[nodiscard]] std::string read_file(std::filesystem::path const & path);

/// Writes via a temporary sibling and rename, so readers never observe a
/// partially written file.
void write_file_atomic(std::filesystem::path const & path, std::string_view contents);

} // namespace coachsim::text
