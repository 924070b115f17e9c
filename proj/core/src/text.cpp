#include "coachsim/text.hpp"

#include "coachsim/error.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace coachsim::text {

namespace {

bool is_space(char c) noexcept
{
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

char lower(char c) noexcept
{
    return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

} // namespace

std::string_view trim(std::string_view s) noexcept
{
    while (!s.empty() && is_space(s.front())) {
        s.remove_prefix(1);
    }
    while (!s.empty() && is_space(s.back())) {
        s.remove_suffix(1);
    }
    return s;
}

std::string to_lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), lower);
    return out;
}

bool iequals(std::string_view a, std::string_view b) noexcept
{
    return a.size() == b.size()
        && std::equal(a.begin(), a.end(), b.begin(),
            [](char x, char y) { return lower(x) == lower(y); });
}

bool starts_with_icase(std::string_view s, std::string_view prefix) noexcept
{
    return s.size() >= prefix.size() && iequals(s.substr(0, prefix.size()), prefix);
}

std::vector<std::string_view> split_lines(std::string_view s)
{
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= s.size()) {
        std::size_t end = s.find('\n', start);
        if (end == std::string_view::npos) {
            end = s.size();
        }
        std::string_view line = s.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        lines.push_back(line);
        start = end + 1;
    }
    return lines;
}

std::string substitute(std::string_view templ, std::string_view placeholder, std::string_view value)
{
    std::string out;
    out.reserve(templ.size() + value.size());
    std::size_t pos = 0;
    while (true) {
        std::size_t const hit = templ.find(placeholder, pos);
        if (hit == std::string_view::npos || placeholder.empty()) {
            out.append(templ.substr(pos));
            break;
        }
        out.append(templ.substr(pos, hit - pos));
        out.append(value);
        pos = hit + placeholder.size();
    }
    return out;
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) noexcept
{
    if (needle.empty()) {
        return 0;
    }
    std::size_t count = 0;
    for (std::size_t pos = haystack.find(needle); pos != std::string_view::npos;
         pos = haystack.find(needle, pos + needle.size())) {
        ++count;
    }
    return count;
}

std::size_t count_words(std::string_view s) noexcept
{
    std::size_t count = 0;
    bool in_word = false;
    for (char c : s) {
        if (is_space(c)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++count;
        }
    }
    return count;
}

std::size_t count_sentences(std::string_view s) noexcept
{
    std::size_t count = 0;
    bool has_content = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        char const c = s[i];
        bool const terminal = c == '.' || c == '!' || c == '?';
        if (!terminal && !is_space(c)) {
            has_content = true;
        }
        if (terminal && (i + 1 == s.size() || is_space(s[i + 1]))) {
            if (has_content) {
                ++count;
            }
            has_content = false;
        }
    }
    return count + (has_content ? 1 : 0);
}

std::string normalize_for_dedup(std::string_view s)
{
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char c : trim(s)) {
        if (is_space(c)) {
            pending_space = true;
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(lower(c));
    }
    while (!out.empty() && (std::ispunct(static_cast<unsigned char>(out.back())) || out.back() == ' ')) {
        out.pop_back();
    }
    return out;
}

std::string read_file(std::filesystem::path const & path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open file: " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file_atomic(std::filesystem::path const & path, std::string_view contents)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error(ErrorCode::Internal, "cannot write file: " + tmp.string());
        }
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) {
            throw Error(ErrorCode::Internal, "short write: " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(ErrorCode::Internal, "cannot replace file: " + path.string());
    }
}

} // namespace coachsim::text
