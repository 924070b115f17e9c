#include "coachsim/time.hpp"

#include "coachsim/error.hpp"

#include <cctype>
#include <cstdio>
#include <ctime>

namespace coachsim {

namespace {

// Days since 1970-01-01 for a proleptic Gregorian date (H. Hinnant's algorithm).
long long days_from_civil(long long y, unsigned m, unsigned d)
{
    y -= m <= 2;
    long long const era = (y >= 0 ? y : y - 399) / 400;
    auto const yoe = static_cast<unsigned>(y - era * 400);
    unsigned const doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    unsigned const doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long long>(doe) - 719468;
}

bool read_digits(std::string_view text, std::size_t pos, std::size_t count, int & out)
{
    if (pos + count > text.size()) {
        return false;
    }
    out = 0;
    for (std::size_t i = pos; i < pos + count; ++i) {
        if (!std::isdigit(static_cast<unsigned char>(text[i]))) {
            return false;
        }
        out = out * 10 + (text[i] - '0');
    }
    return true;
}

} // namespace

Timestamp utc_now()
{
    return std::chrono::time_point_cast<std::chrono::milliseconds>(
        std::chrono::system_clock::now());
}

std::string format_iso8601(Timestamp ts)
{
    using namespace std::chrono;
    auto const day = floor<days>(ts);
    year_month_day const ymd{day};
    hh_mm_ss const hms{ts - day};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ",
        static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
        static_cast<unsigned>(ymd.day()), static_cast<int>(hms.hours().count()),
        static_cast<int>(hms.minutes().count()), static_cast<int>(hms.seconds().count()),
        static_cast<int>(hms.subseconds().count()));
    return buf;
}

Timestamp parse_iso8601(std::string_view text)
{
    int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0, millis = 0;
    bool ok = read_digits(text, 0, 4, year) && text.size() > 4 && text[4] == '-'
        && read_digits(text, 5, 2, month) && text.size() > 7 && text[7] == '-'
        && read_digits(text, 8, 2, day) && text.size() > 10 && text[10] == 'T'
        && read_digits(text, 11, 2, hour) && text.size() > 13 && text[13] == ':'
        && read_digits(text, 14, 2, minute) && text.size() > 16 && text[16] == ':'
        && read_digits(text, 17, 2, second);
    std::size_t pos = 19;
    if (ok && pos < text.size() && text[pos] == '.') {
        ok = read_digits(text, pos + 1, 3, millis);
        pos += 4;
    }
    ok = ok && pos + 1 == text.size() && text[pos] == 'Z';
    ok = ok && month >= 1 && month <= 12 && day >= 1 && day <= 31 && hour < 24 && minute < 60
        && second < 61;
    if (!ok) {
        throw FormatError("invalid ISO-8601 UTC timestamp: '" + std::string(text) + "'");
    }
    long long const days = days_from_civil(year, static_cast<unsigned>(month),
        static_cast<unsigned>(day));
    long long const ms = ((days * 24 + hour) * 60 + minute) * 60'000LL + second * 1000LL + millis;
    return Timestamp{std::chrono::milliseconds{ms}};
}

} // namespace coachsim
