#include "countycast/dates.hpp"

#include <cstdio>
#include <stdexcept>

namespace countycast {

long days_from_civil(const CivilDate& cd) {
    int y = cd.year;
    const unsigned m = cd.month;
    const unsigned d = cd.day;
    y -= m <= 2;
    const long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long>(doe) - 719468;
}

CivilDate civil_from_days(long z) {
    z += 719468;
    const long era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const long y = static_cast<long>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return CivilDate{static_cast<int>(y + (m <= 2)), m, d};
}

long parse_iso_date(const std::string& s) {
    int y = 0, m = 0, d = 0;
    char extra = '\0';
    if (s.size() != 10 ||
        std::sscanf(s.c_str(), "%4d-%2d-%2d%c", &y, &m, &d, &extra) != 3)
        throw std::runtime_error("invalid ISO-8601 date: '" + s + "'");
    if (m < 1 || m > 12 || d < 1 || d > 31)
        throw std::runtime_error("invalid ISO-8601 date: '" + s + "'");
    const CivilDate cd{y, static_cast<unsigned>(m), static_cast<unsigned>(d)};
    const long epoch = days_from_civil(cd);
    const CivilDate back = civil_from_days(epoch);
    if (back.year != y || back.month != static_cast<unsigned>(m) ||
        back.day != static_cast<unsigned>(d))
        throw std::runtime_error("invalid calendar date: '" + s + "'");
    return epoch;
}

std::string format_iso_date(long epoch_day) {
    const CivilDate cd = civil_from_days(epoch_day);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", cd.year, cd.month, cd.day);
    return buf;
}

int weekday_of(long epoch_day) {
    // day 0 (1970-01-01) was a Thursday
    const long w = (epoch_day + 4) % 7;
    return static_cast<int>(w < 0 ? w + 7 : w);
}

} // namespace countycast
