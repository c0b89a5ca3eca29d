#pragma once

#include <string>

namespace countycast {

// Calendar math on proleptic-Gregorian epoch days (day 0 = 1970-01-01).
// Panels store day offsets; calendar dates appear only at the I/O boundary.

struct CivilDate {
    int year = 1970;
    unsigned month = 1;
    unsigned day = 1;
};

long days_from_civil(const CivilDate& d);
CivilDate civil_from_days(long z);

// Parses strict ISO-8601 "YYYY-MM-DD". Throws std::runtime_error on anything else.
long parse_iso_date(const std::string& s);

std::string format_iso_date(long epoch_day);

// 0 = Sunday ... 6 = Saturday
int weekday_of(long epoch_day);

} // namespace countycast
