/*
 * Copyright (C) 2026 The module-forge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "module_forge/scheduler.hpp"

#include <charconv>
#include <set>

#include "module_forge/digest.hpp"
#include "module_forge/error.hpp"

namespace module_forge {

unsigned group_of(const ContainerIdentifier& id)
{
    // Horner's rule over the hex digits keeps the full 256-bit value exact.
    unsigned remainder = 0;
    for (char c : sha256_hex(id.canonical())) {
        unsigned digit = (c >= '0' && c <= '9') ? static_cast<unsigned>(c - '0') : static_cast<unsigned>(c - 'a' + 10);
        remainder = (remainder * 16 + digit) % kUpdateDays;
    }
    return remainder + 1;
}

std::vector<UpdateGroup> partition(const std::vector<ContainerIdentifier>& ids)
{
    std::vector<UpdateGroup> groups(kUpdateDays);
    for (unsigned day = 1; day <= kUpdateDays; ++day)
        groups[day - 1].day = day;

    std::set<std::string> seen;
    for (const auto& id : ids) {
        if (!seen.insert(id.canonical()).second)
            throw Error(ErrorKind::DuplicateIdentifier, "identifier listed twice: " + id.canonical());
        groups[group_of(id) - 1].members.push_back(id);
    }
    return groups;
}

std::vector<ContainerIdentifier> due_on(const std::vector<ContainerIdentifier>& ids, std::chrono::year_month_day date)
{
    auto day = static_cast<unsigned>(date.day());
    if (day < 1 || day > kUpdateDays)
        return {};
    std::vector<ContainerIdentifier> due;
    for (const auto& id : ids) {
        if (group_of(id) == day)
            due.push_back(id);
    }
    return due;
}

std::chrono::year_month_day parse_date(std::string_view text)
{
    auto bad = [&text]() { return Error(ErrorKind::Usage, "expected a date as YYYY-MM-DD, got '" + std::string(text) + "'"); };
    if (text.size() != 10 || text[4] != '-' || text[7] != '-')
        throw bad();

    auto number = [&](size_t pos, size_t len) {
        int value = 0;
        auto field = text.substr(pos, len);
        auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
        if (ec != std::errc() || ptr != field.data() + field.size())
            throw bad();
        return value;
    };
    std::chrono::year_month_day date {std::chrono::year(number(0, 4)),
        std::chrono::month(static_cast<unsigned>(number(5, 2))), std::chrono::day(static_cast<unsigned>(number(8, 2)))};
    if (!date.ok())
        throw bad();
    return date;
}

} // namespace module_forge
