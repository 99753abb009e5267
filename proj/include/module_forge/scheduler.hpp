/*
 * Copyright (C) 2026 The module-forge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <chrono>
#include <string_view>
#include <vector>

#include "module_forge/identifier.hpp"

namespace module_forge {

/// Every month has at least this many days.
inline constexpr unsigned kUpdateDays = 28;

struct UpdateGroup {
    unsigned day = 1;
    std::vector<ContainerIdentifier> members;
};

/// sha256 of the canonical identifier, read as one base-16 integer, modulo
/// 28, plus one. Depends only on the identifier string.
unsigned group_of(const ContainerIdentifier& id);

/// 28 groups ordered by day; members keep input order. Throws
/// Error(DuplicateIdentifier).
std::vector<UpdateGroup> partition(const std::vector<ContainerIdentifier>& ids);

/// Members of the group for `date`'s day of month; empty on days 29-31.
std::vector<ContainerIdentifier> due_on(const std::vector<ContainerIdentifier>& ids, std::chrono::year_month_day date);

/// Parses `YYYY-MM-DD`; throws Error(Usage) for malformed or invalid dates.
std::chrono::year_month_day parse_date(std::string_view text);

} // namespace module_forge
