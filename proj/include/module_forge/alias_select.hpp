/*
 * Copyright (C) 2026 The module-forge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "module_forge/exec_cache.hpp"
#include "module_forge/identifier.hpp"
#include "module_forge/image_inspector.hpp"

namespace module_forge {

struct SelectionThresholds {
    /// Names seen in fewer containers than this are always kept.
    std::uint64_t rare_max = 10;
    /// Additional least-frequent names admitted beyond the rare and
    /// name-matching ones.
    std::uint64_t extra_cap = 25;
    /// Additional names must be seen in fewer containers than this.
    std::uint64_t common_max = 1000;
};

struct RankedEntry {
    std::string name;
    std::string path;
    std::uint64_t global_count = 0;

    bool operator==(const RankedEntry&) const = default;
};

/// Sorted ascending by global count, ties by name.
struct RankedCounts {
    std::vector<RankedEntry> entries;
};

/// Alias name -> absolute path inside the container.
using AliasSet = std::map<std::string, std::string>;

/// Names usable as shell commands: `[A-Za-z0-9_][A-Za-z0-9._+-]*`, not `.`
/// or `..`, and not a module-system command such as `module` or `ml`.
bool is_valid_alias_name(std::string_view name);

/// Absolute paths made only of `[A-Za-z0-9._+@=:,%/-]`.
bool is_valid_alias_path(std::string_view path);

/// Throws Error(InvalidAlias) if any alias breaks the rules above.
void validate_aliases(const AliasSet& aliases);

/// Pairs each listing name with its global count (0 when absent).
RankedCounts rank(const ExecutableListing& listing, const FrequencyTable& table);

/// Case-insensitive containment in either direction between the name and
/// the repository segment, ignoring non-alphanumeric characters.
bool name_matches_identifier(std::string_view name, const ContainerIdentifier& id);

/// Rare names, names matching the repository, plus up to `extra_cap` of the
/// least frequent remaining names below `common_max`. Invalid alias names are
/// dropped with a warning before selection.
AliasSet select_aliases(const ContainerIdentifier& id, const ExecutableListing& listing, const FrequencyTable& table,
    const SelectionThresholds& thresholds = {});

/// Every valid alias in the listing, unfiltered by frequency.
AliasSet aliases_from_listing(const ExecutableListing& listing);

} // namespace module_forge
