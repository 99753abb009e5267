/*
 * Copyright (C) 2026 The module-forge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "module_forge/alias_select.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include <spdlog/spdlog.h>

#include "module_forge/error.hpp"

namespace module_forge {

namespace {

constexpr std::array<std::string_view, 2> kReservedNames = {"module", "ml"};

bool is_alnum(char c)
{
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

std::string fold(std::string_view text)
{
    std::string out;
    for (char c : text) {
        if (is_alnum(c))
            out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

/// Listing entries whose names can become aliases.
std::vector<std::pair<std::string, std::string>> usable_entries(const ExecutableListing& listing)
{
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [name, path] : listing.executables) {
        if (!is_valid_alias_name(name) || !is_valid_alias_path(path)) {
            spdlog::warn("{}: skipping executable '{}' ({}): not usable as a shell command",
                listing.identifier.canonical(), name, path);
            continue;
        }
        out.emplace_back(name, path);
    }
    return out;
}

} // namespace

bool is_valid_alias_name(std::string_view name)
{
    if (name.empty() || name == "." || name == "..")
        return false;
    if (!is_alnum(name.front()) && name.front() != '_')
        return false;
    for (char c : name) {
        if (!is_alnum(c) && c != '_' && c != '.' && c != '+' && c != '-')
            return false;
    }
    return std::find(kReservedNames.begin(), kReservedNames.end(), name) == kReservedNames.end();
}

bool is_valid_alias_path(std::string_view path)
{
    if (path.size() < 2 || path.front() != '/')
        return false;
    for (char c : path) {
        if (!is_alnum(c) && std::string_view("._+@=:,%/-").find(c) == std::string_view::npos)
            return false;
    }
    return true;
}

void validate_aliases(const AliasSet& aliases)
{
    for (const auto& [name, path] : aliases) {
        if (!is_valid_alias_name(name))
            throw Error(ErrorKind::InvalidAlias, "alias name '" + name + "' is not a safe shell command name");
        if (!is_valid_alias_path(path))
            throw Error(ErrorKind::InvalidAlias, "alias '" + name + "' path '" + path + "' is not a safe absolute path");
    }
}

RankedCounts rank(const ExecutableListing& listing, const FrequencyTable& table)
{
    RankedCounts ranked;
    ranked.entries.reserve(listing.executables.size());
    for (const auto& [name, path] : listing.executables)
        ranked.entries.push_back(RankedEntry {name, path, table.count_of(name)});
    std::stable_sort(ranked.entries.begin(), ranked.entries.end(), [](const RankedEntry& a, const RankedEntry& b) {
        return a.global_count != b.global_count ? a.global_count < b.global_count : a.name < b.name;
    });
    return ranked;
}

bool name_matches_identifier(std::string_view name, const ContainerIdentifier& id)
{
    auto folded_name = fold(name);
    auto folded_repo = fold(id.repository());
    if (folded_name.empty() || folded_repo.empty())
        return false;
    return folded_name.find(folded_repo) != std::string::npos || folded_repo.find(folded_name) != std::string::npos;
}

AliasSet select_aliases(const ContainerIdentifier& id, const ExecutableListing& listing, const FrequencyTable& table,
    const SelectionThresholds& thresholds)
{
    AliasSet selected;
    if (listing.executables.empty()) {
        spdlog::warn("{}: empty executable listing, no aliases selected", id.canonical());
        return selected;
    }

    ExecutableListing usable {listing.identifier, {}};
    for (auto& [name, path] : usable_entries(listing))
        usable.executables.emplace(std::move(name), std::move(path));

    auto ranked = rank(usable, table);
    std::vector<const RankedEntry*> remaining;
    for (const auto& entry : ranked.entries) {
        if (entry.global_count < thresholds.rare_max || name_matches_identifier(entry.name, id))
            selected.emplace(entry.name, entry.path);
        else
            remaining.push_back(&entry);
    }

    std::uint64_t extra = 0;
    for (const auto* entry : remaining) {
        if (extra >= thresholds.extra_cap || entry->global_count >= thresholds.common_max)
            break; // ascending order: nothing later qualifies either
        selected.emplace(entry->name, entry->path);
        ++extra;
    }
    return selected;
}

AliasSet aliases_from_listing(const ExecutableListing& listing)
{
    AliasSet out;
    for (auto& [name, path] : usable_entries(listing))
        out.emplace(std::move(name), std::move(path));
    return out;
}

} // namespace module_forge
