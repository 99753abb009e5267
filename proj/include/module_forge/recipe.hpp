/*
 * Copyright (C) 2026 The module-forge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "module_forge/alias_select.hpp"
#include "module_forge/identifier.hpp"
#include "module_forge/tag_pipeline.hpp"

namespace module_forge {

inline constexpr const char* kEntryFile = "container.yaml";

/// One `container.yaml` registry entry.
struct RegistryEntry {
    std::string docker;
    std::string url;
    std::string maintainer;
    std::string description;
    /// The default version: exactly one tag and its digest.
    std::pair<std::string, std::string> latest;
    std::map<std::string, std::string> tags;
    AliasSet aliases;
    /// Tag exclusion globs applied when the entry is refreshed.
    std::optional<std::vector<std::string>> filter;

    ContainerIdentifier identifier() const { return ContainerIdentifier::parse(docker); }

    /// Throws Error(SchemaViolation) when an invariant does not hold.
    void validate() const;

    bool operator==(const RegistryEntry&) const = default;
};

struct EntryMetadata {
    std::string url;
    std::string maintainer;
    std::string description;
};

struct EntryDelta {
    std::vector<std::string> added_tags;
    std::vector<std::string> removed_tags;
    std::map<std::string, std::pair<std::string, std::string>> digest_changes;
    std::optional<std::pair<std::string, std::string>> latest_change;

    bool empty() const noexcept
    {
        return added_tags.empty() && removed_tags.empty() && digest_changes.empty() && !latest_change;
    }

    /// One line per change: `+tag`, `-tag`, `~tag old -> new`,
    /// `latest old -> new`.
    std::vector<std::string> lines() const;
};

/// Assembles an entry. Tags without a digest are skipped; latest is
/// ordering.latest, or the lexicographically greatest tag (with a warning)
/// when no parseable tag has a digest. Throws Error(NoTags).
RegistryEntry build_entry(const ContainerIdentifier& id, const TagOrdering& ordering,
    const std::map<std::string, std::string>& digests, const AliasSet& aliases, const EntryMetadata& meta);

/// Canonical text: fixed key order, two-space indent, tags sorted by the
/// tag comparator.
std::string serialize_entry(const RegistryEntry& entry);

/// Throws Error(ParseFailure) for malformed YAML and Error(SchemaViolation)
/// for missing, unknown or invalid fields.
RegistryEntry parse_entry(const std::string& text);

/// Replaces tags with fresh data and recomputes latest; metadata, aliases
/// and filter are kept. Throws Error(NoTags).
std::pair<RegistryEntry, EntryDelta> update_entry(
    const RegistryEntry& existing, const TagOrdering& ordering, const std::map<std::string, std::string>& digests);

std::filesystem::path entry_path(const std::filesystem::path& registry_root, const ContainerIdentifier& id);

/// Every `container.yaml` below `registry_root`, sorted by path.
std::vector<std::filesystem::path> find_entries(const std::filesystem::path& registry_root);

/// Reads and parses an entry, prefixing errors with the file name.
RegistryEntry load_entry(const std::filesystem::path& path);

/// Serialises and atomically writes the entry under its identifier path.
std::filesystem::path write_entry(const std::filesystem::path& registry_root, const RegistryEntry& entry);

/// Writes `library.json` and `<identifier>/container.json` per entry into
/// `out_dir`. Output bytes depend only on the entries.
void export_static_api(const std::filesystem::path& registry_root, const std::filesystem::path& out_dir);

} // namespace module_forge
