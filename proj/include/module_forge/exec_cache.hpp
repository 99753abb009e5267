/*
 * Copyright (C) 2026 The module-forge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "module_forge/image_inspector.hpp"

namespace module_forge {

/// Cross-container executable frequencies: how many containers ship each
/// basename somewhere on their PATH.
struct FrequencyTable {
    std::map<std::string, std::uint64_t> counts;
    std::uint64_t total_containers = 0;

    std::uint64_t count_of(const std::string& name) const;

    /// Throws Error(InvariantViolation) unless 1 <= count <= total for all.
    void validate() const;

    bool operator==(const FrequencyTable&) const = default;
};

/// Per-container listings stored as `<root>/<host>/<namespace>/<repo>/binaries.json`.
class CacheStore {
public:
    static constexpr const char* kListingFile = "binaries.json";
    static constexpr const char* kCountsFile = "counts.json";

    explicit CacheStore(std::filesystem::path root);

    const std::filesystem::path& root() const noexcept { return root_; }
    std::filesystem::path listing_path(const ContainerIdentifier& id) const;
    bool has_listing(const ContainerIdentifier& id) const;

    /// Atomic write; an existing listing is replaced.
    std::filesystem::path store_listing(const ExecutableListing& listing) const;
    ExecutableListing load_listing(const ContainerIdentifier& id) const;

    /// Every stored listing file, sorted by path.
    std::vector<std::filesystem::path> listing_files() const;

private:
    std::filesystem::path root_;
};

std::string serialize_listing(const ExecutableListing& listing);
/// Throws Error(CorruptListing) naming `origin` on malformed input.
ExecutableListing parse_listing(const std::string& text, const std::string& origin);

/// Reads every listing once and counts each distinct basename once per
/// container.
FrequencyTable build_counts(const CacheStore& cache);

std::string serialize_counts(const FrequencyTable& table);
FrequencyTable parse_counts(const std::string& text);
void write_counts(const FrequencyTable& table, const std::filesystem::path& path);

/// Throws Error(ParseFailure) for malformed documents and
/// Error(InvariantViolation) for counts outside [1, total_containers].
FrequencyTable load_counts(const std::filesystem::path& path);

} // namespace module_forge
