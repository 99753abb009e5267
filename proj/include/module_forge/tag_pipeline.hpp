/*
 * Copyright (C) 2026 The module-forge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "module_forge/registry_client.hpp"

namespace module_forge {

struct VersionCore {
    std::uint64_t major = 0;
    std::uint64_t minor = 0;
    std::uint64_t patch = 0;

    auto operator<=>(const VersionCore&) const = default;
};

struct TagCandidate {
    std::string raw;
    std::optional<VersionCore> version_core;
    /// Everything after the version core, e.g. `--h10a08f8_12`.
    std::optional<std::string> build_meta;

    bool parseable() const noexcept { return version_core.has_value(); }
    bool operator==(const TagCandidate&) const = default;
};

struct TagOrdering {
    /// Oldest to newest.
    std::vector<TagCandidate> ordered;
    std::optional<TagCandidate> latest;
};

/// Anchored shell-style glob: `*`, `?`, `[...]` (with `!`/`^` negation and
/// ranges) and `\` escapes. Construction throws Error(BadPattern).
class TagGlob {
public:
    explicit TagGlob(std::string pattern);
    bool matches(std::string_view text) const;
    const std::string& pattern() const noexcept { return pattern_; }

private:
    std::string pattern_;
};

/// Extracts the leading dotted numeric version (1-3 components, missing
/// components are zero). Tags without a leading digit are unparseable.
TagCandidate parse_tag(std::string_view raw);

/// Strict weak ordering over candidates, total over distinct raw strings:
/// parseable before unparseable, then version core, then build metadata in
/// natural order (digit runs compared numerically), then raw string.
bool tag_less(const TagCandidate& a, const TagCandidate& b);

/// Natural-order comparison used for build metadata; returns <0, 0 or >0.
int natural_compare(std::string_view a, std::string_view b);

/// Drops the literal `latest` tag and anything matching an exclusion, then
/// parses the remainder in input order.
std::vector<TagCandidate> filter_tags(const std::vector<std::string>& tags, const std::vector<std::string>& exclusions);
std::vector<TagCandidate> filter_tags(const TagList& tags, const std::vector<std::string>& exclusions);

/// Sorts with tag_less; latest is the greatest parseable candidate.
TagOrdering sort_and_select(std::vector<TagCandidate> candidates);

} // namespace module_forge
