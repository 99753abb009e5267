/*
 * Copyright (C) 2026 The module-forge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>

// Deliberately naive reference implementations. They share no code with the
// library and favour obviousness over speed.
namespace module_forge::testing {

/// Rare names, names matching the repository both ways after folding to
/// lowercase alphanumerics, then repeatedly the least frequent leftover name
/// below `common_max` until `extra_cap` have been taken.
std::set<std::string> naive_select(const std::string& repository, const std::map<std::string, std::string>& listing,
    const std::map<std::string, std::uint64_t>& counts, std::uint64_t rare_max = 10, std::uint64_t extra_cap = 25,
    std::uint64_t common_max = 1000);

struct NaiveCounts {
    std::uint64_t total = 0;
    std::map<std::string, std::uint64_t> counts;
};

/// Opens every binaries.json below `root` and tallies names per file.
NaiveCounts naive_recount(const std::filesystem::path& root);

} // namespace module_forge::testing
