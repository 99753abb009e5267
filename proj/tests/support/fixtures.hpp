/*
 * Copyright (C) 2026 The module-forge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "mock_registry.hpp"
#include "module_forge/recipe.hpp"

namespace module_forge::testing {

/// tests/fixtures in the source tree.
std::filesystem::path fixture_dir();

/// data/ in the source tree.
std::filesystem::path data_dir();

inline constexpr const char* kSamtoolsRepo = "biocontainers/samtools";
inline constexpr const char* kSamtoolsId = "quay.io/biocontainers/samtools";

/// Seeds three samtools tags. Every image has two layers: a Debian-like base
/// and a conda-style layer under /usr/local/bin that also whites out a base
/// file. Returns tag -> manifest digest.
std::map<std::string, std::string> seed_samtools(MockRegistry& registry);

/// The samtools registry entry used by recipe and renderer goldens: three
/// tags with synthetic digests and three aliases.
RegistryEntry samtools_entry();

/// Seeds `repo` with a single-layer image under `tag` whose PATH holds the
/// given executables in /usr/local/bin.
std::string seed_simple(
    MockRegistry& registry, const std::string& repo, const std::string& tag, const std::vector<std::string>& executables);

} // namespace module_forge::testing
