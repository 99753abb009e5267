/*
 * Copyright (C) 2026 The module-forge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "module_forge/image_inspector.hpp"
#include "module_forge/registry_client.hpp"
#include "module_forge/tag_pipeline.hpp"

namespace module_forge {

/// Tags of `id` after exclusions, sorted, with their manifest refs. Tags the
/// registry stops knowing between listing and resolution are dropped.
struct ResolvedTags {
    TagOrdering ordering;
    std::map<std::string, ManifestRef> refs;

    std::map<std::string, std::string> digests() const;
};

ResolvedTags resolve_tags(RegistryClient& client, const ContainerIdentifier& id, const std::vector<std::string>& exclusions);

/// Pulls the image `ref` names into a scratch directory, unpacks its layers
/// and lists every executable on its PATH. The scratch tree is removed
/// afterwards unless `keep_scratch` is set.
ExecutableListing discover_executables(
    RegistryClient& client, const ContainerIdentifier& id, const ManifestRef& ref, bool keep_scratch = false);

/// Newline-delimited identifiers; blank lines and `#` comments are skipped.
std::vector<ContainerIdentifier> read_identifier_list(const std::filesystem::path& file);

/// Runs `task(i)` for i in [0, count) on up to `workers` threads.
void run_bounded(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& task);

} // namespace module_forge
