/*
 * Copyright (C) 2026 The module-forge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "module_forge/identifier.hpp"
#include "module_forge/recipe.hpp"

namespace module_forge {

/// An identifier pinned to exactly one tag or digest.
struct ContainerRef {
    ContainerIdentifier identifier;
    std::optional<std::string> tag;
    std::optional<std::string> digest;

    /// `host/ns/repo@sha256:...` or `host/ns/repo:tag`.
    std::string str() const;
};

struct RenderContext {
    /// Runtime command word: singularity, apptainer, podman, docker or a path
    /// to one of them.
    std::string runtime = "singularity";
    ContainerRef container;
    /// Options inserted after the runtime subcommand.
    std::vector<std::string> runtime_options;
    /// `src:dst` mounts, both absolute.
    std::vector<std::string> binds;

    /// Throws Error(Usage) for malformed binds, refs or runtime words.
    void validate() const;
};

enum class ModuleFormat { Lua, Tcl };

ModuleFormat parse_module_format(const std::string& text);
const char* module_file_name(ModuleFormat format);

/// Context pinned to the digest of `tag` (default: the entry's latest tag).
/// Throws Error(Usage) when the tag is not in the entry.
RenderContext default_context(const RegistryEntry& entry, const std::optional<std::string>& tag = std::nullopt);

/// Shell command running the alias inside the container with the caller's
/// arguments appended via `"$@"`. Throws Error(UnknownAlias).
std::string render_exec_line(const RegistryEntry& entry, const std::string& alias, const RenderContext& ctx);

/// Modulefile defining one shell function per alias, sorted by name.
std::string render_modulefile(const RegistryEntry& entry, const RenderContext& ctx, ModuleFormat format = ModuleFormat::Lua);

/// Version label for the modulefile: the pinned tag, or a tag of the entry
/// carrying the pinned digest.
std::string module_version(const RegistryEntry& entry, const RenderContext& ctx);

/// `<target>/<identifier>/<version>/module.lua` (or `module.tcl`).
std::filesystem::path modulefile_path(
    const std::filesystem::path& target, const RegistryEntry& entry, const RenderContext& ctx, ModuleFormat format);

/// Single-quotes `word` unless it consists only of shell-inert characters.
std::string shell_quote(const std::string& word);

} // namespace module_forge
