/*
 * Copyright (C) 2026 The module-forge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "module_forge/identifier.hpp"
#include "module_forge/registry_client.hpp"

namespace module_forge {

inline constexpr const char* kDefaultPath = "/usr/local/sbin:/usr/local/bin:/usr/sbin:/usr/bin:/sbin:/bin";

struct PathDirs {
    /// Absolute directories in PATH order.
    std::vector<std::string> dirs;

    bool operator==(const PathDirs&) const = default;
};

/// Executables found on a container's PATH, keyed by basename. Each name
/// maps to the absolute path it was first found at.
struct ExecutableListing {
    ContainerIdentifier identifier;
    std::map<std::string, std::string> executables;

    /// Throws Error(InvariantViolation) if a path is relative or its basename
    /// differs from its name.
    void validate() const;

    bool operator==(const ExecutableListing&) const = default;
};

/// Executable basenames shipped by a common base image.
struct BaseSet {
    std::string base_name;
    std::set<std::string> executables;

    /// Newline-delimited basenames, `#` starts a comment. The base name is
    /// the file stem. Throws Error(ParseFailure) on entries containing `/`.
    static BaseSet load(const std::filesystem::path& file);
    static BaseSet parse(std::string base_name, std::string_view text);

    /// Every `*.txt` file in `dir`, sorted by name.
    static std::vector<BaseSet> load_directory(const std::filesystem::path& dir);
};

/// The last `PATH=` entry of the image environment, split on `:`. Falls back
/// to kDefaultPath when the image sets no PATH. Relative and empty
/// components are dropped.
PathDirs extract_path_dirs(const ImageConfig& config);

/// Root of an unpacked container filesystem.
struct FsTree {
    std::filesystem::path root;
};

/// Applies layer archives (tar or gzip-compressed tar) base-first onto the
/// empty directory `dest`, honouring OCI whiteouts. Symlinks are created
/// verbatim and only ever resolved relative to `dest`.
///
/// Throws Error(MalformedArchive) on corrupt input and Error(PathTraversal)
/// when an entry name or hard-link target escapes `dest`.
FsTree unpack_layers(const std::vector<std::filesystem::path>& layers, const std::filesystem::path& dest);

/// Resolves `path` (absolute, as seen inside the container) against the tree
/// with chroot semantics: absolute symlink targets restart at the root and
/// `..` never climbs above it. Returns std::nullopt for dangling links and
/// link loops. When `follow_final` is false the last component is not
/// dereferenced.
std::optional<std::filesystem::path> resolve_in_tree(const FsTree& tree, std::string_view path, bool follow_final = true);

/// Lists regular files with any execute bit (or symlinks resolving in-tree to
/// such files) in each PATH directory. The first directory providing a
/// basename wins; missing directories are skipped.
ExecutableListing enumerate_executables(const FsTree& tree, const PathDirs& dirs, const ContainerIdentifier& id);

/// `listing` minus every entry whose basename appears in any base set.
ExecutableListing diff_against_bases(const ExecutableListing& listing, const std::vector<BaseSet>& bases);

} // namespace module_forge
