/*
 * Copyright (C) 2026 The module-forge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <compare>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace module_forge {

/// Fully-qualified container image name: `host/namespace/repository`.
///
/// The canonical form is lowercase and never carries a tag or digest.
/// Parsing rejects anything else with ErrorKind::InvalidIdentifier; use
/// ImageReference::parse for user input that may carry `:tag` or `@digest`.
class ContainerIdentifier {
public:
    static ContainerIdentifier parse(std::string_view text);

    const std::string& registry_host() const noexcept { return host_; }
    const std::string& name_space() const noexcept { return namespace_; }
    const std::string& repository() const noexcept { return repository_; }

    /// `namespace/repository`, the name used in registry API paths.
    std::string api_name() const;
    std::string canonical() const;

    /// Relative path `host/namespace.../repository` used by on-disk layouts.
    std::filesystem::path relative_path() const;

    auto operator<=>(const ContainerIdentifier&) const = default;
    bool operator==(const ContainerIdentifier&) const = default;

private:
    ContainerIdentifier(std::string host, std::string ns, std::string repo);

    std::string host_;
    std::string namespace_;
    std::string repository_;
};

/// An identifier optionally pinned to a tag or digest, e.g.
/// `quay.io/biocontainers/samtools:1.9--h10a08f8_12`.
struct ImageReference {
    ContainerIdentifier identifier;
    std::optional<std::string> tag;
    std::optional<std::string> digest;

    static ImageReference parse(std::string_view text);
};

} // namespace module_forge
