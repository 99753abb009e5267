/*
 * Copyright (C) 2026 The module-forge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace module_forge {

enum class ErrorKind {
    // registry-client
    NotFound,
    AuthFailure,
    Transient,
    UnsupportedMediaType,
    IntegrityError,
    // image-inspector
    MalformedArchive,
    PathTraversal,
    // tag-pipeline
    BadPattern,
    // identifiers, cache, recipes
    InvalidIdentifier,
    IoFailure,
    CorruptListing,
    ParseFailure,
    InvariantViolation,
    SchemaViolation,
    NoTags,
    DuplicateIdentifier,
    // renderer
    UnknownAlias,
    InvalidAlias,
    // cli
    Usage,
    AlreadyExists,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a category so callers
/// (chiefly the CLI exit-code mapping) can react without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message)
        , kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace module_forge
