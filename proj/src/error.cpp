/*
 * Copyright (C) 2026 The module-forge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "module_forge/error.hpp"

namespace module_forge {

std::string_view to_string(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::NotFound:
        return "NotFound";
    case ErrorKind::AuthFailure:
        return "AuthFailure";
    case ErrorKind::Transient:
        return "Transient";
    case ErrorKind::UnsupportedMediaType:
        return "UnsupportedMediaType";
    case ErrorKind::IntegrityError:
        return "IntegrityError";
    case ErrorKind::MalformedArchive:
        return "MalformedArchive";
    case ErrorKind::PathTraversal:
        return "PathTraversal";
    case ErrorKind::BadPattern:
        return "BadPattern";
    case ErrorKind::InvalidIdentifier:
        return "InvalidIdentifier";
    case ErrorKind::IoFailure:
        return "IoFailure";
    case ErrorKind::CorruptListing:
        return "CorruptListing";
    case ErrorKind::ParseFailure:
        return "ParseFailure";
    case ErrorKind::InvariantViolation:
        return "InvariantViolation";
    case ErrorKind::SchemaViolation:
        return "SchemaViolation";
    case ErrorKind::NoTags:
        return "NoTags";
    case ErrorKind::DuplicateIdentifier:
        return "DuplicateIdentifier";
    case ErrorKind::UnknownAlias:
        return "UnknownAlias";
    case ErrorKind::InvalidAlias:
        return "InvalidAlias";
    case ErrorKind::Usage:
        return "Usage";
    case ErrorKind::AlreadyExists:
        return "AlreadyExists";
    }
    return "Unknown";
}

} // namespace module_forge
