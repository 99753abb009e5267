/*
 * Copyright (C) 2026 The module-forge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>

namespace module_forge {

/// Incremental sha256 over a byte stream.
class Sha256 {
public:
    Sha256();
    ~Sha256();
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;
    Sha256(Sha256&&) noexcept;
    Sha256& operator=(Sha256&&) noexcept;

    void update(std::span<const std::byte> data);
    void update(std::string_view data);

    /// 64 lowercase hex characters. The hasher is reset afterwards.
    std::string hex_digest();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

std::string sha256_hex(std::string_view data);

/// `sha256:` followed by the hex digest of `data`.
std::string content_digest(std::string_view data);

/// True iff `digest` matches `sha256:[0-9a-f]{64}`.
bool is_valid_digest(std::string_view digest);

} // namespace module_forge
