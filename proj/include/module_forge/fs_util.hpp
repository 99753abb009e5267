/*
 * Copyright (C) 2026 The module-forge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace module_forge {

/// Writes `content` to a sibling temporary file and renames it over `path`,
/// creating parent directories as needed. Readers see old or new content,
/// never a torn file. Throws Error(IoFailure).
void atomic_write(const std::filesystem::path& path, std::string_view content);

/// Throws Error(IoFailure) when the file cannot be read.
std::string read_file(const std::filesystem::path& path);

/// Temporary directory removed on destruction unless keep() was called.
class ScratchDir {
public:
    explicit ScratchDir(std::string_view prefix = "module-forge");
    ~ScratchDir();
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;
    ScratchDir(ScratchDir&& other) noexcept;
    ScratchDir& operator=(ScratchDir&& other) noexcept;

    const std::filesystem::path& path() const noexcept { return path_; }
    void keep() noexcept { keep_ = true; }

private:
    std::filesystem::path path_;
    bool keep_ = false;
};

} // namespace module_forge
