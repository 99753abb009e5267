/*
 * Copyright (C) 2026 The module-forge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>

#include <zlib.h>

namespace module_forge::detail {

enum class TarEntryType { Regular, HardLink, Symlink, Directory, Other };

struct TarEntry {
    std::string name;
    std::string link_name;
    TarEntryType type = TarEntryType::Other;
    std::uint32_t mode = 0;
    std::uint64_t size = 0;
};

/// Sequential reader for ustar/GNU/pax archives, optionally gzip-compressed
/// (zlib detects compression transparently). Errors are thrown as
/// Error(MalformedArchive).
class TarReader {
public:
    explicit TarReader(const std::filesystem::path& archive);
    ~TarReader();
    TarReader(const TarReader&) = delete;
    TarReader& operator=(const TarReader&) = delete;

    /// Advances to the next member, skipping any unread data of the current
    /// one. Returns false at end of archive.
    bool next(TarEntry& entry);

    /// Streams the current member's data. May be called once per member.
    void read_data(const std::function<void(std::span<const char>)>& consumer);

private:
    void read_exact(char* buf, std::size_t len);
    bool read_block(char* block);
    void skip_data();
    std::string read_member_string(std::uint64_t size);

    std::filesystem::path path_;
    gzFile file_ = nullptr;
    std::uint64_t remaining_ = 0;
    std::uint64_t padding_ = 0;
};

} // namespace module_forge::detail
