/*
 * Copyright (C) 2026 The module-forge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "tar_reader.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <optional>

#include "module_forge/error.hpp"

namespace module_forge::detail {

namespace {

constexpr std::size_t kBlock = 512;

[[noreturn]] void malformed(const std::filesystem::path& path, const std::string& why)
{
    throw Error(ErrorKind::MalformedArchive, path.string() + ": " + why);
}

std::string field(const char* block, std::size_t offset, std::size_t len)
{
    const char* start = block + offset;
    return std::string(start, strnlen(start, len));
}

std::optional<std::uint64_t> numeric_field(const char* block, std::size_t offset, std::size_t len)
{
    const auto* bytes = reinterpret_cast<const unsigned char*>(block + offset);
    // GNU base-256 extension for values that overflow octal.
    if (bytes[0] & 0x80) {
        std::uint64_t value = bytes[0] & 0x7f;
        for (std::size_t i = 1; i < len; ++i) {
            if (value >> 56)
                return std::nullopt;
            value = (value << 8) | bytes[i];
        }
        return value;
    }
    std::uint64_t value = 0;
    std::size_t i = 0;
    while (i < len && (bytes[i] == ' ' || bytes[i] == '\0'))
        ++i;
    bool any = false;
    for (; i < len && bytes[i] >= '0' && bytes[i] <= '7'; ++i) {
        value = value * 8 + (bytes[i] - '0');
        any = true;
    }
    for (; i < len; ++i) {
        if (bytes[i] != ' ' && bytes[i] != '\0')
            return std::nullopt;
    }
    return any ? std::optional(value) : std::optional<std::uint64_t>(0);
}

bool checksum_ok(const char* block)
{
    auto stored = numeric_field(block, 148, 8);
    if (!stored)
        return false;
    std::uint64_t unsigned_sum = 0;
    std::int64_t signed_sum = 0;
    for (std::size_t i = 0; i < kBlock; ++i) {
        auto byte = (i >= 148 && i < 156) ? static_cast<char>(' ') : block[i];
        unsigned_sum += static_cast<unsigned char>(byte);
        signed_sum += static_cast<signed char>(byte);
    }
    return *stored == unsigned_sum || static_cast<std::int64_t>(*stored) == signed_sum;
}

/// Applies `path` and `linkpath` records from a pax extended header.
void apply_pax(const std::string& records, std::optional<std::string>& path, std::optional<std::string>& link,
    std::optional<std::uint64_t>& size, const std::filesystem::path& archive)
{
    std::size_t pos = 0;
    while (pos < records.size()) {
        auto space = records.find(' ', pos);
        if (space == std::string::npos)
            malformed(archive, "truncated pax record");
        std::uint64_t len = 0;
        for (auto i = pos; i < space; ++i) {
            if (records[i] < '0' || records[i] > '9')
                malformed(archive, "bad pax record length");
            len = len * 10 + static_cast<std::uint64_t>(records[i] - '0');
        }
        if (len == 0 || pos + len > records.size() || records[pos + len - 1] != '\n')
            malformed(archive, "bad pax record length");
        auto record = records.substr(space + 1, pos + len - space - 2);
        auto eq = record.find('=');
        if (eq != std::string::npos) {
            auto key = record.substr(0, eq);
            auto value = record.substr(eq + 1);
            if (key == "path")
                path = value;
            else if (key == "linkpath")
                link = value;
            else if (key == "size") {
                try {
                    size = std::stoull(value);
                } catch (const std::exception&) {
                    malformed(archive, "bad pax size");
                }
            }
        }
        pos += len;
    }
}

} // namespace

TarReader::TarReader(const std::filesystem::path& archive)
    : path_(archive)
{
    file_ = gzopen(archive.c_str(), "rb");
    if (file_ == nullptr)
        throw Error(ErrorKind::IoFailure, "cannot open layer archive " + archive.string());
    gzbuffer(file_, 128 * 1024);
}

TarReader::~TarReader()
{
    if (file_ != nullptr)
        gzclose(file_);
}

void TarReader::read_exact(char* buf, std::size_t len)
{
    while (len > 0) {
        auto chunk = static_cast<unsigned>(std::min<std::size_t>(len, 1u << 30));
        int got = gzread(file_, buf, chunk);
        if (got < 0) {
            int errnum = 0;
            const char* message = gzerror(file_, &errnum);
            malformed(path_, std::string("decompression failed: ") + (message ? message : "unknown"));
        }
        if (got == 0)
            malformed(path_, "unexpected end of archive");
        buf += got;
        len -= static_cast<std::size_t>(got);
    }
}

bool TarReader::read_block(char* block)
{
    int got = gzread(file_, block, kBlock);
    if (got < 0)
        malformed(path_, "decompression failed");
    if (got == 0)
        return false;
    if (static_cast<std::size_t>(got) < kBlock)
        read_exact(block + got, kBlock - static_cast<std::size_t>(got));
    return true;
}

void TarReader::skip_data()
{
    std::array<char, 64 * 1024> buf {};
    auto left = remaining_ + padding_;
    while (left > 0) {
        auto chunk = std::min<std::uint64_t>(left, buf.size());
        read_exact(buf.data(), chunk);
        left -= chunk;
    }
    remaining_ = 0;
    padding_ = 0;
}

std::string TarReader::read_member_string(std::uint64_t size)
{
    if (size > (16u << 20))
        malformed(path_, "oversized extended header");
    std::string out(size, '\0');
    read_exact(out.data(), out.size());
    auto pad = (kBlock - size % kBlock) % kBlock;
    std::array<char, kBlock> scratch {};
    read_exact(scratch.data(), pad);
    return out;
}

bool TarReader::next(TarEntry& entry)
{
    skip_data();

    std::optional<std::string> long_name;
    std::optional<std::string> long_link;
    std::optional<std::uint64_t> pax_size;
    std::array<char, kBlock> block {};

    while (true) {
        if (!read_block(block.data()))
            return false; // tolerate archives lacking the end-of-archive marker

        if (std::all_of(block.begin(), block.end(), [](char c) { return c == '\0'; }))
            return false;
        if (!checksum_ok(block.data()))
            malformed(path_, "header checksum mismatch");

        auto size = numeric_field(block.data(), 124, 12);
        auto mode = numeric_field(block.data(), 100, 8);
        if (!size || !mode)
            malformed(path_, "bad numeric header field");
        char typeflag = block[156];

        if (typeflag == 'L' || typeflag == 'K') {
            auto text = read_member_string(*size);
            text.resize(strnlen(text.c_str(), text.size()));
            (typeflag == 'L' ? long_name : long_link) = text;
            continue;
        }
        if (typeflag == 'x') {
            apply_pax(read_member_string(*size), long_name, long_link, pax_size, path_);
            continue;
        }
        if (typeflag == 'g') {
            read_member_string(*size);
            continue;
        }

        std::string name = field(block.data(), 0, 100);
        if (std::memcmp(block.data() + 257, "ustar", 5) == 0) {
            auto prefix = field(block.data(), 345, 155);
            if (!prefix.empty())
                name = prefix + "/" + name;
        }

        entry = TarEntry {};
        entry.name = long_name.value_or(name);
        entry.link_name = long_link.value_or(field(block.data(), 157, 100));
        entry.mode = static_cast<std::uint32_t>(*mode & 07777);
        entry.size = pax_size.value_or(*size);

        switch (typeflag) {
        case '0':
        case '\0':
        case '7':
            entry.type = TarEntryType::Regular;
            break;
        case '1':
            entry.type = TarEntryType::HardLink;
            break;
        case '2':
            entry.type = TarEntryType::Symlink;
            break;
        case '5':
            entry.type = TarEntryType::Directory;
            break;
        default:
            entry.type = TarEntryType::Other;
            break;
        }
        if (entry.type == TarEntryType::Regular && !entry.name.empty() && entry.name.back() == '/')
            entry.type = TarEntryType::Directory;

        // Links and directories carry no data regardless of the size field.
        bool has_data = entry.type == TarEntryType::Regular || entry.type == TarEntryType::Other;
        remaining_ = has_data ? entry.size : 0;
        padding_ = has_data ? (kBlock - entry.size % kBlock) % kBlock : 0;
        return true;
    }
}

void TarReader::read_data(const std::function<void(std::span<const char>)>& consumer)
{
    std::array<char, 64 * 1024> buf {};
    while (remaining_ > 0) {
        auto chunk = std::min<std::uint64_t>(remaining_, buf.size());
        read_exact(buf.data(), chunk);
        consumer(std::span<const char>(buf.data(), chunk));
        remaining_ -= chunk;
    }
    skip_data();
}

} // namespace module_forge::detail
