/*
 * Copyright (C) 2026 The module-forge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "tar_writer.hpp"

#include <array>
#include <cstdio>
#include <cstring>
#include <stdexcept>

#include <zlib.h>

namespace module_forge::testing {

namespace {

void put(std::array<char, 512>& block, std::size_t offset, std::size_t width, const std::string& text)
{
    std::memcpy(block.data() + offset, text.data(), std::min(width, text.size()));
}

void put_octal(std::array<char, 512>& block, std::size_t offset, std::size_t width, unsigned long long value)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%0*llo", static_cast<int>(width - 1), value);
    std::memcpy(block.data() + offset, buf, width - 1);
}

std::string header(const std::string& name, char type, std::size_t size, unsigned mode, const std::string& link)
{
    std::array<char, 512> block {};
    put(block, 0, 100, name);
    put_octal(block, 100, 8, mode);
    put_octal(block, 108, 8, 0);
    put_octal(block, 116, 8, 0);
    put_octal(block, 124, 12, size);
    put_octal(block, 136, 12, 0);
    block[156] = type;
    put(block, 157, 100, link);
    std::memcpy(block.data() + 257, "ustar", 6);
    std::memcpy(block.data() + 263, "00", 2);
    put(block, 265, 32, "root");
    put(block, 297, 32, "root");

    std::memset(block.data() + 148, ' ', 8);
    unsigned sum = 0;
    for (char c : block)
        sum += static_cast<unsigned char>(c);
    char buf[8];
    std::snprintf(buf, sizeof buf, "%06o", sum);
    std::memcpy(block.data() + 148, buf, 7);
    return std::string(block.data(), block.size());
}

std::string padded(const std::string& data)
{
    auto out = data;
    out.resize((data.size() + 511) / 512 * 512, '\0');
    return out;
}

std::string pax_record(const std::string& key, const std::string& value)
{
    // Length prefix counts itself, so iterate to a fixed point.
    auto body = " " + key + "=" + value + "\n";
    auto length = body.size();
    while (std::to_string(length).size() + body.size() != length)
        length = std::to_string(length).size() + body.size();
    return std::to_string(length) + body;
}

std::string member_body(const TarMember& m)
{
    return header(m.name.substr(0, 100), m.type, m.type == '0' ? m.data.size() : 0, m.mode, m.link) +
        (m.type == '0' ? padded(m.data) : std::string());
}

} // namespace

TarMember TarMember::file(std::string name, std::string data, unsigned mode)
{
    return {std::move(name), '0', std::move(data), mode, {}};
}

TarMember TarMember::exe(std::string name, std::string data)
{
    return {std::move(name), '0', std::move(data), 0755, {}};
}

TarMember TarMember::dir(std::string name)
{
    return {std::move(name), '5', {}, 0755, {}};
}

TarMember TarMember::symlink(std::string name, std::string target)
{
    return {std::move(name), '2', {}, 0777, std::move(target)};
}

TarMember TarMember::hardlink(std::string name, std::string target)
{
    return {std::move(name), '1', {}, 0644, std::move(target)};
}

std::string make_tar(const std::vector<TarMember>& members)
{
    std::string out;
    for (const auto& m : members) {
        if (m.name.size() > 100) {
            auto data = m.name + '\0';
            out += header("././@LongLink", 'L', data.size(), 0, {}) + padded(data);
        }
        if (m.link.size() > 100) {
            auto data = m.link + '\0';
            out += header("././@LongLink", 'K', data.size(), 0, {}) + padded(data);
        }
        out += member_body(m);
    }
    return out + std::string(1024, '\0');
}

std::string make_pax_tar(const std::vector<TarMember>& members)
{
    std::string out;
    for (const auto& m : members) {
        std::string records;
        if (m.name.size() > 100)
            records += pax_record("path", m.name);
        if (m.link.size() > 100)
            records += pax_record("linkpath", m.link);
        if (!records.empty())
            out += header("PaxHeaders/entry", 'x', records.size(), 0644, {}) + padded(records);
        out += member_body(m);
    }
    return out + std::string(1024, '\0');
}

std::string gzip(const std::string& data)
{
    z_stream zs {};
    if (deflateInit2(&zs, Z_BEST_COMPRESSION, Z_DEFLATED, 15 + 16, 9, Z_DEFAULT_STRATEGY) != Z_OK)
        throw std::runtime_error("deflateInit2 failed");
    std::string out(deflateBound(&zs, data.size()) + 32, '\0');
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
    zs.avail_in = static_cast<uInt>(data.size());
    zs.next_out = reinterpret_cast<Bytef*>(out.data());
    zs.avail_out = static_cast<uInt>(out.size());
    auto rc = deflate(&zs, Z_FINISH);
    deflateEnd(&zs);
    if (rc != Z_STREAM_END)
        throw std::runtime_error("deflate failed");
    out.resize(zs.total_out);
    return out;
}

} // namespace module_forge::testing
