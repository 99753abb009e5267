/*
 * Copyright (C) 2026 The module-forge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "module_forge/fs_util.hpp"

#include <atomic>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>
#include <utility>

#include <unistd.h>

#include "module_forge/error.hpp"

namespace fs = std::filesystem;

namespace module_forge {

namespace {

std::string unique_suffix()
{
    static std::atomic<unsigned> counter {0};
    std::ostringstream out;
    out << ::getpid() << '.' << std::hash<std::thread::id> {}(std::this_thread::get_id()) % 100000 << '.' << counter++;
    return out.str();
}

} // namespace

void atomic_write(const fs::path& path, std::string_view content)
{
    std::error_code ec;
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path(), ec);
        if (ec)
            throw Error(ErrorKind::IoFailure, "cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }

    auto tmp = path;
    tmp += ".tmp." + unique_suffix();
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error(ErrorKind::IoFailure, "cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            fs::remove(tmp, ec);
            throw Error(ErrorKind::IoFailure, "short write to " + tmp.string());
        }
    }

    fs::rename(tmp, path, ec);
    if (ec) {
        std::error_code ignored;
        fs::remove(tmp, ignored);
        throw Error(ErrorKind::IoFailure, "cannot rename into " + path.string() + ": " + ec.message());
    }
}

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::IoFailure, "cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

ScratchDir::ScratchDir(std::string_view prefix)
{
    auto tmpl = (fs::temp_directory_path() / (std::string(prefix) + "-XXXXXX")).string();
    if (::mkdtemp(tmpl.data()) == nullptr)
        throw Error(ErrorKind::IoFailure, "cannot create scratch directory: " + std::string(std::strerror(errno)));
    path_ = tmpl;
}

ScratchDir::~ScratchDir()
{
    if (!keep_ && !path_.empty()) {
        // Directories unpacked from images may lack owner write permission.
        std::error_code ec;
        for (auto it = fs::recursive_directory_iterator(path_, ec); !ec && it != fs::recursive_directory_iterator();
             it.increment(ec)) {
            if (it->is_directory(ec) && !it->is_symlink(ec))
                fs::permissions(it->path(), fs::perms::owner_all, fs::perm_options::add, ec);
        }
        fs::remove_all(path_, ec);
    }
}

ScratchDir::ScratchDir(ScratchDir&& other) noexcept
    : path_(std::exchange(other.path_, {}))
    , keep_(other.keep_)
{
}

ScratchDir& ScratchDir::operator=(ScratchDir&& other) noexcept
{
    if (this != &other) {
        ScratchDir discard(std::move(*this));
        path_ = std::exchange(other.path_, {});
        keep_ = other.keep_;
    }
    return *this;
}

} // namespace module_forge
