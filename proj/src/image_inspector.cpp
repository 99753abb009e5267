/*
 * Copyright (C) 2026 The module-forge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "module_forge/image_inspector.hpp"

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <deque>
#include <fstream>
#include <unordered_set>

#include <sys/stat.h>
#include <unistd.h>

#include <spdlog/spdlog.h>

#include "module_forge/error.hpp"
#include "module_forge/fs_util.hpp"
#include "tar_reader.hpp"

namespace fs = std::filesystem;

namespace module_forge {

namespace {

constexpr std::string_view kWhiteoutPrefix = ".wh.";
constexpr std::string_view kOpaqueWhiteout = ".wh..wh..opq";
constexpr int kMaxSymlinkHops = 40;

std::vector<std::string> split(std::string_view text, char sep)
{
    std::vector<std::string> parts;
    size_t start = 0;
    while (true) {
        auto pos = text.find(sep, start);
        parts.emplace_back(text.substr(start, pos - start));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return parts;
}

std::optional<struct stat> lstat_path(const fs::path& path)
{
    struct stat st {};
    if (::lstat(path.c_str(), &st) != 0)
        return std::nullopt;
    return st;
}

/// Normalises an archive member name to in-tree components, rejecting names
/// that climb above the root.
std::vector<std::string> member_components(const std::string& name, const fs::path& archive)
{
    std::vector<std::string> out;
    for (auto& part : split(name, '/')) {
        if (part.empty() || part == ".")
            continue;
        if (part == "..") {
            if (out.empty())
                throw Error(ErrorKind::PathTraversal,
                    archive.string() + ": entry '" + name + "' escapes the extraction root");
            out.pop_back();
            continue;
        }
        out.push_back(std::move(part));
    }
    return out;
}

std::string join(const std::vector<std::string>& components)
{
    std::string out;
    for (const auto& c : components) {
        if (!out.empty())
            out += '/';
        out += c;
    }
    return out;
}

enum class MissingPolicy { Fail, CreateDirectories };

/// Chroot-style walk of `components` below `root`. Returns the resolved
/// relative components, or nullopt when resolution fails.
std::optional<std::vector<std::string>> resolve_components(
    const fs::path& root, std::deque<std::string> pending, bool follow_final, MissingPolicy missing)
{
    std::vector<std::string> resolved;
    int hops = 0;

    while (!pending.empty()) {
        auto component = std::move(pending.front());
        pending.pop_front();
        if (component.empty() || component == ".")
            continue;
        if (component == "..") {
            if (!resolved.empty())
                resolved.pop_back();
            else if (missing == MissingPolicy::CreateDirectories)
                throw Error(ErrorKind::PathTraversal, "path climbs above the extraction root through a symlink");
            continue;
        }

        const bool is_final = std::none_of(pending.begin(), pending.end(),
            [](const std::string& c) { return !c.empty() && c != "."; });
        auto candidate = root / join(resolved) / component;
        auto st = lstat_path(candidate);

        if (!st) {
            if (is_final) {
                resolved.push_back(std::move(component));
                return resolved;
            }
            if (missing == MissingPolicy::Fail)
                return std::nullopt;
            std::error_code ec;
            fs::create_directory(candidate, ec);
            if (ec)
                throw Error(ErrorKind::IoFailure, "cannot create " + candidate.string() + ": " + ec.message());
            resolved.push_back(std::move(component));
            continue;
        }

        if (S_ISLNK(st->st_mode) && (!is_final || follow_final)) {
            if (++hops > kMaxSymlinkHops)
                return std::nullopt;
            std::error_code ec;
            auto target = fs::read_symlink(candidate, ec);
            if (ec)
                return std::nullopt;
            auto target_str = target.string();
            if (!target_str.empty() && target_str.front() == '/')
                resolved.clear();
            auto parts = split(target_str, '/');
            pending.insert(pending.begin(), parts.begin(), parts.end());
            continue;
        }

        if (!is_final && !S_ISDIR(st->st_mode))
            return std::nullopt;
        resolved.push_back(std::move(component));
    }
    return resolved;
}

void remove_path(const fs::path& path)
{
    std::error_code ec;
    auto st = lstat_path(path);
    if (!st)
        return;
    if (S_ISDIR(st->st_mode)) {
        for (auto it = fs::recursive_directory_iterator(path, ec); !ec && it != fs::recursive_directory_iterator();
             it.increment(ec)) {
            if (it->is_directory(ec) && !it->is_symlink(ec))
                fs::permissions(it->path(), fs::perms::owner_all, fs::perm_options::add, ec);
        }
        fs::permissions(path, fs::perms::owner_all, fs::perm_options::add, ec);
    }
    fs::remove_all(path, ec);
    if (ec)
        throw Error(ErrorKind::IoFailure, "cannot remove " + path.string() + ": " + ec.message());
}

/// Removes everything under `dir` that the current layer did not create.
void clear_lower_entries(const fs::path& root, const fs::path& dir, const std::unordered_set<std::string>& layer_paths)
{
    std::error_code ec;
    std::vector<fs::path> children;
    for (const auto& child : fs::directory_iterator(dir, ec))
        children.push_back(child.path());
    for (const auto& child : children) {
        auto rel = child.lexically_relative(root).generic_string();
        if (!layer_paths.contains(rel)) {
            remove_path(child);
            continue;
        }
        auto st = lstat_path(child);
        if (st && S_ISDIR(st->st_mode))
            clear_lower_entries(root, child, layer_paths);
    }
}

class LayerApplier {
public:
    explicit LayerApplier(fs::path root)
        : root_(std::move(root))
    {
    }

    void apply(const fs::path& archive)
    {
        layer_paths_.clear();
        detail::TarReader reader(archive);
        detail::TarEntry entry;
        while (reader.next(entry))
            apply_entry(archive, reader, entry);
    }

private:
    fs::path resolve_parent(const std::vector<std::string>& components)
    {
        std::deque<std::string> parent(components.begin(), components.end() - 1);
        if (parent.empty())
            return root_;
        auto resolved = resolve_components(root_, parent, true, MissingPolicy::CreateDirectories);
        if (!resolved)
            throw Error(ErrorKind::MalformedArchive, "parent of '" + join(components) + "' is not a directory");
        auto dir = root_ / join(*resolved);
        auto st = lstat_path(dir);
        if (!st) {
            std::error_code ec;
            fs::create_directories(dir, ec);
        } else if (!S_ISDIR(st->st_mode)) {
            throw Error(ErrorKind::MalformedArchive, "parent of '" + join(components) + "' is not a directory");
        }
        return dir;
    }

    void record(const fs::path& target)
    {
        auto rel = target.lexically_relative(root_).generic_string();
        layer_paths_.insert(rel);
        // Ancestors count as provided by this layer for opaque handling.
        auto parent = fs::path(rel).parent_path();
        while (!parent.empty()) {
            layer_paths_.insert(parent.generic_string());
            parent = parent.parent_path();
        }
    }

    void apply_entry(const fs::path& archive, detail::TarReader& reader, const detail::TarEntry& entry)
    {
        auto components = member_components(entry.name, archive);
        if (components.empty())
            return; // the root directory itself

        const auto& base = components.back();
        if (base == kOpaqueWhiteout) {
            components.pop_back();
            auto dir = components.empty() ? root_ : resolve_parent(components) / components.back();
            auto st = lstat_path(dir);
            if (st && S_ISDIR(st->st_mode))
                clear_lower_entries(root_, dir, layer_paths_);
            return;
        }
        if (base.starts_with(kWhiteoutPrefix)) {
            auto victim = resolve_parent(components) / base.substr(kWhiteoutPrefix.size());
            if (!layer_paths_.contains(victim.lexically_relative(root_).generic_string()))
                remove_path(victim);
            return;
        }

        auto target = resolve_parent(components) / base;
        auto existing = lstat_path(target);

        switch (entry.type) {
        case detail::TarEntryType::Directory: {
            if (existing && !S_ISDIR(existing->st_mode))
                remove_path(target);
            if (!existing || !S_ISDIR(existing->st_mode)) {
                if (::mkdir(target.c_str(), 0700) != 0)
                    throw Error(ErrorKind::IoFailure, "cannot create " + target.string() + ": " + std::strerror(errno));
            }
            ::chmod(target.c_str(), static_cast<mode_t>((entry.mode & 07777) | 0700));
            break;
        }
        case detail::TarEntryType::Regular: {
            if (existing)
                remove_path(target);
            std::ofstream out(target, std::ios::binary | std::ios::trunc);
            if (!out)
                throw Error(ErrorKind::IoFailure, "cannot create " + target.string());
            reader.read_data([&out](std::span<const char> data) {
                out.write(data.data(), static_cast<std::streamsize>(data.size()));
            });
            out.close();
            ::chmod(target.c_str(), static_cast<mode_t>(entry.mode & 0777));
            break;
        }
        case detail::TarEntryType::Symlink: {
            if (existing)
                remove_path(target);
            if (::symlink(entry.link_name.c_str(), target.c_str()) != 0)
                throw Error(ErrorKind::IoFailure, "cannot create symlink " + target.string() + ": " + std::strerror(errno));
            break;
        }
        case detail::TarEntryType::HardLink: {
            auto link_components = member_components(entry.link_name, archive);
            if (link_components.empty())
                throw Error(ErrorKind::MalformedArchive, "hard link '" + entry.name + "' has no target");
            std::deque<std::string> pending(link_components.begin(), link_components.end());
            auto resolved = resolve_components(root_, pending, false, MissingPolicy::Fail);
            auto source = resolved ? std::optional(root_ / join(*resolved)) : std::nullopt;
            auto source_st = source ? lstat_path(*source) : std::nullopt;
            if (!source_st || !S_ISREG(source_st->st_mode))
                throw Error(ErrorKind::MalformedArchive,
                    "hard link '" + entry.name + "' targets missing file '" + entry.link_name + "'");
            if (*source == target)
                break;
            if (existing)
                remove_path(target);
            // Hard links become independent copies.
            std::error_code ec;
            fs::copy_file(*source, target, fs::copy_options::overwrite_existing, ec);
            if (ec)
                throw Error(ErrorKind::IoFailure, "cannot copy " + source->string() + ": " + ec.message());
            ::chmod(target.c_str(), source_st->st_mode & 0777);
            break;
        }
        case detail::TarEntryType::Other:
            return; // devices and fifos are not materialised
        }
        record(target);
    }

    fs::path root_;
    std::unordered_set<std::string> layer_paths_;
};

bool is_executable_file(const struct stat& st)
{
    return S_ISREG(st.st_mode) && (st.st_mode & (S_IXUSR | S_IXGRP | S_IXOTH)) != 0;
}

std::string trim(std::string_view text)
{
    auto begin = text.find_first_not_of(" \t\r\n");
    if (begin == std::string_view::npos)
        return {};
    auto end = text.find_last_not_of(" \t\r\n");
    return std::string(text.substr(begin, end - begin + 1));
}

} // namespace

void ExecutableListing::validate() const
{
    for (const auto& [name, path] : executables) {
        if (name.empty() || name.find('/') != std::string::npos)
            throw Error(ErrorKind::InvariantViolation, "executable name '" + name + "' is not a basename");
        if (path.empty() || path.front() != '/')
            throw Error(ErrorKind::InvariantViolation, "executable path '" + path + "' is not absolute");
        if (path.size() <= name.size() || path.compare(path.size() - name.size(), name.size(), name) != 0 ||
            path[path.size() - name.size() - 1] != '/')
            throw Error(ErrorKind::InvariantViolation, "path '" + path + "' does not end in '/" + name + "'");
    }
}

BaseSet BaseSet::parse(std::string base_name, std::string_view text)
{
    if (base_name.empty())
        throw Error(ErrorKind::ParseFailure, "base set name must not be empty");
    BaseSet set {std::move(base_name), {}};
    size_t line_no = 0;
    for (const auto& raw : split(text, '\n')) {
        ++line_no;
        auto line = std::string_view(raw);
        if (auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        auto name = trim(line);
        if (name.empty())
            continue;
        if (name.find('/') != std::string::npos)
            throw Error(ErrorKind::ParseFailure,
                "base set " + set.base_name + " line " + std::to_string(line_no) + ": '" + name + "' is not a basename");
        set.executables.insert(std::move(name));
    }
    return set;
}

BaseSet BaseSet::load(const fs::path& file)
{
    return parse(file.stem().string(), read_file(file));
}

std::vector<BaseSet> BaseSet::load_directory(const fs::path& dir)
{
    std::vector<fs::path> files;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(dir, ec)) {
        if (entry.is_regular_file() && entry.path().extension() == ".txt")
            files.push_back(entry.path());
    }
    if (ec)
        throw Error(ErrorKind::IoFailure, "cannot list base sets in " + dir.string() + ": " + ec.message());
    std::sort(files.begin(), files.end());
    std::vector<BaseSet> sets;
    for (const auto& file : files)
        sets.push_back(load(file));
    return sets;
}

PathDirs extract_path_dirs(const ImageConfig& config)
{
    std::optional<std::string> value;
    for (const auto& entry : config.env) {
        if (entry.starts_with("PATH="))
            value = entry.substr(5);
    }

    PathDirs out;
    for (auto& dir : split(value.value_or(kDefaultPath), ':')) {
        if (dir.empty() || dir.front() != '/')
            continue;
        while (dir.size() > 1 && dir.back() == '/')
            dir.pop_back();
        out.dirs.push_back(std::move(dir));
    }
    return out;
}

FsTree unpack_layers(const std::vector<fs::path>& layers, const fs::path& dest)
{
    std::error_code ec;
    fs::create_directories(dest, ec);
    if (ec)
        throw Error(ErrorKind::IoFailure, "cannot create " + dest.string() + ": " + ec.message());
    if (!fs::is_empty(dest, ec))
        throw Error(ErrorKind::IoFailure, "unpack destination " + dest.string() + " is not empty");

    auto root = fs::canonical(dest);
    LayerApplier applier(root);
    for (const auto& layer : layers) {
        spdlog::debug("applying layer {}", layer.string());
        applier.apply(layer);
    }
    return FsTree {root};
}

std::optional<fs::path> resolve_in_tree(const FsTree& tree, std::string_view path, bool follow_final)
{
    auto parts = split(path, '/');
    std::deque<std::string> pending(parts.begin(), parts.end());
    auto resolved = resolve_components(tree.root, pending, follow_final, MissingPolicy::Fail);
    if (!resolved)
        return std::nullopt;
    auto full = tree.root / join(*resolved);
    if (!lstat_path(full))
        return std::nullopt;
    return full;
}

ExecutableListing enumerate_executables(const FsTree& tree, const PathDirs& dirs, const ContainerIdentifier& id)
{
    ExecutableListing listing {id, {}};

    for (const auto& dir : dirs.dirs) {
        auto resolved = resolve_in_tree(tree, dir);
        if (!resolved)
            continue;
        auto dir_st = lstat_path(*resolved);
        if (!dir_st || !S_ISDIR(dir_st->st_mode))
            continue;

        std::vector<std::string> names;
        std::error_code ec;
        for (const auto& child : fs::directory_iterator(*resolved, ec))
            names.push_back(child.path().filename().string());
        std::sort(names.begin(), names.end());

        const auto prefix = dir == "/" ? std::string("/") : dir + "/";
        for (const auto& name : names) {
            if (listing.executables.contains(name))
                continue;
            auto st = lstat_path(*resolved / name);
            if (!st)
                continue;
            if (S_ISLNK(st->st_mode)) {
                auto target = resolve_in_tree(tree, prefix + name);
                if (!target)
                    continue;
                st = lstat_path(*target);
                if (!st)
                    continue;
            }
            if (is_executable_file(*st))
                listing.executables.emplace(name, prefix + name);
        }
    }
    return listing;
}

ExecutableListing diff_against_bases(const ExecutableListing& listing, const std::vector<BaseSet>& bases)
{
    ExecutableListing out {listing.identifier, {}};
    for (const auto& [name, path] : listing.executables) {
        bool in_base = std::any_of(
            bases.begin(), bases.end(), [&name](const BaseSet& base) { return base.executables.contains(name); });
        if (!in_base)
            out.executables.emplace(name, path);
    }
    return out;
}

} // namespace module_forge
