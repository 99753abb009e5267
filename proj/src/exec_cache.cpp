/*
 * Copyright (C) 2026 The module-forge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "module_forge/exec_cache.hpp"

#include <algorithm>

#include <json.hpp>

#include "module_forge/error.hpp"
#include "module_forge/fs_util.hpp"

namespace fs = std::filesystem;

namespace module_forge {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

} // namespace

std::uint64_t FrequencyTable::count_of(const std::string& name) const
{
    auto it = counts.find(name);
    return it == counts.end() ? 0 : it->second;
}

void FrequencyTable::validate() const
{
    for (const auto& [name, count] : counts) {
        if (count < 1 || count > total_containers)
            throw Error(ErrorKind::InvariantViolation,
                "count for '" + name + "' is " + std::to_string(count) + " but total_containers is " +
                    std::to_string(total_containers));
    }
}

CacheStore::CacheStore(fs::path root)
    : root_(std::move(root))
{
}

fs::path CacheStore::listing_path(const ContainerIdentifier& id) const
{
    return root_ / id.relative_path() / kListingFile;
}

bool CacheStore::has_listing(const ContainerIdentifier& id) const
{
    std::error_code ec;
    return fs::is_regular_file(listing_path(id), ec);
}

fs::path CacheStore::store_listing(const ExecutableListing& listing) const
{
    // Round-trip through the parser so a non-canonical identifier can never
    // land at an unexpected location.
    auto id = ContainerIdentifier::parse(listing.identifier.canonical());
    listing.validate();
    auto path = listing_path(id);
    atomic_write(path, serialize_listing(listing));
    return path;
}

ExecutableListing CacheStore::load_listing(const ContainerIdentifier& id) const
{
    auto path = listing_path(id);
    return parse_listing(read_file(path), path.string());
}

std::vector<fs::path> CacheStore::listing_files() const
{
    std::vector<fs::path> files;
    std::error_code ec;
    if (!fs::exists(root_, ec))
        return files;
    for (auto it = fs::recursive_directory_iterator(root_, ec); !ec && it != fs::recursive_directory_iterator();
         it.increment(ec)) {
        if (it->is_regular_file() && it->path().filename() == kListingFile)
            files.push_back(it->path());
    }
    if (ec)
        throw Error(ErrorKind::IoFailure, "cannot walk cache " + root_.string() + ": " + ec.message());
    std::sort(files.begin(), files.end());
    return files;
}

std::string serialize_listing(const ExecutableListing& listing)
{
    ordered_json doc;
    doc["identifier"] = listing.identifier.canonical();
    doc["executables"] = json::object();
    for (const auto& [name, path] : listing.executables)
        doc["executables"][name] = path;
    return doc.dump(2) + "\n";
}

ExecutableListing parse_listing(const std::string& text, const std::string& origin)
{
    auto doc = json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object())
        throw Error(ErrorKind::CorruptListing, origin + ": not a JSON object");
    if (!doc.contains("identifier") || !doc["identifier"].is_string())
        throw Error(ErrorKind::CorruptListing, origin + ": missing string field 'identifier'");
    if (!doc.contains("executables") || !doc["executables"].is_object())
        throw Error(ErrorKind::CorruptListing, origin + ": missing object field 'executables'");

    try {
        ExecutableListing listing {ContainerIdentifier::parse(doc["identifier"].get<std::string>()), {}};
        for (const auto& [name, path] : doc["executables"].items()) {
            if (!path.is_string())
                throw Error(ErrorKind::CorruptListing, origin + ": path for '" + name + "' is not a string");
            listing.executables.emplace(name, path.get<std::string>());
        }
        listing.validate();
        return listing;
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::CorruptListing)
            throw;
        throw Error(ErrorKind::CorruptListing, origin + ": " + e.what());
    }
}

FrequencyTable build_counts(const CacheStore& cache)
{
    FrequencyTable table;
    for (const auto& file : cache.listing_files()) {
        auto listing = parse_listing(read_file(file), file.string());
        ++table.total_containers;
        // Listing keys are unique basenames, so each contributes exactly once.
        for (const auto& [name, path] : listing.executables)
            ++table.counts[name];
    }
    return table;
}

std::string serialize_counts(const FrequencyTable& table)
{
    ordered_json doc;
    doc["total_containers"] = table.total_containers;
    doc["counts"] = ordered_json::object();
    for (const auto& [name, count] : table.counts)
        doc["counts"][name] = count;
    return doc.dump(2) + "\n";
}

FrequencyTable parse_counts(const std::string& text)
{
    auto doc = json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object())
        throw Error(ErrorKind::ParseFailure, "counts document is not a JSON object");
    if (!doc.contains("total_containers") || !doc["total_containers"].is_number_unsigned())
        throw Error(ErrorKind::ParseFailure, "counts document lacks a nonnegative 'total_containers'");
    if (!doc.contains("counts") || !doc["counts"].is_object())
        throw Error(ErrorKind::ParseFailure, "counts document lacks an object 'counts'");

    FrequencyTable table;
    table.total_containers = doc["total_containers"].get<std::uint64_t>();
    for (const auto& [name, count] : doc["counts"].items()) {
        if (!count.is_number_unsigned())
            throw Error(ErrorKind::ParseFailure, "count for '" + name + "' is not a nonnegative integer");
        table.counts.emplace(name, count.get<std::uint64_t>());
    }
    table.validate();
    return table;
}

void write_counts(const FrequencyTable& table, const fs::path& path)
{
    table.validate();
    atomic_write(path, serialize_counts(table));
}

FrequencyTable load_counts(const fs::path& path)
{
    return parse_counts(read_file(path));
}

} // namespace module_forge
