/*
 * Copyright (C) 2026 The module-forge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "module_forge/recipe.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>

#include <json.hpp>
#include <spdlog/spdlog.h>
#include <yaml-cpp/yaml.h>

#include "module_forge/digest.hpp"
#include "module_forge/error.hpp"
#include "module_forge/fs_util.hpp"

namespace fs = std::filesystem;

namespace module_forge {

namespace {

constexpr std::array<std::string_view, 8> kEntryKeys = {
    "docker", "url", "maintainer", "description", "latest", "tags", "aliases", "filter"};

[[noreturn]] void schema(const std::string& message)
{
    throw Error(ErrorKind::SchemaViolation, message);
}

bool lower_equals_any(std::string_view text, std::initializer_list<std::string_view> words)
{
    std::string lower;
    for (char c : text)
        lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return std::find(words.begin(), words.end(), lower) != words.end();
}

/// True when a plain (unquoted) scalar would read back as the same string in
/// any common YAML 1.1/1.2 loader.
bool plain_safe(std::string_view text)
{
    if (text.empty() || text.front() == ' ' || text.back() == ' ' || text.back() == ':')
        return false;
    char first = text.front();
    if (!std::isalnum(static_cast<unsigned char>(first)) && first != '/' && first != '_' && first != '.')
        return false;
    for (char c : text) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && std::string_view("._/+=:-@ ,()").find(c) == std::string_view::npos)
            return false;
    }
    if (text.find(": ") != std::string_view::npos)
        return false;
    if (lower_equals_any(text, {"y", "n", "yes", "no", "true", "false", "on", "off", "null", ".inf", ".nan"}))
        return false;
    // Numbers, sexagesimals and dates: digits mixed only with number punctuation.
    bool numeric_like = std::all_of(text.begin(), text.end(), [](char c) {
        return std::isdigit(static_cast<unsigned char>(c)) || std::string_view("._:eE+-").find(c) != std::string_view::npos;
    });
    bool has_digit = std::any_of(text.begin(), text.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
    return !(numeric_like && has_digit);
}

std::string yaml_scalar(std::string_view text)
{
    if (plain_safe(text))
        return std::string(text);

    bool printable = std::all_of(text.begin(), text.end(), [](char c) {
        auto u = static_cast<unsigned char>(c);
        return u >= 0x20 && u != 0x7f;
    });
    if (printable) {
        std::string out = "'";
        for (char c : text) {
            if (c == '\'')
                out += "''";
            else
                out += c;
        }
        return out + "'";
    }

    static constexpr char hex[] = "0123456789ABCDEF";
    std::string out = "\"";
    for (char c : text) {
        auto u = static_cast<unsigned char>(c);
        switch (c) {
        case '\\':
            out += "\\\\";
            break;
        case '"':
            out += "\\\"";
            break;
        case '\n':
            out += "\\n";
            break;
        case '\t':
            out += "\\t";
            break;
        case '\r':
            out += "\\r";
            break;
        default:
            if (u < 0x20 || u == 0x7f) {
                out += "\\x";
                out += hex[u >> 4];
                out += hex[u & 0x0f];
            } else {
                out += c;
            }
        }
    }
    return out + "\"";
}

std::vector<std::string> sorted_tags(const std::map<std::string, std::string>& tags)
{
    std::vector<TagCandidate> candidates;
    candidates.reserve(tags.size());
    for (const auto& [tag, digest] : tags)
        candidates.push_back(parse_tag(tag));
    std::sort(candidates.begin(), candidates.end(), tag_less);
    std::vector<std::string> out;
    for (auto& c : candidates)
        out.push_back(std::move(c.raw));
    return out;
}

std::string scalar_of(const YAML::Node& node, const std::string& field)
{
    if (!node || node.IsNull())
        return {};
    if (!node.IsScalar())
        schema("field '" + field + "' must be a string");
    return node.as<std::string>();
}

std::map<std::string, std::string> string_map_of(const YAML::Node& node, const std::string& field)
{
    std::map<std::string, std::string> out;
    if (!node || node.IsNull())
        return out;
    if (!node.IsMap())
        schema("field '" + field + "' must be a mapping");
    for (const auto& item : node) {
        if (!item.first.IsScalar() || !(item.second.IsScalar() || item.second.IsNull()))
            schema("field '" + field + "' must map strings to strings");
        auto key = item.first.as<std::string>();
        if (!out.emplace(key, scalar_of(item.second, field + "." + key)).second)
            schema("field '" + field + "' repeats key '" + key + "'");
    }
    return out;
}

/// Tags kept from `ordering` that have a digest, plus the latest choice.
std::pair<std::map<std::string, std::string>, std::pair<std::string, std::string>> assemble_tags(
    const std::string& who, const TagOrdering& ordering, const std::map<std::string, std::string>& digests)
{
    std::map<std::string, std::string> tags;
    for (const auto& candidate : ordering.ordered) {
        auto it = digests.find(candidate.raw);
        if (it == digests.end())
            continue;
        if (!is_valid_digest(it->second))
            throw Error(ErrorKind::InvariantViolation, who + ": tag '" + candidate.raw + "' has malformed digest '" + it->second + "'");
        tags.emplace(candidate.raw, it->second);
    }
    if (tags.empty())
        throw Error(ErrorKind::NoTags, who + ": no tags with digests");

    if (ordering.latest) {
        if (auto it = tags.find(ordering.latest->raw); it != tags.end())
            return {std::move(tags), *it};
    }
    auto fallback = *tags.rbegin();
    spdlog::warn("{}: no version-like tag available, using '{}' as latest", who, fallback.first);
    return {std::move(tags), fallback};
}

nlohmann::ordered_json entry_document(const RegistryEntry& entry)
{
    nlohmann::ordered_json doc;
    doc["docker"] = entry.docker;
    doc["url"] = entry.url;
    doc["maintainer"] = entry.maintainer;
    doc["description"] = entry.description;
    doc["latest"] = nlohmann::ordered_json::object();
    doc["latest"][entry.latest.first] = entry.latest.second;
    doc["tags"] = nlohmann::ordered_json::object();
    for (const auto& tag : sorted_tags(entry.tags))
        doc["tags"][tag] = entry.tags.at(tag);
    doc["aliases"] = nlohmann::ordered_json::object();
    for (const auto& [name, path] : entry.aliases)
        doc["aliases"][name] = path;
    if (entry.filter)
        doc["filter"] = *entry.filter;
    return doc;
}

} // namespace

void RegistryEntry::validate() const
{
    ContainerIdentifier id = [this] {
        try {
            return ContainerIdentifier::parse(docker);
        } catch (const Error& e) {
            schema(std::string("field 'docker': ") + e.what());
        }
    }();
    if (id.canonical() != docker)
        schema("field 'docker' must be the canonical identifier '" + id.canonical() + "'");
    if (tags.empty())
        schema("field 'tags' must not be empty");
    for (const auto& [tag, digest] : tags) {
        if (tag.empty())
            schema("field 'tags' contains an empty tag");
        if (!is_valid_digest(digest))
            schema("tag '" + tag + "' has malformed digest '" + digest + "'");
    }
    auto it = tags.find(latest.first);
    if (it == tags.end() || it->second != latest.second)
        schema("latest tag '" + latest.first + "' must appear in 'tags' with the same digest");
    try {
        validate_aliases(aliases);
    } catch (const Error& e) {
        schema(e.what());
    }
    if (filter) {
        for (const auto& pattern : *filter) {
            try {
                TagGlob glob(pattern);
            } catch (const Error& e) {
                schema(std::string("field 'filter': ") + e.what());
            }
        }
    }
}

std::vector<std::string> EntryDelta::lines() const
{
    std::vector<std::string> out;
    for (const auto& tag : added_tags)
        out.push_back("+" + tag);
    for (const auto& tag : removed_tags)
        out.push_back("-" + tag);
    for (const auto& [tag, change] : digest_changes)
        out.push_back("~" + tag + " " + change.first + " -> " + change.second);
    if (latest_change)
        out.push_back("latest " + latest_change->first + " -> " + latest_change->second);
    return out;
}

RegistryEntry build_entry(const ContainerIdentifier& id, const TagOrdering& ordering,
    const std::map<std::string, std::string>& digests, const AliasSet& aliases, const EntryMetadata& meta)
{
    auto [tags, latest] = assemble_tags(id.canonical(), ordering, digests);
    validate_aliases(aliases);

    RegistryEntry entry;
    entry.docker = id.canonical();
    entry.url = meta.url;
    entry.maintainer = meta.maintainer;
    entry.description = meta.description.empty() ? id.repository() + " container" : meta.description;
    entry.latest = std::move(latest);
    entry.tags = std::move(tags);
    entry.aliases = aliases;
    entry.validate();
    return entry;
}

std::string serialize_entry(const RegistryEntry& entry)
{
    entry.validate();

    std::string out;
    auto line = [&out](std::string_view key, const std::string& value) {
        out += key;
        out += ": ";
        out += yaml_scalar(value);
        out += '\n';
    };
    line("docker", entry.docker);
    line("url", entry.url);
    line("maintainer", entry.maintainer);
    line("description", entry.description);

    out += "latest:\n  " + yaml_scalar(entry.latest.first) + ": " + yaml_scalar(entry.latest.second) + "\n";
    out += "tags:\n";
    for (const auto& tag : sorted_tags(entry.tags))
        out += "  " + yaml_scalar(tag) + ": " + yaml_scalar(entry.tags.at(tag)) + "\n";

    if (entry.aliases.empty()) {
        out += "aliases: {}\n";
    } else {
        out += "aliases:\n";
        for (const auto& [name, path] : entry.aliases)
            out += "  " + yaml_scalar(name) + ": " + yaml_scalar(path) + "\n";
    }

    if (entry.filter) {
        if (entry.filter->empty()) {
            out += "filter: []\n";
        } else {
            out += "filter:\n";
            for (const auto& pattern : *entry.filter)
                out += "- " + yaml_scalar(pattern) + "\n";
        }
    }
    return out;
}

RegistryEntry parse_entry(const std::string& text)
{
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw Error(ErrorKind::ParseFailure, std::string("malformed YAML: ") + e.what());
    }
    if (!root.IsMap())
        schema("entry document must be a mapping");

    for (const auto& item : root) {
        auto key = item.first.as<std::string>();
        if (std::find(kEntryKeys.begin(), kEntryKeys.end(), key) == kEntryKeys.end())
            schema("unknown field '" + key + "'");
    }
    for (const char* required : {"docker", "latest", "tags"}) {
        if (!root[required])
            schema(std::string("missing required field '") + required + "'");
    }

    RegistryEntry entry;
    entry.docker = scalar_of(root["docker"], "docker");
    entry.url = scalar_of(root["url"], "url");
    entry.maintainer = scalar_of(root["maintainer"], "maintainer");
    entry.description = scalar_of(root["description"], "description");

    auto latest = string_map_of(root["latest"], "latest");
    if (latest.size() != 1)
        schema("field 'latest' must hold exactly one tag");
    entry.latest = *latest.begin();
    entry.tags = string_map_of(root["tags"], "tags");
    entry.aliases = string_map_of(root["aliases"], "aliases");

    if (auto filter = root["filter"]; filter) {
        if (!filter.IsSequence() && !filter.IsNull())
            schema("field 'filter' must be a list");
        entry.filter.emplace();
        if (filter.IsSequence()) {
            for (const auto& pattern : filter) {
                if (!pattern.IsScalar())
                    schema("field 'filter' must hold strings");
                entry.filter->push_back(pattern.as<std::string>());
            }
        }
    }

    entry.validate();
    return entry;
}

std::pair<RegistryEntry, EntryDelta> update_entry(
    const RegistryEntry& existing, const TagOrdering& ordering, const std::map<std::string, std::string>& digests)
{
    auto [tags, latest] = assemble_tags(existing.docker, ordering, digests);

    EntryDelta delta;
    for (const auto& tag : sorted_tags(tags)) {
        auto old = existing.tags.find(tag);
        if (old == existing.tags.end())
            delta.added_tags.push_back(tag);
        else if (old->second != tags.at(tag))
            delta.digest_changes.emplace(tag, std::make_pair(old->second, tags.at(tag)));
    }
    for (const auto& tag : sorted_tags(existing.tags)) {
        if (!tags.contains(tag))
            delta.removed_tags.push_back(tag);
    }
    if (existing.latest != latest) {
        auto describe = [](const std::pair<std::string, std::string>& l) { return l.first + "@" + l.second; };
        delta.latest_change = std::make_pair(describe(existing.latest), describe(latest));
    }

    RegistryEntry updated = existing;
    updated.tags = std::move(tags);
    updated.latest = std::move(latest);
    updated.validate();
    return {std::move(updated), std::move(delta)};
}

fs::path entry_path(const fs::path& registry_root, const ContainerIdentifier& id)
{
    return registry_root / id.relative_path() / kEntryFile;
}

std::vector<fs::path> find_entries(const fs::path& registry_root)
{
    std::vector<fs::path> files;
    std::error_code ec;
    if (!fs::exists(registry_root, ec))
        return files;
    for (auto it = fs::recursive_directory_iterator(registry_root, ec); !ec && it != fs::recursive_directory_iterator();
         it.increment(ec)) {
        if (it->is_regular_file() && it->path().filename() == kEntryFile)
            files.push_back(it->path());
    }
    if (ec)
        throw Error(ErrorKind::IoFailure, "cannot walk registry " + registry_root.string() + ": " + ec.message());
    std::sort(files.begin(), files.end());
    return files;
}

RegistryEntry load_entry(const fs::path& path)
{
    try {
        return parse_entry(read_file(path));
    } catch (const Error& e) {
        throw Error(e.kind(), path.string() + ": " + e.what());
    }
}

fs::path write_entry(const fs::path& registry_root, const RegistryEntry& entry)
{
    auto path = entry_path(registry_root, entry.identifier());
    atomic_write(path, serialize_entry(entry));
    return path;
}

void export_static_api(const fs::path& registry_root, const fs::path& out_dir)
{
    std::vector<RegistryEntry> entries;
    for (const auto& file : find_entries(registry_root))
        entries.push_back(load_entry(file));
    std::sort(entries.begin(), entries.end(),
        [](const RegistryEntry& a, const RegistryEntry& b) { return a.docker < b.docker; });

    auto library = nlohmann::ordered_json::array();
    for (const auto& entry : entries) {
        nlohmann::ordered_json item;
        item["identifier"] = entry.docker;
        item["latest"] = entry.latest.first;
        library.push_back(std::move(item));
        atomic_write(out_dir / entry.identifier().relative_path() / "container.json", entry_document(entry).dump(2) + "\n");
    }
    atomic_write(out_dir / "library.json", library.dump(2) + "\n");
}

} // namespace module_forge
