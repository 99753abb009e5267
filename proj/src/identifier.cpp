/*
 * Copyright (C) 2026 The module-forge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "module_forge/identifier.hpp"

#include <vector>

#include "module_forge/digest.hpp"
#include "module_forge/error.hpp"

namespace module_forge {

namespace {

bool is_component_char(char c)
{
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
}

bool is_host_char(char c)
{
    return is_component_char(c) || c == ':';
}

[[noreturn]] void invalid(std::string_view text, std::string_view why)
{
    throw Error(ErrorKind::InvalidIdentifier, "invalid container identifier '" + std::string(text) + "': " + std::string(why));
}

std::vector<std::string_view> split_slash(std::string_view text)
{
    std::vector<std::string_view> parts;
    size_t start = 0;
    while (true) {
        auto pos = text.find('/', start);
        parts.push_back(text.substr(start, pos - start));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return parts;
}

void check_component(std::string_view text, std::string_view component)
{
    if (component.empty())
        invalid(text, "empty path component");
    for (char c : component) {
        if (c >= 'A' && c <= 'Z')
            invalid(text, "identifiers must be lowercase");
        if (!is_component_char(c))
            invalid(text, "unexpected character '" + std::string(1, c) + "'");
    }
    if (component.front() == '.' || component.front() == '-' || component.back() == '.' || component.back() == '-')
        invalid(text, "component '" + std::string(component) + "' must start and end alphanumeric");
}

bool looks_like_host(std::string_view component)
{
    return component.find('.') != std::string_view::npos || component.find(':') != std::string_view::npos ||
        component == "localhost";
}

} // namespace

ContainerIdentifier::ContainerIdentifier(std::string host, std::string ns, std::string repo)
    : host_(std::move(host))
    , namespace_(std::move(ns))
    , repository_(std::move(repo))
{
}

ContainerIdentifier ContainerIdentifier::parse(std::string_view text)
{
    if (text.empty())
        invalid(text, "empty");
    if (text.find('@') != std::string_view::npos)
        invalid(text, "digest suffix not allowed");

    auto parts = split_slash(text);
    std::string host;
    size_t first = 0;
    if (parts.size() > 1 && looks_like_host(parts[0])) {
        for (char c : parts[0]) {
            if (c >= 'A' && c <= 'Z')
                invalid(text, "identifiers must be lowercase");
            if (!is_host_char(c))
                invalid(text, "unexpected character in host");
        }
        host = std::string(parts[0]);
        first = 1;
    } else {
        host = "docker.io";
    }

    std::vector<std::string_view> path(parts.begin() + static_cast<std::ptrdiff_t>(first), parts.end());
    if (path.empty())
        invalid(text, "missing repository");
    for (auto component : path)
        check_component(text, component);

    std::string ns;
    if (path.size() == 1) {
        ns = "library";
    } else {
        for (size_t i = 0; i + 1 < path.size(); ++i) {
            if (i)
                ns += '/';
            ns += path[i];
        }
    }

    return ContainerIdentifier(std::move(host), std::move(ns), std::string(path.back()));
}

std::string ContainerIdentifier::api_name() const
{
    return namespace_ + "/" + repository_;
}

std::string ContainerIdentifier::canonical() const
{
    return host_ + "/" + namespace_ + "/" + repository_;
}

std::filesystem::path ContainerIdentifier::relative_path() const
{
    return std::filesystem::path(canonical());
}

ImageReference ImageReference::parse(std::string_view text)
{
    std::optional<std::string> digest;
    std::optional<std::string> tag;

    auto at = text.find('@');
    if (at != std::string_view::npos) {
        digest = std::string(text.substr(at + 1));
        if (!is_valid_digest(*digest))
            invalid(text, "malformed digest");
        text = text.substr(0, at);
    }

    auto slash = text.rfind('/');
    auto colon = text.rfind(':');
    if (colon != std::string_view::npos && (slash == std::string_view::npos || colon > slash)) {
        tag = std::string(text.substr(colon + 1));
        if (tag->empty())
            invalid(text, "empty tag");
        text = text.substr(0, colon);
    }

    return ImageReference {ContainerIdentifier::parse(text), std::move(tag), std::move(digest)};
}

} // namespace module_forge
