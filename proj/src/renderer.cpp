/*
 * Copyright (C) 2026 The module-forge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "module_forge/renderer.hpp"

#include <algorithm>
#include <cctype>

#include "module_forge/digest.hpp"
#include "module_forge/error.hpp"

namespace fs = std::filesystem;

namespace module_forge {

namespace {

bool shell_inert(const std::string& word)
{
    return !word.empty() && std::all_of(word.begin(), word.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || std::string_view("._+@=:,%/-").find(c) != std::string_view::npos;
    });
}

bool uses_run_shape(const std::string& runtime)
{
    auto base = fs::path(runtime).filename().string();
    return base == "docker" || base == "podman";
}

std::string lua_quote(const std::string& text)
{
    std::string out = "\"";
    for (char c : text) {
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
        case '\r':
            out += "\\r";
            break;
        case '\t':
            out += "\\t";
            break;
        default:
            if (static_cast<unsigned char>(c) < 0x20) {
                char buf[8];
                std::snprintf(buf, sizeof buf, "\\%03d", static_cast<unsigned char>(c));
                out += buf;
            } else {
                out += c;
            }
        }
    }
    return out + "\"";
}

/// `[==[text]==]` with the smallest level that cannot terminate early.
std::string lua_long_string(const std::string& text)
{
    std::string level;
    while (text.find("]" + level + "]") != std::string::npos || (!text.empty() && text.back() == ']'))
        level += '=';
    return "[" + level + "[\n" + text + "]" + level + "]";
}

std::string tcl_quote(const std::string& text)
{
    std::string out = "\"";
    for (char c : text) {
        switch (c) {
        case '\\':
        case '"':
        case '$':
        case '[':
        case ']':
        case '{':
        case '}':
            out += '\\';
            out += c;
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
            out += c;
        }
    }
    return out + "\"";
}

std::vector<std::string> split_lines(const std::string& text)
{
    std::vector<std::string> lines;
    size_t start = 0;
    while (start <= text.size()) {
        auto pos = text.find('\n', start);
        lines.push_back(text.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
        if (pos == std::string::npos)
            break;
        start = pos + 1;
    }
    return lines;
}

/// Help body shared by both dialects.
std::vector<std::string> help_lines(const RegistryEntry& entry, const RenderContext& ctx)
{
    std::vector<std::string> lines;
    lines.push_back("Container module for " + entry.docker + " (" + module_version(entry, ctx) + ")");
    lines.push_back("");
    for (auto& line : split_lines(entry.description))
        lines.push_back(std::move(line));
    lines.push_back("");
    lines.push_back("Commands:");
    size_t width = 0;
    for (const auto& [name, path] : entry.aliases)
        width = std::max(width, name.size());
    for (const auto& [name, path] : entry.aliases)
        lines.push_back("  " + name + std::string(width - name.size() + 2, ' ') + path);
    if (!entry.url.empty()) {
        lines.push_back("");
        lines.push_back("Url: " + entry.url);
    }
    return lines;
}

std::string csh_variant(const std::string& bash_line)
{
    constexpr std::string_view passthrough = "\"$@\"";
    auto out = bash_line;
    if (out.size() >= passthrough.size() && out.compare(out.size() - passthrough.size(), passthrough.size(), passthrough) == 0)
        out.replace(out.size() - passthrough.size(), passthrough.size(), "$*");
    return out;
}

} // namespace

std::string ContainerRef::str() const
{
    if (digest)
        return identifier.canonical() + "@" + *digest;
    return identifier.canonical() + ":" + tag.value_or("latest");
}

void RenderContext::validate() const
{
    if (runtime.empty() || !shell_inert(runtime))
        throw Error(ErrorKind::Usage, "runtime '" + runtime + "' is not a plain command word");
    if (container.tag.has_value() == container.digest.has_value())
        throw Error(ErrorKind::Usage, "container reference must be pinned to exactly one tag or digest");
    if (container.digest && !is_valid_digest(*container.digest))
        throw Error(ErrorKind::Usage, "container digest '" + *container.digest + "' is malformed");
    if (container.tag && (container.tag->empty() || !shell_inert(*container.tag)))
        throw Error(ErrorKind::Usage, "container tag '" + container.tag.value_or("") + "' is not shell-safe");
    for (const auto& bind : binds) {
        auto colon = bind.find(':');
        if (colon == std::string::npos || bind.find(':', colon + 1) != std::string::npos || colon == 0 ||
            colon + 1 >= bind.size() || bind[0] != '/' || bind[colon + 1] != '/')
            throw Error(ErrorKind::Usage, "bind '" + bind + "' must be two absolute paths joined by ':'");
    }
}

ModuleFormat parse_module_format(const std::string& text)
{
    if (text == "lua" || text == "lmod")
        return ModuleFormat::Lua;
    if (text == "tcl")
        return ModuleFormat::Tcl;
    throw Error(ErrorKind::Usage, "unknown module format '" + text + "' (expected lua or tcl)");
}

const char* module_file_name(ModuleFormat format)
{
    return format == ModuleFormat::Lua ? "module.lua" : "module.tcl";
}

RenderContext default_context(const RegistryEntry& entry, const std::optional<std::string>& tag)
{
    const auto& wanted = tag.value_or(entry.latest.first);
    auto it = entry.tags.find(wanted);
    if (it == entry.tags.end())
        throw Error(ErrorKind::Usage, entry.docker + " has no tag '" + wanted + "'");
    return RenderContext {.container = ContainerRef {entry.identifier(), std::nullopt, it->second}, .runtime_options = {}, .binds = {}};
}

std::string shell_quote(const std::string& word)
{
    if (shell_inert(word))
        return word;
    std::string out = "'";
    for (char c : word) {
        if (c == '\'')
            out += "'\\''";
        else
            out += c;
    }
    return out + "'";
}

std::string render_exec_line(const RegistryEntry& entry, const std::string& alias, const RenderContext& ctx)
{
    auto it = entry.aliases.find(alias);
    if (it == entry.aliases.end())
        throw Error(ErrorKind::UnknownAlias, entry.docker + " has no alias '" + alias + "'");
    validate_aliases({{it->first, it->second}});
    ctx.validate();

    std::string line = ctx.runtime;
    if (uses_run_shape(ctx.runtime)) {
        line += " run --rm -i";
        for (const auto& option : ctx.runtime_options)
            line += " " + shell_quote(option);
        for (const auto& bind : ctx.binds)
            line += " -v " + shell_quote(bind);
        line += " --entrypoint " + it->second + " " + shell_quote(ctx.container.str());
    } else {
        line += " exec";
        for (const auto& option : ctx.runtime_options)
            line += " " + shell_quote(option);
        for (const auto& bind : ctx.binds)
            line += " -B " + shell_quote(bind);
        line += " " + shell_quote("docker://" + ctx.container.str()) + " " + it->second;
    }
    return line + " \"$@\"";
}

std::string module_version(const RegistryEntry& entry, const RenderContext& ctx)
{
    if (ctx.container.tag)
        return *ctx.container.tag;
    if (ctx.container.digest) {
        if (entry.latest.second == *ctx.container.digest)
            return entry.latest.first;
        for (const auto& [tag, digest] : entry.tags) {
            if (digest == *ctx.container.digest)
                return tag;
        }
        return *ctx.container.digest;
    }
    return entry.latest.first;
}

std::string render_modulefile(const RegistryEntry& entry, const RenderContext& ctx, ModuleFormat format)
{
    entry.validate();
    ctx.validate();

    const auto version = module_version(entry, ctx);
    const auto help = help_lines(entry, ctx);
    std::string out;

    if (format == ModuleFormat::Lua) {
        out += "-- " + entry.docker + "/" + version + "\n";
        out += "-- Generated by module-forge from the registry entry; edit the entry, not this file.\n\n";
        std::string body;
        for (const auto& line : help)
            body += line + "\n";
        out += "help(" + lua_long_string(body) + ")\n\n";
        out += "whatis(" + lua_quote("Name: " + entry.docker) + ")\n";
        out += "whatis(" + lua_quote("Version: " + version) + ")\n";
        out += "whatis(" + lua_quote("Description: " + entry.description) + ")\n";
        if (!entry.url.empty())
            out += "whatis(" + lua_quote("Url: " + entry.url) + ")\n";
        out += "\n";
        for (const auto& [name, path] : entry.aliases) {
            auto line = render_exec_line(entry, name, ctx);
            out += "set_shell_function(" + lua_quote(name) + ", " + lua_quote(line) + ", " + lua_quote(csh_variant(line)) + ")\n";
        }
        return out;
    }

    out += "#%Module1.0\n";
    out += "# " + entry.docker + "/" + version + "\n";
    out += "# Generated by module-forge from the registry entry; edit the entry, not this file.\n\n";
    out += "proc ModulesHelp { } {\n";
    for (const auto& line : help)
        out += "    puts stderr " + tcl_quote(line) + "\n";
    out += "}\n\n";
    out += "module-whatis " + tcl_quote("Name: " + entry.docker) + "\n";
    out += "module-whatis " + tcl_quote("Version: " + version) + "\n";
    out += "module-whatis " + tcl_quote("Description: " + entry.description) + "\n";
    if (!entry.url.empty())
        out += "module-whatis " + tcl_quote("Url: " + entry.url) + "\n";
    out += "\n";
    for (const auto& [name, path] : entry.aliases)
        out += "set-function " + name + " " + tcl_quote(render_exec_line(entry, name, ctx)) + "\n";
    return out;
}

fs::path modulefile_path(const fs::path& target, const RegistryEntry& entry, const RenderContext& ctx, ModuleFormat format)
{
    return target / entry.identifier().relative_path() / module_version(entry, ctx) / module_file_name(format);
}

} // namespace module_forge
