/*
 * Copyright (C) 2026 The module-forge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include <doctest.h>

#include <regex>

#include "fixtures.hpp"
#include "module_forge/error.hpp"
#include "module_forge/fs_util.hpp"
#include "module_forge/renderer.hpp"

using namespace module_forge;
using namespace module_forge::testing;

namespace {

std::size_t occurrences(const std::string& text, const std::string& needle)
{
    std::size_t n = 0;
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1))
        ++n;
    return n;
}

} // namespace

TEST_CASE("exec line for the samtools alias")
{
    auto entry = samtools_entry();
    auto ctx = default_context(entry);
    CHECK(render_exec_line(entry, "samtools", ctx) ==
        "singularity exec docker://quay.io/biocontainers/samtools@" + entry.latest.second +
            " /usr/local/bin/samtools \"$@\"");
}

TEST_CASE("options and binds come before the container")
{
    auto entry = samtools_entry();
    auto ctx = default_context(entry);
    ctx.binds = {"/data:/data"};
    ctx.runtime_options = {"--cleanenv"};
    auto line = render_exec_line(entry, "samtools", ctx);
    CHECK(line.find("singularity exec --cleanenv -B /data:/data docker://") == 0);

    ctx.runtime = "podman";
    CHECK(render_exec_line(entry, "samtools", ctx) ==
        "podman run --rm -i --cleanenv -v /data:/data --entrypoint /usr/local/bin/samtools quay.io/biocontainers/samtools@" +
            entry.latest.second + " \"$@\"");
}

TEST_CASE("tag pins and unknown aliases")
{
    auto entry = samtools_entry();
    auto ctx = default_context(entry, "1.9--h10a08f8_12");
    CHECK(render_exec_line(entry, "wgsim", ctx).find("@" + entry.tags.at("1.9--h10a08f8_12")) != std::string::npos);
    CHECK(module_version(entry, ctx) == "1.9--h10a08f8_12");
    CHECK_THROWS_AS(default_context(entry, "9.9"), Error);
    try {
        render_exec_line(entry, "foo", ctx);
        FAIL("rendered");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::UnknownAlias);
    }
}

TEST_CASE("contexts are validated")
{
    auto entry = samtools_entry();
    for (const char* bind : {"/data", "data:/data", "/a:/b:/c", "/a:b", ":/b"}) {
        auto ctx = default_context(entry);
        ctx.binds = {bind};
        CAPTURE(bind);
        CHECK_THROWS_AS(render_exec_line(entry, "samtools", ctx), Error);
    }
    auto ctx = default_context(entry);
    ctx.runtime = "singularity; rm -rf /";
    CHECK_THROWS_AS(render_exec_line(entry, "samtools", ctx), Error);
    ctx = default_context(entry);
    ctx.container.tag = "1.9";
    CHECK_THROWS_AS(render_modulefile(entry, ctx), Error);
}

TEST_CASE("user text is quoted")
{
    auto entry = samtools_entry();
    auto ctx = default_context(entry);
    ctx.runtime_options = {"--env", "A=b c", "it's"};
    auto line = render_exec_line(entry, "samtools", ctx);
    CHECK(line.find(" 'A=b c' ") != std::string::npos);
    CHECK(line.find(" 'it'\\''s' ") != std::string::npos);
    CHECK(shell_quote("plain") == "plain");
    CHECK(shell_quote("$(x)") == "'$(x)'");
    CHECK(shell_quote("") == "''");
}

TEST_CASE("modulefiles define each alias once")
{
    auto entry = samtools_entry();
    auto ctx = default_context(entry);
    auto lua = render_modulefile(entry, ctx, ModuleFormat::Lua);
    auto tcl = render_modulefile(entry, ctx, ModuleFormat::Tcl);
    CHECK(occurrences(lua, "set_shell_function(") == 3);
    CHECK(occurrences(tcl, "set-function ") == 3);
    CHECK(lua.find("set_shell_function(\"ace2sam\"") < lua.find("set_shell_function(\"samtools\""));
    CHECK(lua.find("set_shell_function(\"samtools\"") < lua.find("set_shell_function(\"wgsim\""));
    CHECK(lua.find(entry.description) != std::string::npos);
    CHECK(tcl.find(entry.description) != std::string::npos);

    entry.aliases = {{"samtools", "/usr/local/bin/samtools"}};
    CHECK(occurrences(render_modulefile(entry, ctx), "set_shell_function(") == 1);
}

TEST_CASE("modulefiles match their goldens")
{
    auto entry = samtools_entry();
    auto ctx = default_context(entry);
    CHECK(render_modulefile(entry, ctx, ModuleFormat::Lua) == read_file(fixture_dir() / "samtools" / "module.lua"));
    CHECK(render_modulefile(entry, ctx, ModuleFormat::Tcl) == read_file(fixture_dir() / "samtools" / "module.tcl"));
    CHECK(render_modulefile(entry, ctx) == render_modulefile(entry, ctx));
}

TEST_CASE("awkward descriptions stay inside their strings")
{
    auto entry = samtools_entry();
    entry.description = "ends with ]] and has \"quotes\" $HOME [brackets] {braces}\nsecond line";
    auto ctx = default_context(entry);
    auto lua = render_modulefile(entry, ctx, ModuleFormat::Lua);
    CHECK(lua.find("help([=[") != std::string::npos);
    auto tcl = render_modulefile(entry, ctx, ModuleFormat::Tcl);
    CHECK(tcl.find("\\$HOME \\[brackets\\] \\{braces\\}") != std::string::npos);
}

TEST_CASE("output paths")
{
    auto entry = samtools_entry();
    auto ctx = default_context(entry);
    CHECK(modulefile_path("/modules", entry, ctx, ModuleFormat::Lua) ==
        std::filesystem::path("/modules/quay.io/biocontainers/samtools/1.15.1--h1170115_0/module.lua"));
    CHECK(modulefile_path("/m", entry, ctx, ModuleFormat::Tcl).filename() == "module.tcl");
    CHECK(parse_module_format("tcl") == ModuleFormat::Tcl);
    CHECK_THROWS_AS(parse_module_format("bash"), Error);
}
