/*
 * Copyright (C) 2026 The module-forge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include <doctest.h>

#include <sstream>

#include "fixtures.hpp"
#include "mock_registry.hpp"
#include "module_forge/cli.hpp"
#include "module_forge/exec_cache.hpp"
#include "module_forge/fs_util.hpp"
#include "module_forge/recipe.hpp"
#include "oracles.hpp"

using namespace module_forge;
using namespace module_forge::testing;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

/// A registry root and cache root in scratch space plus a mock registry.
struct Workspace {
    MockRegistry registry;
    ScratchDir dir;

    fs::path registry_root() const { return dir.path() / "registry"; }
    fs::path cache_root() const { return dir.path() / "cache"; }

    Run run(std::vector<std::string> args) const
    {
        std::vector<std::string> full {"--endpoint", registry.endpoint(), "--registry-root", registry_root().string(),
            "--cache-root", cache_root().string(), "--backoff-ms", "1"};
        full.insert(full.end(), args.begin(), args.end());
        std::ostringstream out, err;
        int code = run_cli(full, out, err);
        return {code, out.str(), err.str()};
    }

    void install_counts() const
    {
        fs::create_directories(cache_root());
        fs::copy_file(fixture_dir() / "samtools" / "counts.json", cache_root() / "counts.json");
    }

    fs::path write_list(const std::string& name, const std::string& text) const
    {
        atomic_write(dir.path() / name, text);
        return dir.path() / name;
    }
};

} // namespace

TEST_CASE("add produces the golden entry")
{
    Workspace ws;
    seed_samtools(ws.registry);
    ws.install_counts();
    auto result = ws.run({"add", kSamtoolsId});
    INFO(result.err);
    REQUIRE(result.code == 0);
    auto path = ws.registry_root() / "quay.io/biocontainers/samtools/container.yaml";
    CHECK(result.out == path.string() + "\n");
    CHECK(read_file(path) == read_file(fixture_dir() / "samtools" / "add_golden.yaml"));
}

TEST_CASE("add without counts keeps every non-base executable")
{
    Workspace ws;
    seed_samtools(ws.registry);
    REQUIRE(ws.run({"add", kSamtoolsId}).code == 0);
    auto entry = load_entry(ws.registry_root() / "quay.io/biocontainers/samtools/container.yaml");
    CHECK(entry.aliases.contains("samtools"));
    CHECK(entry.aliases.contains("python3"));
    CHECK_FALSE(entry.aliases.contains("perl"));
    CHECK_FALSE(entry.aliases.contains("sh"));
    CHECK_FALSE(entry.aliases.contains("oldtool"));
    CHECK_FALSE(entry.aliases.contains("README.txt"));
}

TEST_CASE("add refuses to overwrite without force")
{
    Workspace ws;
    seed_samtools(ws.registry);
    REQUIRE(ws.run({"add", kSamtoolsId}).code == 0);
    auto again = ws.run({"add", kSamtoolsId});
    CHECK(again.code == 2);
    CHECK(again.err.find("AlreadyExists") != std::string::npos);
    CHECK(ws.run({"add", kSamtoolsId, "--force", "--description", "Changed"}).code == 0);
    CHECK(load_entry(ws.registry_root() / "quay.io/biocontainers/samtools/container.yaml").description == "Changed");
}

TEST_CASE("skip patterns are applied and recorded")
{
    Workspace ws;
    seed_samtools(ws.registry);
    REQUIRE(ws.run({"--skip-tag", "1.15*", "add", kSamtoolsId}).code == 0);
    auto entry = load_entry(ws.registry_root() / "quay.io/biocontainers/samtools/container.yaml");
    CHECK(entry.latest.first == "1.10--h2e538c0_3");
    CHECK(entry.filter == std::vector<std::string> {"1.15*"});
    CHECK(ws.run({"--skip-tag", "[oops", "add", kSamtoolsId, "--force"}).code == 2);
}

TEST_CASE("registry problems exit with code 3")
{
    Workspace ws;
    std::ostringstream out, err;
    auto code = run_cli({"--endpoint", "http://127.0.0.1:1", "--registry-root", ws.registry_root().string(),
                            "--backoff-ms", "1", "add", "quay.io/lab/tool"},
        out, err);
    CHECK(code == 3);
    CHECK(err.str().find("Transient") != std::string::npos);
    CHECK_FALSE(fs::exists(ws.registry_root() / "quay.io/lab/tool/container.yaml"));

    auto missing = ws.run({"add", "quay.io/lab/absent"});
    CHECK(missing.code == 3);
    CHECK(missing.err.find("NotFound") != std::string::npos);
}

TEST_CASE("usage errors exit with code 2")
{
    Workspace ws;
    CHECK(ws.run({}).code == 2);
    CHECK(ws.run({"frobnicate"}).code == 2);
    CHECK(ws.run({"add", "Not/Valid"}).code == 2);
    CHECK(ws.run({"update"}).code == 2);
    CHECK(ws.run({"update", "--all", "--due", "2022-11-01"}).code == 2);
    CHECK(ws.run({"update", "--due", "2022-02-30"}).code == 2);
    CHECK(ws.run({"--rare-max", "0", "groups"}).code == 2);
    CHECK(ws.run({"render", kSamtoolsId}).code == 2);
    CHECK(ws.run({"--help"}).code == 0);
}

TEST_CASE("update prints one line per change and leaves unchanged entries alone")
{
    Workspace ws;
    auto digests = seed_samtools(ws.registry);
    REQUIRE(ws.run({"add", kSamtoolsId}).code == 0);
    auto path = ws.registry_root() / "quay.io/biocontainers/samtools/container.yaml";
    auto before = fs::last_write_time(path);

    auto quiet = ws.run({"update", kSamtoolsId});
    CHECK(quiet.code == 0);
    CHECK(quiet.out.empty());
    CHECK(fs::last_write_time(path) == before);

    ws.registry.tag(kSamtoolsRepo, "1.16.1--h6899075_1", digests.at("1.15.1--h1170115_0"));
    auto grown = ws.run({"update", kSamtoolsId});
    CHECK(grown.code == 0);
    CHECK(grown.out ==
        std::string(kSamtoolsId) + "\t+1.16.1--h6899075_1\n" + kSamtoolsId + "\tlatest 1.15.1--h1170115_0@" +
            digests.at("1.15.1--h1170115_0") + " -> 1.16.1--h6899075_1@" + digests.at("1.15.1--h1170115_0") + "\n");
    CHECK(load_entry(path).latest.first == "1.16.1--h6899075_1");
}

TEST_CASE("update keeps going past failures")
{
    Workspace ws;
    seed_simple(ws.registry, "lab/alpha", "1.0", {"alpha"});
    seed_simple(ws.registry, "lab/beta", "1.0", {"beta"});
    seed_simple(ws.registry, "lab/gamma", "1.0", {"gamma"});
    for (const char* id : {"quay.io/lab/alpha", "quay.io/lab/beta", "quay.io/lab/gamma"})
        REQUIRE(ws.run({"add", id}).code == 0);

    seed_simple(ws.registry, "lab/alpha", "1.1", {"alpha"});
    seed_simple(ws.registry, "lab/gamma", "1.1", {"gamma"});
    ws.registry.remove_tag("lab/beta", "1.0");
    ws.registry.fail_next("/lab/beta/", 100, 500);

    auto result = ws.run({"--workers", "3", "update", "--all"});
    CHECK(result.code == 1);
    CHECK(result.out ==
        "quay.io/lab/alpha\t+1.1\nquay.io/lab/alpha\tlatest 1.0@" +
            load_entry(ws.registry_root() / "quay.io/lab/alpha/container.yaml").tags.at("1.0") + " -> 1.1@" +
            load_entry(ws.registry_root() / "quay.io/lab/alpha/container.yaml").tags.at("1.1") +
            "\nquay.io/lab/gamma\t+1.1\nquay.io/lab/gamma\tlatest 1.0@" +
            load_entry(ws.registry_root() / "quay.io/lab/gamma/container.yaml").tags.at("1.0") + " -> 1.1@" +
            load_entry(ws.registry_root() / "quay.io/lab/gamma/container.yaml").tags.at("1.1") + "\n");
    CHECK(result.err.find("quay.io/lab/beta") != std::string::npos);
    CHECK(load_entry(ws.registry_root() / "quay.io/lab/beta/container.yaml").tags.size() == 1);
}

TEST_CASE("update by due date")
{
    Workspace ws;
    seed_samtools(ws.registry);
    REQUIRE(ws.run({"add", kSamtoolsId}).code == 0);
    auto empty = ws.run({"update", "--due", "2022-11-29"});
    CHECK(empty.code == 0);
    CHECK(empty.out.empty());
    // samtools is in group 9.
    CHECK(ws.run({"update", "--due", "2022-11-09"}).code == 0);
    CHECK(ws.registry.requests("/biocontainers/samtools/tags/list") == 2);
}

TEST_CASE("cache add is resumable and counts match a recount")
{
    Workspace ws;
    seed_samtools(ws.registry);
    seed_simple(ws.registry, "lab/alpha", "1.0", {"alpha", "python3"});
    seed_simple(ws.registry, "lab/beta", "2.0", {"beta", "python3"});
    auto list = ws.write_list("ids.txt", "# containers\nquay.io/biocontainers/samtools\n\nquay.io/lab/alpha  # first\nquay.io/lab/beta\n");

    auto first = ws.run({"cache", "add", list.string()});
    INFO(first.err);
    CHECK(first.code == 0);
    CHECK(first.out.find("summary: 3 stored, 0 skipped, 0 failed") != std::string::npos);
    CHECK(CacheStore(ws.cache_root()).listing_files().size() == 3);

    ws.registry.reset_counters();
    auto second = ws.run({"cache", "add", list.string()});
    CHECK(second.code == 0);
    CHECK(second.out.find("summary: 0 stored, 3 skipped, 0 failed") != std::string::npos);
    CHECK(ws.registry.requests() == 0);

    auto refreshed = ws.run({"cache", "add", list.string(), "--refresh"});
    CHECK(refreshed.out.find("summary: 3 stored") != std::string::npos);

    CHECK(ws.run({"cache", "counts"}).code == 0);
    auto table = load_counts(ws.cache_root() / "counts.json");
    auto oracle = naive_recount(ws.cache_root());
    CHECK(table.total_containers == oracle.total);
    CHECK(table.counts == oracle.counts);
    CHECK(table.count_of("python3") == 3);
}

TEST_CASE("cache add skips failures and reports them")
{
    Workspace ws;
    seed_simple(ws.registry, "lab/alpha", "1.0", {"alpha"});
    auto list = ws.write_list("ids.txt", "quay.io/lab/alpha\nquay.io/lab/missing\n");
    auto result = ws.run({"cache", "add", list.string()});
    CHECK(result.code == 1);
    CHECK(result.out == "stored\tquay.io/lab/alpha\nfailed\tquay.io/lab/missing\nsummary: 1 stored, 0 skipped, 1 failed\n");
}

TEST_CASE("groups list and due subsets")
{
    Workspace ws;
    auto list = ws.write_list("ids.txt", "quay.io/biocontainers/samtools\nquay.io/biocontainers/bwa\ndocker.io/library/ubuntu\n");
    auto all = ws.run({"groups", "--list", list.string()});
    CHECK(all.code == 0);
    CHECK(all.out == "9\tquay.io/biocontainers/samtools\n13\tquay.io/biocontainers/bwa\n26\tdocker.io/library/ubuntu\n");
    CHECK(ws.run({"groups", "--due", "2022-11-29", "--list", list.string()}).out.empty());
    CHECK(ws.run({"groups", "--due", "2022-11-13", "--list", list.string()}).out == "quay.io/biocontainers/bwa\n");

    auto dup = ws.write_list("dup.txt", "quay.io/a/b\nquay.io/a/b\n");
    CHECK(ws.run({"groups", "--list", dup.string()}).code == 2);
}

TEST_CASE("export and render")
{
    Workspace ws;
    auto empty = ws.run({"export", "--out", (ws.dir.path() / "api").string()});
    CHECK(empty.code == 0);
    CHECK(read_file(ws.dir.path() / "api" / "library.json") == "[]\n");

    write_entry(ws.registry_root(), samtools_entry());
    auto printed = ws.run({"render", kSamtoolsId});
    CHECK(printed.code == 0);
    CHECK(printed.out == read_file(fixture_dir() / "samtools" / "module.lua"));

    auto written = ws.run({"render", kSamtoolsId, "--format", "tcl", "--out", (ws.dir.path() / "modules").string()});
    CHECK(written.code == 0);
    auto path = ws.dir.path() / "modules/quay.io/biocontainers/samtools/1.15.1--h1170115_0/module.tcl";
    CHECK(written.out == path.string() + "\n");
    CHECK(read_file(path) == read_file(fixture_dir() / "samtools" / "module.tcl"));

    auto bound = ws.run({"--runtime", "apptainer", "render", kSamtoolsId, "--bind", "/data:/data"});
    CHECK(bound.out.find("apptainer exec -B /data:/data docker://") != std::string::npos);
    CHECK(ws.run({"render", kSamtoolsId, "--bind", "relative:/x"}).code == 2);
}

TEST_CASE("config files supply defaults that flags override")
{
    Workspace ws;
    write_entry(ws.dir.path() / "from-config", samtools_entry());
    auto config = ws.write_list("forge.toml", "registry-root = \"" + (ws.dir.path() / "from-config").string() +
            "\"\nruntime = \"apptainer\"\n");

    std::ostringstream out, err;
    CHECK(run_cli({"--config", config.string(), "render", kSamtoolsId}, out, err) == 0);
    CHECK(out.str().find("apptainer exec") != std::string::npos);

    std::ostringstream out2, err2;
    CHECK(run_cli({"--config", config.string(), "--runtime", "singularity", "render", kSamtoolsId}, out2, err2) == 0);
    CHECK(out2.str().find("singularity exec") != std::string::npos);

    auto typo = ws.write_list("typo.toml", "registry-rot = \"x\"\n");
    std::ostringstream out3, err3;
    CHECK(run_cli({"--config", typo.string(), "groups"}, out3, err3) == 2);
}

TEST_CASE("environment variables fill unset options")
{
    Workspace ws;
    write_entry(ws.dir.path() / "from-env", samtools_entry());
    ::setenv("MODULE_FORGE_REGISTRY_ROOT", (ws.dir.path() / "from-env").string().c_str(), 1);
    ::setenv("MODULE_FORGE_RUNTIME", "podman", 1);
    std::ostringstream out, err;
    auto code = run_cli({"render", kSamtoolsId}, out, err);
    ::unsetenv("MODULE_FORGE_REGISTRY_ROOT");
    ::unsetenv("MODULE_FORGE_RUNTIME");
    CHECK(code == 0);
    CHECK(out.str().find("podman run --rm -i") != std::string::npos);
}
