/*
 * Copyright (C) 2026 The module-forge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "fixtures.hpp"

#include "module_forge/digest.hpp"
#include "tar_writer.hpp"

#ifndef MODULE_FORGE_TEST_FIXTURES
#error "MODULE_FORGE_TEST_FIXTURES must be defined"
#endif

namespace module_forge::testing {

namespace {

const char* kPath = "PATH=/usr/local/sbin:/usr/local/bin:/usr/sbin:/usr/bin:/sbin:/bin";

std::string samtools_base_layer()
{
    return make_tar({
        TarMember::dir("bin/"),
        TarMember::exe("bin/sh"),
        TarMember::exe("bin/ls"),
        TarMember::exe("bin/cat"),
        TarMember::exe("bin/bash"),
        TarMember::dir("usr/"),
        TarMember::dir("usr/bin/"),
        TarMember::exe("usr/bin/perl"),
        TarMember::exe("usr/bin/mawk"),
        TarMember::symlink("usr/bin/awk", "mawk"),
        TarMember::exe("usr/bin/env"),
        TarMember::exe("usr/bin/oldtool"),
        TarMember::dir("usr/local/"),
        TarMember::dir("usr/local/bin/"),
        TarMember::file("etc/debian_version", "11.7\n"),
    });
}

std::string samtools_conda_layer(const std::string& version)
{
    std::vector<TarMember> members {
        TarMember::dir("usr/local/bin/"),
        TarMember::file("usr/bin/.wh.oldtool"),
        TarMember::file("usr/local/bin/README.txt", "samtools " + version + "\n"),
        TarMember::file("usr/local/lib/libhts.so.3", "ELF"),
        TarMember::exe("usr/local/bin/python3.9"),
        TarMember::symlink("usr/local/bin/python3", "python3.9"),
        TarMember::exe("usr/local/bin/xz"),
        TarMember::symlink("usr/local/bin/lzma", "/usr/local/bin/xz"),
    };
    for (const char* name : {"samtools", "ace2sam", "blast2sam.pl", "bowtie2sam.pl", "export2sam.pl", "interpolate_sam.pl",
             "maq2sam-long", "maq2sam-short", "md5fa", "md5sum-lite", "novo2sam.pl", "plot-ampliconstats", "plot-bamstats",
             "psl2sam.pl", "sam2vcf.pl", "samtools.pl", "seq_cache_populate.pl", "soap2sam.pl", "varfilter.py", "wgsim",
             "wgsim_eval.pl", "zoom2sam.pl", "bgzip", "htsfile", "tabix", "perl", "curl"})
        members.push_back(TarMember::exe(std::string("usr/local/bin/") + name, "#!/bin/sh\n# " + version + "\n"));
    return make_tar(members);
}

} // namespace

std::filesystem::path fixture_dir()
{
    return MODULE_FORGE_TEST_FIXTURES;
}

std::filesystem::path data_dir()
{
    return MODULE_FORGE_DATA_DIR;
}

std::map<std::string, std::string> seed_samtools(MockRegistry& registry)
{
    std::map<std::string, std::string> digests;
    auto base = samtools_base_layer();
    for (const char* tag : {"1.9--h10a08f8_12", "1.10--h2e538c0_3", "1.15.1--h1170115_0"}) {
        auto version = std::string(tag).substr(0, std::string(tag).find("--"));
        digests[tag] = registry.add_image(kSamtoolsRepo, tag, {kPath, "LC_ALL=C.UTF-8"},
            {base, samtools_conda_layer(version)});
    }
    return digests;
}

RegistryEntry samtools_entry()
{
    RegistryEntry entry;
    entry.docker = kSamtoolsId;
    entry.url = "https://www.htslib.org/";
    entry.maintainer = "@vsoch";
    entry.description = "Tools for dealing with SAM, BAM and CRAM files";
    for (const char* tag : {"1.9--h10a08f8_12", "1.10--h2e538c0_3", "1.15.1--h1170115_0"})
        entry.tags.emplace(tag, content_digest(std::string("samtools ") + tag));
    entry.latest = *entry.tags.find("1.15.1--h1170115_0");
    entry.aliases = {{"samtools", "/usr/local/bin/samtools"}, {"wgsim", "/usr/local/bin/wgsim"},
        {"ace2sam", "/usr/local/bin/ace2sam"}};
    return entry;
}

std::string seed_simple(
    MockRegistry& registry, const std::string& repo, const std::string& tag, const std::vector<std::string>& executables)
{
    std::vector<TarMember> members {TarMember::dir("usr/local/bin/")};
    for (const auto& name : executables)
        members.push_back(TarMember::exe("usr/local/bin/" + name));
    return registry.add_image(repo, tag, {kPath}, {make_tar(members)});
}

} // namespace module_forge::testing
