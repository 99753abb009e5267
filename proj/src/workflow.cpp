/*
 * Copyright (C) 2026 The module-forge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "module_forge/workflow.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "module_forge/error.hpp"
#include "module_forge/fs_util.hpp"

namespace fs = std::filesystem;

namespace module_forge {

std::map<std::string, std::string> ResolvedTags::digests() const
{
    std::map<std::string, std::string> out;
    for (const auto& [tag, ref] : refs)
        out.emplace(tag, ref.digest);
    return out;
}

ResolvedTags resolve_tags(RegistryClient& client, const ContainerIdentifier& id, const std::vector<std::string>& exclusions)
{
    auto listed = client.list_tags(id);
    ResolvedTags resolved {sort_and_select(filter_tags(listed, exclusions)), {}};
    spdlog::info("{}: {} tags listed, {} kept", id.canonical(), listed.tags.size(), resolved.ordering.ordered.size());

    for (const auto& candidate : resolved.ordering.ordered) {
        try {
            resolved.refs.emplace(candidate.raw, client.resolve_digest(id, candidate.raw));
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::NotFound)
                throw;
            spdlog::warn("{}: tag '{}' disappeared before its digest could be resolved", id.canonical(), candidate.raw);
        }
    }
    return resolved;
}

ExecutableListing discover_executables(
    RegistryClient& client, const ContainerIdentifier& id, const ManifestRef& ref, bool keep_scratch)
{
    auto config = client.fetch_image_config(id, ref);
    auto dirs = extract_path_dirs(config);

    ScratchDir scratch("module-forge-" + id.repository());
    if (keep_scratch) {
        scratch.keep();
        spdlog::info("{}: keeping scratch tree at {}", id.canonical(), scratch.path().string());
    }

    std::vector<fs::path> layers;
    for (std::size_t i = 0; i < config.layer_digests.size(); ++i) {
        auto file = scratch.path() / ("layer-" + std::to_string(i));
        FileSink sink(file.string());
        auto bytes = client.fetch_layer(id, config.layer_digests[i], sink);
        sink.close();
        spdlog::debug("{}: layer {} ({} bytes)", id.canonical(), config.layer_digests[i], bytes);
        layers.push_back(file);
    }

    auto tree = unpack_layers(layers, scratch.path() / "rootfs");
    auto listing = enumerate_executables(tree, dirs, id);
    spdlog::info("{}: {} executables on PATH", id.canonical(), listing.executables.size());
    return listing;
}

std::vector<ContainerIdentifier> read_identifier_list(const fs::path& file)
{
    std::istringstream in(read_file(file));
    std::vector<ContainerIdentifier> ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        auto begin = line.find_first_not_of(" \t\r");
        if (begin == std::string::npos)
            continue;
        auto end = line.find_last_not_of(" \t\r");
        try {
            ids.push_back(ContainerIdentifier::parse(line.substr(begin, end - begin + 1)));
        } catch (const Error& e) {
            throw Error(e.kind(), file.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return ids;
}

void run_bounded(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& task)
{
    if (count == 0)
        return;
    auto threads = std::clamp<std::size_t>(workers, 1, count);
    std::atomic<std::size_t> next {0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&]() {
        while (true) {
            auto index = next.fetch_add(1);
            if (index >= count)
                return;
            try {
                task(index);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
            }
        }
    };

    std::vector<std::thread> pool;
    for (std::size_t i = 1; i < threads; ++i)
        pool.emplace_back(worker);
    worker();
    for (auto& thread : pool)
        thread.join();
    if (failure)
        std::rethrow_exception(failure);
}

} // namespace module_forge
