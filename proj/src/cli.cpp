/*
 * Copyright (C) 2026 The module-forge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "module_forge/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>

#include <CLI11.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "module_forge/alias_select.hpp"
#include "module_forge/exec_cache.hpp"
#include "module_forge/fs_util.hpp"
#include "module_forge/recipe.hpp"
#include "module_forge/registry_client.hpp"
#include "module_forge/renderer.hpp"
#include "module_forge/scheduler.hpp"
#include "module_forge/workflow.hpp"

#ifndef MODULE_FORGE_DATA_DIR
#define MODULE_FORGE_DATA_DIR "data"
#endif

namespace fs = std::filesystem;

namespace module_forge {

int exit_code_for(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::Usage:
    case ErrorKind::BadPattern:
    case ErrorKind::InvalidIdentifier:
    case ErrorKind::AlreadyExists:
    case ErrorKind::DuplicateIdentifier:
    case ErrorKind::SchemaViolation:
    case ErrorKind::InvalidAlias:
    case ErrorKind::UnknownAlias:
        return exit_code::kUsage;
    case ErrorKind::Transient:
    case ErrorKind::AuthFailure:
    case ErrorKind::NotFound:
    case ErrorKind::UnsupportedMediaType:
    case ErrorKind::IntegrityError:
        return exit_code::kRegistry;
    default:
        return exit_code::kFailure;
    }
}

namespace {

struct Config {
    std::string registry_root = "registry";
    std::string cache_root = "cache";
    std::string endpoint;
    std::string bases_dir = MODULE_FORGE_DATA_DIR "/bases";
    std::string runtime = "singularity";
    std::string maintainer = "@module-forge";
    std::string arch = "linux/amd64";
    SelectionThresholds thresholds;
    std::vector<std::string> skip_tags;
    unsigned workers = 4;
    bool keep_scratch = false;
    int page_size = 0;
    int backoff_ms = 500;
    std::string log_level = "info";
};

/// Routes the default spdlog logger to a stream for the lifetime of a run.
class LogScope {
public:
    LogScope(std::ostream& err)
        : previous_(spdlog::default_logger())
    {
        auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err, true);
        auto logger = std::make_shared<spdlog::logger>("module-forge", sink);
        logger->set_pattern("%Y-%m-%dT%H:%M:%S.%eZ level=%l %v", spdlog::pattern_time_type::utc);
        logger->set_level(spdlog::level::info);
        spdlog::set_default_logger(logger);
    }
    ~LogScope() { spdlog::set_default_logger(previous_); }

    void set_level(const std::string& name)
    {
        auto level = spdlog::level::from_str(name);
        if (level == spdlog::level::off && name != "off")
            throw Error(ErrorKind::Usage, "unknown log level '" + name + "'");
        spdlog::default_logger()->set_level(level);
    }

private:
    std::shared_ptr<spdlog::logger> previous_;
};

std::string describe(const Error& e)
{
    return std::string(to_string(e.kind())) + ": " + e.what();
}

ClientOptions client_options(const Config& config)
{
    auto options = ClientOptions::from_environment();
    if (!config.endpoint.empty())
        options.endpoint = config.endpoint;
    auto arch = config.arch.find('/') == std::string::npos ? "linux/" + config.arch : config.arch;
    options.platform = Platform::parse(arch);
    options.page_size = config.page_size;
    options.initial_backoff = std::chrono::milliseconds(config.backoff_ms);
    return options;
}

std::string default_url(const ContainerIdentifier& id)
{
    if (id.registry_host() == "docker.io")
        return "https://hub.docker.com/r/" + id.api_name();
    if (id.registry_host() == "quay.io")
        return "https://quay.io/repository/" + id.api_name();
    return "https://" + id.registry_host() + "/" + id.api_name();
}

/// Identifiers of every entry in the registry.
std::vector<ContainerIdentifier> registry_identifiers(const fs::path& root)
{
    std::vector<ContainerIdentifier> ids;
    for (const auto& file : find_entries(root))
        ids.push_back(load_entry(file).identifier());
    return ids;
}

RegistryEntry require_entry(const fs::path& root, const ContainerIdentifier& id)
{
    auto path = entry_path(root, id);
    if (!fs::exists(path))
        throw Error(ErrorKind::Usage, "no registry entry for " + id.canonical() + " under " + root.string());
    return load_entry(path);
}

/// The tag an entry built from `resolved` would name as latest, with its ref.
std::pair<std::string, ManifestRef> pick_latest(const ContainerIdentifier& id, const ResolvedTags& resolved)
{
    auto provisional = build_entry(id, resolved.ordering, resolved.digests(), {}, {});
    return {provisional.latest.first, resolved.refs.at(provisional.latest.first)};
}

int add_command(const Config& config, const std::string& name, bool force, const EntryMetadata& flags, std::ostream& out)
{
    auto id = ContainerIdentifier::parse(name);
    auto path = entry_path(config.registry_root, id);
    if (fs::exists(path) && !force)
        throw Error(ErrorKind::AlreadyExists, id.canonical() + " already has an entry at " + path.string() + " (use --force)");

    RegistryClient client(client_options(config));
    auto resolved = resolve_tags(client, id, config.skip_tags);
    auto [latest_tag, latest_ref] = pick_latest(id, resolved);

    auto listing = discover_executables(client, id, latest_ref, config.keep_scratch);
    auto diffed = diff_against_bases(listing, BaseSet::load_directory(config.bases_dir));
    spdlog::info("{}: {} executables remain after removing base images", id.canonical(), diffed.executables.size());

    AliasSet aliases;
    auto counts_path = CacheStore(config.cache_root).root() / CacheStore::kCountsFile;
    if (fs::exists(counts_path)) {
        aliases = select_aliases(id, diffed, load_counts(counts_path), config.thresholds);
    } else {
        spdlog::warn("{}: no frequency table at {}, keeping every discovered executable", id.canonical(), counts_path.string());
        aliases = aliases_from_listing(diffed);
    }

    EntryMetadata meta = flags;
    if (meta.url.empty())
        meta.url = default_url(id);
    meta.maintainer = config.maintainer;
    auto entry = build_entry(id, resolved.ordering, resolved.digests(), aliases, meta);
    if (!config.skip_tags.empty())
        entry.filter = config.skip_tags;
    out << write_entry(config.registry_root, entry).string() << "\n";
    return exit_code::kSuccess;
}

/// Outcome of one identifier in a batch command.
struct ItemResult {
    std::vector<std::string> lines;
    std::optional<ErrorKind> failure;
};

int batch_exit(const std::vector<ItemResult>& results)
{
    std::set<ErrorKind> kinds;
    std::size_t failed = 0;
    for (const auto& result : results) {
        if (result.failure) {
            ++failed;
            kinds.insert(*result.failure);
        }
    }
    if (failed == 0)
        return exit_code::kSuccess;
    if (failed == results.size() && kinds.size() == 1)
        return exit_code_for(*kinds.begin());
    return exit_code::kFailure;
}

template <typename Fn>
std::vector<ItemResult> run_batch(const std::vector<ContainerIdentifier>& ids, unsigned workers, Fn&& body)
{
    std::vector<ItemResult> results(ids.size());
    run_bounded(ids.size(), workers, [&](std::size_t i) {
        try {
            results[i].lines = body(ids[i]);
        } catch (const Error& e) {
            spdlog::error("{}: {}", ids[i].canonical(), describe(e));
            results[i].failure = e.kind();
        } catch (const std::exception& e) {
            spdlog::error("{}: {}", ids[i].canonical(), e.what());
            results[i].failure = ErrorKind::IoFailure;
        }
    });
    return results;
}

int update_command(const Config& config, bool all, const std::string& due, const std::vector<std::string>& names, std::ostream& out)
{
    if (int(all) + int(!due.empty()) + int(!names.empty()) != 1)
        throw Error(ErrorKind::Usage, "update needs exactly one of --all, --due DATE or identifiers");

    std::vector<ContainerIdentifier> ids;
    if (!names.empty()) {
        for (const auto& name : names)
            ids.push_back(ContainerIdentifier::parse(name));
    } else {
        ids = registry_identifiers(config.registry_root);
        if (!due.empty())
            ids = due_on(ids, parse_date(due));
    }
    spdlog::info("updating {} entries", ids.size());

    RegistryClient client(client_options(config));
    auto results = run_batch(ids, config.workers, [&](const ContainerIdentifier& id) {
        auto existing = require_entry(config.registry_root, id);
        auto exclusions = existing.filter.value_or(std::vector<std::string> {});
        for (const auto& pattern : config.skip_tags) {
            if (std::find(exclusions.begin(), exclusions.end(), pattern) == exclusions.end())
                exclusions.push_back(pattern);
        }
        auto resolved = resolve_tags(client, id, exclusions);
        auto [updated, delta] = update_entry(existing, resolved.ordering, resolved.digests());
        std::vector<std::string> lines;
        if (delta.empty()) {
            spdlog::info("{}: up to date", id.canonical());
            return lines;
        }
        write_entry(config.registry_root, updated);
        for (const auto& line : delta.lines())
            lines.push_back(id.canonical() + "\t" + line);
        return lines;
    });

    for (const auto& result : results) {
        for (const auto& line : result.lines)
            out << line << "\n";
    }
    return batch_exit(results);
}

int cache_add_command(const Config& config, const std::string& list_file, bool refresh, std::ostream& out)
{
    auto ids = read_identifier_list(list_file);
    CacheStore cache(config.cache_root);
    RegistryClient client(client_options(config));

    auto results = run_batch(ids, config.workers, [&](const ContainerIdentifier& id) {
        if (cache.has_listing(id) && !refresh)
            return std::vector<std::string> {"skipped\t" + id.canonical()};
        auto resolved = resolve_tags(client, id, config.skip_tags);
        auto latest = pick_latest(id, resolved);
        auto listing = discover_executables(client, id, latest.second, config.keep_scratch);
        cache.store_listing(listing);
        return std::vector<std::string> {"stored\t" + id.canonical()};
    });

    std::size_t stored = 0, skipped = 0, failed = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (results[i].failure) {
            ++failed;
            out << "failed\t" << ids[i].canonical() << "\n";
            continue;
        }
        for (const auto& line : results[i].lines) {
            (line.rfind("stored", 0) == 0 ? stored : skipped)++;
            out << line << "\n";
        }
    }
    out << "summary: " << stored << " stored, " << skipped << " skipped, " << failed << " failed\n";
    return failed == 0 ? exit_code::kSuccess : exit_code::kFailure;
}

int cache_counts_command(const Config& config, std::ostream& out)
{
    CacheStore cache(config.cache_root);
    auto table = build_counts(cache);
    auto path = cache.root() / CacheStore::kCountsFile;
    write_counts(table, path);
    out << path.string() << "\t" << table.total_containers << " containers\t" << table.counts.size() << " names\n";
    return exit_code::kSuccess;
}

int groups_command(const Config& config, const std::string& list_file, const std::string& due, std::ostream& out)
{
    auto ids = list_file.empty() ? registry_identifiers(config.registry_root) : read_identifier_list(list_file);
    auto groups = partition(ids);
    if (!due.empty()) {
        for (const auto& id : due_on(ids, parse_date(due)))
            out << id.canonical() << "\n";
        return exit_code::kSuccess;
    }
    for (const auto& group : groups) {
        for (const auto& id : group.members)
            out << group.day << "\t" << id.canonical() << "\n";
    }
    return exit_code::kSuccess;
}

struct RenderFlags {
    std::string identifier;
    std::string tag;
    std::string format = "lua";
    std::string out_dir;
    std::vector<std::string> binds;
    std::vector<std::string> runtime_options;
};

int render_command(const Config& config, const RenderFlags& flags, std::ostream& out)
{
    auto entry = require_entry(config.registry_root, ContainerIdentifier::parse(flags.identifier));
    auto format = parse_module_format(flags.format);
    auto ctx = default_context(entry, flags.tag.empty() ? std::nullopt : std::optional<std::string>(flags.tag));
    ctx.runtime = config.runtime;
    ctx.binds = flags.binds;
    ctx.runtime_options = flags.runtime_options;

    auto text = render_modulefile(entry, ctx, format);
    if (flags.out_dir.empty()) {
        out << text;
        return exit_code::kSuccess;
    }
    auto path = modulefile_path(flags.out_dir, entry, ctx, format);
    atomic_write(path, text);
    out << path.string() << "\n";
    return exit_code::kSuccess;
}

template <typename T>
CLI::Option* global(CLI::App& app, const std::string& name, T& value, const std::string& help)
{
    std::string env = "MODULE_FORGE_";
    for (char c : name)
        env += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    auto* option = app.add_option("--" + name, value, help)->envname(env);
    if (option->get_items_expected_max() == 1)
        option->capture_default_str();
    return option;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    LogScope logging(err);
    Config config;

    CLI::App app {"Generate and maintain container module registry entries", "module-forge"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "Key/value config file; option long names are the keys");
    app.allow_config_extras(CLI::config_extras_mode::error);

    global(app, "registry-root", config.registry_root, "Directory holding container.yaml entries");
    global(app, "cache-root", config.cache_root, "Directory holding executable listings and counts.json");
    global(app, "endpoint", config.endpoint, "Base URL used for every registry host");
    global(app, "bases-dir", config.bases_dir, "Directory of base-image executable lists");
    global(app, "runtime", config.runtime, "Container runtime command word");
    global(app, "maintainer", config.maintainer, "Maintainer recorded in new entries");
    global(app, "arch", config.arch, "Platform selected from multi-arch images (os/arch[/variant])");
    global(app, "rare-max", config.thresholds.rare_max, "Keep names seen in fewer containers than this")
        ->check(CLI::PositiveNumber);
    global(app, "extra-cap", config.thresholds.extra_cap, "Additional least frequent names to keep")
        ->check(CLI::PositiveNumber);
    global(app, "common-max", config.thresholds.common_max, "Additional names must be seen in fewer containers than this")
        ->check(CLI::PositiveNumber);
    global(app, "skip-tag", config.skip_tags, "Tag exclusion glob (repeatable)");
    global(app, "workers", config.workers, "Parallel identifiers for batch commands")->check(CLI::PositiveNumber);
    global(app, "page-size", config.page_size, "Tags requested per listing page (0: registry default)")
        ->check(CLI::NonNegativeNumber);
    global(app, "backoff-ms", config.backoff_ms, "Initial retry backoff in milliseconds")->check(CLI::NonNegativeNumber);
    global(app, "log-level", config.log_level, "trace, debug, info, warn, error or off");
    app.add_flag("--keep-scratch", config.keep_scratch, "Keep unpacked image trees")->envname("MODULE_FORGE_KEEP_SCRATCH");

    std::string add_id;
    bool add_force = false;
    EntryMetadata add_meta;
    auto* add = app.add_subcommand("add", "Create a registry entry for a container");
    add->add_option("identifier", add_id, "Container identifier, e.g. quay.io/biocontainers/samtools")->required();
    add->add_flag("--force", add_force, "Overwrite an existing entry");
    add->add_option("--url", add_meta.url, "Project or image URL");
    add->add_option("--description", add_meta.description, "Entry description");

    bool update_all = false;
    std::string update_due;
    std::vector<std::string> update_ids;
    auto* update = app.add_subcommand("update", "Refresh tags and digests of existing entries");
    update->add_flag("--all", update_all, "Every entry in the registry");
    update->add_option("--due", update_due, "Entries whose update group matches this date (YYYY-MM-DD)");
    update->add_option("identifiers", update_ids, "Entries to update");

    std::string cache_list;
    bool cache_refresh = false;
    auto* cache = app.add_subcommand("cache", "Manage the executable frequency cache");
    cache->require_subcommand(1);
    auto* cache_add = cache->add_subcommand("add", "Discover and store executable listings");
    cache_add->add_option("list", cache_list, "Newline-delimited identifier file")->required()->check(CLI::ExistingFile);
    cache_add->add_flag("--refresh", cache_refresh, "Rediscover containers that already have a listing");
    auto* cache_counts = cache->add_subcommand("counts", "Rebuild counts.json from stored listings");

    std::string export_out;
    auto* exporter = app.add_subcommand("export", "Write the static JSON API");
    exporter->add_option("--out", export_out, "Output directory")->required();

    std::string groups_list, groups_due;
    auto* groups = app.add_subcommand("groups", "Show update groups");
    groups->add_option("--list", groups_list, "Identifier file (default: every registry entry)")->check(CLI::ExistingFile);
    groups->add_option("--due", groups_due, "Only identifiers due on this date (YYYY-MM-DD)");

    RenderFlags render_flags;
    auto* render = app.add_subcommand("render", "Render a modulefile for an entry");
    render->add_option("identifier", render_flags.identifier, "Container identifier")->required();
    render->add_option("--tag", render_flags.tag, "Tag to pin (default: latest)");
    render->add_option("--format", render_flags.format, "lua or tcl")->capture_default_str();
    render->add_option("--out", render_flags.out_dir, "Write under this module tree instead of stdout");
    render->add_option("--bind", render_flags.binds, "src:dst mount (repeatable)");
    render->add_option("--runtime-option", render_flags.runtime_options, "Runtime option (repeatable)")
        ->allow_extra_args(false);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        auto code = app.exit(e, out, err);
        return code == 0 ? exit_code::kSuccess : exit_code::kUsage;
    }

    try {
        logging.set_level(config.log_level);
        if (config.workers == 0)
            throw Error(ErrorKind::Usage, "--workers must be positive");
        if (*add)
            return add_command(config, add_id, add_force, add_meta, out);
        if (*update)
            return update_command(config, update_all, update_due, update_ids, out);
        if (*cache_add)
            return cache_add_command(config, cache_list, cache_refresh, out);
        if (*cache_counts)
            return cache_counts_command(config, out);
        if (*exporter) {
            export_static_api(config.registry_root, export_out);
            out << (fs::path(export_out) / "library.json").string() << "\n";
            return exit_code::kSuccess;
        }
        if (*groups)
            return groups_command(config, groups_list, groups_due, out);
        if (*render)
            return render_command(config, render_flags, out);
    } catch (const Error& e) {
        err << "error: " << describe(e) << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::kFailure;
    }
    return exit_code::kUsage;
}

} // namespace module_forge
