/*
 * Copyright (C) 2026 The module-forge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include <httplib.h>
#include <json.hpp>

#include "module_forge/registry_client.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <thread>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "module_forge/digest.hpp"
#include "module_forge/error.hpp"

namespace module_forge {

namespace {

using json = nlohmann::json;

const std::string kManifestAccept = std::string(media_type::kOciIndex) + ", " + media_type::kOciManifest + ", " +
    media_type::kDockerManifestList + ", " + media_type::kDockerManifest;

struct Url {
    std::string base; // scheme://host[:port]
    std::string target; // /path?query
};

Url split_url(const std::string& url)
{
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        return Url {"", url.empty() ? "/" : url};
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos)
        return Url {url, "/"};
    return Url {url.substr(0, path_start), url.substr(path_start)};
}

std::string strip_media_params(const std::string& content_type)
{
    auto semi = content_type.find(';');
    auto value = content_type.substr(0, semi);
    while (!value.empty() && value.back() == ' ')
        value.pop_back();
    return value;
}

std::string url_encode(const std::string& text)
{
    static constexpr char hex[] = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : text) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out += static_cast<char>(c);
        } else {
            out += '%';
            out += hex[c >> 4];
            out += hex[c & 0x0f];
        }
    }
    return out;
}

/// Parses `Bearer realm="...",service="...",scope="..."`.
std::optional<std::map<std::string, std::string>> parse_bearer_challenge(const std::string& header)
{
    constexpr std::string_view scheme = "Bearer ";
    if (header.size() < scheme.size())
        return std::nullopt;
    for (size_t i = 0; i < scheme.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(header[i])) != std::tolower(static_cast<unsigned char>(scheme[i])))
            return std::nullopt;
    }

    std::map<std::string, std::string> params;
    size_t pos = scheme.size();
    while (pos < header.size()) {
        while (pos < header.size() && (header[pos] == ' ' || header[pos] == ','))
            ++pos;
        auto eq = header.find('=', pos);
        if (eq == std::string::npos)
            break;
        auto key = header.substr(pos, eq - pos);
        pos = eq + 1;
        std::string value;
        if (pos < header.size() && header[pos] == '"') {
            ++pos;
            while (pos < header.size() && header[pos] != '"') {
                if (header[pos] == '\\' && pos + 1 < header.size())
                    ++pos;
                value += header[pos++];
            }
            ++pos;
        } else {
            auto end = header.find(',', pos);
            value = header.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
            pos = end == std::string::npos ? header.size() : end;
        }
        params[key] = value;
    }
    if (!params.contains("realm"))
        return std::nullopt;
    return params;
}

/// Extracts the target of `<...>; rel="next"` from a Link header.
std::optional<std::string> next_link(const std::string& header)
{
    size_t pos = 0;
    while (true) {
        auto open = header.find('<', pos);
        if (open == std::string::npos)
            return std::nullopt;
        auto close = header.find('>', open);
        if (close == std::string::npos)
            return std::nullopt;
        auto next_entry = header.find('<', close);
        auto params = header.substr(close + 1, next_entry == std::string::npos ? std::string::npos : next_entry - close - 1);
        if (params.find("rel=\"next\"") != std::string::npos || params.find("rel=next") != std::string::npos)
            return header.substr(open + 1, close - open - 1);
        pos = close + 1;
    }
}

bool is_index_type(const std::string& type)
{
    return type == media_type::kOciIndex || type == media_type::kDockerManifestList;
}

bool is_manifest_type(const std::string& type)
{
    return type == media_type::kOciManifest || type == media_type::kDockerManifest;
}

std::optional<std::vector<std::string>> string_list(const json& node)
{
    if (node.is_null())
        return std::nullopt;
    if (!node.is_array())
        throw Error(ErrorKind::UnsupportedMediaType, "image config: expected a string list");
    std::vector<std::string> out;
    for (const auto& item : node)
        out.push_back(item.get<std::string>());
    return out;
}

struct Outcome {
    int status = 0;
    httplib::Headers headers;
    std::string body;
    std::uint64_t streamed = 0;
};

} // namespace

// ---------------------------------------------------------------------------
// Platform / sinks / options
// ---------------------------------------------------------------------------

Platform Platform::parse(const std::string& text)
{
    Platform platform;
    auto first = text.find('/');
    if (first == std::string::npos || first == 0 || first + 1 == text.size())
        throw Error(ErrorKind::Usage, "platform must be os/arch[/variant], got '" + text + "'");
    platform.os = text.substr(0, first);
    auto second = text.find('/', first + 1);
    platform.architecture = text.substr(first + 1, second == std::string::npos ? std::string::npos : second - first - 1);
    if (second != std::string::npos)
        platform.variant = text.substr(second + 1);
    return platform;
}

std::string Platform::str() const
{
    return os + "/" + architecture + (variant.empty() ? "" : "/" + variant);
}

struct FileSink::Impl {
    std::string path;
    std::ofstream out;
};

FileSink::FileSink(std::string path)
    : impl_(std::make_unique<Impl>())
{
    impl_->path = std::move(path);
    reset();
}

FileSink::~FileSink() = default;

void FileSink::reset()
{
    impl_->out.close();
    impl_->out.clear();
    impl_->out.open(impl_->path, std::ios::binary | std::ios::trunc);
    if (!impl_->out)
        throw Error(ErrorKind::IoFailure, "cannot open " + impl_->path + " for writing");
}

void FileSink::write(std::span<const char> data)
{
    impl_->out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!impl_->out)
        throw Error(ErrorKind::IoFailure, "short write to " + impl_->path);
}

void FileSink::close()
{
    impl_->out.close();
}

ClientOptions ClientOptions::from_environment()
{
    ClientOptions options;
    if (const char* token = std::getenv("MODULE_FORGE_TOKEN"); token != nullptr && *token != '\0')
        options.static_token = token;
    return options;
}

// ---------------------------------------------------------------------------
// RegistryClient
// ---------------------------------------------------------------------------

struct RegistryClient::Impl {
    const ClientOptions& options;

    std::mutex pool_mutex;
    std::map<std::string, std::vector<std::unique_ptr<httplib::Client>>> pool;

    std::shared_mutex token_mutex;
    std::map<std::string, std::string> tokens; // base|repository -> bearer token

    explicit Impl(const ClientOptions& opts)
        : options(opts)
    {
    }

    class Lease {
    public:
        Lease(Impl& owner, std::string base, std::unique_ptr<httplib::Client> client)
            : owner_(owner)
            , base_(std::move(base))
            , client_(std::move(client))
        {
        }
        ~Lease()
        {
            if (client_) {
                std::lock_guard lock(owner_.pool_mutex);
                owner_.pool[base_].push_back(std::move(client_));
            }
        }
        Lease(const Lease&) = delete;
        Lease& operator=(const Lease&) = delete;

        httplib::Client& operator*() { return *client_; }
        httplib::Client* operator->() { return client_.get(); }
        // A connection that failed mid-transfer is not returned to the pool.
        void discard() { client_.reset(); }

    private:
        Impl& owner_;
        std::string base_;
        std::unique_ptr<httplib::Client> client_;
    };

    Lease acquire(const std::string& base)
    {
        {
            std::lock_guard lock(pool_mutex);
            auto& idle = pool[base];
            if (!idle.empty()) {
                auto client = std::move(idle.back());
                idle.pop_back();
                return Lease(*this, base, std::move(client));
            }
        }
        auto client = std::make_unique<httplib::Client>(base);
        client->set_connection_timeout(options.connect_timeout.count());
        client->set_read_timeout(options.read_timeout.count());
        client->set_follow_location(true);
        client->set_keep_alive(true);
        return Lease(*this, base, std::move(client));
    }

    std::string base_for(const ContainerIdentifier& id) const
    {
        if (options.endpoint) {
            auto base = *options.endpoint;
            while (!base.empty() && base.back() == '/')
                base.pop_back();
            return base;
        }
        return "https://" + id.registry_host();
    }

    std::chrono::milliseconds backoff(int attempt) const
    {
        auto delay = options.initial_backoff;
        for (int i = 1; i < attempt && delay < options.max_backoff; ++i)
            delay *= 2;
        return std::min(delay, options.max_backoff);
    }

    std::optional<std::string> cached_token(const std::string& key)
    {
        std::shared_lock lock(token_mutex);
        if (auto it = tokens.find(key); it != tokens.end())
            return it->second;
        return std::nullopt;
    }

    std::string fetch_token(const std::map<std::string, std::string>& challenge, const ContainerIdentifier& id)
    {
        auto realm = split_url(challenge.at("realm"));
        if (realm.base.empty())
            throw Error(ErrorKind::AuthFailure, "token realm is not an absolute URL: " + challenge.at("realm"));

        std::string query;
        auto append = [&query](const std::string& key, const std::string& value) {
            query += (query.empty() ? "?" : "&") + key + "=" + url_encode(value);
        };
        if (auto it = challenge.find("service"); it != challenge.end())
            append("service", it->second);
        auto scope = challenge.contains("scope") ? challenge.at("scope") : "repository:" + id.api_name() + ":pull";
        append("scope", scope);

        auto target = realm.target + (realm.target.find('?') == std::string::npos ? query : "&" + query.substr(1));
        for (int attempt = 1; attempt <= options.max_attempts; ++attempt) {
            auto lease = acquire(realm.base);
            auto result = lease->Get(target);
            if (!result) {
                lease.discard();
                if (attempt == options.max_attempts)
                    throw Error(ErrorKind::Transient, "token endpoint unreachable: " + httplib::to_string(result.error()));
                std::this_thread::sleep_for(backoff(attempt));
                continue;
            }
            if (result->status == 429 || result->status >= 500) {
                if (attempt == options.max_attempts)
                    throw Error(ErrorKind::Transient, "token endpoint returned " + std::to_string(result->status));
                std::this_thread::sleep_for(backoff(attempt));
                continue;
            }
            if (result->status != 200)
                throw Error(ErrorKind::AuthFailure,
                    "token request for " + id.canonical() + " rejected with HTTP " + std::to_string(result->status));

            auto doc = json::parse(result->body, nullptr, false);
            if (doc.is_discarded() || !doc.is_object())
                throw Error(ErrorKind::AuthFailure, "token endpoint returned malformed JSON");
            for (const char* field : {"token", "access_token"}) {
                if (doc.contains(field) && doc[field].is_string() && !doc[field].get<std::string>().empty())
                    return doc[field].get<std::string>();
            }
            throw Error(ErrorKind::AuthFailure, "token endpoint response carries no token");
        }
        throw Error(ErrorKind::Transient, "token endpoint unreachable");
    }

    /// Issues GET `target` against the registry of `id` with auth, retries
    /// and redirects handled. A 200 body goes to `sink` when given, otherwise
    /// into Outcome::body. Non-success statuses become typed errors.
    Outcome get(const ContainerIdentifier& id, const std::string& target, const httplib::Headers& extra, BlobSink* sink,
        const std::function<void(const Outcome&)>& verify = {})
    {
        const auto base = base_for(id);
        const auto token_key = base + "|" + id.api_name();
        const auto what = "GET " + base + target;
        bool challenged = false;
        std::optional<Error> last_error;
        bool integrity_failure = false;

        for (int attempt = 1; attempt <= options.max_attempts;) {
            httplib::Headers headers = extra;
            if (options.static_token) {
                headers.emplace("Authorization", "Bearer " + *options.static_token);
            } else if (auto token = cached_token(token_key)) {
                headers.emplace("Authorization", "Bearer " + *token);
            }

            Outcome outcome;
            if (sink)
                sink->reset();
            auto on_response = [&outcome](const httplib::Response& response) {
                outcome.status = response.status;
                outcome.headers = response.headers;
                return true;
            };
            auto on_content = [&outcome, sink](const char* data, size_t length) {
                if (sink && outcome.status == 200) {
                    sink->write(std::span<const char>(data, length));
                    outcome.streamed += length;
                } else {
                    outcome.body.append(data, length);
                }
                return true;
            };

            auto lease = acquire(base);
            auto result = lease->Get(target, headers, on_response, on_content);
            if (!result) {
                lease.discard();
                integrity_failure = outcome.status == 200 && (outcome.streamed > 0 || !outcome.body.empty());
                last_error = Error(ErrorKind::Transient, what + ": " + httplib::to_string(result.error()));
                spdlog::warn("registry request failed: {} (attempt {}/{})", last_error->what(), attempt,
                    options.max_attempts);
            } else {
                outcome.status = result->status;
                outcome.headers = result->headers;
                if (outcome.status == 200) {
                    if (!verify)
                        return outcome;
                    try {
                        verify(outcome);
                        return outcome;
                    } catch (const Error& error) {
                        if (error.kind() != ErrorKind::IntegrityError)
                            throw;
                        integrity_failure = true;
                        last_error = error;
                        spdlog::warn("integrity check failed: {} (attempt {}/{})", error.what(), attempt,
                            options.max_attempts);
                    }
                } else if (outcome.status == 401) {
                    auto challenge = parse_bearer_challenge(result->get_header_value("WWW-Authenticate"));
                    if (options.static_token || challenged || !challenge)
                        throw Error(ErrorKind::AuthFailure, what + ": unauthorized");
                    challenged = true;
                    auto token = fetch_token(*challenge, id);
                    {
                        std::unique_lock lock(token_mutex);
                        tokens[token_key] = token;
                    }
                    continue; // challenge round trip does not consume an attempt
                } else if (outcome.status == 403) {
                    throw Error(ErrorKind::AuthFailure, what + ": forbidden");
                } else if (outcome.status == 404) {
                    throw Error(ErrorKind::NotFound, what + ": not found");
                } else if (outcome.status == 429 || outcome.status >= 500) {
                    integrity_failure = false;
                    last_error = Error(ErrorKind::Transient, what + ": HTTP " + std::to_string(outcome.status));
                    spdlog::warn("registry request failed: {} (attempt {}/{})", last_error->what(), attempt,
                        options.max_attempts);
                } else if (outcome.status == 406 || outcome.status == 415) {
                    throw Error(ErrorKind::UnsupportedMediaType, what + ": HTTP " + std::to_string(outcome.status));
                } else {
                    throw Error(ErrorKind::NotFound, what + ": unexpected HTTP " + std::to_string(outcome.status));
                }
            }

            if (attempt < options.max_attempts)
                std::this_thread::sleep_for(backoff(attempt));
            ++attempt;
        }

        if (integrity_failure)
            throw Error(ErrorKind::IntegrityError,
                what + ": content failed verification after " + std::to_string(options.max_attempts) + " attempts");
        throw *last_error;
    }

    /// Fetches a manifest by digest and checks its content hash.
    std::pair<std::string, json> manifest_by_digest(const ContainerIdentifier& id, const std::string& digest)
    {
        auto outcome = get(id, "/v2/" + id.api_name() + "/manifests/" + digest, {{"Accept", kManifestAccept}}, nullptr,
            [&digest](const Outcome& o) {
                if (content_digest(o.body) != digest)
                    throw Error(ErrorKind::IntegrityError, "manifest content does not match " + digest);
            });
        auto doc = json::parse(outcome.body, nullptr, false);
        if (doc.is_discarded() || !doc.is_object())
            throw Error(ErrorKind::UnsupportedMediaType, "manifest " + digest + " is not a JSON object");

        std::string type;
        if (doc.contains("mediaType") && doc["mediaType"].is_string())
            type = doc["mediaType"].get<std::string>();
        else
            type = strip_media_params(httplib::detail::get_header_value(outcome.headers, "Content-Type", 0, ""));
        if (type.empty() || type == "application/json" || type == "text/plain") {
            if (doc.value("schemaVersion", 0) == 2 && doc.contains("manifests"))
                type = media_type::kOciIndex;
            else if (doc.value("schemaVersion", 0) == 2 && doc.contains("config"))
                type = media_type::kOciManifest;
        }
        return {type, std::move(doc)};
    }
};

RegistryClient::RegistryClient(ClientOptions options)
    : options_(std::move(options))
    , impl_(std::make_unique<Impl>(options_))
{
    if (options_.max_attempts < 1)
        options_.max_attempts = 1;
}

RegistryClient::~RegistryClient() = default;

TagList RegistryClient::list_tags(const ContainerIdentifier& id)
{
    TagList list {id, {}, std::chrono::system_clock::now()};
    std::unordered_set<std::string> seen;
    std::unordered_set<std::string> visited;

    std::string target = "/v2/" + id.api_name() + "/tags/list";
    if (options_.page_size > 0)
        target += "?n=" + std::to_string(options_.page_size);

    while (true) {
        if (!visited.insert(target).second)
            throw Error(ErrorKind::Transient, "tag pagination loops back to " + target);

        auto outcome = impl_->get(id, target, {{"Accept", "application/json"}}, nullptr);
        auto doc = json::parse(outcome.body, nullptr, false);
        if (doc.is_discarded() || !doc.is_object())
            throw Error(ErrorKind::Transient, "tag listing for " + id.canonical() + " is not a JSON object");
        if (doc.contains("tags") && doc["tags"].is_array()) {
            for (const auto& tag : doc["tags"]) {
                if (!tag.is_string())
                    continue;
                auto value = tag.get<std::string>();
                if (!value.empty() && seen.insert(value).second)
                    list.tags.push_back(std::move(value));
            }
        }

        auto link = httplib::detail::get_header_value(outcome.headers, "Link", 0, "");
        auto next = next_link(link);
        if (!next)
            break;
        target = split_url(*next).target;
    }
    list.fetched_at = std::chrono::system_clock::now();
    return list;
}

ManifestRef RegistryClient::resolve_digest(const ContainerIdentifier& id, const std::string& tag)
{
    std::string header_digest;
    auto outcome = impl_->get(id, "/v2/" + id.api_name() + "/manifests/" + tag, {{"Accept", kManifestAccept}},
        nullptr, [&header_digest](const Outcome& o) {
            header_digest = httplib::detail::get_header_value(o.headers, "Docker-Content-Digest", 0, "");
            if (!header_digest.empty() && content_digest(o.body) != header_digest)
                throw Error(ErrorKind::IntegrityError, "manifest body does not match Docker-Content-Digest");
        });

    ManifestRef ref;
    ref.digest = header_digest.empty() ? content_digest(outcome.body) : header_digest;
    if (!is_valid_digest(ref.digest))
        throw Error(ErrorKind::UnsupportedMediaType, "registry reported unsupported digest '" + ref.digest + "'");
    ref.size_bytes = outcome.body.size();
    ref.media_type = strip_media_params(httplib::detail::get_header_value(outcome.headers, "Content-Type", 0, ""));
    auto doc = json::parse(outcome.body, nullptr, false);
    if (!doc.is_discarded() && doc.is_object() && doc.contains("mediaType") && doc["mediaType"].is_string())
        ref.media_type = doc["mediaType"].get<std::string>();
    return ref;
}

ImageConfig RegistryClient::fetch_image_config(const ContainerIdentifier& id, const ManifestRef& ref)
{
    auto [type, manifest] = impl_->manifest_by_digest(id, ref.digest);

    if (is_index_type(type)) {
        std::optional<std::string> child;
        for (const auto& entry : manifest.value("manifests", json::array())) {
            const auto platform = entry.value("platform", json::object());
            if (platform.value("os", "") != options_.platform.os ||
                platform.value("architecture", "") != options_.platform.architecture)
                continue;
            if (!options_.platform.variant.empty() && platform.value("variant", "") != options_.platform.variant)
                continue;
            child = entry.value("digest", "");
            break;
        }
        if (!child || !is_valid_digest(*child))
            throw Error(ErrorKind::NotFound,
                id.canonical() + "@" + ref.digest + " has no manifest for platform " + options_.platform.str());
        std::tie(type, manifest) = impl_->manifest_by_digest(id, *child);
        if (is_index_type(type))
            throw Error(ErrorKind::UnsupportedMediaType, "nested image index under " + ref.digest);
    }

    if (!is_manifest_type(type))
        throw Error(ErrorKind::UnsupportedMediaType,
            "unsupported manifest media type '" + type + "' for " + id.canonical() + "@" + ref.digest);

    ImageConfig config;
    try {
        for (const auto& layer : manifest.at("layers"))
            config.layer_digests.push_back(layer.at("digest").get<std::string>());
        auto config_digest = manifest.at("config").at("digest").get<std::string>();
        if (!is_valid_digest(config_digest))
            throw Error(ErrorKind::UnsupportedMediaType, "config digest '" + config_digest + "' is not sha256");

        StringSink blob;
        fetch_layer(id, config_digest, blob);
        auto doc = json::parse(blob.str(), nullptr, false);
        if (doc.is_discarded() || !doc.is_object())
            throw Error(ErrorKind::UnsupportedMediaType, "image config " + config_digest + " is not a JSON object");

        const auto section = doc.value("config", json::object());
        if (section.contains("Env") && section["Env"].is_array()) {
            for (const auto& item : section["Env"]) {
                auto value = item.get<std::string>();
                if (value.find('=') == std::string::npos)
                    throw Error(ErrorKind::UnsupportedMediaType, "image config Env entry without '=': " + value);
                config.env.push_back(std::move(value));
            }
        }
        if (section.contains("Entrypoint"))
            config.entrypoint = string_list(section["Entrypoint"]);
        if (section.contains("Cmd"))
            config.cmd = string_list(section["Cmd"]);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::UnsupportedMediaType, "malformed manifest or config for " + id.canonical() + ": " + e.what());
    }
    for (const auto& digest : config.layer_digests) {
        if (!is_valid_digest(digest))
            throw Error(ErrorKind::UnsupportedMediaType, "layer digest '" + digest + "' is not sha256");
    }
    return config;
}

std::uint64_t RegistryClient::fetch_layer(const ContainerIdentifier& id, const std::string& digest, BlobSink& dest)
{
    if (!is_valid_digest(digest))
        throw Error(ErrorKind::UnsupportedMediaType, "blob digest '" + digest + "' is not sha256");

    // Hash on the fly so large layers are never buffered in memory.
    class HashingSink : public BlobSink {
    public:
        explicit HashingSink(BlobSink& inner)
            : inner_(inner)
        {
        }
        void reset() override
        {
            inner_.reset();
            hasher_ = Sha256();
            bytes_ = 0;
        }
        void write(std::span<const char> data) override
        {
            hasher_.update(std::as_bytes(data));
            inner_.write(data);
            bytes_ += data.size();
        }
        std::string digest() { return "sha256:" + hasher_.hex_digest(); }
        std::uint64_t bytes() const { return bytes_; }

    private:
        BlobSink& inner_;
        Sha256 hasher_;
        std::uint64_t bytes_ = 0;
    };

    HashingSink sink(dest);
    impl_->get(id, "/v2/" + id.api_name() + "/blobs/" + digest, {}, &sink, [&sink, &digest](const Outcome&) {
        auto actual = sink.digest();
        if (actual != digest)
            throw Error(ErrorKind::IntegrityError, "blob content hashes to " + actual + ", expected " + digest);
    });
    return sink.bytes();
}

} // namespace module_forge
