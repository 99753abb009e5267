/*
 * Copyright (C) 2026 The module-forge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "module_forge/identifier.hpp"

namespace module_forge {

namespace media_type {
inline constexpr const char* kOciManifest = "application/vnd.oci.image.manifest.v1+json";
inline constexpr const char* kOciIndex = "application/vnd.oci.image.index.v1+json";
inline constexpr const char* kDockerManifest = "application/vnd.docker.distribution.manifest.v2+json";
inline constexpr const char* kDockerManifestList = "application/vnd.docker.distribution.manifest.list.v2+json";
inline constexpr const char* kOciConfig = "application/vnd.oci.image.config.v1+json";
inline constexpr const char* kDockerConfig = "application/vnd.docker.container.image.v1+json";
inline constexpr const char* kOciLayerTar = "application/vnd.oci.image.layer.v1.tar";
inline constexpr const char* kOciLayerTarGzip = "application/vnd.oci.image.layer.v1.tar+gzip";
inline constexpr const char* kDockerLayerTarGzip = "application/vnd.docker.image.rootfs.diff.tar.gzip";
} // namespace media_type

struct TagList {
    ContainerIdentifier identifier;
    std::vector<std::string> tags;
    std::chrono::system_clock::time_point fetched_at;
};

struct ManifestRef {
    std::string media_type;
    std::string digest;
    std::uint64_t size_bytes = 0;
};

struct ImageConfig {
    std::vector<std::string> env;
    std::optional<std::vector<std::string>> entrypoint;
    std::optional<std::vector<std::string>> cmd;
    std::vector<std::string> layer_digests;
};

struct Platform {
    std::string os = "linux";
    std::string architecture = "amd64";
    std::string variant;

    /// Accepts `os/arch` or `os/arch/variant`.
    static Platform parse(const std::string& text);
    std::string str() const;
};

/// Destination for streamed blobs. reset() is called before every attempt so
/// a retried download never appends to a partial one.
class BlobSink {
public:
    virtual ~BlobSink() = default;
    virtual void reset() = 0;
    virtual void write(std::span<const char> data) = 0;
};

class StringSink : public BlobSink {
public:
    void reset() override { data_.clear(); }
    void write(std::span<const char> data) override { data_.append(data.data(), data.size()); }
    const std::string& str() const noexcept { return data_; }

private:
    std::string data_;
};

class FileSink : public BlobSink {
public:
    explicit FileSink(std::string path);
    ~FileSink() override;
    void reset() override;
    void write(std::span<const char> data) override;
    void close();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct ClientOptions {
    /// Base URL used for every registry host, e.g. `http://127.0.0.1:5000`.
    /// When unset, `https://<registry_host>` is used.
    std::optional<std::string> endpoint;
    /// Static bearer token; skips the challenge flow.
    std::optional<std::string> static_token;
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff {500};
    std::chrono::milliseconds max_backoff {8000};
    std::chrono::seconds connect_timeout {10};
    std::chrono::seconds read_timeout {60};
    Platform platform;
    /// `n` query parameter for tag listing; 0 lets the registry decide.
    int page_size = 0;

    /// Fills static_token from MODULE_FORGE_TOKEN when it is set.
    static ClientOptions from_environment();
};

/// Registry API v2 client.
///
/// Safe for concurrent use: connections are pooled per base URL and the
/// bearer-token cache is guarded by a shared mutex. All errors are
/// module_forge::Error with kinds NotFound, AuthFailure, Transient,
/// UnsupportedMediaType or IntegrityError.
class RegistryClient {
public:
    explicit RegistryClient(ClientOptions options = {});
    ~RegistryClient();
    RegistryClient(const RegistryClient&) = delete;
    RegistryClient& operator=(const RegistryClient&) = delete;

    /// All tags, following `Link: <...>; rel="next"` pagination to exhaustion.
    TagList list_tags(const ContainerIdentifier& id);

    /// Digest of the manifest `tag` points at. For multi-arch images this is
    /// the index digest.
    ManifestRef resolve_digest(const ContainerIdentifier& id, const std::string& tag);

    /// Decoded config blob of the image `ref` names. Indexes are narrowed to
    /// the child matching ClientOptions::platform.
    ImageConfig fetch_image_config(const ContainerIdentifier& id, const ManifestRef& ref);

    /// Streams a blob into `dest`, verifying its sha256. Returns bytes written.
    std::uint64_t fetch_layer(const ContainerIdentifier& id, const std::string& digest, BlobSink& dest);

    const ClientOptions& options() const noexcept { return options_; }

private:
    struct Impl;
    ClientOptions options_;
    std::unique_ptr<Impl> impl_;
};

} // namespace module_forge
