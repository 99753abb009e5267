/*
 * Copyright (C) 2026 The module-forge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace httplib {
class Server;
}

namespace module_forge::testing {

/// In-process registry serving the v2 API on 127.0.0.1.
class MockRegistry {
public:
    MockRegistry();
    ~MockRegistry();
    MockRegistry(const MockRegistry&) = delete;
    MockRegistry& operator=(const MockRegistry&) = delete;

    std::string endpoint() const;

    /// Stores a blob and returns its digest.
    std::string add_blob(const std::string& bytes);
    /// Stores a manifest under `repo` and points `tag` at it (no tag when
    /// empty). Returns the manifest digest.
    std::string add_manifest(const std::string& repo, const std::string& tag, const std::string& body,
        const std::string& media_type);
    /// Config plus layers wired into an OCI manifest. Layers are uncompressed
    /// tar unless `gzip_layers` is set.
    std::string add_image(const std::string& repo, const std::string& tag, const std::vector<std::string>& env,
        const std::vector<std::string>& layers, bool gzip_layers = false);
    /// OCI index over (platform, manifest digest) pairs.
    std::string add_index(
        const std::string& repo, const std::string& tag, const std::vector<std::pair<std::string, std::string>>& children);
    void tag(const std::string& repo, const std::string& tag, const std::string& digest);
    void remove_tag(const std::string& repo, const std::string& tag);
    std::string manifest_body(const std::string& repo, const std::string& digest) const;

    /// Bearer auth through a /token endpoint.
    void require_auth(bool on);
    /// Largest page the registry returns, whatever the client asks for.
    void set_page_cap(int cap);
    /// The next `count` requests whose path contains `needle` get `status`.
    void fail_next(const std::string& needle, int count, int status = 503);
    /// Serves half the blob and drops the connection.
    void truncate_blob(const std::string& digest, bool on = true);
    /// Serves the blob with its first byte flipped.
    void corrupt_blob(const std::string& digest, bool on = true);
    /// Omits Docker-Content-Digest from manifest responses.
    void omit_digest_header(bool on);
    /// Reports a wrong Docker-Content-Digest on manifest responses.
    void lie_about_digest(bool on);

    /// Requests whose path contains `needle` (all requests when empty).
    std::size_t requests(const std::string& needle = "") const;
    std::size_t token_requests() const;
    void reset_counters();

private:
    struct Failure {
        std::string needle;
        int remaining;
        int status;
    };

    void install_routes();

    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;

    mutable std::mutex mutex_;
    std::map<std::string, std::string> blobs_;
    std::map<std::string, std::map<std::string, std::pair<std::string, std::string>>> manifests_; // repo -> digest -> (body, type)
    std::map<std::string, std::map<std::string, std::string>> tags_; // repo -> tag -> digest
    std::vector<Failure> failures_;
    std::map<std::string, int> truncated_;
    std::map<std::string, int> corrupted_;
    std::vector<std::string> request_log_;
    std::size_t token_requests_ = 0;
    bool auth_ = false;
    int page_cap_ = 0;
    bool omit_digest_ = false;
    bool lie_digest_ = false;
};

} // namespace module_forge::testing
