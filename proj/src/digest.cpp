/*
 * Copyright (C) 2026 The module-forge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "module_forge/digest.hpp"

#include <array>
#include <stdexcept>

#include <openssl/evp.h>

namespace module_forge {

struct Sha256::Impl {
    EVP_MD_CTX* ctx = nullptr;

    Impl()
        : ctx(EVP_MD_CTX_new())
    {
        if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1)
            throw std::runtime_error("sha256: failed to initialise OpenSSL digest context");
    }

    ~Impl() { EVP_MD_CTX_free(ctx); }
};

Sha256::Sha256()
    : impl_(std::make_unique<Impl>())
{
}

Sha256::~Sha256() = default;
Sha256::Sha256(Sha256&&) noexcept = default;
Sha256& Sha256::operator=(Sha256&&) noexcept = default;

void Sha256::update(std::span<const std::byte> data)
{
    if (!data.empty())
        EVP_DigestUpdate(impl_->ctx, data.data(), data.size());
}

void Sha256::update(std::string_view data)
{
    update(std::as_bytes(std::span(data.data(), data.size())));
}

std::string Sha256::hex_digest()
{
    std::array<unsigned char, EVP_MAX_MD_SIZE> md {};
    unsigned int len = 0;
    EVP_DigestFinal_ex(impl_->ctx, md.data(), &len);
    EVP_DigestInit_ex(impl_->ctx, EVP_sha256(), nullptr);

    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0x0f];
    }
    return out;
}

std::string sha256_hex(std::string_view data)
{
    Sha256 hasher;
    hasher.update(data);
    return hasher.hex_digest();
}

std::string content_digest(std::string_view data)
{
    return "sha256:" + sha256_hex(data);
}

bool is_valid_digest(std::string_view digest)
{
    constexpr std::string_view prefix = "sha256:";
    if (digest.size() != prefix.size() + 64 || !digest.starts_with(prefix))
        return false;
    for (char c : digest.substr(prefix.size())) {
        if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f')))
            return false;
    }
    return true;
}

} // namespace module_forge
