/*
 * Copyright (C) 2026 The module-forge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "module_forge/tag_pipeline.hpp"

#include <algorithm>
#include <limits>

#include "module_forge/error.hpp"

namespace module_forge {

namespace {

bool is_digit(char c)
{
    return c >= '0' && c <= '9';
}

std::uint64_t saturating_parse(std::string_view digits)
{
    constexpr auto max = std::numeric_limits<std::uint64_t>::max();
    std::uint64_t value = 0;
    for (char c : digits) {
        auto d = static_cast<std::uint64_t>(c - '0');
        if (value > (max - d) / 10)
            return max;
        value = value * 10 + d;
    }
    return value;
}

/// Compares two digit runs numerically without overflow.
int compare_digit_runs(std::string_view a, std::string_view b)
{
    auto strip = [](std::string_view s) {
        auto pos = s.find_first_not_of('0');
        return pos == std::string_view::npos ? std::string_view {} : s.substr(pos);
    };
    a = strip(a);
    b = strip(b);
    if (a.size() != b.size())
        return a.size() < b.size() ? -1 : 1;
    auto c = a.compare(b);
    return c < 0 ? -1 : (c > 0 ? 1 : 0);
}

std::string_view next_token(std::string_view text, size_t& pos)
{
    auto start = pos;
    bool digits = is_digit(text[pos]);
    while (pos < text.size() && is_digit(text[pos]) == digits)
        ++pos;
    return text.substr(start, pos - start);
}

/// Bracket expression starting at `pattern[pos] == '['`. Returns the index
/// one past the closing `]`, or npos when unterminated.
size_t bracket_end(std::string_view pattern, size_t pos)
{
    size_t i = pos + 1;
    if (i < pattern.size() && (pattern[i] == '!' || pattern[i] == '^'))
        ++i;
    if (i < pattern.size() && pattern[i] == ']')
        ++i;
    while (i < pattern.size() && pattern[i] != ']') {
        if (pattern[i] == '\\')
            ++i;
        ++i;
    }
    return i < pattern.size() ? i + 1 : std::string_view::npos;
}

bool bracket_matches(std::string_view body, char c)
{
    bool negate = false;
    size_t i = 0;
    if (i < body.size() && (body[i] == '!' || body[i] == '^')) {
        negate = true;
        ++i;
    }
    bool matched = false;
    bool first = true;
    while (i < body.size()) {
        char lo = body[i];
        if (lo == '\\' && i + 1 < body.size())
            lo = body[++i];
        else if (lo == ']' && !first)
            break;
        first = false;
        ++i;
        if (i + 1 < body.size() && body[i] == '-' && body[i + 1] != ']') {
            char hi = body[i + 1];
            if (hi == '\\' && i + 2 < body.size()) {
                hi = body[i + 2];
                ++i;
            }
            i += 2;
            if (lo <= c && c <= hi)
                matched = true;
        } else if (lo == c) {
            matched = true;
        }
    }
    return matched != negate;
}

bool glob_match(std::string_view pattern, std::string_view text)
{
    size_t p = 0;
    size_t t = 0;
    size_t star_p = std::string_view::npos;
    size_t star_t = 0;

    while (t < text.size()) {
        if (p < pattern.size()) {
            char pc = pattern[p];
            if (pc == '*') {
                star_p = ++p;
                star_t = t;
                continue;
            }
            if (pc == '?') {
                ++p;
                ++t;
                continue;
            }
            if (pc == '[') {
                auto end = bracket_end(pattern, p);
                if (bracket_matches(pattern.substr(p + 1, end - p - 2), text[t])) {
                    p = end;
                    ++t;
                    continue;
                }
            } else {
                if (pc == '\\')
                    pc = pattern[++p];
                if (pc == text[t]) {
                    ++p;
                    ++t;
                    continue;
                }
            }
        }
        if (star_p == std::string_view::npos)
            return false;
        p = star_p;
        t = ++star_t;
    }
    while (p < pattern.size() && pattern[p] == '*')
        ++p;
    return p == pattern.size();
}

} // namespace

TagGlob::TagGlob(std::string pattern)
    : pattern_(std::move(pattern))
{
    if (pattern_.empty())
        throw Error(ErrorKind::BadPattern, "empty tag pattern");
    for (size_t i = 0; i < pattern_.size(); ++i) {
        if (pattern_[i] == '\\') {
            if (i + 1 == pattern_.size())
                throw Error(ErrorKind::BadPattern, "pattern '" + pattern_ + "' ends with a dangling escape");
            ++i;
        } else if (pattern_[i] == '[') {
            auto end = bracket_end(pattern_, i);
            if (end == std::string_view::npos)
                throw Error(ErrorKind::BadPattern, "pattern '" + pattern_ + "' has an unterminated '['");
            i = end - 1;
        }
    }
}

bool TagGlob::matches(std::string_view text) const
{
    return glob_match(pattern_, text);
}

TagCandidate parse_tag(std::string_view raw)
{
    TagCandidate candidate {std::string(raw), std::nullopt, std::nullopt};
    if (raw.empty() || !is_digit(raw.front()))
        return candidate;

    std::array<std::uint64_t, 3> parts {0, 0, 0};
    size_t pos = 0;
    for (size_t index = 0; index < parts.size(); ++index) {
        if (index > 0) {
            if (pos + 1 >= raw.size() || raw[pos] != '.' || !is_digit(raw[pos + 1]))
                break;
            ++pos;
        }
        auto start = pos;
        while (pos < raw.size() && is_digit(raw[pos]))
            ++pos;
        parts[index] = saturating_parse(raw.substr(start, pos - start));
    }

    candidate.version_core = VersionCore {parts[0], parts[1], parts[2]};
    if (pos < raw.size())
        candidate.build_meta = std::string(raw.substr(pos));
    return candidate;
}

int natural_compare(std::string_view a, std::string_view b)
{
    size_t i = 0;
    size_t j = 0;
    while (i < a.size() && j < b.size()) {
        auto ta = next_token(a, i);
        auto tb = next_token(b, j);
        int c;
        if (is_digit(ta.front()) && is_digit(tb.front())) {
            c = compare_digit_runs(ta, tb);
        } else {
            auto cmp = ta.compare(tb);
            c = cmp < 0 ? -1 : (cmp > 0 ? 1 : 0);
        }
        if (c != 0)
            return c;
    }
    if (i < a.size())
        return 1;
    if (j < b.size())
        return -1;
    return 0;
}

bool tag_less(const TagCandidate& a, const TagCandidate& b)
{
    if (a.parseable() != b.parseable())
        return a.parseable();
    if (a.parseable()) {
        if (*a.version_core != *b.version_core)
            return *a.version_core < *b.version_core;
        int meta = natural_compare(a.build_meta.value_or(""), b.build_meta.value_or(""));
        if (meta != 0)
            return meta < 0;
    }
    return a.raw < b.raw;
}

std::vector<TagCandidate> filter_tags(const std::vector<std::string>& tags, const std::vector<std::string>& exclusions)
{
    std::vector<TagGlob> globs;
    globs.reserve(exclusions.size());
    for (const auto& pattern : exclusions)
        globs.emplace_back(pattern);

    std::vector<TagCandidate> out;
    for (const auto& tag : tags) {
        if (tag.empty() || tag == "latest")
            continue;
        if (std::any_of(globs.begin(), globs.end(), [&tag](const TagGlob& glob) { return glob.matches(tag); }))
            continue;
        out.push_back(parse_tag(tag));
    }
    return out;
}

std::vector<TagCandidate> filter_tags(const TagList& tags, const std::vector<std::string>& exclusions)
{
    return filter_tags(tags.tags, exclusions);
}

TagOrdering sort_and_select(std::vector<TagCandidate> candidates)
{
    std::sort(candidates.begin(), candidates.end(), tag_less);
    TagOrdering ordering {std::move(candidates), std::nullopt};
    for (auto it = ordering.ordered.rbegin(); it != ordering.ordered.rend(); ++it) {
        if (it->parseable()) {
            ordering.latest = *it;
            break;
        }
    }
    return ordering;
}

} // namespace module_forge
