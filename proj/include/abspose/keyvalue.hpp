// Copyright 2026 The abspose Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace abspose {

/// Plain-text `key=value` records; '#' starts a comment line.
using KeyValues = std::map<std::string, std::string>;

/// Throws ConfigError on unreadable files or lines without '='.
KeyValues read_key_values(const std::filesystem::path& path);
void write_key_values(const std::filesystem::path& path, const KeyValues& kv);

/// Typed lookups; throw ConfigError on missing keys or unparsable values.
const std::string& require(const KeyValues& kv, const std::string& key);
double get_double(const KeyValues& kv, const std::string& key);
double get_double(const KeyValues& kv, const std::string& key, double fallback);
long long get_int(const KeyValues& kv, const std::string& key);
long long get_int(const KeyValues& kv, const std::string& key, long long fallback);

/// Shortest decimal text that parses back to exactly `v`.
std::uint64_t get_uint64(const KeyValues& kv, const std::string& key, std::uint64_t fallback);

std::string format_exact(double v);

}  // namespace abspose
