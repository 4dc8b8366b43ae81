/*
 * Copyright 2026 The Tagrank Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace tagrank::io {

/// Opens a file for reading or throws InputError.
std::ifstream open_input(const std::filesystem::path& path);

/// Splits one CSV line on commas. Quoting is not supported; ids and labels
/// never contain commas. A trailing '\r' is dropped.
std::vector<std::string> split_csv_line(std::string_view line);

/// Writes through a temporary sibling file and renames it into place, so a
/// failed writer never leaves a partial file at `path`.
void write_file_atomic(const std::filesystem::path& path,
                       const std::function<void(std::ostream&)>& writer);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double value);

}  // namespace tagrank::io
