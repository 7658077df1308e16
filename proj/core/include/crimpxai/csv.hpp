/*
 * Copyright 2026 The crimpxai Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef CRIMPXAI_CSV_HPP_
#define CRIMPXAI_CSV_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace crimpxai::csv {

// Strips ASCII whitespace (including a trailing '\r') from both ends.
std::string_view trim(std::string_view text);

// Splits on `sep` without quoting support; fields are trimmed.
std::vector<std::string_view> split(std::string_view line, char sep = ',');

// Parses a finite double with '.' as decimal separator. Rejects trailing
// garbage, NaN and infinities.
std::optional<double> parse_double(std::string_view text);

std::optional<long long> parse_int(std::string_view text);

// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);

// Reads a whole file; throws IoError naming the path.
std::string read_file(const std::filesystem::path& path);

// Writes a whole file, creating parent directories; throws IoError.
void write_file(const std::filesystem::path& path, std::string_view contents);

// Splits text into lines, dropping the line terminators.
std::vector<std::string_view> lines(std::string_view text);

}  // namespace crimpxai::csv

#endif  // CRIMPXAI_CSV_HPP_
