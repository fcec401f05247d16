// Copyright 2026 The Adaparse Authors.
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

#ifndef ADAPARSE_FILEUTIL_H_
#define ADAPARSE_FILEUTIL_H_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace adaparse {

// Writes `contents` to a sibling temporary file and renames it over `path`.
void WriteFileAtomically(const std::filesystem::path &path, std::string_view contents);

std::string ReadFile(const std::filesystem::path &path);

// Splits on runs of `sep`, dropping empty pieces.
std::vector<std::string> SplitTokens(std::string_view text, char sep = ' ');

std::string Join(const std::vector<std::string> &tokens, std::string_view sep = " ");

// Shortest decimal text that round-trips the double exactly.
std::string FormatDouble(double v);

}  // namespace adaparse

#endif  // ADAPARSE_FILEUTIL_H_
