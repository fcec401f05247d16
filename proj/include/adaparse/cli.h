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

// Command-line front end. Commands: induce-sketch, train, evaluate, parse,
// sweep, dump-attention, dump-reprs, gradcheck.
//
// Settings come from an optional flat key=value config file (--config),
// overridden by flags. Exit codes: 0 success, 1 usage error, 2 data error,
// 3 model or checkpoint error.

#ifndef ADAPARSE_CLI_H_
#define ADAPARSE_CLI_H_

#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace adaparse {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitModel = 3;

// `args` excludes the program name.
int RunCli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

// Reads "key = value" lines; '#' starts a comment, dashes in keys become
// underscores. Throws UsageError naming file and line for malformed lines
// and unknown keys.
std::map<std::string, std::string> ReadConfigFile(const std::filesystem::path &path);

}  // namespace adaparse

#endif  // ADAPARSE_CLI_H_
