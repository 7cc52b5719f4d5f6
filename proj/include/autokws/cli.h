// Copyright (c) 2026 The autokws Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef AUTOKWS_CLI_H_
#define AUTOKWS_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace autokws {

// Exit codes: 0 success, 1 runtime failure, 2 usage error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Entry point of the `autokws` tool. `args` excludes the program name.
int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err);

// Reads a key=value config file ('#' comments) and appends "--key=value"
// for every key not already given on the command line. Flags beat the file.
std::vector<std::string> MergeConfigFile(const std::vector<std::string>& args,
                                         const std::string& config_path);

}  // namespace autokws

#endif  // AUTOKWS_CLI_H_
