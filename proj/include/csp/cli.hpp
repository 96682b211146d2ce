// Copyright 2026 The csp Authors
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

// Command-line front end. Exit codes: 0 ok, 2 config or parse error,
// 3 full-set fallback under --strict, 4 infeasible prediction.

#ifndef CSP_CLI_HPP_
#define CSP_CLI_HPP_

#include <ostream>

namespace csp {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSentinel = 3;
inline constexpr int kExitInfeasible = 4;

// Output goes to --out when given, otherwise to `out`.
int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace csp

#endif  // CSP_CLI_HPP_
