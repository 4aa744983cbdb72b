// asem/cli.h

// Copyright 2026  The asem authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef ASEM_CLI_H_
#define ASEM_CLI_H_

#include <ostream>
#include <string>
#include <vector>

#include "asem/error.h"

namespace asem {

/// Process exit codes of the command-line tool.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

int ExitCodeFor(ErrorKind kind);

/// Runs one command.  `args` excludes the program name, e.g.
/// {"eer", "--trials", "t.trials", "--scores", "s.scores"}.  Results go to
/// `out`, diagnostics to `err`; the return value is the exit code.
int RunCli(const std::vector<std::string> &args, std::ostream &out,
           std::ostream &err);

}  // namespace asem

#endif  // ASEM_CLI_H_
