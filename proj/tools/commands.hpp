/******************************************************************************
 * Copyright 2026 The lungreg Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *	http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *****************************************************************************/
#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace lungreg::cli {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kInputError = 2,
    kNonFiniteLoss = 3,
};

/// Runs the command line given without the program name, e.g.
/// {"register", "--fixed", "f.mha", ...}. Diagnostics go to err.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace lungreg::cli
