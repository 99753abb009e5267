/*
 * Copyright (C) 2026 The module-forge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "module_forge/error.hpp"

namespace module_forge {

namespace exit_code {
inline constexpr int kSuccess = 0;
inline constexpr int kFailure = 1;
inline constexpr int kUsage = 2;
inline constexpr int kRegistry = 3;
} // namespace exit_code

/// Exit status reported for an error of `kind`.
int exit_code_for(ErrorKind kind);

/// Runs the command line `args` (without the program name). Data goes to
/// `out`, logs and error messages to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace module_forge
