// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <iosfwd>

namespace woad {

/// Entry point of the `woad` tool. Subcommands: synth, train, infer, eval,
/// gradcheck. Failures print one line `error: <kind>: <message>` to `err`
/// and return nonzero (2 for usage errors, 1 otherwise).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace woad
