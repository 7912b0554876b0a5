// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#include <iostream>

#include "woad/cli.hpp"

int main(int argc, char** argv) { return woad::run_cli(argc, argv, std::cout, std::cerr); }
