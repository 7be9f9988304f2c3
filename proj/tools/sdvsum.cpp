// Copyright 2026 The sdvsum Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "sdvsum/cli.hpp"

int main(int argc, char** argv) { return sdvsum::dispatch(argc, argv, std::cout, std::cerr); }
