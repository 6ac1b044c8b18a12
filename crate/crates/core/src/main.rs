// Copyright 2026 The vanhove Authors
// SPDX-License-Identifier: Apache-2.0

fn main() {
    std::process::exit(vanhove::cli::main_entry());
}
