// Copyright 2026 The coopra Authors
// SPDX-License-Identifier: Apache-2.0

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use coopra_cli::{execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok((code, out)) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(out.as_bytes());
            let _ = stdout.flush();
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("coopra: {e}");
            ExitCode::from(2)
        }
    }
}
