use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use irrper_cli::config::{self, Cli, Format, Mode};
use irrper_cli::run::run;
use irrper_cli::{exit_code_for, EXIT_CHECK_FAILED, EXIT_OK, EXIT_USAGE};

fn exit(code: i32) -> ExitCode {
    ExitCode::from(code as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return exit(code);
        }
    };
    let env = std::env::var(config::PRECISION_ENV).ok();
    let cfg = match config::resolve(&cli, env.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("irrper: {e}");
            return exit(EXIT_USAGE);
        }
    };
    for w in config::warnings(&cfg) {
        eprintln!("irrper: warning: {w}");
    }
    let mut progress = |line: &str| eprintln!("{line}");
    let report = match run(&cfg, &mut progress) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("irrper: {e}");
            return exit(exit_code_for(&e));
        }
    };
    let mut buf = Vec::new();
    match cfg.format {
        Format::Json => buf.extend_from_slice(report.to_json().as_bytes()),
        Format::Csv => {
            if let Err(e) = report.write_csv(&mut buf) {
                eprintln!("irrper: csv: {e}");
                return exit(EXIT_USAGE);
            }
        }
    }
    let written = match &cfg.out {
        Some(path) => std::fs::write(path, &buf).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => std::io::stdout().write_all(&buf).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        eprintln!("irrper: {e}");
        return exit(EXIT_USAGE);
    }
    if cfg.mode != Mode::Verify {
        for c in report.checks.iter().filter(|c| !c.passed) {
            eprintln!("irrper: check failed: {} ({:?} > {:e})", c.name, c.measured, c.tolerance);
        }
    }
    exit(if report.all_passed() { EXIT_OK } else { EXIT_CHECK_FAILED })
}
