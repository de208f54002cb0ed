//! Every acceptance criterion at full size, one PASS/FAIL line each.

use std::process::ExitCode;

use rill_cli::verify::{Level, Suite};

const SEED: u64 = 20240611;

fn main() -> ExitCode {
    let verdicts = Suite::new(SEED, Level::Full).run(|v| println!("{}", v.line()));
    let failed = verdicts.iter().filter(|v| !v.pass).count();
    println!("{} of {} criteria passed", verdicts.len() - failed, verdicts.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
