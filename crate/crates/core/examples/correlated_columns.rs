//! Testing whether two columns of a table are independent, one pass over
//! the rows.
//!
//! Column a is a weekday, column b is "late" or "on time", with lateness
//! more likely on Mondays.

use std::io::Cursor;

use indep_stream::cli::{parse_records, render, run, OutputFormat, RunConfig};
use indep_stream::stream::Mode;

fn main() -> indep_stream::Result<()> {
    let mut csv = String::from("# weekday,late\n");
    for i in 0..700u32 {
        let day = i % 7 + 1;
        let late = if day == 1 { (i % 3 != 0) as u32 + 1 } else { (i % 5 == 0) as u32 + 1 };
        csv.push_str(&format!("{day},{late}\n"));
    }

    let mut cfg = RunConfig::new(2, 7);
    cfg.mode = Mode::Both;
    cfg.overrides.push("amplification=9".into());
    let report = run(&cfg, parse_records(Cursor::new(csv), 2, 7)?)?;
    println!("{}", render(&report, OutputFormat::Tsv)?.lines().filter(|l| !l.starts_with("diagnostics")).collect::<Vec<_>>().join("\n"));
    Ok(())
}
