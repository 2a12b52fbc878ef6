// SPDX-License-Identifier: Apache-2.0

//! Acceptance report: one PASS/FAIL line per criterion. Exits non-zero when
//! any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use validation::criteria;

fn main() -> ExitCode {
    let start = Instant::now();
    let results = criteria::all();
    println!();
    for (id, name, outcome) in &results {
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!("{verdict} {id:>2} {name}: {}", outcome.summary);
        for note in &outcome.notes {
            println!("        {note}");
        }
    }
    let passed = results.iter().filter(|(_, _, o)| o.pass).count();
    println!(
        "\nacceptance: {passed}/{} criteria pass ({:.1} s)\n",
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
