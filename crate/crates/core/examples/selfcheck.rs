//! Run the built-in property checks and print the report.
//!
//!     cargo run --release --example selfcheck -- [seed]

use phasecon::selfcheck::{run, Hooks};

fn main() -> phasecon::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);
    let report = run(seed, Hooks::default())?;
    print!("{}", report.render());
    if !report.passed() {
        std::process::exit(1);
    }
    Ok(())
}
