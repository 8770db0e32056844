//! Runs the three exit experiments and prints the final mass in D.
//!
//! ```text
//! cargo run --release --example braess -- [first_seed] [seeds]
//! ```

use crowdsweep::scenarios::braess_suite;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let first: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);
    let count: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);
    println!("seed      none  stationary  moving  ordered");
    for seed in first..first + count {
        let r = braess_suite(seed)?;
        println!(
            "{:>4}  {:>8.4}  {:>10.4}  {:>6.4}  {}",
            seed,
            r.none,
            r.stationary,
            r.moving,
            r.ordered()
        );
    }
    Ok(())
}
