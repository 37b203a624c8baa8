//! Finite-difference check of every differentiable operation.
//!
//! `cargo run --release --example gradcheck -- [seed]`

use attgan3d::gradsuite::gradient_suite;

fn main() -> attgan3d::Result<()> {
    let seed = std::env::args().nth(1).map_or(0, |s| s.parse().expect("seed"));
    let checks = gradient_suite(seed)?;
    for c in &checks {
        println!("{}", c.line());
    }
    let failed = checks.iter().filter(|c| !c.report.pass).count();
    println!("{} ops, {failed} failed", checks.len());
    if failed > 0 {
        std::process::exit(1);
    }
    Ok(())
}
