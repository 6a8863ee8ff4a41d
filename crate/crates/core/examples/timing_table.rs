//! Times the full tracing × method matrix at 100×100 and prints the CSV.

use qquad::bench::{run_bench, BenchOptions};
use qquad::{QuadraticPoly, Quaternion};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let alpha: Quaternion = "-1.3+2.1i+0.17j-0.31k".parse()?;
    let beta: Quaternion = "1.4+0.7i-0.23j+0.28k".parse()?;
    let p = QuadraticPoly::from_roots(alpha, beta)?;

    let table = run_bench(p, Some(vec![alpha, beta]), BenchOptions::default())?;
    print!("{}", table.to_csv());
    for check in table.soft_checks() {
        let mark = if check.passed { "ok  " } else { "WARN" };
        println!("{mark} {} ({})", check.name, check.detail);
    }
    Ok(())
}
