//! Builds the 15-job config, writes it as TOML and reads it back.

use qquad::config::{Config, PolySpec};
use qquad::Quaternion;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let alpha: Quaternion = "-1.3+2.1i+0.17j-0.31k".parse()?;
    let beta: Quaternion = "1.4+0.7i-0.23j+0.28k".parse()?;
    let config = Config::new(PolySpec::roots(alpha, beta)).with_table_jobs(100);
    let text = config.to_toml()?;
    println!("{}", text.lines().take(16).collect::<Vec<_>>().join("\n"));
    let back = Config::from_toml(&text)?;
    println!("...\n{} jobs, round trip identical: {}", back.jobs.len(), back == config);
    for job in back.render_jobs()?.iter().take(3) {
        println!("  {}", job.file_stem());
    }
    Ok(())
}
