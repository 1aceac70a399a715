//! Runs every property suite on a small configuration and prints the
//! empirical constants.

use cztree::runner::{run_suite, RunConfig, Suite};
use cztree::{Vertex, Window};

fn main() -> cztree::Result<()> {
    let window = Window::new(Vertex::origin(), 4);
    let mut config = RunConfig::new(2, window, 7);
    config.suite_size = 40;
    for suite in Suite::ALL {
        let mut c = config.clone();
        if suite == Suite::LpRatio {
            c.window = Window::new(Vertex::origin(), 3);
        }
        let report = run_suite(&c, suite)?;
        println!(
            "{:<10} checks {:>5}  skipped {:>3}  failures {}",
            report.suite,
            report.checks,
            report.skipped,
            report.failures.len()
        );
        for r in &report.records {
            let exact = r.max_ratio_exact.as_deref().unwrap_or("-");
            println!("    {:<26} {:>12.6}  {exact:<12} {}", r.name, r.max_ratio, r.property);
        }
    }
    Ok(())
}
