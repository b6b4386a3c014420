//! The four-cell matrix {flat, curved} × {equal walls, net current} through
//! the batch runner, as the `matrix` subcommand does.

use cats_eye::config::ExperimentConfig;
use cats_eye::experiment::{run_command, Command};

fn main() -> cats_eye::Result<()> {
    let out = std::env::temp_dir().join("cats_eye_matrix");
    let m = run_command(Command::Matrix, &ExperimentConfig::default(), &out)?;
    for r in &m.runs {
        if let Some(n) = r.metrics.get("islands") {
            println!(
                "{:<15} eps {:<6} gap {:<5} islands {n} projection {:.3e}",
                r.name, r.metrics["eps"], r.metrics["gap"], r.metrics["projection"]
            );
        }
    }
    println!("{} files in {}", m.files.len(), out.display());
    Ok(())
}
