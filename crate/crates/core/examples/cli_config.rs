//! Drives the command layer from a TOML configuration without the binary.

use impulse_lp::cli::{cmd_compare, cmd_solve, RunConfig};

const CONFIG: &str = r#"
dt = 0.1
n_actions = 21
seed = 7
n_runs = 500
constraints = [{ objective = 1, bound = 1.0 }]

[model]
preset = "expgrowth-c5"
"#;

fn main() {
    let mut cfg = RunConfig::from_toml(CONFIG).unwrap();
    let dir = std::env::temp_dir().join(format!("impulse-lp-example-{}", std::process::id()));
    cfg.output_dir = dir.clone();
    println!("config hash {}", cfg.hash());
    print!("{}", cfg.to_toml());

    let solved = cmd_solve(&cfg, false).unwrap();
    let checks = cmd_compare(&cfg).unwrap();
    for line in solved.lines.iter().chain(&checks.lines) {
        println!("{line}");
    }
    for f in solved.files.iter().chain(&checks.files) {
        println!("wrote {}", f.display());
    }
    std::fs::remove_dir_all(&dir).ok();
}
