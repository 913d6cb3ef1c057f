//! Lays out the orbit grid and prints the jump table of the initial cell.

use impulse_lp::benchmarks::{build_expgrowth, preset};
use impulse_lp::discretize::{build_grid, discretize, JumpTarget};

fn main() {
    let spec = build_expgrowth(&preset("expgrowth-c5").unwrap()).unwrap();
    let grid = build_grid(&spec, 0.1, 7).unwrap();
    let dm = discretize(&spec, &grid).unwrap();
    println!(
        "{} origins, {} cells, pitch {}, max snap distance {:.2e}",
        grid.n_origins(),
        grid.n_cells(),
        grid.pitch,
        dm.diagnostics.max_snap_distance
    );
    for (o, &x) in grid.origins.iter().enumerate() {
        println!("origin {o:>2}  x = {x:.3}  cells {}", grid.orbit_len[o]);
    }
    let x0 = grid.x0_cell().unwrap();
    println!("jumps from the initial cell (dwell cost {:.3}):", dm.dwell_cost(x0, 0));
    for (a, size) in grid.actions.iter().enumerate() {
        let target = match dm.jump_to(x0, a) {
            JumpTarget::Origin(o) => format!("origin {o} (x = {:.3})", grid.origins[o]),
            JumpTarget::Absorbed => "absorbed".to_string(),
        };
        println!("  a = {size:.2}  cost {:.2}  -> {target}", dm.jump_cost(x0, a, 0));
    }
}
