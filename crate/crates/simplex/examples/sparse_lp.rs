//! A small transportation problem, solved and written in the text format.

use simplex::text::{read_lp, write_lp};
use simplex::{solve, RowBuilder, SparseLp};

fn main() {
    // Two plants with supply 3 and 4 ship to three markets with demand 2, 2, 3.
    let cost = [[4.0, 6.0, 9.0], [5.0, 3.0, 7.0]];
    let supply = [3.0, 4.0];
    let demand = [2.0, 2.0, 3.0];
    let col = |i: usize, j: usize| i * 3 + j;

    let mut lp = SparseLp::new(6);
    for i in 0..2 {
        for j in 0..3 {
            lp.set_cost(col(i, j), cost[i][j]).unwrap();
        }
    }
    for i in 0..2 {
        let mut r = RowBuilder::new();
        for j in 0..3 {
            r.add(col(i, j), 1.0);
        }
        lp.add_le(r.build(supply[i])).unwrap();
    }
    for j in 0..3 {
        let mut r = RowBuilder::new();
        for i in 0..2 {
            r.add(col(i, j), 1.0);
        }
        lp.add_eq(r.build(demand[j])).unwrap();
    }

    let sol = solve(&lp).unwrap();
    println!("{:?} cost {} in {} pivots", sol.status, sol.objective, sol.diagnostics.iterations);
    for i in 0..2 {
        let row: Vec<f64> = (0..3).map(|j| sol.primal[col(i, j)]).collect();
        println!("plant {i}: {row:?}");
    }
    println!("demand duals {:?}", sol.duals_eq);

    let text = write_lp(&lp, "transport");
    print!("{text}");
    let back = read_lp(&text).unwrap();
    assert_eq!(solve(&back).unwrap().objective, sol.objective);
}
