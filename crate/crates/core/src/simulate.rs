//! Monte Carlo execution of strategies on the discrete model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::discretize::{DiscreteModel, JumpTarget};
use crate::lp_occupation::{Dwell, OccupationVector};
use crate::strategy::Policy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub step: usize,
    pub origin: usize,
    /// Base state at the start of the dwell.
    pub state: f64,
    pub dwell: Dwell,
    /// `None` for `θ = ∞`.
    pub action: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub events: Vec<Event>,
    pub costs: Vec<f64>,
    /// `false` only when `max_events` ran out first.
    pub absorbed: bool,
}

impl Trajectory {
    /// Costs re-accumulated from the event list.
    pub fn recompute_costs(&self, dm: &DiscreteModel) -> Vec<f64> {
        let mut costs = vec![0.0; dm.n_objectives];
        for e in &self.events {
            accumulate(dm, e, &mut costs);
        }
        costs
    }
}

fn accumulate(dm: &DiscreteModel, e: &Event, costs: &mut [f64]) {
    let start = dm.grid.origin_cell(e.origin);
    let n = dm.grid.orbit_len[e.origin];
    let d = match e.dwell {
        Dwell::Finite(d) => d,
        Dwell::Infinite => n,
    };
    for (j, c) in costs.iter_mut().enumerate() {
        *c += dm.dwell_sum(start, d, j);
        if let Some(a) = e.action {
            *c += dm.jump_cost(start + d, a, j);
        }
    }
}

/// Two uniforms for `(seed, stream, step)`; the ChaCha block counter makes this stateless.
fn uniforms(seed: u64, stream: u64, step: usize) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(step as u128 * 4);
    (rng.random::<f64>(), rng.random::<f64>())
}

fn sample(p: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &q) in p.iter().enumerate() {
        if q > 0.0 {
            acc += q;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// One trajectory with the default stream of `seed`.
pub fn run(dm: &DiscreteModel, pi: &dyn Policy, seed: u64, max_events: usize) -> Trajectory {
    run_stream(dm, pi, seed, 0, max_events)
}

pub fn run_stream(
    dm: &DiscreteModel,
    pi: &dyn Policy,
    seed: u64,
    stream: u64,
    max_events: usize,
) -> Trajectory {
    let grid = &dm.grid;
    let mut traj = Trajectory {
        events: Vec::new(),
        costs: vec![0.0; dm.n_objectives],
        absorbed: true,
    };
    let Some(mut origin) = grid.x0_origin else {
        return traj;
    };
    for step in 0..max_events {
        let n = grid.orbit_len[origin];
        let start = grid.origin_cell(origin);
        let (u1, u2) = uniforms(seed, stream, step);
        let (dwell, action) = match pi.kernel(step, origin) {
            None => (Dwell::Infinite, None),
            Some(k) => {
                let d = sample(&k.p_dwell, u1);
                if d == n {
                    (Dwell::Infinite, None)
                } else {
                    (Dwell::Finite(d), Some(sample(&k.p_action[d], u2)))
                }
            }
        };
        let event = Event {
            step,
            origin,
            state: dm.entry_state[start],
            dwell,
            action,
        };
        accumulate(dm, &event, &mut traj.costs);
        traj.events.push(event);
        let (Dwell::Finite(d), Some(a)) = (dwell, action) else {
            return traj;
        };
        match dm.jump_to(start + d, a) {
            JumpTarget::Absorbed => return traj,
            JumpTarget::Origin(o) => origin = o,
        }
    }
    traj.absorbed = false;
    traj
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n: usize,
    pub non_absorbed: usize,
}

/// Mean and standard error per objective; identical samples give exactly zero error.
pub fn summarize(trajectories: &[Trajectory], n_objectives: usize) -> CostEstimate {
    let n = trajectories.len();
    let mut mean = vec![0.0; n_objectives];
    let mut stderr = vec![0.0; n_objectives];
    if n > 0 {
        for j in 0..n_objectives {
            let x0 = trajectories[0].costs[j];
            let (mut s, mut s2) = (0.0, 0.0);
            for t in trajectories {
                let d = t.costs[j] - x0;
                s += d;
                s2 += d * d;
            }
            let nf = n as f64;
            mean[j] = x0 + s / nf;
            if n > 1 {
                let var = ((s2 - s * s / nf) / (nf - 1.0)).max(0.0);
                stderr[j] = (var / nf).sqrt();
            }
        }
    }
    CostEstimate {
        mean,
        stderr,
        n,
        non_absorbed: trajectories.iter().filter(|t| !t.absorbed).count(),
    }
}

pub const DEFAULT_MAX_EVENTS: usize = 10_000;

/// Runs `n_runs` trajectories on independent streams of `seed`.
pub fn simulate_many(dm: &DiscreteModel, pi: &dyn Policy, n_runs: usize, seed: u64) -> Vec<Trajectory> {
    (0..n_runs)
        .map(|r| run_stream(dm, pi, seed, r as u64, DEFAULT_MAX_EVENTS))
        .collect()
}

pub fn estimate(dm: &DiscreteModel, pi: &dyn Policy, n_runs: usize, seed: u64) -> CostEstimate {
    summarize(&simulate_many(dm, pi, n_runs, seed), dm.n_objectives)
}

/// Event frequencies per `(pre-impulse cell, dwell, action)`, divided by the run count.
pub fn empirical_occupation(trajectories: &[Trajectory], dm: &DiscreteModel) -> OccupationVector {
    let mut mu = OccupationVector::zeros(dm);
    if trajectories.is_empty() {
        return mu;
    }
    let w = 1.0 / trajectories.len() as f64;
    for t in trajectories {
        for e in &t.events {
            let cell = dm.grid.origin_cell(e.origin);
            mu.add(cell, e.dwell, e.action.unwrap_or(0), w);
        }
    }
    mu
}

/// One JSON object per line.
pub fn trajectories_to_jsonl(trajectories: &[Trajectory], config_hash: &str) -> String {
    #[derive(Serialize)]
    struct Line<'a> {
        config_hash: &'a str,
        run: usize,
        #[serde(flatten)]
        trajectory: &'a Trajectory,
    }
    let mut out = String::new();
    for (run, trajectory) in trajectories.iter().enumerate() {
        let line = Line {
            config_hash,
            run,
            trajectory,
        };
        out.push_str(&serde_json::to_string(&line).expect("trajectory serializes"));
        out.push('\n');
    }
    out
}

/// CSV with columns `objective_index,mean,stderr,n`.
pub fn estimate_to_csv(est: &CostEstimate, config_hash: &str) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["objective_index", "mean", "stderr", "n", "config_hash"])
        .expect("in-memory write");
    for j in 0..est.mean.len() {
        w.write_record([
            j.to_string(),
            format!("{:.17e}", est.mean[j]),
            format!("{:.17e}", est.stderr[j]),
            est.n.to_string(),
            config_hash.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}
