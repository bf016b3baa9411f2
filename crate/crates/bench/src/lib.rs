//! Shared fixtures for the benchmarks.

use std::f64::consts::PI;

use abab_core::{ChainParams, ChainSchedule, ChainSegment, PairParams, Pulse, Schedule};

/// ω = 1, Ω = 2, default coupling bound.
pub fn pair() -> PairParams {
    PairParams::from_omegas(1.0, 2.0, PairParams::default_j_max(1.0)).expect("valid pair")
}

pub fn square_schedule(n_pulses: usize) -> Schedule {
    let p = pair();
    let pulses = (0..n_pulses)
        .map(|k| Pulse::square(p.j_max * (k % 3) as f64 / 3.0, 0.3 + 0.1 * k as f64))
        .collect();
    Schedule::new(p, pulses).expect("valid schedule")
}

pub fn gaussian_schedule() -> Schedule {
    Schedule::new(pair(), vec![Pulse::gaussian(0.8, 1.0, 2.0)]).expect("valid schedule")
}

/// `n_segments` pulses hopping along the bonds of an `n`-spin ABAB chain.
pub fn chain_schedule(n: usize, n_segments: usize) -> ChainSchedule {
    let chain = ChainParams::alternating(n, 3.0, 1.0).expect("valid chain");
    let segments = (0..n_segments)
        .map(|k| {
            let mut couplings = vec![0.0; n - 1];
            couplings[k % (n - 1)] = 0.5;
            ChainSegment {
                couplings,
                duration: PI / 7.0,
            }
        })
        .collect();
    ChainSchedule::new(chain, segments).expect("valid chain schedule")
}
