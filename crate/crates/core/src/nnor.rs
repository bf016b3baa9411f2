//! Search for the two-qubit conditional phase gate (nNOR) on the central pair
//! of a BABA chain, plus its verification on the four-spin chain.
//!
//! The target is `i·diag(1, 1, −1, 1)·U_0(τ)` on the pair, with `U_0` the free
//! evolution for the same total time. The sign lands on the central `|10⟩`,
//! which is `|0⟩_L|0⟩_L` of the two logical qubits the pair straddles.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::chain::{chain_unitary, logical_block, ChainSchedule};
use crate::compiler::{nnor_report, FidelityReport};
use crate::error::{Error, Result};
use crate::linalg::{diag, fidelity_up_to_phase, ComplexMatrix, I, ONE};
use crate::optimize::NelderMead;
use crate::propagator::{constant_unchecked, frame_residual, propagate_constant, Pulse, Schedule, Subspace};
use crate::spin::{ChainParams, PairParams};

pub const DEFAULT_SEEDS: usize = 64;
pub const DEFAULT_SEARCH_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct NnorTarget {
    pub tau: f64,
    pub target_unitary: ComplexMatrix,
}

fn sign_pattern() -> ComplexMatrix {
    diag(&[ONE, ONE, -ONE, ONE])
}

pub fn nnor_target(params: &PairParams, tau: f64) -> Result<NnorTarget> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidArgument(format!("nNOR duration must be > 0, got {tau}")));
    }
    let u0 = propagate_constant(params, 0.0, tau, Subspace::Full)?;
    Ok(NnorTarget {
        tau,
        target_unitary: sign_pattern() * u0 * I,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub n_pulses: usize,
    /// Upper coupling bound. Zero is allowed and pins every pulse to free
    /// evolution.
    pub j_max: f64,
    pub t_max: f64,
    pub seeds: usize,
    pub rng_seed: u64,
    /// Target infidelity.
    pub tolerance: f64,
    /// Weight of the soft `ωτ ≡ 0 (mod 2π)` penalty. Off by default: an exact
    /// nNOR needs `ωτ ≡ π/2 (mod π)`, so the penalty only pulls away from it.
    pub frame_sync_weight: f64,
    /// Objective evaluations per start.
    pub max_evals: usize,
}

impl SearchConfig {
    pub fn for_pair(params: &PairParams) -> Self {
        let scale = if params.omega() != 0.0 {
            params.omega().abs()
        } else if params.j_max > 0.0 {
            params.j_max
        } else {
            1.0
        };
        Self {
            n_pulses: 2,
            j_max: params.j_max,
            t_max: 4.0 * PI / scale,
            seeds: DEFAULT_SEEDS,
            rng_seed: 0,
            tolerance: DEFAULT_SEARCH_TOLERANCE,
            frame_sync_weight: 0.0,
            max_evals: 3000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_pulses == 0 {
            return Err(Error::InvalidArgument("n_pulses must be >= 1".into()));
        }
        if self.seeds == 0 {
            return Err(Error::InvalidArgument("seeds must be >= 1".into()));
        }
        if !(self.j_max.is_finite() && self.j_max >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "j_max {} must be finite and >= 0",
                self.j_max
            )));
        }
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "t_max {} must be finite and > 0",
                self.t_max
            )));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance {} must lie in (0, 1)",
                self.tolerance
            )));
        }
        if !(self.frame_sync_weight.is_finite() && self.frame_sync_weight >= 0.0) {
            return Err(Error::InvalidArgument("frame_sync_weight must be >= 0".into()));
        }
        if self.max_evals == 0 {
            return Err(Error::InvalidArgument("max_evals must be >= 1".into()));
        }
        Ok(())
    }

    fn t_min(&self) -> f64 {
        1e-9 * self.t_max
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NnorOutcome {
    pub schedule: Schedule,
    pub report: FidelityReport,
    pub infidelity: f64,
    pub converged: bool,
    pub tolerance: f64,
    /// Start that produced the result: `None` for the nested start built from
    /// the best shorter sequence.
    pub best_seed: Option<usize>,
    pub evaluations: usize,
}

/// Bounded reparametrisation: every real vector maps inside the box.
struct Codec {
    j_max: f64,
    t_min: f64,
    t_max: f64,
}

impl Codec {
    fn decode(&self, x: &[f64]) -> Vec<(f64, f64)> {
        x.chunks(2)
            .map(|c| {
                let j = self.j_max * c[0].sin().powi(2);
                let t = self.t_min + (self.t_max - self.t_min) * c[1].sin().powi(2);
                (j, t)
            })
            .collect()
    }

    fn encode(&self, pulses: &[(f64, f64)]) -> Vec<f64> {
        let inv = |frac: f64| frac.clamp(0.0, 1.0).sqrt().asin();
        pulses
            .iter()
            .flat_map(|&(j, t)| {
                let fj = if self.j_max > 0.0 { j / self.j_max } else { 0.0 };
                [inv(fj), inv((t - self.t_min) / (self.t_max - self.t_min))]
            })
            .collect()
    }
}

fn infidelity(params: &PairParams, pulses: &[(f64, f64)]) -> f64 {
    let mut u = ComplexMatrix::identity(4, 4);
    let mut tau = 0.0;
    for &(j, t) in pulses {
        u = constant_unchecked(params, j, t, Subspace::Full) * u;
        tau += t;
    }
    let u0 = constant_unchecked(params, 0.0, tau, Subspace::Full);
    // |tr(T†U)| with T = i·D·U0, the factor i drops out of the modulus
    let overlap: Complex64 = (u0.adjoint() * sign_pattern() * u).trace();
    1.0 - overlap.norm() / 4.0
}

fn objective(params: &PairParams, config: &SearchConfig, pulses: &[(f64, f64)]) -> f64 {
    let base = infidelity(params, pulses);
    if config.frame_sync_weight == 0.0 {
        return base;
    }
    let tau: f64 = pulses.iter().map(|p| p.1).sum();
    let r = frame_residual(params.omega(), tau) / PI;
    base + config.frame_sync_weight * r * r
}

/// Multi-start simplex search for an `n_pulses` square-pulse nNOR.
///
/// Deterministic for a given config: starts are drawn from per-seed ChaCha
/// streams, refined in parallel, and reduced in seed order.
pub fn search_nnor(params: &PairParams, config: &SearchConfig) -> Result<NnorOutcome> {
    config.validate()?;
    let bounded = params.with_j_max(config.j_max);
    let codec = Codec {
        j_max: config.j_max,
        t_min: config.t_min(),
        t_max: config.t_max,
    };

    let mut starts: Vec<(Option<usize>, Vec<f64>)> = Vec::with_capacity(config.seeds + 1);
    if config.n_pulses > 1 {
        let shorter = search_nnor(
            params,
            &SearchConfig {
                n_pulses: config.n_pulses - 1,
                ..config.clone()
            },
        )?;
        let mut pulses: Vec<(f64, f64)> = shorter.schedule.pulses.iter().map(|p| (p.j, p.duration)).collect();
        let longest = (0..pulses.len())
            .max_by(|&a, &b| pulses[a].1.total_cmp(&pulses[b].1))
            .unwrap();
        pulses[longest].1 *= 0.5;
        pulses.insert(longest, pulses[longest]);
        starts.push((None, codec.encode(&pulses)));
    }
    for s in 0..config.seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        rng.set_stream(s as u64);
        let pulses: Vec<(f64, f64)> = (0..config.n_pulses)
            .map(|_| (config.j_max * rng.gen::<f64>(), config.t_max * rng.gen::<f64>()))
            .collect();
        starts.push((Some(s), codec.encode(&pulses)));
    }

    let nm = NelderMead {
        max_evals: config.max_evals,
        ..NelderMead::default()
    };
    let results: Vec<_> = starts
        .par_iter()
        .map(|(seed, x0)| {
            let m = nm.minimize(|x| objective(&bounded, config, &codec.decode(x)), x0);
            (*seed, m)
        })
        .collect();

    let evaluations = results.iter().map(|r| r.1.evals).sum();
    let mut best = 0;
    for k in 1..results.len() {
        if results[k].1.value < results[best].1.value - 1e-12 {
            best = k;
        }
    }
    let (best_seed, min) = &results[best];
    let pulses = codec
        .decode(&min.x)
        .into_iter()
        .map(|(j, t)| Pulse::square(j, t))
        .collect();
    let schedule = Schedule::new(bounded, pulses)?;
    let report = nnor_report(&schedule, config.tolerance)?;
    let infidelity = 1.0 - report.fidelity;
    Ok(NnorOutcome {
        converged: report.converged,
        schedule,
        report,
        infidelity,
        tolerance: config.tolerance,
        best_seed: *best_seed,
        evaluations,
    })
}

/// Two-qubit action of a central-pair schedule inside a four-spin BABA chain.
#[derive(Debug, Clone, PartialEq)]
pub struct NnorSemantics {
    /// Logical 4×4 block of `U_chain·U_free†`, basis
    /// `|0_L 0_L⟩, |0_L 1_L⟩, |1_L 0_L⟩, |1_L 1_L⟩`.
    pub logical: ComplexMatrix,
    /// Fidelity against `diag(−1, 1, 1, 1)` up to global phase.
    pub fidelity: f64,
    /// Largest off-diagonal probability in any column.
    pub off_diagonal_mass: f64,
    /// Diagonal phases relative to the `|0_L 1_L⟩` entry.
    pub phases: [f64; 4],
    pub leakage: f64,
}

/// Run `schedule` on the central bond of `B A B A` with outer energies from
/// `neighbor`, and compare against free evolution of the same length.
pub fn nnor_semantics(schedule: &Schedule, neighbor: &PairParams) -> Result<NnorSemantics> {
    schedule.validate()?;
    let p = &schedule.params;
    let tau = schedule.total_duration();
    if tau <= 0.0 {
        return Err(Error::InvalidArgument("schedule has zero duration".into()));
    }
    let chain = ChainParams::new(vec![neighbor.b(), p.a(), p.b(), neighbor.a()], vec![0.0; 3])?;
    let driven = chain_unitary(&ChainSchedule::from_pair_schedule(chain.clone(), 1, schedule)?)?;
    let free = chain_unitary(&ChainSchedule::free(chain, tau)?)?;
    let w = driven * free.adjoint();
    let block = logical_block(&w, &[0, 1])?;
    let m = block.matrix;

    let expected = diag(&[-ONE, ONE, ONE, ONE]);
    let fidelity = fidelity_up_to_phase(&m, &expected)?;
    let off_diagonal_mass = (0..4)
        .map(|c| (0..4).filter(|&r| r != c).map(|r| m[(r, c)].norm_sqr()).sum::<f64>())
        .fold(0.0, f64::max);
    let reference = m[(1, 1)];
    let phases = std::array::from_fn(|k| {
        let z = m[(k, k)] * reference.conj();
        if z.norm() > 0.0 {
            z.arg()
        } else {
            f64::NAN
        }
    });
    Ok(NnorSemantics {
        logical: m,
        fidelity,
        off_diagonal_mass,
        phases,
        leakage: block.leakage,
    })
}

/// Check a search result on the four-spin chain. Refuses outcomes that did
/// not converge, and fails when the chain fidelity misses `1 − 10·tolerance`.
pub fn verify_nnor_semantics(outcome: &NnorOutcome, neighbor: &PairParams) -> Result<NnorSemantics> {
    if !outcome.converged {
        return Err(Error::NotConverged {
            infidelity: outcome.infidelity,
        });
    }
    let sem = nnor_semantics(&outcome.schedule, neighbor)?;
    let required = 1.0 - 10.0 * outcome.tolerance;
    if sem.fidelity < required || sem.off_diagonal_mass > 10.0 * outcome.tolerance {
        return Err(Error::VerificationFailed {
            fidelity: sem.fidelity,
            required,
        });
    }
    Ok(sem)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{is_unitary, max_abs_diff};
    use approx::assert_abs_diff_eq;

    fn pair() -> PairParams {
        PairParams::from_omegas(1.0, 2.0, PairParams::default_j_max(1.0)).unwrap()
    }

    #[test]
    fn target_examples() {
        let p = PairParams::new(3.0, 1.0, 1.0).unwrap();
        let t = nnor_target(&p, PI).unwrap();
        let expect = diag(&[I, -I, I, I]);
        assert!(max_abs_diff(&t.target_unitary, &expect) < 1e-12);

        let tiny = nnor_target(&p, 1e-14).unwrap();
        assert!(max_abs_diff(&tiny.target_unitary, &(sign_pattern() * I)) < 1e-12);

        for tau in [0.3, 1.7, 9.2] {
            let t = nnor_target(&p, tau).unwrap();
            assert!(is_unitary(&t.target_unitary, 1e-12));
            let u0 = propagate_constant(&p, 0.0, tau, Subspace::Full).unwrap();
            assert!(max_abs_diff(&(&t.target_unitary * u0.adjoint()), &(sign_pattern() * I)) < 1e-12);
        }
        assert!(matches!(nnor_target(&p, 0.0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn fast_objective_matches_report() {
        let p = pair();
        let pulses = [(0.3, 1.2), (0.7, 0.5)];
        let s = Schedule::new(p, pulses.iter().map(|&(j, t)| Pulse::square(j, t)).collect()).unwrap();
        let report = nnor_report(&s, 1e-6).unwrap();
        assert_abs_diff_eq!(infidelity(&p, &pulses), 1.0 - report.fidelity, epsilon = 1e-14);
    }

    #[test]
    fn codec_stays_in_bounds() {
        let c = Codec {
            j_max: 0.8,
            t_min: 1e-9,
            t_max: 12.0,
        };
        for x in [-40.0, -1.0, 0.0, 0.7, 3.0, 100.0] {
            for (j, t) in c.decode(&[x, x * 1.3]) {
                assert!((0.0..=0.8).contains(&j));
                assert!(t > 0.0 && t <= 12.0);
            }
        }
        let back = c.decode(&c.encode(&[(0.3, 4.0)]));
        assert_abs_diff_eq!(back[0].0, 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(back[0].1, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn free_evolution_cannot_make_the_phase() {
        let p = pair();
        let config = SearchConfig {
            n_pulses: 1,
            j_max: 0.0,
            seeds: 4,
            ..SearchConfig::for_pair(&p)
        };
        let out = search_nnor(&p, &config).unwrap();
        assert!(!out.converged);
        assert_abs_diff_eq!(out.infidelity, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn two_pulses_reach_tolerance_and_repeat() {
        let p = pair();
        let config = SearchConfig {
            rng_seed: 7,
            ..SearchConfig::for_pair(&p)
        };
        let a = search_nnor(&p, &config).unwrap();
        assert!(a.converged, "infidelity {}", a.infidelity);
        assert_eq!(a.schedule.len(), 2);
        for pulse in &a.schedule.pulses {
            assert!(pulse.j >= 0.0 && pulse.j <= config.j_max);
            assert!(pulse.duration > 0.0 && pulse.duration <= config.t_max);
        }
        let b = search_nnor(&p, &config).unwrap();
        assert_eq!(a.schedule, b.schedule);

        let sem = verify_nnor_semantics(&a, &p).unwrap();
        assert!(sem.off_diagonal_mass <= 1e-5);
        assert_abs_diff_eq!(sem.phases[0].abs(), PI, epsilon = 1e-3);
        for k in 1..4 {
            assert_abs_diff_eq!(sem.phases[k], 0.0, epsilon = 1e-3);
        }
    }

    #[test]
    fn free_schedule_semantics_is_identity() {
        let p = pair();
        let s = Schedule::new(p, vec![Pulse::square(0.0, 2.0 * PI)]).unwrap();
        let sem = nnor_semantics(&s, &p).unwrap();
        assert!(max_abs_diff(&sem.logical, &ComplexMatrix::identity(4, 4)) < 1e-12);
        assert!(sem.leakage < 1e-12);
    }

    #[test]
    fn unconverged_outcome_is_refused() {
        let p = pair();
        let config = SearchConfig {
            n_pulses: 1,
            j_max: 0.0,
            seeds: 2,
            ..SearchConfig::for_pair(&p)
        };
        let out = search_nnor(&p, &config).unwrap();
        assert!(matches!(
            verify_nnor_semantics(&out, &p),
            Err(Error::NotConverged { .. })
        ));
    }

    #[test]
    fn config_validation() {
        let p = pair();
        let bad = SearchConfig {
            n_pulses: 0,
            ..SearchConfig::for_pair(&p)
        };
        assert!(search_nnor(&p, &bad).is_err());
    }
}
