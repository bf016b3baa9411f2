//! Pulse schedules and their propagators.
//!
//! A [`Schedule`] is an ordered list of pulses applied left to right in time,
//! so the propagator of `[p1, p2, p3]` is the matrix product `U3·U2·U1`.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{identity, ComplexMatrix};
use crate::spin::{diagonalizing_rotation, PairParams};

/// Midpoint steps used for one Gaussian pulse when the caller does not say.
pub const DEFAULT_WAVEFORM_STEPS: usize = 2048;

/// Minimum step count accepted by [`propagate_waveform`].
pub const MIN_WAVEFORM_STEPS: usize = 16;

/// Default number of trajectory samples.
pub const DEFAULT_SAMPLES: usize = 256;

/// Which block of the pair Hilbert space to propagate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subspace {
    /// `{|0⟩_L, |1⟩_L} = {|01⟩, |10⟩}`.
    Logical,
    /// All four pair states.
    Full,
}

impl Subspace {
    pub fn dim(self) -> usize {
        match self {
            Subspace::Logical => 2,
            Subspace::Full => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PulseShape {
    /// Constant coupling for the whole duration.
    Square,
    /// Gaussian centred in the window, `j` being the peak. The truncation
    /// half-width is half the pulse duration.
    Gaussian { fwhm: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse {
    pub j: f64,
    pub duration: f64,
    pub shape: PulseShape,
}

const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3; // 2√(2 ln 2)

impl Pulse {
    pub fn square(j: f64, duration: f64) -> Self {
        Self {
            j,
            duration,
            shape: PulseShape::Square,
        }
    }

    /// Gaussian pulse with peak `peak`, truncated to `[−half_width, half_width]`
    /// around its centre.
    pub fn gaussian(peak: f64, fwhm: f64, half_width: f64) -> Self {
        Self {
            j: peak,
            duration: 2.0 * half_width,
            shape: PulseShape::Gaussian { fwhm },
        }
    }

    pub fn is_square(&self) -> bool {
        matches!(self.shape, PulseShape::Square)
    }

    pub fn validate(&self, params: &PairParams) -> Result<()> {
        params.check_coupling(self.j)?;
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "pulse duration must be > 0, got {}",
                self.duration
            )));
        }
        if let PulseShape::Gaussian { fwhm } = self.shape {
            if !(fwhm.is_finite() && fwhm > 0.0) {
                return Err(Error::InvalidArgument(format!("fwhm must be > 0, got {fwhm}")));
            }
            if 0.5 * self.duration < 2.0 * fwhm * (1.0 - 1e-12) {
                return Err(Error::InvalidArgument(format!(
                    "gaussian truncation half-width {} is below 2 x fwhm = {}",
                    0.5 * self.duration,
                    2.0 * fwhm
                )));
            }
        }
        Ok(())
    }

    /// Coupling at time `t` measured from the start of the pulse.
    pub fn coupling_at(&self, t: f64) -> f64 {
        match self.shape {
            PulseShape::Square => self.j,
            PulseShape::Gaussian { fwhm } => {
                let sigma = fwhm / FWHM_PER_SIGMA;
                let x = (t - 0.5 * self.duration) / sigma;
                self.j * (-0.5 * x * x).exp()
            }
        }
    }

    /// `∫ J dt` over the pulse window.
    pub fn area(&self) -> f64 {
        match self.shape {
            PulseShape::Square => self.j * self.duration,
            PulseShape::Gaussian { fwhm } => {
                let sigma = fwhm / FWHM_PER_SIGMA;
                let half = 0.5 * self.duration;
                self.j * sigma * (2.0 * PI).sqrt() * libm::erf(half / (sigma * 2f64.sqrt()))
            }
        }
    }

    /// Area of the Gaussian lost to truncation; zero for square pulses.
    pub fn truncated_tail_area(&self) -> f64 {
        match self.shape {
            PulseShape::Square => 0.0,
            PulseShape::Gaussian { fwhm } => {
                let sigma = fwhm / FWHM_PER_SIGMA;
                let half = 0.5 * self.duration;
                self.j * sigma * (2.0 * PI).sqrt() * libm::erfc(half / (sigma * 2f64.sqrt()))
            }
        }
    }
}

/// Pulses on one pair, in time order.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub pulses: Vec<Pulse>,
    pub params: PairParams,
}

impl Schedule {
    pub fn new(params: PairParams, pulses: Vec<Pulse>) -> Result<Self> {
        let schedule = Self { pulses, params };
        schedule.validate()?;
        Ok(schedule)
    }

    pub fn empty(params: PairParams) -> Self {
        Self {
            pulses: Vec::new(),
            params,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.pulses.iter().try_for_each(|p| p.validate(&self.params))
    }

    pub fn total_duration(&self) -> f64 {
        self.pulses.iter().fold(0.0, |acc, p| acc + p.duration)
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    /// `self` followed by `other`; both must describe the same pair.
    pub fn then(mut self, other: &Schedule) -> Self {
        self.pulses.extend_from_slice(&other.pulses);
        self
    }

    /// Distance of `ω·τ` from the nearest multiple of 2π.
    pub fn frame_residual(&self) -> f64 {
        frame_residual(self.params.omega(), self.total_duration())
    }
}

pub(crate) fn frame_residual(omega: f64, tau: f64) -> f64 {
    let r = (omega * tau).rem_euclid(2.0 * PI);
    r.min(2.0 * PI - r)
}

/// Analytic propagator of a constant coupling `j` held for time `t`.
///
/// The logical block is `R† diag(e^{−iω't}, e^{iω't}) R`; the full 4×4 adds the
/// phases `e^{−i(−Ω+K)t}` and `e^{−i(Ω+K)t}` on `|00⟩` and `|11⟩`.
pub fn propagate_constant(params: &PairParams, j: f64, t: f64, subspace: Subspace) -> Result<ComplexMatrix> {
    params.check_coupling(j)?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidArgument(format!("evolution time must be >= 0, got {t}")));
    }
    Ok(constant_unchecked(params, j, t, subspace))
}

pub(crate) fn constant_unchecked(params: &PairParams, j: f64, t: f64, subspace: Subspace) -> ComplexMatrix {
    let r = diagonalizing_rotation(params, j);
    let wp = params.precession(j);
    let d = crate::linalg::diag(&[Complex64::from_polar(1.0, -wp * t), Complex64::from_polar(1.0, wp * t)]);
    let logical = r.adjoint() * d * r;
    match subspace {
        Subspace::Logical => logical,
        Subspace::Full => {
            let k = 2.0 * j;
            let big = params.omega_large();
            let mut u = ComplexMatrix::zeros(4, 4);
            u[(0, 0)] = Complex64::from_polar(1.0, -(-big + k) * t);
            u[(3, 3)] = Complex64::from_polar(1.0, -(big + k) * t);
            u.view_mut((1, 1), (2, 2)).copy_from(&logical);
            u
        }
    }
}

/// Midpoint product integrator `Π_k exp(−i H(J(t_k + Δ/2)) Δ)` over
/// `[0, t_total]`.
pub fn propagate_waveform<F>(
    params: &PairParams,
    waveform: F,
    t_total: f64,
    steps: usize,
    subspace: Subspace,
) -> Result<ComplexMatrix>
where
    F: Fn(f64) -> f64,
{
    waveform_interval(params, &waveform, 0.0, t_total, steps, subspace)
}

fn waveform_interval(
    params: &PairParams,
    waveform: &dyn Fn(f64) -> f64,
    t0: f64,
    t1: f64,
    steps: usize,
    subspace: Subspace,
) -> Result<ComplexMatrix> {
    if steps < MIN_WAVEFORM_STEPS {
        return Err(Error::InvalidArgument(format!(
            "waveform integration needs at least {MIN_WAVEFORM_STEPS} steps, got {steps}"
        )));
    }
    let span = t1 - t0;
    if !(span.is_finite() && span >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "invalid integration window [{t0}, {t1}]"
        )));
    }
    let dt = span / steps as f64;
    let mut u = identity(subspace.dim());
    for k in 0..steps {
        let j = waveform(t0 + (k as f64 + 0.5) * dt);
        params.check_coupling(j)?;
        u = constant_unchecked(params, j, dt, subspace) * u;
    }
    Ok(u)
}

/// Propagator of a schedule with [`DEFAULT_WAVEFORM_STEPS`] per Gaussian pulse.
pub fn propagate_schedule(schedule: &Schedule, subspace: Subspace) -> Result<ComplexMatrix> {
    propagate_schedule_with_steps(schedule, subspace, DEFAULT_WAVEFORM_STEPS)
}

pub fn propagate_schedule_with_steps(schedule: &Schedule, subspace: Subspace, steps: usize) -> Result<ComplexMatrix> {
    let mut u = identity(subspace.dim());
    for pulse in &schedule.pulses {
        pulse.validate(&schedule.params)?;
        u = pulse_propagator(&schedule.params, pulse, 0.0, pulse.duration, subspace, steps)? * u;
    }
    Ok(u)
}

/// Propagator of `pulse` restricted to `[from, to]` (pulse-local time).
fn pulse_propagator(
    params: &PairParams,
    pulse: &Pulse,
    from: f64,
    to: f64,
    subspace: Subspace,
    steps: usize,
) -> Result<ComplexMatrix> {
    match pulse.shape {
        PulseShape::Square => propagate_constant(params, pulse.j, to - from, subspace),
        PulseShape::Gaussian { .. } => {
            let frac = (to - from) / pulse.duration;
            let n = ((steps as f64 * frac).ceil() as usize).max(MIN_WAVEFORM_STEPS);
            waveform_interval(params, &|t| pulse.coupling_at(t), from, to, n, subspace)
        }
    }
}

/// One sample of a pair trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub time: f64,
    /// `(⟨σ_x⟩, ⟨σ_y⟩, ⟨σ_z⟩)` of the logical block (unnormalised).
    pub bloch: [f64; 3],
    /// Population of `|00⟩`.
    pub p00: f64,
    /// Population of `|11⟩`.
    pub p11: f64,
}

/// Logical-qubit Bloch trajectory at `samples` uniform times over the schedule.
pub fn bloch_trajectory(schedule: &Schedule, initial: [Complex64; 2], samples: usize) -> Result<Vec<TrajectoryPoint>> {
    let zero = Complex64::new(0.0, 0.0);
    pair_trajectory(
        schedule,
        [zero, initial[0], initial[1], zero],
        samples,
        DEFAULT_WAVEFORM_STEPS,
    )
}

/// Trajectory from an arbitrary pair state `(|00⟩, |01⟩, |10⟩, |11⟩)`.
pub fn pair_trajectory(
    schedule: &Schedule,
    initial: [Complex64; 4],
    samples: usize,
    steps: usize,
) -> Result<Vec<TrajectoryPoint>> {
    schedule.validate()?;
    let norm: f64 = initial.iter().map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "initial state not normalised: |ψ|² = {norm}"
        )));
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let total = schedule.total_duration();
    let times: Vec<f64> = if samples == 1 {
        vec![0.0]
    } else {
        (0..samples).map(|k| total * k as f64 / (samples - 1) as f64).collect()
    };
    let mut state = nalgebra::DVector::from_column_slice(&initial);
    let mut out = Vec::with_capacity(samples);
    let mut prev = 0.0;
    for &t in &times {
        if t > prev {
            let mut start = 0.0;
            for pulse in &schedule.pulses {
                let end = start + pulse.duration;
                let (a, b) = (prev.max(start), t.min(end));
                if b > a {
                    let u = pulse_propagator(&schedule.params, pulse, a - start, b - start, Subspace::Full, steps)?;
                    state = u * state;
                }
                start = end;
            }
            prev = t;
        }
        out.push(sample_point(t, &state));
    }
    Ok(out)
}

fn sample_point(time: f64, state: &nalgebra::DVector<Complex64>) -> TrajectoryPoint {
    let (c0, c1) = (state[1], state[2]);
    let cross = c0.conj() * c1;
    TrajectoryPoint {
        time,
        bloch: [2.0 * cross.re, 2.0 * cross.im, c0.norm_sqr() - c1.norm_sqr()],
        p00: state[0].norm_sqr(),
        p11: state[3].norm_sqr(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{
        expm_hermitian, fidelity_up_to_phase, hadamard, max_abs_diff, rotation_operator, unitarity_error, AxisAngle,
    };
    use crate::spin::pair_hamiltonian;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::SQRT_2;

    fn unit_omega() -> PairParams {
        PairParams::from_omegas(1.0, 2.0, 1.0).unwrap()
    }

    #[test]
    fn free_evolution_is_z_rotation() {
        let p = unit_omega();
        let u = propagate_constant(&p, 0.0, PI / 2.0, Subspace::Logical).unwrap();
        let expect = crate::linalg::diag(&[Complex64::new(0.0, -1.0), Complex64::new(0.0, 1.0)]);
        assert!(max_abs_diff(&u, &expect) < 1e-15);
        let rz = rotation_operator(&AxisAngle::z(PI));
        assert_abs_diff_eq!(fidelity_up_to_phase(&u, &rz).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn hadamard_pulse() {
        let p = unit_omega();
        let u = propagate_constant(&p, 0.5, PI / (2.0 * SQRT_2), Subspace::Logical).unwrap();
        assert!(1.0 - fidelity_up_to_phase(&u, &hadamard()).unwrap() <= 1e-12);
    }

    #[test]
    fn zero_time_is_identity() {
        let p = unit_omega();
        for s in [Subspace::Logical, Subspace::Full] {
            let u = propagate_constant(&p, 0.7, 0.0, s).unwrap();
            assert!(max_abs_diff(&u, &identity(s.dim())) < 1e-15);
        }
        assert!(propagate_constant(&p, 0.7, -1.0, Subspace::Logical).is_err());
    }

    #[test]
    fn full_matches_eigensolver() {
        let p = PairParams::new(2.3, 0.4, 1.0).unwrap();
        let u = propagate_constant(&p, 0.37, 3.1, Subspace::Full).unwrap();
        let oracle = expm_hermitian(&pair_hamiltonian(&p, 0.37).unwrap(), 3.1).unwrap();
        assert!(max_abs_diff(&u, &oracle) < 1e-12);
    }

    #[test]
    fn empty_schedule_is_identity() {
        let s = Schedule::empty(unit_omega());
        assert_eq!(propagate_schedule(&s, Subspace::Full).unwrap(), identity(4));
    }

    #[test]
    fn pair_of_pulses_gives_y_rotation() {
        // R_k(π) first, then R_θ(π) at θ = π/4: net R_y(π/2) up to phase
        let p = unit_omega();
        let s = Schedule::new(
            p,
            vec![Pulse::square(0.0, PI / 2.0), Pulse::square(0.5, PI / (2.0 * SQRT_2))],
        )
        .unwrap();
        let u = propagate_schedule(&s, Subspace::Logical).unwrap();
        let ry = rotation_operator(&AxisAngle::y(PI / 2.0));
        assert!(1.0 - fidelity_up_to_phase(&u, &ry).unwrap() < 1e-12);

        // the reverse order rotates the other way
        let s = Schedule::new(
            p,
            vec![Pulse::square(0.5, PI / (2.0 * SQRT_2)), Pulse::square(0.0, PI / 2.0)],
        )
        .unwrap();
        let u = propagate_schedule(&s, Subspace::Logical).unwrap();
        let ry_neg = rotation_operator(&AxisAngle::y(-PI / 2.0));
        assert!(1.0 - fidelity_up_to_phase(&u, &ry_neg).unwrap() < 1e-12);
    }

    #[test]
    fn repeated_pulse_squares() {
        let p = unit_omega();
        let one = propagate_constant(&p, 0.3, 0.8, Subspace::Full).unwrap();
        let s = Schedule::new(p, vec![Pulse::square(0.3, 0.8); 2]).unwrap();
        let two = propagate_schedule(&s, Subspace::Full).unwrap();
        assert!(max_abs_diff(&two, &(&one * &one)) < 1e-12);
    }

    #[test]
    fn waveform_constant_and_zero() {
        let p = unit_omega();
        let exact = propagate_constant(&p, 0.5, 2.0, Subspace::Full).unwrap();
        let num = propagate_waveform(&p, |_| 0.5, 2.0, 64, Subspace::Full).unwrap();
        assert!(max_abs_diff(&exact, &num) < 1e-12);
        let exact = propagate_constant(&p, 0.0, 2.0, Subspace::Full).unwrap();
        let num = propagate_waveform(&p, |_| 0.0, 2.0, 16, Subspace::Full).unwrap();
        assert!(max_abs_diff(&exact, &num) < 1e-13);
        assert!(unitarity_error(&num) < 1e-10);
    }

    #[test]
    fn waveform_step_floor() {
        let p = unit_omega();
        assert!(matches!(
            propagate_waveform(&p, |_| 0.5, 1.0, 15, Subspace::Logical),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn waveform_out_of_bounds_rejected() {
        let p = unit_omega();
        assert!(matches!(
            propagate_waveform(&p, |_| 2.0, 1.0, 16, Subspace::Logical),
            Err(Error::DomainViolation(_))
        ));
    }

    #[test]
    fn gaussian_validation_and_area() {
        let p = unit_omega();
        assert!(Pulse::gaussian(0.5, 1.0, 1.5).validate(&p).is_err());
        let g = Pulse::gaussian(0.5, 1.0, 2.0);
        g.validate(&p).unwrap();
        let sigma = 1.0 / FWHM_PER_SIGMA;
        let full = 0.5 * sigma * (2.0 * PI).sqrt();
        assert_abs_diff_eq!(g.area() + g.truncated_tail_area(), full, epsilon = 1e-14);
        assert_abs_diff_eq!(g.coupling_at(2.0), 0.5);
        assert_abs_diff_eq!(g.coupling_at(2.5), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn trajectory_of_eigenstate_is_static() {
        let p = unit_omega();
        let s = Schedule::new(p, vec![Pulse::square(0.0, 3.0)]).unwrap();
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let traj = bloch_trajectory(&s, [one, zero], 32).unwrap();
        assert_eq!(traj.len(), 32);
        for pt in traj {
            assert_abs_diff_eq!(pt.bloch[2], 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(pt.bloch[0], 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn trajectory_precesses_at_twice_omega() {
        let p = unit_omega();
        let s = Schedule::new(p, vec![Pulse::square(0.0, 2.0)]).unwrap();
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let traj = bloch_trajectory(&s, [h, h], 41).unwrap();
        for pt in traj {
            let phi = 2.0 * p.omega() * pt.time;
            // |ψ(t)⟩ ∝ e^{−iωt}|0⟩ + e^{iωt}|1⟩  →  bloch (cos 2ωt, sin 2ωt, 0)
            assert_abs_diff_eq!(pt.bloch[0], phi.cos(), epsilon = 1e-12);
            assert_abs_diff_eq!(pt.bloch[1], phi.sin(), epsilon = 1e-12);
            assert_abs_diff_eq!(pt.bloch[2], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn trajectory_preserves_norm() {
        let p = unit_omega();
        let s = Schedule::new(
            p,
            vec![
                Pulse::square(0.4, 1.3),
                Pulse::gaussian(0.8, 0.5, 1.0),
                Pulse::square(0.0, 0.7),
            ],
        )
        .unwrap();
        let a = Complex64::new(0.6, 0.0);
        let b = Complex64::new(0.0, 0.8);
        for pt in bloch_trajectory(&s, [a, b], 64).unwrap() {
            let n: f64 = pt.bloch.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert_abs_diff_eq!(n, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn trajectory_endpoint_matches_schedule() {
        let p = unit_omega();
        let s = Schedule::new(p, vec![Pulse::square(0.3, 1.1), Pulse::square(0.7, 0.4)]).unwrap();
        let u = propagate_schedule(&s, Subspace::Logical).unwrap();
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let last = *bloch_trajectory(&s, [one, zero], 7).unwrap().last().unwrap();
        let (c0, c1) = (u[(0, 0)], u[(1, 0)]);
        assert_abs_diff_eq!(last.bloch[2], c0.norm_sqr() - c1.norm_sqr(), epsilon = 1e-12);
        assert_abs_diff_eq!(last.time, s.total_duration(), epsilon = 1e-15);
    }
}
