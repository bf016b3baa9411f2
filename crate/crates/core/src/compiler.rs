//! Lowering of logical gates to square exchange pulses.
//!
//! Only two kinds of motion are available on a pair with fixed `ω > 0`:
//! free precession about z (`J = 0`) and precession about an axis tilted by
//! `θ = arctan(2J/ω)` toward x. Everything else is built from those:
//!
//! * y rotations from pairs `[R_z(π), R_θ(π)]`, whose product `R_θ(π)R_z(π)`
//!   is `−R_y(2θ)`;
//! * arbitrary gates from `R_z(α) R_y(β) R_z(γ)` with neighbouring free
//!   pulses merged;
//! * frame synchronisation by appending net-identity `2π` pulses.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{
    axis_angle_from_unitary, fidelity_up_to_phase, hadamard, is_unitary, pauli_x, relative_phase, rotation_operator,
    AxisAngle, ComplexMatrix,
};
use crate::nnor::{nnor_target, search_nnor, SearchConfig};
use crate::propagator::{frame_residual, propagate_schedule, Pulse, Schedule, Subspace};
use crate::spin::PairParams;

/// Below this a rotation angle or pulse duration is treated as zero.
const ANGLE_EPS: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompileOptions {
    pub j_max: f64,
    pub frame_sync: bool,
    pub tolerance: f64,
    pub max_pairs: usize,
}

impl CompileOptions {
    pub const DEFAULT_TOLERANCE: f64 = 1e-9;
    pub const DEFAULT_MAX_PAIRS: usize = 3;

    pub fn new(j_max: f64) -> Self {
        Self {
            j_max,
            frame_sync: false,
            tolerance: Self::DEFAULT_TOLERANCE,
            max_pairs: Self::DEFAULT_MAX_PAIRS,
        }
    }

    /// Options bounded by the pair's own `j_max`.
    pub fn for_pair(params: &PairParams) -> Self {
        Self::new(params.j_max)
    }

    pub fn with_frame_sync(self, frame_sync: bool) -> Self {
        Self { frame_sync, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be > 0, got {}",
                self.tolerance
            )));
        }
        if self.max_pairs == 0 {
            return Err(Error::InvalidArgument("max_pairs must be >= 1".into()));
        }
        if !(self.j_max > 0.0 && self.j_max.is_finite()) {
            return Err(Error::InvalidArgument(format!("j_max must be > 0, got {}", self.j_max)));
        }
        Ok(())
    }

    fn bounded(&self, params: &PairParams) -> PairParams {
        params.with_j_max(params.j_max.min(self.j_max))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GateKind {
    RotationZ(f64),
    RotationY(f64),
    /// Rotation by `angle` about the axis tilted `theta` from z toward x.
    RotationTilted {
        theta: f64,
        angle: f64,
    },
    Hadamard,
    Arbitrary(ComplexMatrix),
    Swap,
    Nnor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateSpec {
    pub kind: GateKind,
    pub options: CompileOptions,
}

impl GateSpec {
    pub fn new(kind: GateKind, options: CompileOptions) -> Self {
        Self { kind, options }
    }

    pub fn validate(&self) -> Result<()> {
        self.options.validate()?;
        let finite = |x: f64| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument("gate angles must be finite".into()))
            }
        };
        match &self.kind {
            GateKind::RotationZ(a) | GateKind::RotationY(a) => finite(*a),
            GateKind::RotationTilted { theta, angle } => finite(*theta).and(finite(*angle)),
            GateKind::Arbitrary(u) => {
                if u.shape() != (2, 2) || !is_unitary(u, 1e-10) {
                    return Err(Error::InvalidArgument("arbitrary gate must be a 2x2 unitary".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// The logical 2×2 target, or `None` for the two-spin nNOR gate.
    pub fn target_unitary(&self) -> Option<ComplexMatrix> {
        let m = match &self.kind {
            GateKind::RotationZ(a) => rotation_operator(&AxisAngle::z(*a)),
            GateKind::RotationY(a) => rotation_operator(&AxisAngle::y(*a)),
            GateKind::RotationTilted { theta, angle } => rotation_operator(&tilted_axis(*theta, *angle)),
            GateKind::Hadamard => hadamard(),
            GateKind::Arbitrary(u) => u.clone(),
            GateKind::Swap => pauli_x(),
            GateKind::Nnor => return None,
        };
        Some(m)
    }
}

fn tilted_axis(theta: f64, angle: f64) -> AxisAngle {
    AxisAngle::new([theta.sin(), 0.0, theta.cos()], angle).expect("unit axis")
}

/// Verification summary of a compiled or simulated schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityReport {
    pub fidelity: f64,
    pub total_duration: f64,
    pub pulse_count: usize,
    pub leakage: f64,
    /// Distance of `ω·τ` from the nearest multiple of 2π.
    pub frame_residual: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Compiled {
    pub schedule: Schedule,
    pub report: FidelityReport,
}

/// `R_z(ψ) ≃ e^{iφ} R_k(α) R_j(β) R_k(γ)` parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerAngles {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub global_phase: f64,
}

impl EulerAngles {
    /// `e^{iφ} R_z(α) R_y(β) R_z(γ)`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let m = rotation_operator(&AxisAngle::z(self.alpha))
            * rotation_operator(&AxisAngle::y(self.beta))
            * rotation_operator(&AxisAngle::z(self.gamma));
        m * Complex64::from_polar(1.0, self.global_phase)
    }
}

fn require_positive_omega(params: &PairParams) -> Result<()> {
    if !(params.omega() > 0.0) {
        return Err(Error::UnsupportedConfiguration(format!(
            "compilation needs ω > 0, got ω = {}",
            params.omega()
        )));
    }
    Ok(())
}

/// A free-precession pulse realising `R_z(ψ)` exactly (ψ taken mod 4π).
pub fn compile_rotation_z(params: &PairParams, angle: f64) -> Result<Schedule> {
    require_positive_omega(params)?;
    if !angle.is_finite() {
        return Err(Error::InvalidArgument("rotation angle must be finite".into()));
    }
    let psi = angle.rem_euclid(4.0 * PI);
    if psi < ANGLE_EPS || 4.0 * PI - psi < ANGLE_EPS {
        return Ok(Schedule::empty(*params));
    }
    Schedule::new(*params, vec![Pulse::square(0.0, psi / (2.0 * params.omega()))])
}

/// Single pulse rotating by `angle` about the axis tilted `theta` from z.
pub fn compile_tilted(params: &PairParams, theta: f64, angle: f64, options: &CompileOptions) -> Result<Schedule> {
    require_positive_omega(params)?;
    let bounded = options.bounded(params);
    if !(0.0..0.5 * PI).contains(&theta) {
        return Err(Error::InvalidArgument(format!(
            "tilt must lie in [0, π/2), got {theta}"
        )));
    }
    let theta_max = bounded.max_tilt();
    if theta > theta_max * (1.0 + 1e-12) {
        return Err(Error::CapacityExceeded {
            what: format!(
                "tilt {theta} needs J = {} above j_max = {}",
                0.5 * params.omega() * theta.tan(),
                bounded.j_max
            ),
            needed: None,
            allowed: 1,
        });
    }
    let psi = angle.rem_euclid(4.0 * PI);
    if psi < ANGLE_EPS {
        return Ok(Schedule::empty(bounded));
    }
    let j = tilt_coupling(&bounded, theta);
    Schedule::new(bounded, vec![Pulse::square(j, psi / (2.0 * bounded.precession(j)))])
}

fn tilt_coupling(params: &PairParams, theta: f64) -> f64 {
    (0.5 * params.omega() * theta.tan()).clamp(0.0, params.j_max)
}

fn pi_pulse(params: &PairParams, j: f64) -> Pulse {
    Pulse::square(j, PI / (2.0 * params.precession(j)))
}

/// Pulse order inside one y-synthesis pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PairOrder {
    /// `[R_z(π), R_θ(π)]` in time: a y rotation by `+2θ`.
    FreeFirst,
    /// `[R_θ(π), R_z(π)]` in time: a y rotation by `−2θ`.
    TiltFirst,
}

struct PairPlan {
    order: PairOrder,
    pairs: usize,
    total: f64,
}

fn plan_y_rotation(params: &PairParams, psi: f64, max_pairs: usize) -> Result<Option<PairPlan>> {
    let psi = psi.rem_euclid(2.0 * PI);
    if psi < ANGLE_EPS || 2.0 * PI - psi < ANGLE_EPS {
        return Ok(None);
    }
    let reach = 2.0 * params.max_tilt();
    let pairs_for = |total: f64| -> Option<usize> {
        if reach <= 0.0 {
            return None;
        }
        Some(((total / reach) - 1e-9).ceil().max(1.0) as usize)
    };
    let pair_time = |total: f64, p: usize| -> f64 {
        let j = tilt_coupling(params, total / (2.0 * p as f64));
        p as f64 * (PI / (2.0 * params.omega()) + PI / (2.0 * params.precession(j)))
    };
    let mut candidates = Vec::new();
    for (order, total) in [(PairOrder::FreeFirst, psi), (PairOrder::TiltFirst, 2.0 * PI - psi)] {
        if let Some(p) = pairs_for(total) {
            candidates.push((p, pair_time(total, p), order, total));
        }
    }
    candidates.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    match candidates.first() {
        Some(&(p, _, order, total)) if p <= max_pairs => Ok(Some(PairPlan { order, pairs: p, total })),
        Some(&(p, ..)) => Err(Error::CapacityExceeded {
            what: format!("y rotation by {psi} under j_max = {}", params.j_max),
            needed: Some(p),
            allowed: max_pairs,
        }),
        None => Err(Error::CapacityExceeded {
            what: "y rotation with j_max = 0".into(),
            needed: None,
            allowed: max_pairs,
        }),
    }
}

fn y_pulses(params: &PairParams, plan: &PairPlan) -> Vec<Pulse> {
    let theta = plan.total / (2.0 * plan.pairs as f64);
    let tilt = pi_pulse(params, tilt_coupling(params, theta));
    let free = pi_pulse(params, 0.0);
    let pair = match plan.order {
        PairOrder::FreeFirst => [free, tilt],
        PairOrder::TiltFirst => [tilt, free],
    };
    pair.iter().copied().cycle().take(2 * plan.pairs).collect()
}

/// `R_y(ψ)` up to global phase from at most `max_pairs` pulse pairs with an
/// equal tilt in every pair.
pub fn compile_rotation_y(params: &PairParams, angle: f64, options: &CompileOptions) -> Result<Schedule> {
    require_positive_omega(params)?;
    options.validate()?;
    if !angle.is_finite() {
        return Err(Error::InvalidArgument("rotation angle must be finite".into()));
    }
    let bounded = options.bounded(params);
    let Some(plan) = plan_y_rotation(&bounded, angle, options.max_pairs)? else {
        return Ok(Schedule::empty(bounded));
    };
    let schedule = Schedule::new(bounded, y_pulses(&bounded, &plan))?;
    verify(&schedule, &rotation_operator(&AxisAngle::y(angle)), options.tolerance)?;
    Ok(schedule)
}

/// Three-pulse sandwich `[R_θ(π), R_z(π), R_θ(π)]`: a π rotation about the
/// axis tilted `2θ` from z, i.e. `R_x(π)` at `θ = π/4`.
pub fn compile_pi_sandwich(params: &PairParams, theta: f64, options: &CompileOptions) -> Result<Schedule> {
    require_positive_omega(params)?;
    let bounded = options.bounded(params);
    if !(theta > 0.0 && theta <= bounded.max_tilt() * (1.0 + 1e-12)) {
        return Err(Error::CapacityExceeded {
            what: format!("sandwich tilt {theta} outside (0, {}]", bounded.max_tilt()),
            needed: None,
            allowed: 1,
        });
    }
    let tilt = pi_pulse(&bounded, tilt_coupling(&bounded, theta));
    Schedule::new(bounded, vec![tilt, pi_pulse(&bounded, 0.0), tilt])
}

/// ZYZ decomposition with `β ∈ [0, π]` and `α, γ ∈ [0, 2π)`.
///
/// At gimbal lock (`β = 0` or `π`) the whole z angle goes into `α`.
pub fn euler_decompose(u: &ComplexMatrix) -> Result<EulerAngles> {
    if u.shape() != (2, 2) || !is_unitary(u, 1e-10) {
        return Err(Error::InvalidArgument("euler_decompose needs a 2x2 unitary".into()));
    }
    let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
    let v = u / det.sqrt();
    // v = [[a, −b*], [b, a*]],  a = e^{−i(α+γ)/2} cos(β/2),  b = e^{i(α−γ)/2} sin(β/2)
    let (a, b) = (v[(0, 0)], v[(1, 0)]);
    let beta = 2.0 * b.norm().atan2(a.norm());
    let (alpha, gamma) = if b.norm() < 1e-12 {
        (-2.0 * a.arg(), 0.0)
    } else if a.norm() < 1e-12 {
        (2.0 * b.arg(), 0.0)
    } else {
        (b.arg() - a.arg(), -a.arg() - b.arg())
    };
    let wrap = |x: f64| {
        let r = x.rem_euclid(2.0 * PI);
        if 2.0 * PI - r < 1e-14 {
            0.0
        } else {
            r
        }
    };
    let mut angles = EulerAngles {
        alpha: wrap(alpha),
        beta,
        gamma: wrap(gamma),
        global_phase: 0.0,
    };
    angles.global_phase = relative_phase(u, &angles.reconstruct());
    Ok(angles)
}

/// Merge neighbouring free-precession pulses; their durations add, reduced
/// modulo the free period `π/ω` (a `2π` z rotation is `−I`).
fn amalgamate(params: &PairParams, pulses: Vec<Pulse>) -> Vec<Pulse> {
    let period = PI / params.omega();
    let mut out: Vec<Pulse> = Vec::with_capacity(pulses.len());
    for p in pulses {
        match out.last_mut() {
            Some(last) if last.is_square() && p.is_square() && last.j == 0.0 && p.j == 0.0 => {
                last.duration += p.duration;
            }
            _ => out.push(p),
        }
    }
    out.into_iter()
        .filter_map(|mut p| {
            if p.is_square() && p.j == 0.0 {
                p.duration = p.duration.rem_euclid(period);
                if p.duration < ANGLE_EPS * period || period - p.duration < ANGLE_EPS * period {
                    return None;
                }
            }
            Some(p)
        })
        .collect()
}

fn compile_euler(params: &PairParams, u: &ComplexMatrix, options: &CompileOptions) -> Result<Schedule> {
    let e = euler_decompose(u)?;
    let z = |angle: f64| -> Vec<Pulse> {
        if angle < ANGLE_EPS {
            Vec::new()
        } else {
            vec![Pulse::square(0.0, angle / (2.0 * params.omega()))]
        }
    };
    let y = match plan_y_rotation(params, e.beta, options.max_pairs)? {
        Some(plan) => y_pulses(params, &plan),
        None => Vec::new(),
    };
    // time order: R_z(γ), then R_y(β), then R_z(α)
    let mut pulses = z(e.gamma);
    pulses.extend(y);
    pulses.extend(z(e.alpha));
    Schedule::new(*params, amalgamate(params, pulses))
}

/// One pulse, when `u` is (up to phase) a rotation about a reachable tilted axis.
fn compile_direct(params: &PairParams, u: &ComplexMatrix) -> Option<Schedule> {
    let aa = axis_angle_from_unitary(u).ok()?;
    let [nx, ny, nz] = aa.axis();
    if ny.abs() > 1e-12 {
        return None;
    }
    let psi = aa.angle();
    if psi < ANGLE_EPS {
        return Some(Schedule::empty(*params));
    }
    // R_{−n}(ψ) = −R_n(2π − ψ)
    let (theta, angle) = if nz > 0.0 && nx >= -1e-15 {
        (nx.max(0.0).atan2(nz), psi)
    } else if nz < 0.0 && nx <= 1e-15 {
        ((-nx).max(0.0).atan2(-nz), 2.0 * PI - psi)
    } else {
        return None;
    };
    if theta > params.max_tilt() * (1.0 + 1e-12) {
        return None;
    }
    let j = tilt_coupling(params, theta);
    Schedule::new(*params, vec![Pulse::square(j, angle / (2.0 * params.precession(j)))]).ok()
}

/// Shortest known schedule for an arbitrary logical unitary.
fn compile_arbitrary(params: &PairParams, u: &ComplexMatrix, options: &CompileOptions) -> Result<Schedule> {
    let euler = compile_euler(params, u, options)?;
    let best = match compile_direct(params, u) {
        Some(direct)
            if direct.len() < euler.len()
                || (direct.len() == euler.len() && direct.total_duration() <= euler.total_duration()) =>
        {
            direct
        }
        _ => euler,
    };
    Ok(best)
}

/// Append net-identity `2π` pulses until `ω·τ` is a multiple of 2π, so
/// passive pairs (free precession at `ω`) end where they started.
pub fn frame_sync_pad(schedule: &Schedule) -> Result<Schedule> {
    let params = schedule.params;
    require_positive_omega(&params)?;
    let w = params.omega();
    let tau = schedule.total_duration();
    if frame_residual(w, tau) <= 1e-10 * (w * tau).max(1.0) {
        return Ok(schedule.clone());
    }
    let wp_max = params.precession(params.j_max);
    let mut n = ((w * tau) / (2.0 * PI)).ceil().max(1.0);
    loop {
        let deficit = 2.0 * PI * n / w - tau;
        if deficit > 0.0 {
            let m = ((deficit * w / PI) - 1e-12).ceil().max(1.0);
            let wp = m * PI / deficit;
            if wp <= wp_max * (1.0 + 1e-12) {
                let j = (0.5 * (wp * wp - w * w).max(0.0).sqrt()).min(params.j_max);
                let pad = Pulse::square(j, PI / params.precession(j));
                let mut padded = schedule.clone();
                padded.pulses.extend(std::iter::repeat_n(pad, m as usize));
                return Ok(padded);
            }
        }
        n += 1.0;
    }
}

/// Single SWAP pulse for a pair with `ω = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapCompilation {
    pub schedule: Schedule,
    /// Phases acquired by `|00⟩` and `|11⟩`.
    pub phase_00: f64,
    pub phase_11: f64,
}

/// `J` held for `π/(4J)`: the logical block is `−iσ_x`, exchanging `|01⟩` and `|10⟩`.
pub fn compile_swap(params: &PairParams, j: f64) -> Result<SwapCompilation> {
    let scale = params.a().abs().max(params.b().abs()).max(1.0);
    if params.omega().abs() > 1e-12 * scale {
        return Err(Error::UnsupportedConfiguration(format!(
            "single-pulse SWAP needs ω = 0, got ω = {}",
            params.omega()
        )));
    }
    if !(j > 0.0) {
        return Err(Error::DomainViolation(format!("SWAP needs J > 0, got {j}")));
    }
    params.check_coupling(j)?;
    let t = PI / (4.0 * j);
    let schedule = Schedule::new(*params, vec![Pulse::square(j, t)])?;
    let k = 2.0 * j;
    let big = params.omega_large();
    let wrap = |x: f64| Complex64::from_polar(1.0, x).arg();
    Ok(SwapCompilation {
        schedule,
        phase_00: wrap(-(-big + k) * t),
        phase_11: wrap(-(big + k) * t),
    })
}

fn verify(schedule: &Schedule, target: &ComplexMatrix, tolerance: f64) -> Result<f64> {
    let u = propagate_schedule(schedule, Subspace::Logical)?;
    let f = fidelity_up_to_phase(&u, target)?;
    if f < 1.0 - tolerance {
        return Err(Error::VerificationFailed {
            fidelity: f,
            required: 1.0 - tolerance,
        });
    }
    Ok(f)
}

/// Largest population a logical input sends to `|00⟩` or `|11⟩`.
pub fn pair_leakage(full: &ComplexMatrix) -> f64 {
    [1, 2]
        .iter()
        .map(|&c| full[(0, c)].norm_sqr() + full[(3, c)].norm_sqr())
        .fold(0.0, f64::max)
}

/// Compile any supported gate and verify it by propagation.
pub fn compile_gate(spec: &GateSpec, params: &PairParams) -> Result<Compiled> {
    spec.validate()?;
    let options = &spec.options;
    let bounded = options.bounded(params);

    if let GateKind::Nnor = spec.kind {
        let outcome = search_nnor(&bounded, &SearchConfig::for_pair(&bounded))?;
        if !outcome.converged {
            return Err(Error::NotConverged {
                infidelity: outcome.infidelity,
            });
        }
        return Ok(Compiled {
            report: outcome.report,
            schedule: outcome.schedule,
        });
    }
    if let GateKind::Swap = spec.kind {
        let swap = compile_swap(&bounded, bounded.j_max)?;
        let report = logical_report(&swap.schedule, &pauli_x(), options.tolerance)?;
        return Ok(Compiled {
            schedule: swap.schedule,
            report,
        });
    }

    require_positive_omega(params)?;
    let target = spec.target_unitary().expect("single-qubit target");
    let schedule = match &spec.kind {
        GateKind::RotationZ(a) => compile_rotation_z(&bounded, *a)?,
        GateKind::RotationY(a) => compile_rotation_y(&bounded, *a, options)?,
        GateKind::RotationTilted { theta, angle } => compile_tilted(&bounded, *theta, *angle, options)?,
        GateKind::Hadamard => {
            let j = 0.5 * bounded.omega();
            if j <= bounded.j_max {
                Schedule::new(bounded, vec![Pulse::square(j, PI / (2.0 * bounded.precession(j)))])?
            } else {
                compile_arbitrary(&bounded, &target, options)?
            }
        }
        GateKind::Arbitrary(u) => compile_arbitrary(&bounded, u, options)?,
        GateKind::Swap | GateKind::Nnor => unreachable!(),
    };
    let schedule = if options.frame_sync {
        frame_sync_pad(&schedule)?
    } else {
        schedule
    };
    let report = logical_report(&schedule, &target, options.tolerance)?;
    if !report.converged {
        return Err(Error::VerificationFailed {
            fidelity: report.fidelity,
            required: 1.0 - options.tolerance,
        });
    }
    Ok(Compiled { schedule, report })
}

/// Fidelity report of a pair schedule against a logical 2×2 target.
pub fn logical_report(schedule: &Schedule, target: &ComplexMatrix, tolerance: f64) -> Result<FidelityReport> {
    let full = propagate_schedule(schedule, Subspace::Full)?;
    let logical = full.view((1, 1), (2, 2)).into_owned();
    let fidelity = fidelity_up_to_phase(&logical, target)?;
    Ok(FidelityReport {
        fidelity,
        total_duration: schedule.total_duration(),
        pulse_count: schedule.len(),
        leakage: pair_leakage(&full),
        frame_residual: schedule.frame_residual(),
        converged: fidelity >= 1.0 - tolerance,
    })
}

/// Fidelity report of a pair schedule against the nNOR target on the full pair.
pub fn nnor_report(schedule: &Schedule, tolerance: f64) -> Result<FidelityReport> {
    let full = propagate_schedule(schedule, Subspace::Full)?;
    let tau = schedule.total_duration();
    let fidelity = if tau > 0.0 {
        fidelity_up_to_phase(&full, &nnor_target(&schedule.params, tau)?.target_unitary)?
    } else {
        0.5
    };
    Ok(FidelityReport {
        fidelity,
        total_duration: tau,
        pulse_count: schedule.len(),
        leakage: pair_leakage(&full),
        frame_residual: schedule.frame_residual(),
        converged: 1.0 - fidelity <= tolerance,
    })
}
