//! Dense simulation of a whole spin chain.
//!
//! Every Hamiltonian here conserves total `σ_z`, so propagators are built one
//! magnetization sector at a time. Pair `p` of the chain is sites `(2p, 2p+1)`
//! with site `2p` in the pair's A slot, which gives
//! `|0⟩_L = (site 2p down, site 2p+1 up)` and `|1⟩_L` the reverse.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::propagator::Schedule;
use crate::spin::{chain_hamiltonian_real, ChainParams, MAX_CHAIN_SPINS};

/// Leakage above which a logical block is renormalisation-worthy but flagged.
pub const LEAKAGE_FLAG: f64 = 1e-8;
/// Leakage above which extraction refuses.
pub const LEAKAGE_LIMIT: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    n_spins: usize,
    amplitudes: DVector<Complex64>,
}

impl ChainState {
    pub fn new(n_spins: usize, amplitudes: DVector<Complex64>) -> Result<Self> {
        if !(2..=MAX_CHAIN_SPINS).contains(&n_spins) {
            return Err(Error::CapacityExceeded {
                what: format!("{n_spins}-spin state"),
                needed: Some(n_spins),
                allowed: MAX_CHAIN_SPINS,
            });
        }
        if amplitudes.len() != 1 << n_spins {
            return Err(Error::InvalidArgument(format!(
                "{n_spins} spins need {} amplitudes, got {}",
                1 << n_spins,
                amplitudes.len()
            )));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("state norm {norm} is not 1")));
        }
        Ok(Self { n_spins, amplitudes })
    }

    /// Computational basis state; bit `i` of `index` is site `i` (1 = down).
    pub fn basis(n_spins: usize, index: usize) -> Result<Self> {
        let mut v = DVector::zeros(1 << n_spins);
        if index >= v.len() {
            return Err(Error::InvalidArgument(format!("basis index {index} out of range")));
        }
        v[index] = Complex64::new(1.0, 0.0);
        Self::new(n_spins, v)
    }

    /// Product of pair logical states, `bits[p]` for pair `p`.
    pub fn logical(n_spins: usize, bits: &[bool]) -> Result<Self> {
        Self::basis(n_spins, logical_index(n_spins, bits))
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }
}

/// Basis index of a product of pair logical states; pairs beyond `bits` sit in
/// `|0⟩_L` and an unpaired last site points up.
fn logical_index(n_spins: usize, bits: &[bool]) -> usize {
    let mut index = 0;
    for p in 0..n_spins / 2 {
        let one = bits.get(p).copied().unwrap_or(false);
        index |= if one { 1 << (2 * p + 1) } else { 1 << (2 * p) };
    }
    index
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainSegment {
    pub couplings: Vec<f64>,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainSchedule {
    pub chain: ChainParams,
    pub segments: Vec<ChainSegment>,
}

impl ChainSchedule {
    pub fn new(chain: ChainParams, segments: Vec<ChainSegment>) -> Result<Self> {
        let s = Self { chain, segments };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let n_bonds = self.chain.n_bonds();
        for (k, seg) in self.segments.iter().enumerate() {
            if seg.couplings.len() != n_bonds {
                return Err(Error::InvalidArgument(format!(
                    "segment {k}: {} couplings for {n_bonds} bonds",
                    seg.couplings.len()
                )));
            }
            if let Some(j) = seg.couplings.iter().find(|j| !(j.is_finite() && **j >= 0.0)) {
                return Err(Error::DomainViolation(format!(
                    "segment {k}: coupling {j} must be >= 0"
                )));
            }
            if seg.couplings.iter().filter(|j| **j > 0.0).count() > 1 {
                return Err(Error::UnsupportedConfiguration(format!(
                    "segment {k}: at most one active bond per segment"
                )));
            }
            if !(seg.duration.is_finite() && seg.duration > 0.0) {
                return Err(Error::InvalidArgument(format!("segment {k}: duration must be > 0")));
            }
        }
        Ok(())
    }

    /// Run a pair schedule on `bond`, every other bond off.
    pub fn from_pair_schedule(chain: ChainParams, bond: usize, schedule: &Schedule) -> Result<Self> {
        if bond >= chain.n_bonds() {
            return Err(Error::InvalidArgument(format!("bond {bond} out of range")));
        }
        let n_bonds = chain.n_bonds();
        let segments = schedule
            .pulses
            .iter()
            .map(|p| {
                if !p.is_square() {
                    return Err(Error::UnsupportedConfiguration(
                        "chain simulation takes square pulses only".into(),
                    ));
                }
                let mut couplings = vec![0.0; n_bonds];
                couplings[bond] = p.j;
                Ok(ChainSegment {
                    couplings,
                    duration: p.duration,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(chain, segments)
    }

    /// Free evolution for `duration` (one segment, all bonds off).
    pub fn free(chain: ChainParams, duration: f64) -> Result<Self> {
        let n_bonds = chain.n_bonds();
        Self::new(
            chain,
            vec![ChainSegment {
                couplings: vec![0.0; n_bonds],
                duration,
            }],
        )
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().fold(0.0, |acc, s| acc + s.duration)
    }

    pub fn then(mut self, other: &ChainSchedule) -> Self {
        self.segments.extend(other.segments.iter().cloned());
        self
    }
}

/// Basis indices grouped by number of down spins.
fn sectors(n_spins: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); n_spins + 1];
    for s in 0..1usize << n_spins {
        out[s.count_ones() as usize].push(s);
    }
    out
}

/// `exp(−iHt)` restricted to each sector: `(indices, block)` pairs.
fn segment_blocks(chain: &ChainParams, seg: &ChainSegment, sectors: &[Vec<usize>]) -> Result<Vec<ComplexMatrix>> {
    let h = chain_hamiltonian_real(&chain.with_couplings(&seg.couplings)?)?;
    Ok(sectors
        .iter()
        .map(|idx| {
            let n = idx.len();
            let sub = DMatrix::<f64>::from_fn(n, n, |r, c| h[(idx[r], idx[c])]);
            let eig = SymmetricEigen::new(sub);
            let v = &eig.eigenvectors;
            // V·diag(e^{−iλt})·Vᵀ as two real products, which take the fast path
            let (mut vc, mut vs) = (v.clone(), v.clone());
            for j in 0..n {
                let phase = eig.eigenvalues[j] * seg.duration;
                vc.column_mut(j).scale_mut(phase.cos());
                vs.column_mut(j).scale_mut(-phase.sin());
            }
            let (re, im) = (vc * v.transpose(), vs * v.transpose());
            ComplexMatrix::from_fn(n, n, |r, c| Complex64::new(re[(r, c)], im[(r, c)]))
        })
        .collect())
}

fn check_chain(schedule: &ChainSchedule) -> Result<()> {
    let n = schedule.chain.n_spins();
    if n > MAX_CHAIN_SPINS {
        return Err(Error::CapacityExceeded {
            what: format!("{n}-spin chain"),
            needed: Some(n),
            allowed: MAX_CHAIN_SPINS,
        });
    }
    schedule.validate()
}

/// Apply every segment to `state` in time order.
pub fn propagate_chain(schedule: &ChainSchedule, state: &ChainState) -> Result<ChainState> {
    check_chain(schedule)?;
    if state.n_spins != schedule.chain.n_spins() {
        return Err(Error::InvalidArgument("state and chain sizes differ".into()));
    }
    let sectors = sectors(state.n_spins);
    let mut amps = state.amplitudes.clone();
    for seg in &schedule.segments {
        let blocks = segment_blocks(&schedule.chain, seg, &sectors)?;
        for (idx, block) in sectors.iter().zip(&blocks) {
            let local = DVector::from_iterator(idx.len(), idx.iter().map(|&i| amps[i]));
            let evolved = block * local;
            for (k, &i) in idx.iter().enumerate() {
                amps[i] = evolved[k];
            }
        }
    }
    Ok(ChainState {
        n_spins: state.n_spins,
        amplitudes: amps,
    })
}

/// Full chain propagator `U_n ··· U_1`.
pub fn chain_unitary(schedule: &ChainSchedule) -> Result<ComplexMatrix> {
    check_chain(schedule)?;
    let n = schedule.chain.n_spins();
    let dim = 1usize << n;
    let sectors = sectors(n);
    // the product stays block diagonal, so multiply sector by sector
    let mut blocks: Vec<ComplexMatrix> = sectors
        .iter()
        .map(|idx| ComplexMatrix::identity(idx.len(), idx.len()))
        .collect();
    for seg in &schedule.segments {
        let step = segment_blocks(&schedule.chain, seg, &sectors)?;
        for (b, s) in blocks.iter_mut().zip(step) {
            *b = s * &*b;
        }
    }
    let mut u = ComplexMatrix::zeros(dim, dim);
    for (idx, block) in sectors.iter().zip(&blocks) {
        for (r, &i) in idx.iter().enumerate() {
            for (c, &j) in idx.iter().enumerate() {
                u[(i, j)] = block[(r, c)];
            }
        }
    }
    Ok(u)
}

/// Logical block of a chain unitary over selected pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct LogicalBlock {
    /// `2^k × 2^k`, first listed pair is the most significant logical bit.
    pub matrix: ComplexMatrix,
    /// Largest probability a logical input loses outside the block.
    pub leakage: f64,
    /// Set when leakage exceeded [`LEAKAGE_FLAG`]; the block is then left
    /// unnormalised.
    pub flagged: bool,
}

fn spins_of(u: &ComplexMatrix) -> Result<usize> {
    let dim = u.nrows();
    if !u.is_square() || dim < 4 || !dim.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "{}x{} is not a chain unitary",
            u.nrows(),
            u.ncols()
        )));
    }
    let n = dim.trailing_zeros() as usize;
    if n > MAX_CHAIN_SPINS {
        return Err(Error::CapacityExceeded {
            what: format!("{n}-spin unitary"),
            needed: Some(n),
            allowed: MAX_CHAIN_SPINS,
        });
    }
    Ok(n)
}

/// Restrict `u` to the logical states of `pairs`, every other pair held in
/// `|0⟩_L`.
pub fn logical_block(u: &ComplexMatrix, pairs: &[usize]) -> Result<LogicalBlock> {
    let n = spins_of(u)?;
    let n_pairs = n / 2;
    if pairs.is_empty() || pairs.iter().any(|&p| p >= n_pairs) {
        return Err(Error::InvalidArgument(format!("pairs {pairs:?} invalid for {n} spins")));
    }
    let k = pairs.len();
    let index_of = |logical: usize| {
        let mut bits = vec![false; n_pairs];
        for (pos, &p) in pairs.iter().enumerate() {
            bits[p] = (logical >> (k - 1 - pos)) & 1 == 1;
        }
        logical_index(n, &bits)
    };
    let idx: Vec<usize> = (0..1 << k).map(index_of).collect();
    let mut m = ComplexMatrix::from_fn(idx.len(), idx.len(), |r, c| u[(idx[r], idx[c])]);
    let col_mass: Vec<f64> = m.column_iter().map(|c| c.norm_squared()).collect();
    let leakage = col_mass.iter().map(|w| (1.0 - w).max(0.0)).fold(0.0, f64::max);
    if leakage > LEAKAGE_LIMIT {
        return Err(Error::SubspaceViolation { leakage });
    }
    let flagged = leakage > LEAKAGE_FLAG;
    if !flagged {
        for (mut col, w) in m.column_iter_mut().zip(&col_mass) {
            col /= Complex64::new(w.sqrt(), 0.0);
        }
    }
    Ok(LogicalBlock {
        matrix: m,
        leakage,
        flagged,
    })
}

/// 2×2 logical action on one pair.
pub fn logical_extract(u: &ComplexMatrix, pair: usize) -> Result<LogicalBlock> {
    logical_block(u, &[pair])
}

/// Probability per magnetization sector, indexed by the number of down spins
/// (total `σ_z = n − 2k`).
pub fn magnetization_spectrum(state: &ChainState) -> Vec<f64> {
    let mut masses = vec![0.0; state.n_spins + 1];
    for (s, a) in state.amplitudes.iter().enumerate() {
        masses[s.count_ones() as usize] += a.norm_sqr();
    }
    masses
}

/// Population of a pair's `|00⟩` and `|11⟩` states.
pub fn pair_outside_population(state: &ChainState, pair: usize) -> f64 {
    let (lo, hi) = (2 * pair, 2 * pair + 1);
    state
        .amplitudes
        .iter()
        .enumerate()
        .filter(|(s, _)| ((s >> lo) & 1) == ((s >> hi) & 1))
        .map(|(_, a)| a.norm_sqr())
        .sum()
}
