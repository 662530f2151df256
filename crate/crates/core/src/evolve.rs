//! Heisenberg-picture evolution `W(t) = e^{iHt} W e^{−iHt}`.
//!
//! Three routes: exact conjugation through one Hermitian eigendecomposition
//! of `H`, the truncated nested-commutator series over Pauli strings, and a
//! seeded Hutchinson estimator for Frobenius norms of large operators.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dense::{ensure_dense, DenseOperator, C64};
use crate::error::{Error, Result};
use crate::hamiltonian::Hamiltonian;
use crate::pauli::{PauliKey, PauliString};

/// Coefficients at or below this magnitude are dropped from string sums.
pub const PRUNE_THRESHOLD: f64 = 1e-14;

/// Default cap on the number of live strings in one series order.
pub const DEFAULT_STRING_BUDGET: usize = 2_000_000;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Spectral decomposition `H = V diag(E) V†`, computed once per model.
#[derive(Clone, Debug)]
pub struct Evolver {
    energies: Vec<f64>,
    vectors: DenseOperator,
}

/// `U(t) = e^{−iHt}` for one fixed `t`.
#[derive(Clone, Debug)]
pub struct Propagator {
    t: f64,
    u: DenseOperator,
}

impl Evolver {
    pub fn new(h: &Hamiltonian, cutoff: usize) -> Result<Self> {
        ensure_dense(h.n_sites(), cutoff)?;
        Self::from_dense(&h.to_dense(cutoff)?)
    }

    pub fn from_dense(h: &DenseOperator) -> Result<Self> {
        let (energies, vectors) = h.eigh()?;
        Ok(Self { energies, vectors })
    }

    pub fn n_sites(&self) -> usize {
        self.vectors.n_sites()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn propagator(&self, t: f64) -> Result<Propagator> {
        check_time(t)?;
        let n = self.n_sites();
        if t == 0.0 {
            return Ok(Propagator {
                t,
                u: DenseOperator::identity(n),
            });
        }
        let mut scaled = self.vectors.clone();
        let dim = scaled.dim();
        let data = scaled.as_mut_slice();
        for (col, e) in self.energies.iter().enumerate() {
            let phase = C64::from_polar(1.0, -e * t);
            for z in &mut data[col * dim..(col + 1) * dim] {
                *z *= phase;
            }
        }
        Ok(Propagator {
            t,
            u: scaled.matmul_adjoint(&self.vectors),
        })
    }

    pub fn evolve(&self, w: &DenseOperator, t: f64) -> Result<DenseOperator> {
        Ok(self.propagator(t)?.conjugate(w))
    }
}

impl Propagator {
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn unitary(&self) -> &DenseOperator {
        &self.u
    }

    /// `U† W U = e^{iHt} W e^{−iHt}`.
    pub fn conjugate(&self, w: &DenseOperator) -> DenseOperator {
        assert_eq!(w.n_sites(), self.u.n_sites(), "operator size mismatch");
        if self.t == 0.0 {
            return w.clone();
        }
        self.u.adjoint_matmul(&w.matmul(&self.u))
    }
}

fn check_time(t: f64) -> Result<()> {
    if !t.is_finite() {
        return Err(Error::InvalidArgument(format!("time must be finite, got {t}")));
    }
    Ok(())
}

/// One-shot `e^{iHt} W e^{−iHt}`; build an [`Evolver`] to reuse the
/// decomposition across times.
pub fn heisenberg_evolve(h: &Hamiltonian, w: &DenseOperator, t: f64) -> Result<DenseOperator> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(w.clone());
    }
    Evolver::new(h, w.n_sites().max(h.n_sites()))?.evolve(w, t)
}

/// `Σ_key c_key P_key` with every `P_key` carrying phase `+1`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct StringSum {
    n_sites: usize,
    terms: BTreeMap<PauliKey, C64>,
    /// Highest series order included (0 for plain sums).
    pub order: usize,
    /// Magnitude discarded by pruning plus the weight of the last order.
    pub tail_estimate: f64,
}

impl StringSum {
    pub fn new(n_sites: usize) -> Self {
        Self {
            n_sites,
            ..Default::default()
        }
    }

    pub fn from_string(n_sites: usize, p: &PauliString) -> Self {
        let mut out = Self::new(n_sites);
        out.add_string(p, C64::new(1.0, 0.0));
        out
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, key: &PauliKey) -> C64 {
        self.terms.get(key).copied().unwrap_or(ZERO)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PauliKey, &C64)> {
        self.terms.iter()
    }

    /// Adds `c · p`, folding the phase of `p` into the coefficient.
    pub fn add_string(&mut self, p: &PauliString, c: C64) {
        *self.terms.entry(p.key()).or_insert(ZERO) += c * p.phase().value();
    }

    /// Drops coefficients with `|c| ≤ threshold`; returns the dropped mass.
    pub fn prune(&mut self, threshold: f64) -> f64 {
        let mut dropped = 0.0;
        self.terms.retain(|_, c| {
            let keep = c.norm() > threshold;
            if !keep {
                dropped += c.norm();
            }
            keep
        });
        dropped
    }

    /// Exact `‖·‖_F²`, since Pauli strings are orthonormal under the
    /// normalized trace.
    pub fn frobenius_sq(&self) -> f64 {
        self.terms.values().map(|c| c.norm_sqr()).sum()
    }

    pub fn l1_weight(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }

    /// `[self, V]` as a string sum.
    pub fn commutator_with(&self, v: &PauliString) -> StringSum {
        let mut out = StringSum::new(self.n_sites);
        for (key, c) in &self.terms {
            if let Some(h) = key.string().commutator(v) {
                out.add_string(&h, c * 2.0);
            }
        }
        out.prune(0.0);
        out
    }

    pub fn to_dense(&self, cutoff: usize) -> Result<DenseOperator> {
        ensure_dense(self.n_sites, cutoff)?;
        let mut out = DenseOperator::zeros(self.n_sites);
        for b in 0..1usize << self.n_sites {
            for (key, c) in &self.terms {
                let (row, amp) = key.string().apply_basis(b);
                let cur = out.get(row, b);
                out.set(row, b, cur + amp * c);
            }
        }
        Ok(out)
    }
}

/// Support of everything reachable from `seed_mask` through `hops`
/// successive terms that overlap the current support.
pub fn reachable_mask(h: &Hamiltonian, seed_mask: u64, hops: usize) -> u64 {
    let mut mask = seed_mask;
    for _ in 0..hops {
        let mut next = mask;
        for term in h.terms() {
            if term.support_mask & mask != 0 {
                next |= term.support_mask;
            }
        }
        if next == mask {
            break;
        }
        mask = next;
    }
    mask
}

/// The `t`-independent half-commutator layers `B_m` with
/// `ad_H^m(W₀) = 2^m B_m`, so `W(t) = Σ_m (2it)^m/m! · B_m`.
#[derive(Clone, Debug)]
pub struct SeriesExpansion {
    n_sites: usize,
    layers: Vec<StringSum>,
    pruned: Vec<f64>,
    seed_mask: u64,
}

impl SeriesExpansion {
    pub fn new(h: &Hamiltonian, seed: &StringSum, max_order: usize, budget: usize) -> Result<Self> {
        let n = h.n_sites();
        let seed_mask = seed.iter().fold(0u64, |m, (k, _)| m | k.support_mask());
        let mut layers = vec![seed.clone()];
        let mut pruned = vec![0.0];
        for order in 1..=max_order {
            let prev = &layers[order - 1];
            let mut next = StringSum::new(n);
            for (key, c) in prev.iter() {
                let p = key.string();
                for el in h.elements() {
                    if el.support_mask & key.support_mask() == 0 {
                        continue;
                    }
                    if let Some(half) = el.string.commutator(&p) {
                        next.add_string(&half, c * el.coefficient);
                    }
                }
                if next.len() > budget {
                    return Err(Error::TruncationBudget {
                        budget,
                        order,
                        count: next.len(),
                    });
                }
            }
            pruned.push(next.prune(PRUNE_THRESHOLD));
            next.order = order;
            layers.push(next);
        }
        Ok(Self {
            n_sites: n,
            layers,
            pruned,
            seed_mask,
        })
    }

    pub fn max_order(&self) -> usize {
        self.layers.len() - 1
    }

    /// `B_m`.
    pub fn layer(&self, m: usize) -> &StringSum {
        &self.layers[m]
    }

    /// `Σ_{m≤M} (2it)^m/m! B_m`.
    pub fn evaluate(&self, t: f64, max_order: usize) -> StringSum {
        let max_order = max_order.min(self.max_order());
        let mut out = StringSum::new(self.n_sites);
        let mut factor = C64::new(1.0, 0.0);
        let mut tail = 0.0;
        for m in 0..=max_order {
            if m > 0 {
                factor *= C64::new(0.0, 2.0 * t) / m as f64;
            }
            for (key, c) in self.layers[m].iter() {
                *out.terms.entry(*key).or_insert(ZERO) += factor * c;
            }
            tail += factor.norm() * self.pruned[m];
        }
        tail += factor.norm() * self.layers[max_order].l1_weight();
        out.prune(0.0);
        out.order = max_order;
        out.tail_estimate = tail;
        out
    }

    /// True when every string of `B_m` lies inside the support reachable
    /// from the seed through `m` overlapping terms.
    pub fn audit_connectivity(&self, h: &Hamiltonian) -> bool {
        self.layers.iter().enumerate().all(|(m, layer)| {
            let allowed = reachable_mask(h, self.seed_mask, m);
            layer.iter().all(|(k, _)| k.support_mask() & !allowed == 0)
        })
    }
}

/// Partial sum of `W₀(t)` through order `M`.
pub fn bch_expand(h: &Hamiltonian, w0: &PauliString, t: f64, max_order: usize) -> Result<StringSum> {
    check_time(t)?;
    let seed = StringSum::from_string(h.n_sites(), w0);
    Ok(SeriesExpansion::new(h, &seed, max_order, DEFAULT_STRING_BUDGET)?.evaluate(t, max_order))
}

/// Anything that can act on a state vector of `2^n` amplitudes.
pub trait OperatorHandle {
    fn n_sites(&self) -> usize;
    fn apply(&self, v: &[C64]) -> Vec<C64>;
}

impl OperatorHandle for DenseOperator {
    fn n_sites(&self) -> usize {
        DenseOperator::n_sites(self)
    }

    fn apply(&self, v: &[C64]) -> Vec<C64> {
        DenseOperator::apply(self, v)
    }
}

impl OperatorHandle for StringSum {
    fn n_sites(&self) -> usize {
        self.n_sites
    }

    fn apply(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; v.len()];
        for (key, c) in &self.terms {
            let p = key.string();
            for (b, amp) in v.iter().enumerate() {
                let (b2, phase) = p.apply_basis(b);
                out[b2] += phase * amp * c;
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StochasticEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Hutchinson estimate of `‖O‖_F² = tr(O†O)/2^n` from Rademacher probes.
pub fn stochastic_frobenius(
    op: &dyn OperatorHandle,
    samples: usize,
    seed: u64,
) -> Result<StochasticEstimate> {
    if samples < 2 {
        return Err(Error::InvalidArgument(format!(
            "at least 2 samples are required, got {samples}"
        )));
    }
    let dim = 1usize << op.n_sites();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(samples);
    for _ in 0..samples {
        let z: Vec<C64> = (0..dim)
            .map(|_| C64::new(if rng.gen::<bool>() { 1.0 } else { -1.0 }, 0.0))
            .collect();
        let oz = op.apply(&z);
        values.push(oz.iter().map(|a| a.norm_sqr()).sum::<f64>() / dim as f64);
    }
    let mean = values.iter().sum::<f64>() / samples as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
    Ok(StochasticEstimate {
        estimate: mean,
        stderr: (var / samples as f64).sqrt(),
        samples,
        seed,
    })
}
