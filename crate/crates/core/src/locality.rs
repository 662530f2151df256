//! Schatten norms, partial-trace local approximation, OTOCs and the
//! unitary-connection recursion.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dense::{DenseOperator, C64};
use crate::error::{Error, Result};
use crate::evolve::{Evolver, Propagator};
use crate::hamiltonian::{DerivedConstants, Hamiltonian};
use crate::lattice::Region;
use crate::pauli::PauliString;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    /// Schatten-1.
    Trace,
    /// Schatten-2, unnormalized.
    Schatten2,
    /// Schatten-∞.
    Operator,
    /// Schatten-2 divided by `sqrt(2^n)`.
    NormalizedFrobenius,
}

impl NormKind {
    pub fn label(self) -> &'static str {
        match self {
            NormKind::Trace => "trace",
            NormKind::Schatten2 => "schatten2",
            NormKind::Operator => "operator",
            NormKind::NormalizedFrobenius => "normalized_frobenius",
        }
    }
}

pub fn schatten_norm(o: &DenseOperator, kind: NormKind) -> Result<f64> {
    match kind {
        NormKind::Trace => o.trace_norm(),
        NormKind::Schatten2 => Ok(o.frobenius_sq().sqrt()),
        NormKind::Operator => o.operator_norm(),
        NormKind::NormalizedFrobenius => Ok(o.normalized_frobenius()),
    }
}

fn norms_of(o: &DenseOperator, kinds: &[NormKind]) -> Result<BTreeMap<NormKind, f64>> {
    kinds.iter().map(|&k| Ok((k, schatten_norm(o, k)?))).collect()
}

/// Basis indices obtained by scattering every bit pattern over `mask`.
fn scatter_table(mask: u64, n: usize) -> Vec<usize> {
    let sites: Vec<usize> = (0..n).filter(|s| mask >> s & 1 == 1).collect();
    (0..1usize << sites.len())
        .map(|local| {
            sites
                .iter()
                .enumerate()
                .filter(|(b, _)| local >> b & 1 == 1)
                .fold(0usize, |acc, (_, &s)| acc | 1 << s)
        })
        .collect()
}

/// `tr_{X̃^c}(O)/2^{|X̃^c|} ⊗ 1_{X̃^c}`, the Frobenius-orthogonal projection
/// onto operators supported in `X̃`.
pub fn local_restrict(o: &DenseOperator, region: &Region) -> Result<DenseOperator> {
    let n = o.n_sites();
    if let Some(&s) = region.sites().last() {
        if s >= n {
            return Err(Error::SiteOutOfRange { site: s, n });
        }
    }
    let mask = region.sites().iter().fold(0u64, |m, &s| m | 1 << s);
    Ok(restrict_mask(o, mask))
}

pub(crate) fn restrict_mask(o: &DenseOperator, mask: u64) -> DenseOperator {
    let n = o.n_sites();
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    if mask & full == full {
        return o.clone();
    }
    let inside = scatter_table(mask, n);
    let outside = scatter_table(full & !mask, n);
    let norm = 1.0 / outside.len() as f64;
    let din = inside.len();
    let mut reduced = vec![C64::new(0.0, 0.0); din * din];
    for (bi, &b) in inside.iter().enumerate() {
        for (ai, &a) in inside.iter().enumerate() {
            let s: C64 = outside.iter().map(|&e| o.get(a | e, b | e)).sum();
            reduced[bi * din + ai] = s * norm;
        }
    }
    let mut out = DenseOperator::zeros(n);
    for &e in &outside {
        for (bi, &b) in inside.iter().enumerate() {
            for (ai, &a) in inside.iter().enumerate() {
                out.set(a | e, b | e, reduced[bi * din + ai]);
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "step")]
pub enum ApproxMethod {
    Direct,
    RecursionStep(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ApproxRecord {
    pub region: Region,
    pub t: f64,
    pub r: usize,
    pub kind: NormKind,
    pub error: f64,
    pub method: ApproxMethod,
}

/// `‖W(t) − restrict(W(t), X[r])‖` in the requested norm.
pub fn approx_error(
    h: &Hamiltonian,
    evolver: &Evolver,
    w: &DenseOperator,
    x: &Region,
    t: f64,
    r: usize,
    kind: NormKind,
) -> Result<ApproxRecord> {
    let region = h.lattice().extend_region(x, r)?;
    let wt = evolver.evolve(w, t)?;
    let diff = &wt - &local_restrict(&wt, &region)?;
    Ok(ApproxRecord {
        region,
        t,
        r,
        kind,
        error: schatten_norm(&diff, kind)?,
        method: ApproxMethod::Direct,
    })
}

/// `‖[A, P]‖_F²` for a Pauli string `P`, without materializing `P`.
pub fn commutator_frobenius_sq_with_pauli(a: &DenseOperator, p: &PauliString) -> f64 {
    let dim = a.dim();
    let x = p.x_mask() as usize;
    let amps: Vec<C64> = (0..dim).map(|b| p.apply_basis(b).1).collect();
    let mut total = 0.0;
    for col in 0..dim {
        for row in 0..dim {
            // (A P)[row, col] = A[row, col⊕x] · amp(col)
            // (P A)[row, col] = amp(row⊕x) · A[row⊕x, col]
            let ap = a.get(row, col ^ x) * amps[col];
            let pa = amps[row ^ x] * a.get(row ^ x, col);
            total += (ap - pa).norm_sqr();
        }
    }
    total / dim as f64
}

fn warn_unless_unit_norm(name: &str, o: &DenseOperator) {
    if let Ok(norm) = o.operator_norm() {
        if (norm - 1.0).abs() > 1e-9 {
            log::warn!("OTOC operator {name} has operator norm {norm}, not 1");
        }
    }
}

/// `C(t) = ‖[W(t), V]‖_F²` for each time.
pub fn otoc(evolver: &Evolver, w: &DenseOperator, v: &DenseOperator, times: &[f64]) -> Result<Vec<f64>> {
    warn_unless_unit_norm("W", w);
    warn_unless_unit_norm("V", v);
    times
        .iter()
        .map(|&t| {
            let wt = evolver.evolve(w, t)?;
            Ok(wt.commutator(v).frobenius_sq() / wt.dim() as f64)
        })
        .collect()
}

/// [`otoc`] with a Pauli-string probe `V`, at O(4^n) per time.
pub fn otoc_pauli(evolver: &Evolver, w: &DenseOperator, v: &PauliString, times: &[f64]) -> Result<Vec<f64>> {
    warn_unless_unit_norm("W", w);
    times
        .iter()
        .map(|&t| Ok(commutator_frobenius_sq_with_pauli(&evolver.evolve(w, t)?, v)))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    /// Index `m` of the step `W^{(m)} → W^{(m+1)}`.
    pub m: usize,
    /// `X_{m+1}`.
    pub region: Region,
    pub errors: BTreeMap<NormKind, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecursionTrace {
    pub t: f64,
    pub dt: f64,
    pub m_t: usize,
    pub dr: usize,
    pub center: usize,
    pub r0: usize,
    pub r: usize,
    /// `r` was not a multiple of `m_t`; the last step absorbs the slack.
    pub radius_rounded: bool,
    /// `X_0, …, X_{m_t}`.
    pub regions: Vec<Region>,
    pub steps: Vec<StepRecord>,
    /// `Σ_m ‖W^{(m)}(Δt) − W^{(m+1)}‖`.
    pub telescoped: BTreeMap<NormKind, f64>,
    /// `‖W(t) − W^{(m_t)}‖`.
    pub direct: BTreeMap<NormKind, f64>,
    /// `‖W(t) − restrict(W(t), X_{m_t})‖`.
    pub projection: BTreeMap<NormKind, f64>,
    #[serde(skip)]
    pub final_operator: DenseOperator,
    pub warnings: Vec<String>,
}

/// `X_m = i[r0 + m·Δr]` for `m < m_t` and `X_{m_t} = i[r0 + r]`, with
/// `Δr = ⌊r/m_t⌋`.
pub fn recursion_regions(h: &Hamiltonian, center: usize, r0: usize, r: usize, m_t: usize) -> Result<Vec<Region>> {
    if m_t == 0 {
        return Err(Error::InvalidArgument("m_t must be at least 1".into()));
    }
    let dr = r / m_t;
    (0..=m_t)
        .map(|m| {
            let radius = if m == m_t { r0 + r } else { r0 + m * dr };
            h.lattice().ball(center, radius)
        })
        .collect()
}

/// Runs the recursion with explicit propagators `U(Δt)` and `U(t)`, so a
/// caller sweeping many radii can reuse them.
#[allow(clippy::too_many_arguments)]
pub fn unitary_connection_with(
    h: &Hamiltonian,
    step: &Propagator,
    full: &Propagator,
    w: &DenseOperator,
    center: usize,
    r0: usize,
    r: usize,
    m_t: usize,
    norms: &[NormKind],
) -> Result<RecursionTrace> {
    let regions = recursion_regions(h, center, r0, r, m_t)?;
    let mut current = w.clone();
    let mut steps = Vec::with_capacity(m_t);
    let mut telescoped: BTreeMap<NormKind, f64> = norms.iter().map(|&k| (k, 0.0)).collect();
    for m in 0..m_t {
        let evolved = step.conjugate(&current);
        let next = local_restrict(&evolved, &regions[m + 1])?;
        let errors = norms_of(&(&evolved - &next), norms)?;
        for (k, e) in &errors {
            *telescoped.get_mut(k).expect("same norm list") += e;
        }
        steps.push(StepRecord {
            m,
            region: regions[m + 1].clone(),
            errors,
        });
        current = next;
    }
    let wt = full.conjugate(w);
    let direct = norms_of(&(&wt - &current), norms)?;
    let projection = norms_of(&(&wt - &local_restrict(&wt, &regions[m_t])?), norms)?;
    Ok(RecursionTrace {
        t: full.t(),
        dt: step.t(),
        m_t,
        dr: r / m_t,
        center,
        r0,
        r,
        radius_rounded: r % m_t != 0,
        regions,
        steps,
        telescoped,
        direct,
        projection,
        final_operator: current,
        warnings: Vec::new(),
    })
}

/// Evolves `W` (supported in `i[r0]`) to time `t` in `m_t` slices of
/// `Δt = t/m_t`, restricting to the growing balls after each slice.
#[allow(clippy::too_many_arguments)]
pub fn unitary_connection(
    h: &Hamiltonian,
    evolver: &Evolver,
    w: &DenseOperator,
    center: usize,
    r0: usize,
    t: f64,
    m_t: usize,
    r: usize,
    norms: &[NormKind],
    tau_star: Option<f64>,
) -> Result<RecursionTrace> {
    if m_t == 0 {
        return Err(Error::InvalidArgument("m_t must be at least 1".into()));
    }
    let dt = t / m_t as f64;
    let step = evolver.propagator(dt)?;
    let full = evolver.propagator(t)?;
    let mut trace = unitary_connection_with(h, &step, &full, w, center, r0, r, m_t, norms)?;
    if let Some(tau) = tau_star {
        if dt.abs() > tau {
            let msg = format!("time slice {dt} exceeds the threshold {tau}");
            log::warn!("{msg}");
            trace.warnings.push(msg);
        }
    }
    Ok(trace)
}

/// `Δt = τ*/2`.
pub fn default_dt(consts: &DerivedConstants) -> f64 {
    consts.tau_star / 2.0
}
