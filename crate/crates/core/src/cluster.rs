//! Strings of Hamiltonian terms `w = ((Z₀,q₀), …, (Z_m,q_m))`, their
//! nested commutators, and the counting arguments built on them.
//!
//! Enumeration walks the connected strings depth first: position `j` only
//! considers elements touching `Z₀ ∪ … ∪ Z_{j−1}`, found through a per-site
//! element index, so disconnected strings are never generated.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::Serialize;

use crate::dense::C64;
use crate::error::{Error, Result};
use crate::evolve::StringSum;
use crate::hamiltonian::{DerivedConstants, Hamiltonian};
use crate::lattice::Region;
use crate::pauli::{bits, PauliString};

pub const DEFAULT_ENUMERATION_BUDGET: usize = 10_000_000;
pub const DEFAULT_GRAPH_BUDGET: usize = 7;

/// Which `(Z₀, q₀)` may start a string.
#[derive(Clone, Debug, PartialEq)]
pub enum RootConstraint {
    Any,
    ContainsSite(usize),
    /// Explicit element indices into [`Hamiltonian::elements`].
    Elements(Vec<usize>),
}

impl RootConstraint {
    fn roots(&self, h: &Hamiltonian) -> Vec<usize> {
        let els = h.elements();
        match self {
            RootConstraint::Any => (0..els.len()).collect(),
            RootConstraint::ContainsSite(i) => (0..els.len())
                .filter(|&e| *i < 64 && els[e].support_mask >> i & 1 == 1)
                .collect(),
            RootConstraint::Elements(list) => {
                let mut v: Vec<usize> = list.iter().copied().filter(|&e| e < els.len()).collect();
                v.sort_unstable();
                v.dedup();
                v
            }
        }
    }
}

/// A string `w` with its coupling product and nested commutator.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StringW {
    /// Element indices, `Z₀` first.
    pub elements: Vec<usize>,
    /// `Z_j` as site masks.
    pub supports: Vec<u64>,
    #[serde(serialize_with = "serialize_strings")]
    pub strings: Vec<PauliString>,
    /// `J_w = Π_j J_{Z_j,q_j}`.
    pub coupling: f64,
    /// `Λ̄_w = Z₀ ∪ … ∪ Z_m`.
    pub union_mask: u64,
    /// `η_w P_{Λ_w,q_w}`, or `None` when the nested commutator vanishes.
    #[serde(serialize_with = "serialize_result")]
    pub result: Option<PauliString>,
}

fn serialize_strings<S: serde::Serializer>(v: &[PauliString], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|p| p.to_string()))
}

fn serialize_result<S: serde::Serializer>(v: &Option<PauliString>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(p) => s.serialize_some(&p.to_string()),
        None => s.serialize_none(),
    }
}

impl StringW {
    pub fn from_elements(h: &Hamiltonian, elements: &[usize]) -> Result<Self> {
        let els = h.elements();
        if elements.is_empty() {
            return Err(Error::InvalidArgument("a string needs at least Z0".into()));
        }
        let mut supports = Vec::with_capacity(elements.len());
        let mut strings = Vec::with_capacity(elements.len());
        let mut coupling = 1.0;
        for &e in elements {
            let el = els
                .get(e)
                .ok_or_else(|| Error::InvalidArgument(format!("element {e} out of range")))?;
            supports.push(el.support_mask);
            strings.push(el.string);
            coupling *= el.coefficient;
        }
        Ok(Self::assemble(elements.to_vec(), supports, strings, coupling))
    }

    /// A string built from bare Pauli strings with unit couplings; each
    /// `Z_j` is the support of its string.
    pub fn from_strings(strings: &[PauliString]) -> Result<Self> {
        if strings.is_empty() {
            return Err(Error::InvalidArgument("a string needs at least Z0".into()));
        }
        let supports = strings.iter().map(|p| p.support_mask()).collect();
        Ok(Self::assemble(
            (0..strings.len()).collect(),
            supports,
            strings.to_vec(),
            1.0,
        ))
    }

    fn assemble(elements: Vec<usize>, supports: Vec<u64>, strings: Vec<PauliString>, coupling: f64) -> Self {
        let union_mask = supports.iter().fold(0, |a, s| a | s);
        let result = nested_commutator(&strings);
        Self {
            elements,
            supports,
            strings,
            coupling,
            union_mask,
            result,
        }
    }

    /// `m`, one less than the number of elements.
    pub fn order(&self) -> usize {
        self.elements.len() - 1
    }

    /// The connectivity condition `Z_j ∩ (Z₀ ∪ … ∪ Z_{j−1}) ≠ ∅` for all `j`.
    pub fn is_connected(&self) -> bool {
        let mut seen = self.supports[0];
        for &z in &self.supports[1..] {
            if z & seen == 0 {
                return false;
            }
            seen |= z;
        }
        true
    }

    /// `Λ_w` as a mask, empty when the commutator vanishes.
    pub fn lambda_mask(&self) -> u64 {
        self.result.map_or(0, |p| p.support_mask())
    }
}

/// `ad_{P_m} ⋯ ad_{P_1}(P_0) / 2^m`, i.e. iterated half-commutators.
pub fn nested_commutator(strings: &[PauliString]) -> Option<PauliString> {
    let (first, rest) = strings.split_first()?;
    rest.iter().try_fold(*first, |acc, p| p.commutator(&acc))
}

/// Supports of every intermediate `ad_{P_p} ⋯ ad_{P_1}(P_0)`, `p = 0..=m`.
fn intermediate_supports(strings: &[PauliString]) -> Option<Vec<u64>> {
    let mut acc = *strings.first()?;
    let mut out = vec![acc.support_mask()];
    for p in &strings[1..] {
        acc = p.commutator(&acc)?;
        out.push(acc.support_mask());
    }
    Some(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct EnumerationSummary {
    pub visited: usize,
    pub complete: bool,
}

/// Per-site element index: `index[s]` lists the elements whose support
/// contains `s`, as a bitset over element indices.
struct SiteIndex {
    words: usize,
    by_site: Vec<Vec<u64>>,
}

impl SiteIndex {
    fn new(h: &Hamiltonian) -> Self {
        let n_el = h.elements().len();
        let words = n_el.div_ceil(64).max(1);
        let mut by_site = vec![vec![0u64; words]; h.n_sites()];
        for (e, el) in h.elements().iter().enumerate() {
            for s in bits(el.support_mask) {
                by_site[s][e / 64] |= 1 << (e % 64);
            }
        }
        Self { words, by_site }
    }

    fn candidates(&self, mask: u64, out: &mut [u64]) {
        out.iter_mut().for_each(|w| *w = 0);
        for s in bits(mask) {
            for (o, w) in out.iter_mut().zip(&self.by_site[s]) {
                *o |= w;
            }
        }
    }
}

struct Walker<'a, F> {
    h: &'a Hamiltonian,
    index: &'a SiteIndex,
    m: usize,
    counter: &'a AtomicUsize,
    budget: usize,
    exhausted: bool,
    current: StringW,
    partials: Vec<Option<PauliString>>,
    visit: F,
}

impl<F: FnMut(&StringW)> Walker<'_, F> {
    fn descend(&mut self, depth: usize) {
        if self.exhausted {
            return;
        }
        if depth == self.m {
            if self.counter.fetch_add(1, Ordering::Relaxed) >= self.budget {
                self.exhausted = true;
                return;
            }
            self.current.result = self.partials[depth];
            (self.visit)(&self.current);
            return;
        }
        let mut cand = vec![0u64; self.index.words];
        self.index.candidates(self.current.union_mask, &mut cand);
        let els = self.h.elements();
        for (w, &word) in cand.iter().enumerate() {
            let mut word = word;
            while word != 0 {
                let e = w * 64 + word.trailing_zeros() as usize;
                word &= word - 1;
                let el = &els[e];
                let saved_union = self.current.union_mask;
                let saved_coupling = self.current.coupling;
                self.current.elements.push(e);
                self.current.supports.push(el.support_mask);
                self.current.strings.push(el.string);
                self.current.coupling *= el.coefficient;
                self.current.union_mask |= el.support_mask;
                self.partials[depth + 1] = self.partials[depth].and_then(|acc| el.string.commutator(&acc));
                self.descend(depth + 1);
                self.current.elements.pop();
                self.current.supports.pop();
                self.current.strings.pop();
                self.current.coupling = saved_coupling;
                self.current.union_mask = saved_union;
                if self.exhausted {
                    return;
                }
            }
        }
    }
}

fn walk_root<F: FnMut(&StringW)>(
    h: &Hamiltonian,
    index: &SiteIndex,
    root: usize,
    m: usize,
    counter: &AtomicUsize,
    budget: usize,
    visit: F,
) -> bool {
    let el = &h.elements()[root];
    let mut walker = Walker {
        h,
        index,
        m,
        counter,
        budget,
        exhausted: false,
        current: StringW {
            elements: vec![root],
            supports: vec![el.support_mask],
            strings: vec![el.string],
            coupling: el.coefficient,
            union_mask: el.support_mask,
            result: Some(el.string),
        },
        partials: {
            let mut p = vec![None; m + 1];
            p[0] = Some(el.string);
            p
        },
        visit,
    };
    walker.descend(0);
    !walker.exhausted
}

/// Calls `visit` on every string of `Ω̃_m` whose root satisfies `root`,
/// in lexicographic order of element indices. Stops after `budget` strings.
pub fn for_each_connected_string<F: FnMut(&StringW)>(
    h: &Hamiltonian,
    m: usize,
    root: &RootConstraint,
    budget: usize,
    mut visit: F,
) -> EnumerationSummary {
    let index = SiteIndex::new(h);
    let counter = AtomicUsize::new(0);
    let mut complete = true;
    for r in root.roots(h) {
        if !walk_root(h, &index, r, m, &counter, budget, &mut visit) {
            complete = false;
            break;
        }
    }
    EnumerationSummary {
        visited: counter.load(Ordering::Relaxed).min(budget),
        complete,
    }
}

/// Collects [`for_each_connected_string`] into a vector.
pub fn enumerate_connected_strings(
    h: &Hamiltonian,
    m: usize,
    root: &RootConstraint,
    budget: usize,
) -> (Vec<StringW>, EnumerationSummary) {
    let mut out = Vec::new();
    let summary = for_each_connected_string(h, m, root, budget, |w| out.push(w.clone()));
    (out, summary)
}

/// Runs one accumulator per root in parallel and folds them in root order,
/// so the result does not depend on scheduling.
fn par_accumulate<A, F, G>(
    h: &Hamiltonian,
    m: usize,
    root: &RootConstraint,
    budget: usize,
    init: G,
    visit: F,
) -> (Vec<A>, EnumerationSummary)
where
    A: Send,
    G: Fn() -> A + Sync,
    F: Fn(&mut A, &StringW) + Sync,
{
    let index = SiteIndex::new(h);
    let counter = AtomicUsize::new(0);
    let parts: Vec<(A, bool)> = root
        .roots(h)
        .into_par_iter()
        .map(|r| {
            let mut acc = init();
            let done = walk_root(h, &index, r, m, &counter, budget, |w| visit(&mut acc, w));
            (acc, done)
        })
        .collect();
    let complete = parts.iter().all(|(_, d)| *d);
    let summary = EnumerationSummary {
        visited: counter.load(Ordering::Relaxed).min(budget),
        complete,
    };
    (parts.into_iter().map(|(a, _)| a).collect(), summary)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct S3Audit {
    pub m: usize,
    pub i: usize,
    pub i_prime: usize,
    pub distance: usize,
    /// `Σ_{w ∈ Ω̃_m, Λ̄_w ⊇ {i,i'}} |J_w|`; a lower bound when incomplete.
    pub lhs: f64,
    /// `m! (m+1)² g̃^{m+1} (d+1)^{−α}`.
    pub rhs: f64,
    pub complete: bool,
}

impl S3Audit {
    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }

    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }
}

fn factorial(m: usize) -> f64 {
    (1..=m).map(|k| k as f64).product()
}

pub fn lemma_s3_rhs(m: usize, distance: usize, consts: &DerivedConstants) -> f64 {
    factorial(m)
        * ((m + 1) as f64).powi(2)
        * consts.g_tilde.powi(m as i32 + 1)
        * (distance as f64 + 1.0).powf(-consts.alpha())
}

/// Both sides of the two-point string-sum bound for one site pair.
pub fn lemma_s3_audit(
    h: &Hamiltonian,
    i: usize,
    i_prime: usize,
    m: usize,
    consts: &DerivedConstants,
    budget: usize,
) -> Result<S3Audit> {
    h.lattice().check_site(i)?;
    h.lattice().check_site(i_prime)?;
    let need = 1u64 << i | 1u64 << i_prime;
    let mut lhs = 0.0;
    let summary = for_each_connected_string(h, m, &RootConstraint::Any, budget, |w| {
        if w.union_mask & need == need {
            lhs += w.coupling.abs();
        }
    });
    let distance = h.lattice().distance(i, i_prime);
    Ok(S3Audit {
        m,
        i,
        i_prime,
        distance,
        lhs,
        rhs: lemma_s3_rhs(m, distance, consts),
        complete: summary.complete,
    })
}

/// [`lemma_s3_audit`] for every pair `i ≤ i'` from a single enumeration.
pub fn lemma_s3_audit_all(
    h: &Hamiltonian,
    m: usize,
    consts: &DerivedConstants,
    budget: usize,
) -> (Vec<S3Audit>, EnumerationSummary) {
    let n = h.n_sites();
    let (parts, summary) = par_accumulate(
        h,
        m,
        &RootConstraint::Any,
        budget,
        || vec![0.0f64; n * n],
        |acc, w| {
            let c = w.coupling.abs();
            let sites: Vec<usize> = bits(w.union_mask).collect();
            for (a, &i) in sites.iter().enumerate() {
                for &j in &sites[a..] {
                    acc[i * n + j] += c;
                }
            }
        },
    );
    let mut total = vec![0.0f64; n * n];
    for part in parts {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            let distance = h.lattice().distance(i, j);
            out.push(S3Audit {
                m,
                i,
                i_prime: j,
                distance,
                lhs: total[i * n + j],
                rhs: lemma_s3_rhs(m, distance, consts),
                complete: summary.complete,
            });
        }
    }
    (out, summary)
}

/// A graph of `G_m`: vertex `j ≥ 1` has the single back-edge to `X_j < j`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ConnectionGraph {
    /// `X_1, …, X_m`.
    pub back_edges: Vec<usize>,
}

impl ConnectionGraph {
    pub fn vertices(&self) -> usize {
        self.back_edges.len() + 1
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.back_edges.iter().enumerate().map(|(j, &x)| (j + 1, x))
    }

    /// Whether `w ∈ Ω_G`: `Z_j ∩ Z_{X_j} ≠ ∅` for every `j`.
    pub fn admits(&self, w: &StringW) -> bool {
        w.supports.len() == self.vertices()
            && self.edges().all(|(j, x)| w.supports[j] & w.supports[x] != 0)
    }
}

/// All `m!` graphs of `G_m`, in lexicographic order of back-edges.
pub fn enumerate_graphs(m: usize, budget: usize) -> Result<Vec<ConnectionGraph>> {
    if m > budget {
        return Err(Error::GraphBudget { m, budget });
    }
    let mut out = Vec::new();
    let mut edges = Vec::with_capacity(m);
    fn rec(j: usize, m: usize, edges: &mut Vec<usize>, out: &mut Vec<ConnectionGraph>) {
        if j > m {
            out.push(ConnectionGraph {
                back_edges: edges.clone(),
            });
            return;
        }
        for x in 0..j {
            edges.push(x);
            rec(j + 1, m, edges, out);
            edges.pop();
        }
    }
    rec(1, m, &mut edges, &mut out);
    Ok(out)
}

/// A split of a string's positions into two parts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Decomposition {
    pub w1: Vec<usize>,
    pub w2: Vec<usize>,
}

/// Splits `w` into `w₁, w₂` by processing elements in order, starting from
/// `w₁ = ((Z₁))`, `w₂ = ((Z₀))`.
pub fn decompose_string(w: &StringW) -> Result<Decomposition> {
    let m = w.order();
    if m == 0 {
        return Err(Error::InvalidArgument("decomposition needs m >= 1".into()));
    }
    let lambdas = intermediate_supports(&w.strings).ok_or(Error::ZeroCommutator)?;
    let (mut w1, mut w2) = (vec![1], vec![0]);
    let (mut bar1, mut bar2) = (w.supports[1], w.supports[0]);
    for p in 1..m {
        let z = w.supports[p + 1];
        let next = lambdas[p + 1];
        let to_w1 = if z & bar1 == 0 {
            false
        } else if z & bar2 == 0 {
            true
        } else {
            // w₁ takes the element only when Λ̄_{w₁} misses Λ_{w(p+1)}.
            bar1 & next == 0
        };
        if to_w1 {
            w1.push(p + 1);
            bar1 |= z;
        } else {
            w2.push(p + 1);
            bar2 |= z;
        }
    }
    Ok(Decomposition { w1, w2 })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DecompositionCheck {
    /// The parts partition the positions of `w`.
    pub partition: bool,
    /// Every element of each part reaches `Z₀` through that part's supports.
    pub property1: bool,
    /// `Λ̄_{w₁} ∩ Λ_w ≠ ∅` and `Λ̄_{w₂} ∩ Λ_w ≠ ∅`.
    pub property2: bool,
}

impl DecompositionCheck {
    pub fn holds(&self) -> bool {
        self.partition && self.property1 && self.property2
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, a: usize) -> usize {
        let mut r = a;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut c = a;
        while self.0[c] != r {
            let next = self.0[c];
            self.0[c] = r;
            c = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra] = rb;
        }
    }
}

fn part_reaches_root(w: &StringW, part: &[usize]) -> bool {
    // Node 0 is the anchor Z₀; node k+1 is part[k].
    let mut supports = vec![w.supports[0]];
    supports.extend(part.iter().map(|&p| w.supports[p]));
    let mut uf = UnionFind::new(supports.len());
    for a in 0..supports.len() {
        for b in a + 1..supports.len() {
            if supports[a] & supports[b] != 0 {
                uf.union(a, b);
            }
        }
    }
    let root = uf.find(0);
    (1..supports.len()).all(|k| uf.find(k) == root)
}

pub fn check_decomposition(w: &StringW, d: &Decomposition) -> DecompositionCheck {
    let mut seen = vec![0u8; w.elements.len()];
    for &p in d.w1.iter().chain(&d.w2) {
        if let Some(s) = seen.get_mut(p) {
            *s += 1;
        }
    }
    let in_range = d.w1.iter().chain(&d.w2).all(|&p| p < seen.len());
    let partition = in_range && seen.iter().all(|&c| c == 1);
    let property1 = in_range && part_reaches_root(w, &d.w1) && part_reaches_root(w, &d.w2);
    let lambda = w.lambda_mask();
    let bar = |part: &[usize]| {
        part.iter()
            .filter_map(|&p| w.supports.get(p))
            .fold(0u64, |a, s| a | s)
    };
    let property2 = lambda != 0 && bar(&d.w1) & lambda != 0 && bar(&d.w2) & lambda != 0;
    DecompositionCheck {
        partition,
        property1,
        property2,
    }
}

/// Elements of `S_{≤l}`: those whose support meets `(∂X)_s` for some `s ≤ l`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RootSet {
    pub elements: Vec<usize>,
    /// Members whose support misses `X` entirely.
    pub outside_region: Vec<usize>,
}

impl RootSet {
    pub fn constraint(&self) -> RootConstraint {
        RootConstraint::Elements(self.elements.clone())
    }
}

pub fn s_le_l(h: &Hamiltonian, x: &Region, l: i64) -> Result<RootSet> {
    let lattice = h.lattice();
    let mut mask = 0u64;
    for (s, _) in lattice.shell_table(x)? {
        if s <= l {
            for &site in lattice.shell(x, s)?.sites() {
                mask |= 1 << site;
            }
        }
    }
    let x_mask = x.sites().iter().fold(0u64, |a, &s| a | 1 << s);
    let mut out = RootSet {
        elements: Vec::new(),
        outside_region: Vec::new(),
    };
    for (e, el) in h.elements().iter().enumerate() {
        if el.support_mask & mask != 0 {
            out.elements.push(e);
            if el.support_mask & x_mask == 0 {
                out.outside_region.push(e);
            }
        }
    }
    Ok(out)
}

/// `Σ_{Z₀ ∈ root} J_{Z₀,q₀} P_{Z₀,q₀}`, the operator whose series the
/// rooted strings expand.
pub fn root_seed(h: &Hamiltonian, root: &RootConstraint) -> StringSum {
    let mut seed = StringSum::new(h.n_sites());
    for e in root.roots(h) {
        let el = &h.elements()[e];
        seed.add_string(&el.string, C64::new(el.coefficient, 0.0));
    }
    seed.prune(0.0);
    seed
}

/// `Σ_{w ∈ Ω̃_m, root} J_w η_w P_{Λ_w,q_w}`, which is the order-`m`
/// half-commutator layer of [`root_seed`].
pub fn cluster_layer(
    h: &Hamiltonian,
    m: usize,
    root: &RootConstraint,
    budget: usize,
) -> (StringSum, EnumerationSummary) {
    let n = h.n_sites();
    let (parts, summary) = par_accumulate(
        h,
        m,
        root,
        budget,
        BTreeMap::new,
        |acc: &mut BTreeMap<_, C64>, w| {
            if let Some(p) = w.result {
                *acc.entry(p.key()).or_insert(C64::new(0.0, 0.0)) += p.phase().value() * w.coupling;
            }
        },
    );
    let mut out = StringSum::new(n);
    for part in parts {
        for (key, c) in part {
            out.add_string(&key.string(), c);
        }
    }
    out.prune(0.0);
    out.order = m;
    (out, summary)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LayerComparison {
    pub m: usize,
    pub cluster_strings: usize,
    pub series_strings: usize,
    /// `max_P |c_cluster(P) − c_series(P)|`.
    pub max_abs_diff: f64,
    /// Largest coefficient magnitude in either layer.
    pub scale: f64,
    pub complete: bool,
}

/// Compares [`cluster_layer`] with the series layers seeded by
/// [`root_seed`] for orders `0..=max_m`.
pub fn series_consistency(
    h: &Hamiltonian,
    root: &RootConstraint,
    max_m: usize,
    budget: usize,
) -> Result<Vec<LayerComparison>> {
    let seed = root_seed(h, root);
    let series = crate::evolve::SeriesExpansion::new(h, &seed, max_m, crate::evolve::DEFAULT_STRING_BUDGET)?;
    let mut out = Vec::with_capacity(max_m + 1);
    for m in 0..=max_m {
        let (cl, summary) = cluster_layer(h, m, root, budget);
        let se = series.layer(m);
        let mut keys: Vec<_> = cl.iter().map(|(k, _)| *k).collect();
        keys.extend(se.iter().map(|(k, _)| *k));
        keys.sort_unstable();
        keys.dedup();
        let mut max_abs_diff: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for k in &keys {
            let (a, b) = (cl.coefficient(k), se.coefficient(k));
            max_abs_diff = max_abs_diff.max((a - b).norm());
            scale = scale.max(a.norm()).max(b.norm());
        }
        out.push(LayerComparison {
            m,
            cluster_strings: cl.len(),
            series_strings: se.len(),
            max_abs_diff,
            scale,
            complete: summary.complete,
        });
    }
    Ok(out)
}
