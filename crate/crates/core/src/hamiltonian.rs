//! Power-law spin Hamiltonians `H = Σ_Z h_Z`, the coupling certificate
//! behind the bounds, and the derived constants `J, g, g̃, C₀, C₁, C₂, c₂, τ*`.

use std::collections::BTreeMap;
use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::dense::{ensure_dense, DenseOperator, C64};
use crate::error::{Error, Result};
use crate::lattice::{GeometricConstants, Lattice, Region};
use crate::pauli::{bits, Letter, PauliKey, PauliString, Phase, MAX_PAULI_SITES};

/// Largest interaction support accepted in a model.
pub const MAX_BODY: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// `J/d^α XX + B Z + h X`
    Ising,
    /// `J/d^α (XX + YY) + B Z + h X`
    Xy,
    /// `J/d^α (XX + YY + ZZ) + B Z + h X`
    Heisenberg,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitTerm {
    /// Pauli string in the textual format, e.g. `"X0 Z1"`.
    pub string: String,
    pub coefficient: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default)]
    pub preset: Option<Preset>,
    #[serde(default)]
    pub coupling: f64,
    pub alpha: f64,
    /// Coefficient `B` of `Z_i` on every site.
    #[serde(default)]
    pub transverse_field: f64,
    /// Coefficient `h` of `X_i` on every site.
    #[serde(default)]
    pub longitudinal_field: f64,
    #[serde(default)]
    pub terms: Vec<ExplicitTerm>,
}

impl ModelSpec {
    pub fn ising(coupling: f64, alpha: f64, transverse_field: f64) -> Self {
        Self {
            preset: Some(Preset::Ising),
            coupling,
            alpha,
            transverse_field,
            longitudinal_field: 0.0,
            terms: Vec::new(),
        }
    }

    pub fn explicit(alpha: f64, terms: &[(&str, f64)]) -> Self {
        Self {
            preset: None,
            coupling: 0.0,
            alpha,
            transverse_field: 0.0,
            longitudinal_field: 0.0,
            terms: terms
                .iter()
                .map(|(s, c)| ExplicitTerm {
                    string: s.to_string(),
                    coefficient: *c,
                })
                .collect(),
        }
    }
}

/// `h_Z = Σ_q J_{Z,q} P_{Z,q}`, every string supported on all of `Z`.
#[derive(Clone, Debug, PartialEq)]
pub struct InteractionTerm {
    pub support: Region,
    pub support_mask: u64,
    pub strings: Vec<(PauliString, f64)>,
    /// `‖h_Z‖`, exact from the spectrum on `|Z|` sites.
    pub operator_norm: f64,
    /// Normalized Frobenius norm `sqrt(Σ_q J²)`.
    pub frobenius_norm: f64,
}

/// One `(Z, q)` pair with its coefficient, the unit the cluster expansion
/// strings together.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TermElement {
    pub term: usize,
    pub support_mask: u64,
    pub string: PauliString,
    pub coefficient: f64,
}

#[derive(Clone, Debug)]
pub struct Hamiltonian {
    lattice: Lattice,
    terms: Vec<InteractionTerm>,
    elements: Vec<TermElement>,
    k: usize,
    alpha: f64,
    warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssumptionCertificate {
    pub alpha: f64,
    /// `max_{i≠i'} (d+1)^α Σ_{Z⊃{i,i'}} ‖h_Z‖`.
    pub j0_min: f64,
    /// Pair `(i, i', d)` attaining `j0_min`.
    pub saturating_pair: Option<(usize, usize, usize)>,
    /// `max_i Σ_{Z∋i} ‖h_Z‖`, the `d = 0` instance of the same condition.
    pub j0_diagonal: f64,
    pub diagonal_site: Option<usize>,
    /// `max(j0_min, j0_diagonal)`; the value fed into the constants.
    pub j0: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConstantInputs {
    pub j0: f64,
    pub k: usize,
    pub g: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub dimension: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DerivedConstants {
    pub inputs: ConstantInputs,
    /// `J = 3^{k/2} J₀`
    pub j: f64,
    pub g: f64,
    /// `g̃ = max(gk, λJ)`
    pub g_tilde: f64,
    /// `C₀ = 2^{α−D/2+2} J₀γ/(2α−D−1) + 80 g̃γ 2^{α−D/2}/(α−D) · sqrt(2α−2D+γ)`
    pub big_c0: f64,
    /// `C₁ = 2^{α−D/2+1} J₀γ/(2α−D−1)`
    pub big_c1: f64,
    /// `C₂ = 40 g̃γ 2^{α−D/2}/(α−D) · sqrt(2α−2D+γ)`
    pub big_c2: f64,
    /// `c₂ = 2^α (2 + γ/(α−D))`
    pub small_c2: f64,
    /// `τ* = 1/(2e g̃)`; infinite for the zero Hamiltonian.
    pub tau_star: f64,
}

impl DerivedConstants {
    /// Evaluates every constant from its defining formula.
    pub fn evaluate(inputs: ConstantInputs) -> Result<Self> {
        let ConstantInputs {
            j0,
            k,
            g,
            gamma,
            lambda,
            alpha,
            dimension,
        } = inputs;
        let d = dimension as f64;
        if !(alpha > d) || !alpha.is_finite() {
            return Err(Error::InvalidDecayExponent { alpha, dimension });
        }
        let j = 3f64.powf(k as f64 / 2.0) * j0;
        let g_tilde = (g * k as f64).max(lambda * j);
        let big_c1 = 2f64.powf(alpha - d / 2.0 + 1.0) * j0 * gamma / (2.0 * alpha - d - 1.0);
        let big_c2 = 40.0 * g_tilde * gamma * 2f64.powf(alpha - d / 2.0) / (alpha - d)
            * (2.0 * alpha - 2.0 * d + gamma).sqrt();
        let big_c0 = 2f64.powf(alpha - d / 2.0 + 2.0) * j0 * gamma / (2.0 * alpha - d - 1.0)
            + 80.0 * g_tilde * gamma * 2f64.powf(alpha - d / 2.0) / (alpha - d)
                * (2.0 * alpha - 2.0 * d + gamma).sqrt();
        let small_c2 = 2f64.powf(alpha) * (2.0 + gamma / (alpha - d));
        let tau_star = if g_tilde > 0.0 {
            1.0 / (2.0 * E * g_tilde)
        } else {
            f64::INFINITY
        };
        Ok(Self {
            inputs,
            j,
            g,
            g_tilde,
            big_c0,
            big_c1,
            big_c2,
            small_c2,
            tau_star,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.inputs.alpha
    }

    pub fn dimension(&self) -> usize {
        self.inputs.dimension
    }

    pub fn gamma(&self) -> f64 {
        self.inputs.gamma
    }

    /// Copy with `C₀` multiplied by `factor`, for sensitivity runs.
    pub fn with_scaled_c0(mut self, factor: f64) -> Self {
        self.big_c0 *= factor;
        self
    }
}

impl Hamiltonian {
    pub fn build(spec: &ModelSpec, lattice: &Lattice) -> Result<Self> {
        let n = lattice.n_sites();
        if n > MAX_PAULI_SITES {
            return Err(Error::InvalidArgument(format!(
                "Hamiltonians support at most {MAX_PAULI_SITES} sites, lattice has {n}"
            )));
        }
        if !spec.alpha.is_finite() || spec.alpha <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "alpha must be positive and finite, got {}",
                spec.alpha
            )));
        }
        let mut warnings = Vec::new();
        if spec.alpha <= lattice.dimension() as f64 {
            warnings.push(format!(
                "alpha = {} does not exceed D = {}; bound checks are unavailable",
                spec.alpha,
                lattice.dimension()
            ));
        }

        let mut acc: BTreeMap<u64, BTreeMap<PauliKey, f64>> = BTreeMap::new();
        let mut push = |p: PauliString, c: f64| {
            *acc.entry(p.support_mask())
                .or_default()
                .entry(p.key())
                .or_insert(0.0) += c;
        };

        if let Some(preset) = spec.preset {
            let letters: &[Letter] = match preset {
                Preset::Ising => &[Letter::X],
                Preset::Xy => &[Letter::X, Letter::Y],
                Preset::Heisenberg => &[Letter::X, Letter::Y, Letter::Z],
            };
            for i in 0..n {
                for ip in i + 1..n {
                    let d = lattice.distance(i, ip) as f64;
                    let c = spec.coupling / d.powf(spec.alpha);
                    for &l in letters {
                        push(PauliString::from_letters([(i, l), (ip, l)])?, c);
                    }
                }
            }
        }
        for i in 0..n {
            push(PauliString::single(i, Letter::Z)?, spec.transverse_field);
            push(PauliString::single(i, Letter::X)?, spec.longitudinal_field);
        }
        for term in &spec.terms {
            let p: PauliString = term.string.parse()?;
            if let Some(s) = p.max_site() {
                lattice.check_site(s)?;
            }
            if p.is_identity() {
                warnings.push(format!("identity term {:?} dropped", term.string));
                continue;
            }
            let sign = match p.phase() {
                Phase::ONE => 1.0,
                Phase::MINUS_ONE => -1.0,
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "term {:?} has an imaginary phase and is not Hermitian",
                        term.string
                    )))
                }
            };
            push(p.with_phase(Phase::ONE), sign * term.coefficient);
        }

        let mut terms = Vec::new();
        for (mask, strings) in acc {
            let strings: Vec<(PauliString, f64)> = strings
                .into_iter()
                .filter(|(_, c)| *c != 0.0)
                .map(|(key, c)| (key.string(), c))
                .collect();
            if strings.is_empty() {
                continue;
            }
            let support = lattice.region(bits(mask))?;
            if support.len() > MAX_BODY {
                return Err(Error::InvalidArgument(format!(
                    "term on {} sites exceeds the {MAX_BODY}-body limit",
                    support.len()
                )));
            }
            let operator_norm = local_operator_norm(mask, &strings)?;
            let frobenius_norm = strings.iter().map(|(_, c)| c * c).sum::<f64>().sqrt();
            terms.push(InteractionTerm {
                support,
                support_mask: mask,
                strings,
                operator_norm,
                frobenius_norm,
            });
        }

        let explicit_k = spec
            .terms
            .iter()
            .filter_map(|t| t.string.parse::<PauliString>().ok())
            .map(|p| p.weight())
            .max()
            .unwrap_or(0);
        let preset_k = if spec.preset.is_some() && n > 1 { 2 } else { 0 };
        let k = explicit_k
            .max(preset_k)
            .max(terms.iter().map(|t| t.support.len()).max().unwrap_or(0))
            .max(1);

        let elements = terms
            .iter()
            .enumerate()
            .flat_map(|(t, term)| {
                term.strings.iter().map(move |&(string, coefficient)| TermElement {
                    term: t,
                    support_mask: term.support_mask,
                    string,
                    coefficient,
                })
            })
            .collect();

        Ok(Self {
            lattice: lattice.clone(),
            terms,
            elements,
            k,
            alpha: spec.alpha,
            warnings,
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn n_sites(&self) -> usize {
        self.lattice.n_sites()
    }

    pub fn terms(&self) -> &[InteractionTerm] {
        &self.terms
    }

    /// Every `(Z, q)` pair in term order.
    pub fn elements(&self) -> &[TermElement] {
        &self.elements
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Fails when `α ≤ D`, the regime in which no bound applies.
    pub fn require_bound_mode(&self) -> Result<()> {
        self.lattice.check_alpha(self.alpha)
    }

    pub fn to_dense(&self, cutoff: usize) -> Result<DenseOperator> {
        let n = self.n_sites();
        ensure_dense(n, cutoff)?;
        let mut out = DenseOperator::zeros(n);
        for b in 0..1usize << n {
            for el in &self.elements {
                let (row, amp) = el.string.apply_basis(b);
                let cur = out.get(row, b);
                out.set(row, b, cur + amp * el.coefficient);
            }
        }
        Ok(out)
    }

    /// `H·v` through the Pauli decomposition, without a dense matrix.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); v.len()];
        for el in &self.elements {
            for (b, amp) in v.iter().enumerate() {
                let (b2, phase) = el.string.apply_basis(b);
                out[b2] += phase * amp * el.coefficient;
            }
        }
        out
    }

    pub fn certify_assumption(&self) -> AssumptionCertificate {
        let n = self.n_sites();
        let mut pair = vec![0.0f64; n * n];
        let mut diag = vec![0.0f64; n];
        for term in &self.terms {
            let sites = term.support.sites();
            for (a, &i) in sites.iter().enumerate() {
                diag[i] += term.operator_norm;
                for &ip in &sites[a + 1..] {
                    pair[i * n + ip] += term.operator_norm;
                }
            }
        }
        let mut cert = AssumptionCertificate {
            alpha: self.alpha,
            j0_min: 0.0,
            saturating_pair: None,
            j0_diagonal: 0.0,
            diagonal_site: None,
            j0: 0.0,
        };
        for i in 0..n {
            if diag[i] > cert.j0_diagonal {
                cert.j0_diagonal = diag[i];
                cert.diagonal_site = Some(i);
            }
            for ip in i + 1..n {
                let s = pair[i * n + ip];
                if s == 0.0 {
                    continue;
                }
                let d = self.lattice.distance(i, ip);
                let value = s * ((d + 1) as f64).powf(self.alpha);
                if value > cert.j0_min {
                    cert.j0_min = value;
                    cert.saturating_pair = Some((i, ip, d));
                }
            }
        }
        cert.j0 = cert.j0_min.max(cert.j0_diagonal);
        cert
    }

    /// `g = max_i Σ_{(Z,q): Z∋i} |J_{Z,q}|`.
    pub fn one_site_energy(&self) -> f64 {
        let mut per_site = vec![0.0f64; self.n_sites()];
        for el in &self.elements {
            for s in bits(el.support_mask) {
                per_site[s] += el.coefficient.abs();
            }
        }
        per_site.into_iter().fold(0.0, f64::max)
    }

    pub fn derived_constants(&self, geo: &GeometricConstants) -> Result<DerivedConstants> {
        self.require_bound_mode()?;
        if geo.alpha != self.alpha {
            return Err(Error::InvalidArgument(format!(
                "lambda was certified for alpha = {}, model has alpha = {}",
                geo.alpha, self.alpha
            )));
        }
        let cert = self.certify_assumption();
        DerivedConstants::evaluate(ConstantInputs {
            j0: cert.j0,
            k: self.k,
            g: self.one_site_energy(),
            gamma: geo.gamma,
            lambda: geo.lambda,
            alpha: self.alpha,
            dimension: self.lattice.dimension(),
        })
    }
}

/// Operator norm of `Σ_q J_q P_q` restricted to the sites of `mask`.
fn local_operator_norm(mask: u64, strings: &[(PauliString, f64)]) -> Result<f64> {
    let sites: Vec<usize> = bits(mask).collect();
    let relabel = |p: &PauliString| {
        PauliString::from_letters(p.letters().map(|(s, l)| {
            let local = sites.iter().position(|&x| x == s).expect("string inside support");
            (local, l)
        }))
    };
    let m = sites.len();
    let mut h = DenseOperator::zeros(m);
    for (p, c) in strings {
        h.axpy(C64::new(*c, 0.0), &relabel(p)?.to_dense_within(m, MAX_BODY)?);
    }
    let spectrum = h.eigvalsh()?;
    Ok(spectrum.into_iter().map(f64::abs).fold(0.0, f64::max))
}
