//! Right-hand sides of the light-cone bounds as explicit functions of
//! `(r, t, α, D)` and the certified constants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::DerivedConstants;
use crate::lattice::{Lattice, Region};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundFlag {
    /// `t/Δt` is not an integer.
    NonIntegerSteps,
    /// `r` is odd; the `⌈r/2⌉` shell was used.
    OddRadius,
    /// `α < D + 1`, so `(α−D−1)²` no longer tracks the decay.
    DegenerateDenominator,
    /// `α ≤ 2D`: the operator-norm cone does not close.
    OutsideValidity,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundEval {
    pub value: f64,
    pub flags: Vec<BoundFlag>,
}

impl BoundEval {
    fn plain(value: f64) -> Self {
        Self {
            value,
            flags: Vec::new(),
        }
    }
}

/// Unspecified O(1) constants of the short-step operator-norm bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HkConstants {
    pub c1: f64,
    pub c2: f64,
    /// Whether the user vouches for the values; otherwise the operator-norm
    /// checks are shape checks only.
    #[serde(default)]
    pub certified: bool,
}

impl Default for HkConstants {
    fn default() -> Self {
        Self {
            c1: 1.0,
            c2: 1.0,
            certified: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Theorem1,
    TheoremS2,
    CorollaryS1,
    OpnormEq12,
    HkShortStep,
    TheoremS3ShortTime,
    OtocEq7,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundSpec {
    pub kind: BoundKind,
    pub dt: f64,
    pub constants: DerivedConstants,
    pub hk: HkConstants,
}

impl BoundSpec {
    pub fn new(kind: BoundKind, constants: DerivedConstants, dt: f64) -> Self {
        Self {
            kind,
            dt,
            constants,
            hk: HkConstants::default(),
        }
    }

    pub fn alpha(&self) -> f64 {
        self.constants.alpha()
    }

    pub fn dimension(&self) -> usize {
        self.constants.dimension()
    }

    /// `(name, "certified" | "configured")` for every constant the bound uses.
    pub fn provenance(&self) -> Vec<(&'static str, &'static str)> {
        let mut out = vec![("C0", "certified"), ("gamma", "certified"), ("tau_star", "certified")];
        if matches!(self.kind, BoundKind::OpnormEq12 | BoundKind::HkShortStep) {
            let tag = if self.hk.certified { "certified" } else { "configured" };
            out.push(("c1", tag));
            out.push(("c2", tag));
        }
        out
    }
}

fn check_regime(alpha: f64, dimension: usize) -> Result<()> {
    if !(alpha > dimension as f64) || !alpha.is_finite() {
        return Err(Error::InvalidDecayExponent { alpha, dimension });
    }
    Ok(())
}

fn check_dt(dt: f64, consts: &DerivedConstants) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    if dt > consts.tau_star * (1.0 + 1e-12) {
        return Err(Error::ThresholdViolation {
            dt,
            tau_star: consts.tau_star,
        });
    }
    Ok(())
}

fn step_flags(t: f64, dt: f64) -> Vec<BoundFlag> {
    let q = t.abs() / dt;
    if (q - q.round()).abs() > 1e-9 * q.max(1.0) {
        vec![BoundFlag::NonIntegerSteps]
    } else {
        Vec::new()
    }
}

/// `ζ = (2α − 2D)/(2α − D + 1)`.
pub fn zeta(alpha: f64, dimension: usize) -> Result<f64> {
    check_regime(alpha, dimension)?;
    let d = dimension as f64;
    Ok((2.0 * alpha - 2.0 * d) / (2.0 * alpha - d + 1.0))
}

/// `2^{D−1} C₀ Δt^{−α+(D+1)/2} t^{α−(D−1)/2} R^{−α+D}`.
pub fn theorem1_rhs(r: usize, t: f64, consts: &DerivedConstants, dt: f64) -> Result<BoundEval> {
    let (alpha, dim) = (consts.alpha(), consts.dimension());
    check_regime(alpha, dim)?;
    check_dt(dt, consts)?;
    if t == 0.0 {
        return Ok(BoundEval::plain(0.0));
    }
    let d = dim as f64;
    let value = 2f64.powf(d - 1.0)
        * consts.big_c0
        * dt.powf(-alpha + (d + 1.0) / 2.0)
        * t.abs().powf(alpha - (d - 1.0) / 2.0)
        * (r as f64).powf(-alpha + d);
    Ok(BoundEval {
        value,
        flags: step_flags(t, dt),
    })
}

/// `2^{D−1} C₀ Δt^{−α+(D+1)/2} t^{α−(D−1)/2} (R+R₀)^{(D−1)/2} R^{−α+(D+1)/2}`.
pub fn corollary_rhs(r: usize, r0: usize, t: f64, consts: &DerivedConstants, dt: f64) -> Result<BoundEval> {
    let (alpha, dim) = (consts.alpha(), consts.dimension());
    check_regime(alpha, dim)?;
    check_dt(dt, consts)?;
    if t == 0.0 {
        return Ok(BoundEval::plain(0.0));
    }
    let d = dim as f64;
    let value = 2f64.powf(d - 1.0)
        * consts.big_c0
        * dt.powf(-alpha + (d + 1.0) / 2.0)
        * t.abs().powf(alpha - (d - 1.0) / 2.0)
        * ((r + r0) as f64).powf((d - 1.0) / 2.0)
        * (r as f64).powf(-alpha + (d + 1.0) / 2.0);
    Ok(BoundEval {
        value,
        flags: step_flags(t, dt),
    })
}

/// The one-dimensional display form `γ C₀ Δt^{−α+1} t^α R^{−α+1}`.
pub fn corollary_rhs_d1_display(r: usize, t: f64, consts: &DerivedConstants, dt: f64) -> Result<BoundEval> {
    let alpha = consts.alpha();
    if consts.dimension() != 1 {
        return Err(Error::InvalidArgument("the display form is one-dimensional".into()));
    }
    check_regime(alpha, 1)?;
    check_dt(dt, consts)?;
    if t == 0.0 {
        return Ok(BoundEval::plain(0.0));
    }
    let value = consts.gamma()
        * consts.big_c0
        * dt.powf(-alpha + 1.0)
        * t.abs().powf(alpha)
        * (r as f64).powf(-alpha + 1.0);
    Ok(BoundEval {
        value,
        flags: step_flags(t, dt),
    })
}

/// `4 · theorem1_rhs(R − 1, t)²`.
pub fn otoc_rhs(big_r: usize, t: f64, consts: &DerivedConstants, dt: f64) -> Result<BoundEval> {
    if big_r == 0 {
        return Err(Error::InvalidArgument("OTOC bound needs R >= 1".into()));
    }
    let inner = theorem1_rhs(big_r - 1, t, consts, dt)?;
    Ok(BoundEval {
        value: 4.0 * inner.value * inner.value,
        flags: inner.flags,
    })
}

fn hk_denominator(alpha: f64, dimension: usize) -> Result<(f64, Vec<BoundFlag>)> {
    check_regime(alpha, dimension)?;
    let gap = alpha - dimension as f64 - 1.0;
    if gap == 0.0 {
        return Err(Error::InvalidArgument(format!(
            "alpha = D + 1 = {alpha} makes (alpha - D - 1)^2 vanish"
        )));
    }
    let flags = if gap < 0.0 {
        vec![BoundFlag::DegenerateDenominator]
    } else {
        Vec::new()
    };
    Ok((gap * gap, flags))
}

/// `2c₁γ² e^{c₂Δt} Δt^{−α+D} / (α−D−1)² · R^{2D−α} t^{α−D}`, flagged
/// outside its validity range `α > 2D`.
pub fn opnorm_bound_rhs(
    r: usize,
    t: f64,
    alpha: f64,
    dimension: usize,
    hk: &HkConstants,
    gamma: f64,
    dt: f64,
) -> Result<BoundEval> {
    let (den, mut flags) = hk_denominator(alpha, dimension)?;
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    let d = dimension as f64;
    if alpha <= 2.0 * d {
        flags.push(BoundFlag::OutsideValidity);
    }
    let value = if t == 0.0 {
        0.0
    } else {
        2.0 * hk.c1 * gamma * gamma * (hk.c2 * dt).exp() * dt.powf(-alpha + d) / den
            * (r as f64).powf(2.0 * d - alpha)
            * t.abs().powf(alpha - d)
    };
    Ok(BoundEval { value, flags })
}

impl BoundEval {
    /// False when the bound is evaluated outside the regime where it holds.
    pub fn valid(&self) -> bool {
        !self.flags.contains(&BoundFlag::OutsideValidity)
    }
}

/// `2c₁γ/(α−D−1)² · |∂X_m| · e^{c₂Δt} · Δr^{−α+D+1}`.
#[allow(clippy::too_many_arguments)]
pub fn hk_short_step_rhs(
    lattice: &Lattice,
    region: &Region,
    dr: usize,
    dt: f64,
    alpha: f64,
    hk: &HkConstants,
    gamma: f64,
) -> Result<BoundEval> {
    let boundary = lattice.surface(region)?.len();
    hk_short_step_from_size(boundary, dr, dt, alpha, lattice.dimension(), hk, gamma)
}

pub fn hk_short_step_from_size(
    boundary_size: usize,
    dr: usize,
    dt: f64,
    alpha: f64,
    dimension: usize,
    hk: &HkConstants,
    gamma: f64,
) -> Result<BoundEval> {
    let (den, flags) = hk_denominator(alpha, dimension)?;
    if dr == 0 {
        return Err(Error::InvalidArgument("the step radius must be at least 1".into()));
    }
    let d = dimension as f64;
    let value = 2.0 * hk.c1 * gamma / den
        * boundary_size as f64
        * (hk.c2 * dt).exp()
        * (dr as f64).powf(-alpha + d + 1.0);
    Ok(BoundEval { value, flags })
}

/// `C₀ |t| sqrt(γ^{−1} |(∂X)_{r/2}| r^{−2α+D+1})`, valid for `|t| ≤ τ*`.
pub fn theorem_s3_rhs(
    lattice: &Lattice,
    x: &Region,
    r: usize,
    t: f64,
    consts: &DerivedConstants,
) -> Result<BoundEval> {
    let (alpha, dim) = (consts.alpha(), consts.dimension());
    check_regime(alpha, dim)?;
    if t.abs() > consts.tau_star * (1.0 + 1e-12) {
        return Err(Error::ThresholdViolation {
            dt: t.abs(),
            tau_star: consts.tau_star,
        });
    }
    if r == 0 {
        return Err(Error::InvalidArgument("the radius must be at least 1".into()));
    }
    let mut flags = Vec::new();
    if r % 2 == 1 {
        flags.push(BoundFlag::OddRadius);
    }
    let shell = lattice.shell(x, r.div_ceil(2) as i64)?.len() as f64;
    let d = dim as f64;
    let value = consts.big_c0
        * t.abs()
        * (shell / consts.gamma() * (r as f64).powf(-2.0 * alpha + d + 1.0)).sqrt();
    Ok(BoundEval { value, flags })
}

/// `n^{ζ/D}`, the scrambling-time scaling with unit prefactor.
pub fn scrambling_time(n: usize, alpha: f64, dimension: usize) -> Result<f64> {
    Ok((n as f64).powf(zeta(alpha, dimension)? / dimension as f64))
}
