//! Wavefront extraction from OTOC tables and power-law fits `t* ∝ R^ζ`.

use serde::{Deserialize, Serialize};

use crate::bounds::{otoc_rhs, zeta, BoundKind, BoundSpec};
use crate::error::{Error, Result};
use crate::hamiltonian::DerivedConstants;

pub const DEFAULT_DELTA: f64 = 0.1;
pub const DELTA_SWEEP: [f64; 3] = [0.01, 0.1, 1.0];

/// `C(R, t)` sampled on a rectangular grid; `values[k][j]` is at
/// `(radii[k], times[j])`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OtocGrid {
    pub radii: Vec<usize>,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl OtocGrid {
    pub fn new(radii: Vec<usize>, times: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if radii.is_empty() || times.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if values.len() != radii.len() || values.iter().any(|row| row.len() != times.len()) {
            return Err(Error::InvalidArgument("grid values do not match its axes".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("grid times must be strictly increasing".into()));
        }
        Ok(Self { radii, times, values })
    }

    /// Builds a grid from `(R, t, C)` rows in any order; every `(R, t)` pair
    /// must appear exactly once.
    pub fn from_rows(rows: &[(usize, f64, f64)]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyGrid);
        }
        let mut radii: Vec<usize> = rows.iter().map(|r| r.0).collect();
        radii.sort_unstable();
        radii.dedup();
        let mut times: Vec<f64> = rows.iter().map(|r| r.1).collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        let mut values = vec![vec![f64::NAN; times.len()]; radii.len()];
        for &(r, t, c) in rows {
            let k = radii.binary_search(&r).expect("radius collected above");
            let j = times
                .binary_search_by(|x| x.total_cmp(&t))
                .expect("time collected above");
            if !values[k][j].is_nan() {
                return Err(Error::InvalidArgument(format!("duplicate grid point R={r}, t={t}")));
            }
            values[k][j] = c;
        }
        if values.iter().flatten().any(|v| v.is_nan()) {
            return Err(Error::InvalidArgument("grid has missing (R, t) points".into()));
        }
        Self::new(radii, times, values)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Front {
    pub delta: f64,
    /// `(R, t*(R))` for every radius that crosses `δ`.
    pub points: Vec<(usize, f64)>,
    /// Radii whose OTOC never reaches `δ` on the grid.
    pub non_crossing: Vec<usize>,
    /// `t*(R)` decreases somewhere along increasing `R`.
    pub non_monotone: bool,
}

/// Earliest time with `C(R,t) ≥ δ`, linearly interpolated between the
/// bracketing samples.
pub fn front_extract(grid: &OtocGrid, delta: f64) -> Result<Front> {
    if grid.radii.is_empty() || grid.times.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if !(delta > 0.0 && delta < 4.0) {
        return Err(Error::InvalidArgument(format!("threshold must lie in (0, 4), got {delta}")));
    }
    let mut points = Vec::new();
    let mut non_crossing = Vec::new();
    for (&r, row) in grid.radii.iter().zip(&grid.values) {
        match row.iter().position(|&c| c >= delta) {
            None => non_crossing.push(r),
            Some(0) => points.push((r, grid.times[0])),
            Some(j) => {
                let (t0, t1) = (grid.times[j - 1], grid.times[j]);
                let (c0, c1) = (row[j - 1], row[j]);
                points.push((r, t0 + (delta - c0) / (c1 - c0) * (t1 - t0)));
            }
        }
    }
    let non_monotone = points.windows(2).any(|w| w[1].1 < w[0].1);
    Ok(Front {
        delta,
        points,
        non_crossing,
        non_monotone,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContainmentPoint {
    pub r: usize,
    pub t_star: f64,
    /// `4 · theorem1_rhs(R − 1, t*)²`.
    pub rhs: f64,
    pub pass: bool,
    /// `t* = 0`: the bound is zero there, so no crossing can be explained.
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrontFit {
    pub delta: f64,
    pub points: Vec<(usize, f64)>,
    pub non_crossing: Vec<usize>,
    pub non_monotone: bool,
    /// Fitted `ζ̂` in `t* = a R^ζ̂`.
    pub zeta_hat: f64,
    /// Fitted `a`.
    pub prefactor: f64,
    /// `log t* − (log a + ζ̂ log R)` per point.
    pub residuals: Vec<f64>,
    pub theory_zeta: Option<f64>,
    pub containment: Option<Vec<ContainmentPoint>>,
}

impl FrontFit {
    pub fn with_theory(mut self, alpha: f64, dimension: usize) -> Result<Self> {
        self.theory_zeta = Some(zeta(alpha, dimension)?);
        Ok(self)
    }

    pub fn with_containment(mut self, spec: &BoundSpec) -> Result<Self> {
        let front = Front {
            delta: self.delta,
            points: self.points.clone(),
            non_crossing: self.non_crossing.clone(),
            non_monotone: self.non_monotone,
        };
        self.containment = Some(cone_containment(&front, spec)?);
        Ok(self)
    }

    /// True when every non-degenerate front point lies inside the cone.
    pub fn contained(&self) -> Option<bool> {
        self.containment
            .as_ref()
            .map(|pts| pts.iter().filter(|p| !p.degenerate).all(|p| p.pass))
    }
}

/// Least squares of `log t*` against `log R`.
pub fn fit_exponent(front: &Front) -> Result<FrontFit> {
    let pts = &front.points;
    if pts.len() < 3 {
        return Err(Error::InsufficientPoints { got: pts.len() });
    }
    if pts.iter().any(|&(r, t)| r == 0 || !(t > 0.0) || !t.is_finite()) {
        return Err(Error::InvalidArgument("front points must have R > 0 and t* > 0".into()));
    }
    let xs: Vec<f64> = pts.iter().map(|&(r, _)| (r as f64).ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|&(_, t)| t.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("front radii are all equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals = xs.iter().zip(&ys).map(|(x, y)| y - (intercept + slope * x)).collect();
    Ok(FrontFit {
        delta: front.delta,
        points: pts.clone(),
        non_crossing: front.non_crossing.clone(),
        non_monotone: front.non_monotone,
        zeta_hat: slope,
        prefactor: intercept.exp(),
        residuals,
        theory_zeta: None,
        containment: None,
    })
}

/// Checks `4 · theorem1_rhs(R − 1, t*)² ≥ δ` at every front point.
pub fn cone_containment(front: &Front, spec: &BoundSpec) -> Result<Vec<ContainmentPoint>> {
    if !matches!(
        spec.kind,
        BoundKind::Theorem1 | BoundKind::TheoremS2 | BoundKind::OtocEq7
    ) {
        return Err(Error::InvalidArgument(format!(
            "cone containment needs the Frobenius light-cone bound, got {:?}",
            spec.kind
        )));
    }
    front
        .points
        .iter()
        .map(|&(r, t_star)| {
            if r == 0 {
                return Err(Error::InvalidArgument("front radius must be at least 1".into()));
            }
            let rhs = otoc_rhs(r, t_star, &spec.constants, spec.dt)?.value;
            Ok(ContainmentPoint {
                r,
                t_star,
                rhs,
                pass: rhs >= front.delta,
                degenerate: t_star == 0.0,
            })
        })
        .collect()
}

/// Time at which `4 · theorem1_rhs(R − 1, t)² = δ`, the edge of the cone.
pub fn cone_time(r: usize, delta: f64, consts: &DerivedConstants, dt: f64) -> Result<f64> {
    if r <= 1 {
        return Ok(0.0);
    }
    let (alpha, d) = (consts.alpha(), consts.dimension() as f64);
    let unit = crate::bounds::theorem1_rhs(r - 1, 1.0, consts, dt)?.value;
    Ok(((delta / 4.0).sqrt() / unit).powf(1.0 / (alpha - (d - 1.0) / 2.0)))
}

/// Log-log plot of the front, the fitted line and an optional cone edge,
/// as a self-contained SVG document.
pub fn front_svg(fit: &FrontFit, cone: &[(usize, f64)], timestamp: Option<&str>) -> String {
    const W: f64 = 480.0;
    const H: f64 = 360.0;
    const PAD: f64 = 48.0;
    let mut xs: Vec<f64> = fit.points.iter().map(|&(r, _)| r as f64).collect();
    let mut ys: Vec<f64> = fit.points.iter().map(|&(_, t)| t).collect();
    for &(r, t) in cone.iter().filter(|&&(r, t)| r > 0 && t > 0.0) {
        xs.push(r as f64);
        ys.push(t);
    }
    let bounds = |v: &[f64]| {
        let lo = v.iter().copied().filter(|x| *x > 0.0).fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if lo.is_finite() && hi > lo {
            (lo.log10(), hi.log10())
        } else {
            (0.0, 1.0)
        }
    };
    let (x0, x1) = bounds(&xs);
    let (y0, y1) = bounds(&ys);
    let px = |x: f64| PAD + (x.log10() - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let py = |y: f64| H - PAD - (y.log10() - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    );
    s += &format!(
        "<rect x=\"{PAD}\" y=\"{PAD}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n",
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    s += &format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">R (log)</text>\n",
        W / 2.0,
        H - 12.0
    );
    s += &format!(
        "<text x=\"14\" y=\"{}\" font-size=\"12\" transform=\"rotate(-90 14 {})\" text-anchor=\"middle\">t* (log)</text>\n",
        H / 2.0,
        H / 2.0
    );
    let cone_pts: Vec<String> = cone
        .iter()
        .filter(|&&(r, t)| r > 0 && t > 0.0)
        .map(|&(r, t)| format!("{:.2},{:.2}", px(r as f64), py(t)))
        .collect();
    if cone_pts.len() > 1 {
        s += &format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"#c33\" stroke-dasharray=\"4 3\"/>\n",
            cone_pts.join(" ")
        );
    }
    if let (Some(&(ra, _)), Some(&(rb, _))) = (fit.points.first(), fit.points.last()) {
        let line = |r: usize| fit.prefactor * (r as f64).powf(fit.zeta_hat);
        s += &format!(
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#36c\"/>\n",
            px(ra as f64),
            py(line(ra)),
            px(rb as f64),
            py(line(rb))
        );
    }
    for &(r, t) in &fit.points {
        s += &format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"#222\"/>\n",
            px(r as f64),
            py(t)
        );
    }
    s += &format!(
        "<text x=\"{PAD}\" y=\"{}\" font-size=\"12\">delta={} zeta_hat={:.4}{}</text>\n",
        PAD - 10.0,
        fit.delta,
        fit.zeta_hat,
        fit.theory_zeta.map(|z| format!(" zeta={z:.4}")).unwrap_or_default()
    );
    if let Some(ts) = timestamp {
        s += &format!("<!-- generated {ts} -->\n");
    }
    s += "</svg>\n";
    s
}
