//! The experiment commands. Each turns a validated config into result
//! files and a count of rigorous-bound violations.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context};
use otoc_core::bounds::{corollary_rhs, otoc_rhs, theorem1_rhs, theorem_s3_rhs, zeta, BoundFlag, BoundKind, BoundSpec};
use otoc_core::cluster::{
    check_decomposition, decompose_string, enumerate_connected_strings, enumerate_graphs, lemma_s3_audit_all,
    series_consistency, RootConstraint,
};
use otoc_core::evolve::{stochastic_frobenius, Evolver, SeriesExpansion, StringSum};
use otoc_core::fit::{cone_time, fit_exponent, front_extract, front_svg, Front, OtocGrid, DELTA_SWEEP};
use otoc_core::locality::{
    approx_error, commutator_frobenius_sq_with_pauli, otoc_pauli, unitary_connection_with, NormKind,
};
use otoc_core::{DerivedConstants, Error, Hamiltonian, Lattice, PauliString, Region};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{letter, Experiment, LoadedConfig, OtocMethod, RunConfig};
use crate::output::{num, Manifest, RunOutput, Table};

/// Hutchinson probes are vectors of length `2^n`.
pub const MAX_STOCHASTIC_SITES: usize = 22;

/// Slack allowed when comparing two computed norms of the same operator.
const NORM_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    /// `Some(None)` uses the factor from the config.
    pub sensitivity: Option<Option<f64>>,
    pub test_mode: bool,
}

#[derive(Debug)]
pub struct RunReport {
    pub manifest: Manifest,
    pub violations: usize,
    pub out_dir: PathBuf,
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    dir: &'a Path,
    seed: u64,
    sensitivity: Option<f64>,
    test_mode: bool,
}

struct Done {
    violations: usize,
    constants: Option<serde_json::Value>,
    summary: serde_json::Value,
}

pub fn run(loaded: &LoadedConfig, opts: &RunOptions) -> anyhow::Result<RunReport> {
    let cfg = &loaded.config;
    let out_dir = match (&opts.out, &cfg.output) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => loaded.dir.join(p),
        (None, None) => PathBuf::from("out"),
    };
    let sensitivity = match (&opts.sensitivity, &cfg.experiment) {
        (None, _) => None,
        (Some(Some(f)), _) => Some(*f),
        (Some(None), Experiment::BoundCheck { sensitivity_factor, .. }) => Some(*sensitivity_factor),
        (Some(None), _) => Some(1e-8),
    };
    if let Some(f) = sensitivity {
        if !(f > 0.0 && f < 1.0) {
            bail!(crate::config::ConfigError(format!("sensitivity factor must lie in (0, 1), got {f}")));
        }
    }
    let ctx = Ctx {
        cfg,
        dir: &loaded.dir,
        seed: opts.seed.unwrap_or(cfg.seed),
        sensitivity,
        test_mode: opts.test_mode,
    };
    let mut out = RunOutput::new(&out_dir)?;
    if sensitivity.is_some() && !matches!(cfg.experiment, Experiment::BoundCheck { .. } | Experiment::Fit { .. }) {
        out.warn(format!("--sensitivity has no effect on {}", cfg.experiment.command()));
    }
    let started = Instant::now();
    let done = match &cfg.experiment {
        Experiment::LatticeInfo { .. } => lattice_info(&ctx, &mut out)?,
        Experiment::ModelCheck {} => model_check(&ctx, &mut out)?,
        Experiment::Otoc { .. } => otoc_cmd(&ctx, &mut out)?,
        Experiment::BoundCheck { .. } => bound_check(&ctx, &mut out)?,
        Experiment::ClusterAudit { .. } => cluster_audit(&ctx, &mut out)?,
        Experiment::Fit { .. } => fit_cmd(&ctx, &mut out)?,
    };
    let elapsed = started.elapsed().as_secs_f64();
    if elapsed > cfg.budgets.wall_clock_seconds {
        // Timings vary between runs, so they stay out of the manifest.
        log::warn!(
            "run took {elapsed:.1} s, over the {} s wall-clock budget",
            cfg.budgets.wall_clock_seconds
        );
    }
    let manifest = out.finish(Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        csv_schema: crate::output::CSV_SCHEMA,
        command: cfg.experiment.command().into(),
        config_sha256: loaded.sha256.clone(),
        seed: ctx.seed,
        test_mode: ctx.test_mode,
        sensitivity: ctx.sensitivity,
        constants: done.constants,
        summary: done.summary,
        files: Vec::new(),
        warnings: Vec::new(),
    })?;
    Ok(RunReport {
        manifest,
        violations: done.violations,
        out_dir,
    })
}

fn model(ctx: &Ctx, lattice: &Lattice) -> anyhow::Result<Hamiltonian> {
    let spec = ctx.cfg.model.as_ref().context("the command needs a model block")?;
    Ok(Hamiltonian::build(spec, lattice)?)
}

fn certified(h: &Hamiltonian) -> anyhow::Result<(otoc_core::GeometricConstants, DerivedConstants)> {
    let geo = h.lattice().certify(h.alpha())?;
    let consts = h.derived_constants(&geo)?;
    Ok((geo, consts))
}

fn shrunk(ctx: &Ctx, consts: DerivedConstants) -> DerivedConstants {
    match ctx.sensitivity {
        Some(f) => consts.with_scaled_c0(f),
        None => consts,
    }
}

fn evolver(ctx: &Ctx, h: &Hamiltonian) -> anyhow::Result<Evolver> {
    Ok(Evolver::new(h, ctx.cfg.budgets.dense_cutoff)?)
}

fn flags(f: &[BoundFlag]) -> String {
    f.iter()
        .map(|x| match x {
            BoundFlag::NonIntegerSteps => "non_integer_steps",
            BoundFlag::OddRadius => "odd_radius",
            BoundFlag::DegenerateDenominator => "degenerate_denominator",
            BoundFlag::OutsideValidity => "outside_validity",
        })
        .collect::<Vec<_>>()
        .join(";")
}

fn lattice_info(ctx: &Ctx, out: &mut RunOutput) -> anyhow::Result<Done> {
    let Experiment::LatticeInfo { center, radii } = &ctx.cfg.experiment else {
        unreachable!()
    };
    let lattice = ctx.cfg.build_lattice()?;
    let gamma = lattice.certify_gamma(lattice.diameter().max(1));
    let lambda = match &ctx.cfg.model {
        Some(m) => Some(lattice.certify_lambda(m.alpha)?),
        None => None,
    };
    let mut shells = Table::new(&["center", "r0", "s", "count"]);
    for &r0 in radii {
        let ball = lattice.ball(*center, r0)?;
        if ball.len() == lattice.n_sites() {
            out.warn(format!("ball of radius {r0} covers the lattice and has no shells"));
            continue;
        }
        for (s, count) in lattice.shell_table(&ball)? {
            shells.push(vec![center.to_string(), r0.to_string(), s.to_string(), count.to_string()]);
        }
    }
    let report = json!({
        "extents": lattice.extents(),
        "boundary": lattice.boundary(),
        "dimension": lattice.dimension(),
        "n_sites": lattice.n_sites(),
        "diameter": lattice.diameter(),
        "gamma": gamma,
        "lambda": lambda,
    });
    out.write_json("lattice.json", &report)?;
    out.write_csv("shells.csv", &shells)?;
    Ok(Done {
        violations: 0,
        constants: Some(json!({ "gamma": gamma.gamma, "lambda": lambda.as_ref().map(|l| l.lambda) })),
        summary: json!({ "shell_rows": shells.rows.len() }),
    })
}

fn model_check(ctx: &Ctx, out: &mut RunOutput) -> anyhow::Result<Done> {
    let lattice = ctx.cfg.build_lattice()?;
    let h = model(ctx, &lattice)?;
    for w in h.warnings() {
        out.warn(w.clone());
    }
    let (geo, consts) = certified(&h)?;
    let assumption = h.certify_assumption();
    let mut table = Table::new(&["name", "value"]);
    for (name, value) in [
        ("j0", assumption.j0),
        ("j0_min", assumption.j0_min),
        ("j0_diagonal", assumption.j0_diagonal),
        ("j", consts.j),
        ("g", consts.g),
        ("g_tilde", consts.g_tilde),
        ("big_c0", consts.big_c0),
        ("big_c1", consts.big_c1),
        ("big_c2", consts.big_c2),
        ("small_c2", consts.small_c2),
        ("tau_star", consts.tau_star),
        ("gamma", geo.gamma),
        ("lambda", geo.lambda),
        ("zeta", zeta(h.alpha(), lattice.dimension())?),
    ] {
        table.push(vec![name.into(), num(value)]);
    }
    let report = json!({
        "n_sites": h.n_sites(),
        "terms": h.terms().len(),
        "k": h.k(),
        "alpha": h.alpha(),
        "zero_hamiltonian": h.is_zero(),
        "assumption": assumption,
        "geometry": geo,
        "constants": consts,
    });
    out.write_json("model.json", &report)?;
    out.write_csv("constants.csv", &table)?;
    Ok(Done {
        violations: 0,
        constants: Some(serde_json::to_value(consts)?),
        summary: json!({ "tau_star": consts.tau_star, "big_c0": consts.big_c0 }),
    })
}

fn otoc_cmd(ctx: &Ctx, out: &mut RunOutput) -> anyhow::Result<Done> {
    let Experiment::Otoc {
        w_site,
        w_letter,
        v_letter,
        probe_sites,
        times,
        method,
        series_order,
        samples,
    } = &ctx.cfg.experiment
    else {
        unreachable!()
    };
    let lattice = ctx.cfg.build_lattice()?;
    let h = model(ctx, &lattice)?;
    let n = lattice.n_sites();
    let times = times.points()?;
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        bail!(crate::config::ConfigError("OTOC times must be strictly increasing".into()));
    }
    let probes: Vec<usize> = probe_sites
        .clone()
        .unwrap_or_else(|| (0..n).filter(|s| s != w_site).collect());
    let w = PauliString::single(*w_site, letter(*w_letter)?)?;
    let vs: Vec<PauliString> = probes
        .iter()
        .map(|&p| PauliString::single(p, letter(*v_letter)?).map_err(Into::into))
        .collect::<anyhow::Result<_>>()?;
    let mut table = Table::new(&["site", "radius", "t", "otoc", "stderr"]);
    if times.is_empty() || probes.is_empty() {
        out.warn("empty OTOC grid; nothing to compute");
    }
    // values[p][j] = (C, stderr)
    let values: Vec<Vec<(f64, f64)>> = match method {
        OtocMethod::Dense => {
            let ev = evolver(ctx, &h)?;
            let wd = w.to_dense(n)?;
            vs.par_iter()
                .map(|v| Ok(otoc_pauli(&ev, &wd, v, &times)?.into_iter().map(|c| (c, 0.0)).collect()))
                .collect::<anyhow::Result<_>>()?
        }
        OtocMethod::Series | OtocMethod::Stochastic => {
            if *method == OtocMethod::Stochastic && n > MAX_STOCHASTIC_SITES {
                return Err(Error::ResourceLimit {
                    n,
                    cutoff: MAX_STOCHASTIC_SITES,
                }
                .into());
            }
            let seed_sum = StringSum::from_string(n, &w);
            match SeriesExpansion::new(&h, &seed_sum, *series_order, ctx.cfg.budgets.string_budget) {
                Err(e @ Error::TruncationBudget { .. }) => {
                    out.warn(format!("series skipped: {e}"));
                    Vec::new()
                }
                Err(e) => return Err(e.into()),
                Ok(series) => {
                    let per_time: Vec<Vec<(f64, f64)>> = times
                        .par_iter()
                        .enumerate()
                        .map(|(j, &t)| {
                            let s = series.evaluate(t, *series_order);
                            vs.iter()
                                .enumerate()
                                .map(|(p, v)| {
                                    let c = s.commutator_with(v);
                                    if *method == OtocMethod::Series {
                                        return Ok((c.frobenius_sq(), 0.0));
                                    }
                                    let seed = sub_seed(ctx.seed, (p * times.len() + j) as u64);
                                    let est = stochastic_frobenius(&c, *samples, seed)?;
                                    Ok((est.estimate, est.stderr))
                                })
                                .collect::<anyhow::Result<Vec<_>>>()
                        })
                        .collect::<anyhow::Result<_>>()?;
                    (0..vs.len())
                        .map(|p| per_time.iter().map(|row| row[p]).collect())
                        .collect()
                }
            }
        }
    };
    for (p, row) in values.iter().enumerate() {
        let radius = lattice.distance(*w_site, probes[p]);
        for (j, &(c, se)) in row.iter().enumerate() {
            table.push(vec![
                probes[p].to_string(),
                radius.to_string(),
                num(times[j]),
                num(c),
                num(se),
            ]);
        }
    }
    out.write_csv("otoc.csv", &table)?;
    Ok(Done {
        violations: 0,
        constants: None,
        summary: json!({ "rows": table.rows.len(), "method": method }),
    })
}

/// Decorrelated per-point seed derived from the run seed (splitmix64).
pub fn sub_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, Serialize)]
struct BoundRow {
    kind: &'static str,
    r0: usize,
    r: usize,
    m_t: usize,
    t: f64,
    norm: &'static str,
    measured: f64,
    rhs: f64,
    pass: bool,
    flags: String,
}

impl BoundRow {
    fn cells(&self) -> Vec<String> {
        vec![
            self.kind.into(),
            self.r0.to_string(),
            self.r.to_string(),
            self.m_t.to_string(),
            num(self.t),
            self.norm.into(),
            num(self.measured),
            num(self.rhs),
            num(self.rhs - self.measured),
            self.pass.to_string(),
            self.flags.clone(),
        ]
    }
}

/// One `(r₀, m_t)` block of the bound-check grid.
enum BoundJob {
    ShortTime { r0: usize, t: f64 },
    Recursion { r0: usize, m_t: usize },
    Otoc { m_t: usize },
}

fn product_on(region: &Region, l: otoc_core::Letter) -> anyhow::Result<PauliString> {
    Ok(PauliString::from_letters(region.sites().iter().map(|&s| (s, l)))?)
}

fn bound_check(ctx: &Ctx, out: &mut RunOutput) -> anyhow::Result<Done> {
    let Experiment::BoundCheck {
        center,
        w_letter,
        v_letter,
        r0,
        radii,
        steps,
        dt,
        norms,
        ..
    } = &ctx.cfg.experiment
    else {
        unreachable!()
    };
    let lattice = ctx.cfg.build_lattice()?;
    let h = model(ctx, &lattice)?;
    let (_, certified_consts) = certified(&h)?;
    let consts = shrunk(ctx, certified_consts);
    let dt = dt.unwrap_or(consts.tau_star / 2.0);
    if dt > consts.tau_star {
        return Err(Error::ThresholdViolation {
            dt,
            tau_star: consts.tau_star,
        }
        .into());
    }
    let header = [
        "kind", "r0", "r", "m_t", "t", "norm", "measured", "rhs", "margin", "pass", "flags",
    ];
    let mut table = Table::new(&header);
    if radii.is_empty() || steps.is_empty() || r0.is_empty() {
        out.warn("empty bound-check grid; nothing to compare");
        out.write_csv("bounds.csv", &table)?;
        return Ok(Done {
            violations: 0,
            constants: Some(serde_json::to_value(consts)?),
            summary: json!({ "rows": 0, "violations": 0 }),
        });
    }
    let ev = evolver(ctx, &h)?;
    let (wl, vl) = (letter(*w_letter)?, letter(*v_letter)?);
    let n = lattice.n_sites();

    let mut jobs = Vec::new();
    for &a in r0 {
        if lattice.ball(*center, a)?.len() == n {
            out.warn(format!("X = i[{a}] covers the lattice; r0 = {a} skipped"));
            continue;
        }
        for t in [consts.tau_star / 2.0, consts.tau_star] {
            jobs.push(BoundJob::ShortTime { r0: a, t });
        }
        for &m_t in steps {
            jobs.push(BoundJob::Recursion { r0: a, m_t });
        }
    }
    for &m_t in steps {
        jobs.push(BoundJob::Otoc { m_t });
    }
    for &m_t in steps {
        let skipped: Vec<usize> = radii.iter().copied().filter(|r| r % m_t != 0).collect();
        if !skipped.is_empty() {
            out.warn(format!(
                "radii {skipped:?} are not multiples of m_t = {m_t}; recursion rows skipped"
            ));
        }
    }

    let blocks: Vec<Vec<BoundRow>> = jobs
        .par_iter()
        .map(|job| -> anyhow::Result<Vec<BoundRow>> {
            let mut rows = Vec::new();
            match *job {
                BoundJob::ShortTime { r0, t } => {
                    let x = lattice.ball(*center, r0)?;
                    let w = product_on(&x, wl)?.to_dense(n)?;
                    for &r in radii.iter().filter(|&&r| r >= 1) {
                        let measured = approx_error(&h, &ev, &w, &x, t, r, NormKind::NormalizedFrobenius)?.error;
                        let rhs = theorem_s3_rhs(&lattice, &x, r, t, &consts)?;
                        rows.push(BoundRow {
                            kind: "theorem_s3",
                            r0,
                            r,
                            m_t: 1,
                            t,
                            norm: NormKind::NormalizedFrobenius.label(),
                            measured,
                            rhs: rhs.value,
                            pass: measured <= rhs.value,
                            flags: flags(&rhs.flags),
                        });
                    }
                }
                BoundJob::Recursion { r0, m_t } => {
                    let x = lattice.ball(*center, r0)?;
                    let w = product_on(&x, wl)?.to_dense(n)?;
                    let t = m_t as f64 * dt;
                    let step = ev.propagator(dt)?;
                    let full = ev.propagator(t)?;
                    let mut wanted = norms.clone();
                    if !wanted.contains(&NormKind::NormalizedFrobenius) {
                        wanted.push(NormKind::NormalizedFrobenius);
                    }
                    for &r in radii.iter().filter(|&&r| r % m_t == 0 && r >= 1) {
                        let trace = unitary_connection_with(&h, &step, &full, &w, *center, r0, r, m_t, &wanted)?;
                        let direct = trace.direct[&NormKind::NormalizedFrobenius];
                        let rhs = if r0 == 0 {
                            theorem1_rhs(r, t, &consts, dt)?
                        } else {
                            corollary_rhs(r, r0, t, &consts, dt)?
                        };
                        rows.push(BoundRow {
                            kind: if r0 == 0 { "theorem1" } else { "corollary" },
                            r0,
                            r,
                            m_t,
                            t,
                            norm: NormKind::NormalizedFrobenius.label(),
                            measured: direct,
                            rhs: rhs.value,
                            pass: direct <= rhs.value,
                            flags: flags(&rhs.flags),
                        });
                        for k in norms {
                            let (d, tel) = (trace.direct[k], trace.telescoped[k]);
                            rows.push(BoundRow {
                                kind: "telescoping",
                                r0,
                                r,
                                m_t,
                                t,
                                norm: k.label(),
                                measured: d,
                                rhs: tel,
                                pass: d <= tel * (1.0 + NORM_SLACK) + NORM_SLACK,
                                flags: String::new(),
                            });
                        }
                    }
                }
                BoundJob::Otoc { m_t } => {
                    let t = m_t as f64 * dt;
                    let w = PauliString::single(*center, wl)?.to_dense(n)?;
                    let wt = ev.evolve(&w, t)?;
                    for &big_r in radii.iter().filter(|&&r| r >= 1) {
                        let Some(probe) = (0..n).find(|&s| lattice.distance(*center, s) == big_r) else {
                            continue;
                        };
                        let v = PauliString::single(probe, vl)?;
                        let measured = commutator_frobenius_sq_with_pauli(&wt, &v);
                        let rhs = otoc_rhs(big_r, t, &consts, dt)?;
                        rows.push(BoundRow {
                            kind: "otoc",
                            r0: 0,
                            r: big_r,
                            m_t,
                            t,
                            norm: NormKind::NormalizedFrobenius.label(),
                            measured,
                            rhs: rhs.value,
                            pass: measured <= rhs.value,
                            flags: flags(&rhs.flags),
                        });
                    }
                }
            }
            Ok(rows)
        })
        .collect::<anyhow::Result<_>>()?;

    let mut per_kind: BTreeMap<&str, (usize, usize, f64)> = BTreeMap::new();
    let mut violations = 0;
    for row in blocks.iter().flatten() {
        table.push(row.cells());
        let entry = per_kind.entry(row.kind).or_insert((0, 0, 0.0));
        entry.0 += 1;
        if !row.pass {
            entry.1 += 1;
            violations += 1;
        }
        if row.rhs > 0.0 {
            entry.2 = entry.2.max(row.measured / row.rhs);
        }
    }
    out.write_csv("bounds.csv", &table)?;
    let summary: BTreeMap<&str, serde_json::Value> = per_kind
        .into_iter()
        .map(|(k, (rows, bad, ratio))| (k, json!({ "rows": rows, "violations": bad, "max_ratio": ratio })))
        .collect();
    Ok(Done {
        violations,
        constants: Some(serde_json::to_value(consts)?),
        summary: json!({ "dt": dt, "rows": table.rows.len(), "violations": violations, "kinds": summary }),
    })
}

fn factorial(m: usize) -> u64 {
    (1..=m as u64).product()
}

fn cluster_audit(ctx: &Ctx, out: &mut RunOutput) -> anyhow::Result<Done> {
    let Experiment::ClusterAudit {
        max_order,
        graph_order,
        consistency_order,
        root_site,
    } = &ctx.cfg.experiment
    else {
        unreachable!()
    };
    let lattice = ctx.cfg.build_lattice()?;
    let h = model(ctx, &lattice)?;
    let (_, consts) = certified(&h)?;
    let budgets = ctx.cfg.budgets;
    let mut violations = 0;
    let mut summary = serde_json::Map::new();

    let mut s3 = Table::new(&[
        "m", "i", "i_prime", "distance", "lhs", "rhs", "margin", "holds", "complete",
    ]);
    let mut s3_bad = 0;
    for m in 0..=*max_order {
        let (audits, enumeration) = lemma_s3_audit_all(&h, m, &consts, budgets.enumeration_budget);
        if !enumeration.complete {
            out.warn(format!(
                "enumeration budget reached at m = {m}; the audit sums are partial"
            ));
        }
        for a in audits {
            if !a.holds() {
                s3_bad += 1;
            }
            s3.push(vec![
                a.m.to_string(),
                a.i.to_string(),
                a.i_prime.to_string(),
                a.distance.to_string(),
                num(a.lhs),
                num(a.rhs),
                num(a.margin()),
                a.holds().to_string(),
                a.complete.to_string(),
            ]);
        }
    }
    violations += s3_bad;
    summary.insert("lemma_s3_violations".into(), json!(s3_bad));
    out.write_csv("lemma_s3.csv", &s3)?;

    let mut graphs = Table::new(&["m", "count", "expected", "within_budget"]);
    let mut graph_bad = 0;
    for m in 0..=*graph_order {
        let expected = factorial(m);
        match enumerate_graphs(m, budgets.graph_budget) {
            Ok(g) => {
                if g.len() as u64 != expected {
                    graph_bad += 1;
                }
                graphs.push(vec![m.to_string(), g.len().to_string(), expected.to_string(), "true".into()]);
            }
            Err(e @ Error::GraphBudget { .. }) => {
                out.warn(e.to_string());
                graphs.push(vec![m.to_string(), String::new(), expected.to_string(), "false".into()]);
            }
            Err(e) => return Err(e.into()),
        }
    }
    violations += graph_bad;
    summary.insert("graph_count_mismatches".into(), json!(graph_bad));
    out.write_csv("graphs.csv", &graphs)?;

    let mut decomp = Table::new(&[
        "m", "strings", "nonzero", "partition_failures", "property1_failures", "property2_failures",
    ]);
    let mut decomp_bad = 0;
    for m in 1..=*max_order {
        let (strings, enumeration) =
            enumerate_connected_strings(&h, m, &RootConstraint::Any, budgets.enumeration_budget);
        if !enumeration.complete {
            out.warn(format!("enumeration budget reached at m = {m}; decomposition audit is partial"));
        }
        let checks: Vec<_> = strings
            .par_iter()
            .filter(|w| w.result.is_some())
            .map(|w| decompose_string(w).map(|d| check_decomposition(w, &d)))
            .collect::<Result<_, _>>()?;
        let fails = |f: fn(&otoc_core::cluster::DecompositionCheck) -> bool| checks.iter().filter(|c| !f(c)).count();
        let (p, p1, p2) = (fails(|c| c.partition), fails(|c| c.property1), fails(|c| c.property2));
        decomp_bad += checks.iter().filter(|c| !c.holds()).count();
        decomp.push(vec![
            m.to_string(),
            strings.len().to_string(),
            checks.len().to_string(),
            p.to_string(),
            p1.to_string(),
            p2.to_string(),
        ]);
    }
    violations += decomp_bad;
    summary.insert("decomposition_failures".into(), json!(decomp_bad));
    out.write_csv("decomposition.csv", &decomp)?;

    let mut cons = Table::new(&[
        "m", "cluster_strings", "series_strings", "max_abs_diff", "scale", "complete", "agree",
    ]);
    let mut cons_bad = 0;
    match series_consistency(
        &h,
        &RootConstraint::ContainsSite(*root_site),
        *consistency_order,
        budgets.enumeration_budget,
    ) {
        Ok(layers) => {
            for l in layers {
                let agree = l.max_abs_diff <= 1e-12 * l.scale;
                if l.complete && !agree {
                    cons_bad += 1;
                }
                cons.push(vec![
                    l.m.to_string(),
                    l.cluster_strings.to_string(),
                    l.series_strings.to_string(),
                    num(l.max_abs_diff),
                    num(l.scale),
                    l.complete.to_string(),
                    agree.to_string(),
                ]);
            }
        }
        Err(e @ Error::TruncationBudget { .. }) => out.warn(format!("consistency check skipped: {e}")),
        Err(e) => return Err(e.into()),
    }
    violations += cons_bad;
    summary.insert("consistency_mismatches".into(), json!(cons_bad));
    out.write_csv("consistency.csv", &cons)?;
    summary.insert("violations".into(), json!(violations));

    Ok(Done {
        violations,
        constants: Some(serde_json::to_value(consts)?),
        summary: serde_json::Value::Object(summary),
    })
}

/// Reads `radius,t,otoc` rows, keeping the largest value when several
/// sites share a radius. Radius 0 is the operator's own site and is dropped.
pub fn read_otoc_table(path: &Path) -> anyhow::Result<OtocGrid> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading OTOC table {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("{} has no {name:?} column", path.display()))
    };
    let (ri, ti, ci) = (col("radius")?, col("t")?, col("otoc")?);
    let mut best: BTreeMap<(usize, u64), (f64, f64)> = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let r: usize = record[ri].trim().parse().context("parsing radius")?;
        let t: f64 = record[ti].trim().parse().context("parsing t")?;
        let c: f64 = record[ci].trim().parse().context("parsing otoc")?;
        if r == 0 {
            continue;
        }
        let e = best.entry((r, t.to_bits())).or_insert((t, c));
        e.1 = e.1.max(c);
    }
    let rows: Vec<(usize, f64, f64)> = best.into_iter().map(|((r, _), (t, c))| (r, t, c)).collect();
    Ok(OtocGrid::from_rows(&rows)?)
}

fn fit_cmd(ctx: &Ctx, out: &mut RunOutput) -> anyhow::Result<Done> {
    let Experiment::Fit {
        input,
        delta,
        containment,
    } = &ctx.cfg.experiment
    else {
        unreachable!()
    };
    let path = ctx.dir.join(input);
    let bytes = std::fs::read(&path).with_context(|| format!("reading fit input {}", path.display()))?;
    let grid = read_otoc_table(&path)?;
    let front = front_extract(&grid, *delta)?;
    if front.non_monotone {
        out.warn("the extracted front is not monotone in R");
    }
    if !front.non_crossing.is_empty() {
        out.warn(format!("radii {:?} never reach delta = {delta}", front.non_crossing));
    }
    let mut fit = fit_exponent(&front)?;
    let lattice = ctx.cfg.build_lattice()?;
    let mut constants = None;
    let mut cone = Vec::new();
    if let Some(spec) = &ctx.cfg.model {
        fit = fit.with_theory(spec.alpha, lattice.dimension())?;
        if *containment {
            let h = Hamiltonian::build(spec, &lattice)?;
            let consts = shrunk(ctx, certified(&h)?.1);
            let bound = BoundSpec::new(BoundKind::Theorem1, consts, consts.tau_star / 2.0);
            fit = fit.with_containment(&bound)?;
            for &(r, _) in &fit.points {
                cone.push((r, cone_time(r, *delta, &consts, bound.dt)?));
            }
            constants = Some(serde_json::to_value(consts)?);
        }
    }
    let sweep: Vec<Front> = DELTA_SWEEP
        .iter()
        .map(|&d| front_extract(&grid, d))
        .collect::<Result<_, _>>()?;
    let violations = match fit.contained() {
        Some(false) => fit
            .containment
            .iter()
            .flatten()
            .filter(|p| !p.degenerate && !p.pass)
            .count(),
        _ => 0,
    };
    let report = json!({
        "input": input,
        "input_sha256": crate::output::sha256_hex(&bytes),
        "fit": fit,
        "contained": fit.contained(),
        "delta_sweep": sweep,
    });
    out.write_json("fit.json", &report)?;
    let stamp = if ctx.test_mode {
        None
    } else {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Some(format!("unix {secs}"))
    };
    out.write_text("front.svg", &front_svg(&fit, &cone, stamp.as_deref()))?;
    Ok(Done {
        violations,
        constants,
        summary: json!({
            "zeta_hat": fit.zeta_hat,
            "theory_zeta": fit.theory_zeta,
            "contained": fit.contained(),
            "violations": violations,
        }),
    })
}
