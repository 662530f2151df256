//! Golden-file regression suite and the operation coverage map.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::commands::{run, RunOptions};
use crate::config;
use crate::output::sha256_hex;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    pub name: String,
    pub cases: Vec<GoldenCase>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldenCase {
    pub name: String,
    pub module: String,
    /// Config path relative to the suite file.
    pub config: PathBuf,
    /// The statement this case pins down.
    pub claim: String,
    pub tolerance: Tolerance,
    #[serde(default)]
    pub sensitivity: Option<f64>,
    /// Whether the run must report rigorous-bound violations.
    #[serde(default)]
    pub expect_violations: bool,
    /// Expected file name to SHA-256 of the blessed copy.
    pub expected: BTreeMap<String, String>,
}

impl GoldenCase {
    pub fn expected_dir(&self, suite_dir: &Path) -> PathBuf {
        suite_dir.join(&self.name).join("expected")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Tolerance {
    /// Byte-identical output.
    Exact,
    /// Numeric cells within this relative error.
    Relative(f64),
    /// Estimates within this many standard errors; other cells at 1e-9.
    Sigma(f64),
}

/// Differences smaller than this are rounding noise around zero.
const ABS_FLOOR: f64 = 1e-14;

impl Tolerance {
    pub fn label(&self) -> String {
        match self {
            Tolerance::Exact => "exact".into(),
            Tolerance::Relative(e) => format!("relative:{e:e}"),
            Tolerance::Sigma(k) => format!("sigma:{k}"),
        }
    }
}

pub fn load_suite(path: &Path) -> anyhow::Result<Suite> {
    let bytes = fs::read(path).with_context(|| format!("reading suite {}", path.display()))?;
    serde_json::from_slice(&bytes).map_err(|e| config::ConfigError(format!("{}: {e}", path.display())).into())
}

pub fn default_suite() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("goldens").join("suite.json")
}

#[derive(Clone, Debug, Serialize)]
pub struct CaseResult {
    pub name: String,
    pub module: String,
    pub claim: String,
    pub tolerance: String,
    pub passed: bool,
    pub details: Vec<String>,
    /// Recorded for information only.
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CoverageEntry {
    pub module: &'static str,
    pub op: &'static str,
    pub evidence: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RegressionReport {
    pub suite: String,
    pub module_filter: Option<String>,
    pub passed: usize,
    pub failed: usize,
    pub cases: Vec<CaseResult>,
    pub coverage: Vec<CoverageEntry>,
}

impl RegressionReport {
    pub fn ok(&self) -> bool {
        self.failed == 0
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "suite {}", self.suite);
        if let Some(m) = &self.module_filter {
            let _ = writeln!(s, "module filter: {m}");
        }
        for c in &self.cases {
            let _ = writeln!(
                s,
                "{} {:<28} [{}] {} ({:.2} s)",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.module,
                c.tolerance,
                c.seconds
            );
            for d in &c.details {
                let _ = writeln!(s, "    {d}");
            }
        }
        let _ = writeln!(s, "{} passed, {} failed", self.passed, self.failed);
        let _ = writeln!(s, "\ncoverage");
        for e in &self.coverage {
            let _ = writeln!(s, "  {}::{} <- {}", e.module, e.op, e.evidence.join(", "));
        }
        s
    }
}

/// Runs every case (optionally only those of `module`) in test mode, with
/// outputs under `work`.
pub fn run_suite(suite_path: &Path, module: Option<&str>, work: &Path) -> anyhow::Result<RegressionReport> {
    let suite = load_suite(suite_path)?;
    let suite_dir = suite_path.parent().unwrap_or(Path::new("."));
    let cases: Vec<&GoldenCase> = suite
        .cases
        .iter()
        .filter(|c| module.map_or(true, |m| c.module == m))
        .collect();
    if cases.is_empty() {
        bail!(config::ConfigError(format!(
            "no cases match module {:?}",
            module.unwrap_or("")
        )));
    }
    let results: Vec<CaseResult> = cases
        .par_iter()
        .map(|case| run_case(case, suite_dir, work))
        .collect();
    let failed = results.iter().filter(|r| !r.passed).count();
    let coverage = coverage(&suite);
    Ok(RegressionReport {
        suite: suite.name,
        module_filter: module.map(str::to_string),
        passed: results.len() - failed,
        failed,
        cases: results,
        coverage,
    })
}

/// Executes a case's config in test mode into `work/<name>`.
pub fn execute(case: &GoldenCase, suite_dir: &Path, work: &Path) -> anyhow::Result<(PathBuf, usize)> {
    let loaded = config::load(&suite_dir.join(&case.config))?;
    let out = work.join(&case.name);
    if out.exists() {
        fs::remove_dir_all(&out)?;
    }
    let report = run(
        &loaded,
        &RunOptions {
            seed: None,
            out: Some(out.clone()),
            sensitivity: case.sensitivity.map(Some),
            test_mode: true,
        },
    )?;
    Ok((out, report.violations))
}

fn run_case(case: &GoldenCase, suite_dir: &Path, work: &Path) -> CaseResult {
    let started = Instant::now();
    let mut details = Vec::new();
    match execute(case, suite_dir, work) {
        Err(e) => details.push(format!("run failed: {e:#}")),
        Ok((out, violations)) => {
            if (violations > 0) != case.expect_violations {
                details.push(format!(
                    "expected {} violations, run reported {violations}",
                    if case.expect_violations { "some" } else { "no" }
                ));
            }
            let expected_dir = case.expected_dir(suite_dir);
            for (name, digest) in &case.expected {
                if let Err(e) = compare_file(&expected_dir.join(name), digest, &out.join(name), case.tolerance) {
                    details.push(format!("{name}: {e:#}"));
                }
            }
        }
    }
    CaseResult {
        name: case.name.clone(),
        module: case.module.clone(),
        claim: case.claim.clone(),
        tolerance: case.tolerance.label(),
        passed: details.is_empty(),
        details,
        seconds: started.elapsed().as_secs_f64(),
    }
}

fn compare_file(golden: &Path, digest: &str, fresh: &Path, tol: Tolerance) -> anyhow::Result<()> {
    let want = fs::read(golden).with_context(|| format!("missing golden {}", golden.display()))?;
    let got = fs::read(fresh).with_context(|| format!("run did not produce {}", fresh.display()))?;
    let want_text = String::from_utf8_lossy(&want);
    let got_text = String::from_utf8_lossy(&got);
    if sha256_hex(&want) != digest {
        bail!(
            "golden copy does not match its recorded digest (corrupted golden)\n{}",
            line_diff(&want_text, &got_text)
        );
    }
    if want == got {
        return Ok(());
    }
    let ok = match tol {
        Tolerance::Exact => false,
        Tolerance::Relative(eps) => cells_match(&want_text, &got_text, eps, None),
        Tolerance::Sigma(k) => cells_match(&want_text, &got_text, 1e-9, Some(k)),
    };
    if !ok {
        bail!("output differs beyond {}\n{}", tol.label(), line_diff(&want_text, &got_text));
    }
    Ok(())
}

fn close(a: f64, b: f64, eps: f64) -> bool {
    a == b || (a.is_nan() && b.is_nan()) || (a - b).abs() <= eps * a.abs().max(b.abs()) + ABS_FLOOR
}

fn tokens(s: &str) -> Vec<&str> {
    s.split(|c: char| c == ',' || c == '\n' || c.is_whitespace() || c == ':' || c == '[' || c == ']')
        .filter(|t| !t.is_empty())
        .collect()
}

/// Token-wise comparison; numeric tokens within `eps`. With `sigma`, CSV
/// `otoc` cells may differ by `sigma` times the larger `stderr` of the row.
fn cells_match(want: &str, got: &str, eps: f64, sigma: Option<f64>) -> bool {
    if let Some(k) = sigma {
        if let Some(ok) = sigma_match(want, got, eps, k) {
            return ok;
        }
    }
    let (a, b) = (tokens(want), tokens(got));
    a.len() == b.len()
        && a.iter().zip(&b).all(|(x, y)| {
            let xs = x.trim_matches(|c| c == '"' || c == '{' || c == '}');
            let ys = y.trim_matches(|c| c == '"' || c == '{' || c == '}');
            match (xs.parse::<f64>(), ys.parse::<f64>()) {
                (Ok(p), Ok(q)) => close(p, q, eps),
                _ => xs == ys,
            }
        })
}

fn sigma_match(want: &str, got: &str, eps: f64, k: f64) -> Option<bool> {
    let parse = |s: &str| -> Option<(Vec<String>, Vec<Vec<String>>)> {
        let mut r = csv::Reader::from_reader(s.as_bytes());
        let h = r.headers().ok()?.iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|x| x.map(|rec| rec.iter().map(str::to_string).collect()))
            .collect::<Result<_, _>>()
            .ok()?;
        Some((h, rows))
    };
    let (ha, ra) = parse(want)?;
    let (hb, rb) = parse(got)?;
    let ci = ha.iter().position(|h| h == "otoc")?;
    let si = ha.iter().position(|h| h == "stderr")?;
    if ha != hb || ra.len() != rb.len() {
        return Some(false);
    }
    let f = |s: &str| s.parse::<f64>().ok();
    for (x, y) in ra.iter().zip(&rb) {
        for (j, (p, q)) in x.iter().zip(y).enumerate() {
            let ok = if j == ci {
                match (f(p), f(q), f(&x[si]), f(&y[si])) {
                    (Some(a), Some(b), Some(sa), Some(sb)) => (a - b).abs() <= k * sa.max(sb) + ABS_FLOOR,
                    _ => false,
                }
            } else if j == si {
                true
            } else {
                match (f(p), f(q)) {
                    (Some(a), Some(b)) => close(a, b, eps),
                    _ => p == q,
                }
            };
            if !ok {
                return Some(false);
            }
        }
    }
    Some(true)
}

/// The first few differing lines, as `-expected` / `+actual` pairs.
pub fn line_diff(want: &str, got: &str) -> String {
    let (a, b): (Vec<&str>, Vec<&str>) = (want.lines().collect(), got.lines().collect());
    let mut s = String::new();
    let mut shown = 0;
    for i in 0..a.len().max(b.len()) {
        let (x, y) = (a.get(i), b.get(i));
        if x != y {
            if shown == 8 {
                let _ = writeln!(s, "    ...");
                break;
            }
            let _ = writeln!(s, "    line {}:", i + 1);
            let _ = writeln!(s, "    -{}", x.unwrap_or(&"<missing>"));
            let _ = writeln!(s, "    +{}", y.unwrap_or(&"<missing>"));
            shown += 1;
        }
    }
    if shown == 0 {
        let _ = writeln!(s, "    (contents are line-identical)");
    }
    s.trim_end().to_string()
}

/// Re-runs every case and stores its outputs and digests as the new goldens.
pub fn bless(suite_path: &Path, module: Option<&str>, work: &Path) -> anyhow::Result<Suite> {
    let mut suite = load_suite(suite_path)?;
    let suite_dir = suite_path.parent().unwrap_or(Path::new(".")).to_path_buf();
    for case in suite.cases.iter_mut() {
        if module.is_some_and(|m| case.module != m) {
            continue;
        }
        let (out, violations) = execute(case, &suite_dir, work)?;
        if (violations > 0) != case.expect_violations {
            bail!("case {} reported {violations} violations; refusing to bless", case.name);
        }
        let dir = case.expected_dir(&suite_dir);
        fs::create_dir_all(&dir)?;
        for (name, digest) in case.expected.iter_mut() {
            let bytes = fs::read(out.join(name)).with_context(|| format!("case {} did not write {name}", case.name))?;
            fs::write(dir.join(name), &bytes)?;
            *digest = sha256_hex(&bytes);
        }
    }
    let mut bytes = serde_json::to_vec_pretty(&suite)?;
    bytes.push(b'\n');
    fs::write(suite_path, bytes)?;
    Ok(suite)
}

/// Every operation with the tests and golden cases that exercise it.
pub const COVERAGE: &[(&str, &str, &[&str])] = &[
    ("lattice", "ball", &["core/tests/lattice.rs::ball_examples", "core/tests/lattice.rs::ball_is_exactly_the_distance_sublevel_set"]),
    ("lattice", "extend_region", &["core/tests/lattice.rs::extend_region_examples"]),
    ("lattice", "shell", &["core/tests/lattice.rs::shells_partition_the_lattice", "golden:lattice_grid"]),
    ("lattice", "certify_gamma", &["core/tests/lattice.rs::gamma_is_the_tightest_valid_constant", "golden:lattice_grid"]),
    ("lattice", "certify_lambda", &["core/tests/lattice.rs::lambda_at_least_one_and_valid_for_every_pair", "golden:lattice_grid"]),
    ("lattice", "decay_sum_check", &["core/tests/lattice.rs::decay_sum_grid"]),
    ("pauli", "multiply", &["core/tests/pauli.rs::random_products_and_commutators_match_dense_oracle"]),
    ("pauli", "commutator", &["core/tests/pauli.rs::commutator_examples"]),
    ("pauli", "to_dense", &["core/tests/pauli.rs::dense_examples"]),
    ("hamiltonian", "build_model", &["core/tests/hamiltonian.rs::ising_chain_couplings_follow_distance", "golden:model_chain"]),
    ("hamiltonian", "certify_assumption", &["core/tests/hamiltonian.rs::certificate_holds_for_every_pair", "golden:model_chain"]),
    ("hamiltonian", "one_site_energy", &["core/tests/hamiltonian.rs::one_site_energy_with_field", "golden:model_chain"]),
    ("hamiltonian", "derived_constants", &["core/tests/hamiltonian.rs::derived_constants_by_hand", "golden:model_chain", "golden:model_zero"]),
    ("evolve", "heisenberg_evolve", &["core/tests/evolve.rs::zz_closed_form_against_matrix_exponential", "core/tests/evolve.rs::group_property"]),
    ("evolve", "bch_expand", &["core/tests/evolve.rs::bch_converges_monotonically_below_the_threshold", "golden:otoc_series"]),
    ("evolve", "stochastic_frobenius", &["core/tests/evolve.rs::stochastic_matches_exact_trace", "golden:otoc_stochastic"]),
    ("locality", "schatten_norm", &["core/tests/locality.rs::holder_and_norm_ordering"]),
    ("locality", "local_restrict", &["core/tests/locality.rs::restrict_is_frobenius_optimal", "acceptance:2"]),
    ("locality", "approx_error", &["core/tests/locality.rs::approx_error_examples", "golden:chain_bounds"]),
    ("locality", "otoc", &["core/tests/locality.rs::zz_otoc_closed_form", "golden:zz_otoc", "acceptance:1"]),
    ("locality", "unitary_connection", &["core/tests/locality.rs::recursion_on_a_ten_site_chain", "golden:chain_bounds", "acceptance:3"]),
    ("bounds", "zeta", &["core/tests/bounds.rs::zeta_is_strictly_increasing", "acceptance:9"]),
    ("bounds", "theorem1_rhs", &["core/tests/bounds.rs::theorem1_by_hand", "golden:chain_bounds", "acceptance:5"]),
    ("bounds", "corollary_rhs", &["core/tests/bounds.rs::corollary_reductions", "golden:chain_bounds"]),
    ("bounds", "opnorm_bound_rhs", &["core/tests/bounds.rs::opnorm_examples"]),
    ("bounds", "hk_short_step_rhs", &["core/tests/bounds.rs::hk_short_step_examples"]),
    ("bounds", "theoremS3_rhs", &["core/tests/bounds.rs::theorem_s3_examples", "golden:chain_bounds", "acceptance:4"]),
    ("bounds", "scrambling_time", &["core/tests/bounds.rs::scrambling_time_examples", "acceptance:9"]),
    ("cluster", "enumerate_connected_strings", &["core/tests/cluster.rs::enumeration_matches_brute_force", "golden:cluster_chain4"]),
    ("cluster", "nested_commutator", &["core/tests/cluster.rs::nested_commutator_matches_dense_iteration"]),
    ("cluster", "lemma_s3_audit", &["core/tests/cluster.rs::lemma_s3_audit_all_agrees_with_single_pairs", "golden:cluster_chain4", "golden:cluster_chain6", "acceptance:6"]),
    ("cluster", "enumerate_graphs", &["core/tests/cluster.rs::graph_counts", "golden:cluster_chain4", "acceptance:7"]),
    ("cluster", "decompose_string", &["core/tests/cluster.rs::decomposition_audit_on_four_sites", "golden:cluster_chain4", "acceptance:8"]),
    ("fit", "front_extract", &["core/tests/fit.rs::larger_thresholds_never_arrive_earlier", "golden:fit_chain"]),
    ("fit", "fit_exponent", &["core/tests/fit.rs::recovers_planted_power_laws", "golden:fit_chain"]),
    ("fit", "cone_containment", &["core/tests/fit.rs::measured_front_sits_inside_the_cone", "golden:fit_chain"]),
    ("cli", "cmd_lattice_info", &["cli/tests/commands.rs::lattice_info_reports_certificates", "golden:lattice_grid"]),
    ("cli", "cmd_model_check", &["cli/tests/commands.rs::model_check_rejects_slow_decay", "golden:model_chain", "golden:model_zero"]),
    ("cli", "cmd_otoc", &["cli/tests/commands.rs::otoc_reruns_are_byte_identical", "golden:zz_otoc", "golden:otoc_stochastic"]),
    ("cli", "cmd_bound_check", &["cli/tests/commands.rs::bound_check_exit_codes", "golden:chain_bounds", "golden:chain_bounds_shrunk"]),
    ("cli", "cmd_cluster_audit", &["cli/tests/commands.rs::cluster_audit_flags_graph_budget", "golden:cluster_chain4", "golden:cluster_dyadic"]),
    ("cli", "cmd_fit", &["cli/tests/commands.rs::fit_reports_missing_input", "golden:fit_chain"]),
    ("docs-and-regression", "run_regression", &["cli/tests/regression.rs::corrupted_golden_fails_with_a_diff", "acceptance:10"]),
];

fn coverage(suite: &Suite) -> Vec<CoverageEntry> {
    COVERAGE
        .iter()
        .map(|(module, op, evidence)| CoverageEntry {
            module,
            op,
            evidence: evidence
                .iter()
                .map(|e| match e.strip_prefix("golden:") {
                    Some(name) if !suite.cases.iter().any(|c| c.name == name) => {
                        format!("{e} (not in this suite)")
                    }
                    _ => e.to_string(),
                })
                .collect(),
        })
        .collect()
}
