use otoc_core::bounds::{BoundKind, BoundSpec};
use otoc_core::evolve::Evolver;
use otoc_core::fit::{
    cone_containment, cone_time, fit_exponent, front_extract, front_svg, Front, OtocGrid, DEFAULT_DELTA,
    DELTA_SWEEP,
};
use otoc_core::locality::otoc_pauli;
use otoc_core::{Boundary, Error, Hamiltonian, Lattice, ModelSpec, PauliString};
use proptest::prelude::*;

fn front(points: Vec<(usize, f64)>) -> Front {
    Front {
        delta: DEFAULT_DELTA,
        points,
        non_crossing: Vec::new(),
        non_monotone: false,
    }
}

#[test]
fn zero_grid_has_no_front() {
    let grid = OtocGrid::new(vec![1, 2, 3], vec![0.0, 0.5, 1.0], vec![vec![0.0; 3]; 3]).unwrap();
    let f = front_extract(&grid, 0.1).unwrap();
    assert!(f.points.is_empty());
    assert_eq!(f.non_crossing, vec![1, 2, 3]);
    assert!(matches!(OtocGrid::new(vec![], vec![], vec![]), Err(Error::EmptyGrid)));
}

#[test]
fn grid_validation() {
    assert!(OtocGrid::new(vec![1], vec![0.0, 1.0], vec![vec![0.0]]).is_err());
    assert!(OtocGrid::new(vec![1], vec![1.0, 0.5], vec![vec![0.0, 0.0]]).is_err());
    let grid = OtocGrid::from_rows(&[(2, 0.5, 0.3), (1, 0.0, 0.0), (1, 0.5, 0.2), (2, 0.0, 0.0)]).unwrap();
    assert_eq!(grid.radii, vec![1, 2]);
    assert_eq!(grid.times, vec![0.0, 0.5]);
    assert_eq!(grid.values, vec![vec![0.0, 0.2], vec![0.0, 0.3]]);
    assert!(front_extract(&grid, 4.0).is_err());
    assert!(front_extract(&grid, 0.0).is_err());
}

#[test]
fn zz_front_inverts_the_closed_form() {
    let lattice = Lattice::chain(2, Boundary::Open).unwrap();
    let h = Hamiltonian::build(&ModelSpec::explicit(2.0, &[("Z0 Z1", 1.0)]), &lattice).unwrap();
    let evolver = Evolver::new(&h, 12).unwrap();
    let times: Vec<f64> = (0..=400).map(|k| k as f64 * 0.001).collect();
    let w = "X0".parse::<PauliString>().unwrap().to_dense(2).unwrap();
    let c = otoc_pauli(&evolver, &w, &"X1".parse().unwrap(), &times).unwrap();
    let grid = OtocGrid::new(vec![1], times, vec![c]).unwrap();
    let f = front_extract(&grid, 2.0).unwrap();
    // Linear interpolation of 4 sin²(2t) over a 1e-3 step.
    assert!((f.points[0].1 - std::f64::consts::PI / 8.0).abs() < 1e-6);
}

#[test]
fn synthetic_quadratic_front() {
    let radii: Vec<usize> = (1..=8).collect();
    let times: Vec<f64> = (0..=200).map(|k| k as f64 * 0.05).collect();
    let values = radii
        .iter()
        .map(|&r| times.iter().map(|t| (t / r as f64).powi(2)).collect())
        .collect();
    let grid = OtocGrid::new(radii.clone(), times, values).unwrap();
    let f = front_extract(&grid, 0.25).unwrap();
    assert!(!f.non_monotone);
    for (&r, &(fr, t)) in radii.iter().zip(&f.points) {
        assert_eq!(r, fr);
        // R/2 lies on the grid for every R, so interpolation is exact up to rounding.
        assert!((t - r as f64 / 2.0).abs() < 1e-12);
    }
    let fit = fit_exponent(&f).unwrap();
    assert!((fit.zeta_hat - 1.0).abs() < 1e-10);
    assert!((fit.prefactor - 0.5).abs() < 1e-10);
}

#[test]
fn crossing_at_the_first_sample() {
    let grid = OtocGrid::new(vec![1, 2], vec![0.0, 1.0], vec![vec![0.5, 1.0], vec![0.0, 1.0]]).unwrap();
    let f = front_extract(&grid, 0.1).unwrap();
    assert_eq!(f.points, vec![(1, 0.0), (2, 0.1)]);
}

#[test]
fn non_monotone_fronts_are_flagged() {
    let grid = OtocGrid::new(vec![1, 2], vec![0.0, 1.0], vec![vec![0.0, 0.2], vec![0.0, 1.0]]).unwrap();
    let f = front_extract(&grid, 0.1).unwrap();
    assert!(f.non_monotone);
}

#[test]
fn planted_exponents() {
    let sqrt = fit_exponent(&front((1..=10).map(|r| (r, (r as f64).sqrt())).collect())).unwrap();
    assert!((sqrt.zeta_hat - 0.5).abs() < 1e-12);
    let linear = fit_exponent(&front((2..=7).map(|r| (r, 2.0 * r as f64)).collect())).unwrap();
    assert!((linear.zeta_hat - 1.0).abs() < 1e-12);
    assert!((linear.prefactor - 2.0).abs() < 1e-12);
    assert!(linear.residuals.iter().all(|r| r.abs() < 1e-12));
    let with_theory = linear.with_theory(2.0, 1).unwrap();
    assert_eq!(with_theory.theory_zeta, Some(0.5));
}

#[test]
fn fit_rejects_degenerate_fronts() {
    assert!(matches!(
        fit_exponent(&front(vec![(1, 1.0), (2, 2.0)])),
        Err(Error::InsufficientPoints { got: 2 })
    ));
    assert!(fit_exponent(&front(vec![(1, 1.0), (2, 0.0), (3, 2.0)])).is_err());
    assert!(fit_exponent(&front(vec![(0, 1.0), (2, 1.0), (3, 2.0)])).is_err());
    assert!(fit_exponent(&front(vec![(2, 1.0), (2, 1.5), (2, 2.0)])).is_err());
}

proptest! {
    #[test]
    fn recovers_planted_power_laws(zeta in 0.05f64..2.0, a in 0.01f64..100.0, start in 1usize..5, len in 3usize..12) {
        let pts: Vec<(usize, f64)> = (start..start + len).map(|r| (r, a * (r as f64).powf(zeta))).collect();
        let fit = fit_exponent(&front(pts)).unwrap();
        prop_assert!((fit.zeta_hat - zeta).abs() <= 1e-10 * zeta);
        prop_assert!((fit.prefactor - a).abs() <= 1e-10 * a);
    }

    #[test]
    fn larger_thresholds_never_arrive_earlier(
        rows in proptest::collection::vec(proptest::collection::vec(0.0f64..4.0, 12), 1..5),
        d1 in 0.01f64..3.9,
        d2 in 0.01f64..3.9,
    ) {
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let radii: Vec<usize> = (1..=rows.len()).collect();
        let times: Vec<f64> = (0..12).map(|k| k as f64 * 0.3).collect();
        let grid = OtocGrid::new(radii, times, rows).unwrap();
        let a = front_extract(&grid, lo).unwrap();
        let b = front_extract(&grid, hi).unwrap();
        for &(r, t_hi) in &b.points {
            let t_lo = a.points.iter().find(|p| p.0 == r).expect("lower threshold crosses first").1;
            prop_assert!(t_lo <= t_hi + 1e-12);
        }
    }
}

fn chain_front(n: usize, alpha: f64) -> (Lattice, Hamiltonian, Front) {
    let lattice = Lattice::chain(n, Boundary::Open).unwrap();
    let h = Hamiltonian::build(&ModelSpec::ising(1.0, alpha, 0.0), &lattice).unwrap();
    let evolver = Evolver::new(&h, 12).unwrap();
    let times: Vec<f64> = (0..=60).map(|k| k as f64 * 0.05).collect();
    let w = "Z0".parse::<PauliString>().unwrap().to_dense(n).unwrap();
    let radii: Vec<usize> = (1..n).collect();
    let values = radii
        .iter()
        .map(|r| otoc_pauli(&evolver, &w, &format!("Z{r}").parse().unwrap(), &times).unwrap())
        .collect();
    let grid = OtocGrid::new(radii, times, values).unwrap();
    (lattice, h, front_extract(&grid, DEFAULT_DELTA).unwrap())
}

#[test]
fn measured_front_sits_inside_the_cone() {
    let (lattice, h, f) = chain_front(8, 2.0);
    let consts = h.derived_constants(&lattice.certify(2.0).unwrap()).unwrap();
    let spec = BoundSpec::new(BoundKind::Theorem1, consts, consts.tau_star / 2.0);
    let fit = fit_exponent(&f).unwrap().with_theory(2.0, 1).unwrap().with_containment(&spec).unwrap();
    assert!(fit.zeta_hat.is_finite());
    assert_eq!(fit.residuals.len(), f.points.len());
    assert_eq!(fit.contained(), Some(true));
    for p in fit.containment.as_ref().unwrap() {
        assert!(!p.degenerate);
        assert!(cone_time(p.r, DEFAULT_DELTA, &consts, spec.dt).unwrap() <= p.t_star);
    }
    for delta in DELTA_SWEEP {
        let swept = front_extract(&OtocGrid::new(vec![1], vec![0.0, 1.0], vec![vec![0.0, 4.0]]).unwrap(), delta).unwrap();
        assert!((swept.points[0].1 - delta / 4.0).abs() < 1e-15);
    }
}

#[test]
fn shrunk_constants_expose_failures() {
    let (lattice, h, f) = chain_front(8, 2.0);
    let consts = h.derived_constants(&lattice.certify(2.0).unwrap()).unwrap().with_scaled_c0(1e-8);
    let spec = BoundSpec::new(BoundKind::Theorem1, consts, consts.tau_star / 2.0);
    let pts = cone_containment(&f, &spec).unwrap();
    assert!(pts.iter().any(|p| !p.pass));
}

#[test]
fn degenerate_points_are_flagged_not_failed() {
    let lattice = Lattice::chain(6, Boundary::Open).unwrap();
    let h = Hamiltonian::build(&ModelSpec::ising(1.0, 2.0, 0.0), &lattice).unwrap();
    let consts = h.derived_constants(&lattice.certify(2.0).unwrap()).unwrap();
    let spec = BoundSpec::new(BoundKind::Theorem1, consts, consts.tau_star / 2.0);
    let f = front(vec![(2, 0.0), (3, 0.5)]);
    let pts = cone_containment(&f, &spec).unwrap();
    assert!(pts[0].degenerate && !pts[0].pass && pts[0].rhs == 0.0);
    assert!(pts[1].pass && !pts[1].degenerate);
    let wrong = BoundSpec::new(BoundKind::OpnormEq12, consts, spec.dt);
    assert!(cone_containment(&f, &wrong).is_err());
}

#[test]
fn svg_is_self_contained_and_deterministic() {
    let fit = fit_exponent(&front((1..=5).map(|r| (r, 0.3 * r as f64)).collect())).unwrap();
    let cone = [(2, 0.01), (5, 0.05)];
    let a = front_svg(&fit, &cone, None);
    assert_eq!(a, front_svg(&fit, &cone, None));
    assert!(a.starts_with("<svg") && a.trim_end().ends_with("</svg>"));
    assert!(!a.contains("http://") || a.matches("http://").count() == 1);
    let stamped = front_svg(&fit, &cone, Some("2026-01-01T00:00:00Z"));
    assert!(stamped.contains("2026-01-01T00:00:00Z"));
    assert!(!a.contains("2026"));
}
