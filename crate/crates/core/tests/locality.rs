use num_complex::Complex64 as C;
use otoc_core::evolve::Evolver;
use otoc_core::locality::{
    approx_error, local_restrict, otoc, otoc_pauli, schatten_norm, unitary_connection, NormKind,
};
use otoc_core::{Boundary, DenseOperator, Hamiltonian, Lattice, Letter, ModelSpec, PauliString, Phase};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn chain(n: usize) -> Lattice {
    Lattice::chain(n, Boundary::Open).unwrap()
}

fn pauli(text: &str, n: usize) -> DenseOperator {
    text.parse::<PauliString>().unwrap().to_dense(n).unwrap()
}

fn zz() -> Hamiltonian {
    Hamiltonian::build(&ModelSpec::explicit(2.0, &[("Z0 Z1", 1.0)]), &chain(2)).unwrap()
}

fn random_operator(rng: &mut impl Rng, n: usize) -> DenseOperator {
    DenseOperator::from_fn(n, |_, _| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

/// A random combination of Pauli strings supported on `sites`.
fn random_local(rng: &mut impl Rng, n: usize, sites: &[usize], terms: usize) -> DenseOperator {
    let mut out = DenseOperator::zeros(n);
    for _ in 0..terms {
        let letters = sites.iter().filter_map(|&s| match rng.gen_range(0..4) {
            0 => None,
            1 => Some((s, Letter::X)),
            2 => Some((s, Letter::Y)),
            _ => Some((s, Letter::Z)),
        });
        let p = PauliString::from_letters(letters).unwrap().with_phase(Phase::ONE);
        out.axpy(C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)), &p.to_dense(n).unwrap());
    }
    out
}

#[test]
fn norm_examples() {
    for n in [1, 3, 5] {
        let id = DenseOperator::identity(n);
        assert_eq!(schatten_norm(&id, NormKind::NormalizedFrobenius).unwrap(), 1.0);
        let z = pauli("Z0", n);
        assert_eq!(schatten_norm(&z, NormKind::NormalizedFrobenius).unwrap(), 1.0);
        assert!((schatten_norm(&z, NormKind::Operator).unwrap() - 1.0).abs() < 1e-14);
        assert!((schatten_norm(&z, NormKind::Trace).unwrap() - (1 << n) as f64).abs() < 1e-12);
        let s2 = schatten_norm(&z, NormKind::Schatten2).unwrap();
        assert!((s2 - ((1 << n) as f64).sqrt()).abs() < 1e-12);
    }
}

#[test]
fn holder_and_norm_ordering() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..40 {
        let n = rng.gen_range(1..=5);
        let a = random_operator(&mut rng, n);
        let b = random_operator(&mut rng, n);
        let ab = a.matmul(&b);
        let f = |o: &DenseOperator| schatten_norm(o, NormKind::NormalizedFrobenius).unwrap();
        let op = |o: &DenseOperator| schatten_norm(o, NormKind::Operator).unwrap();
        assert!(f(&ab) <= f(&a) * op(&b) * (1.0 + 1e-12));
        for o in [&a, &b, &ab] {
            assert!(f(o) <= op(o) * (1.0 + 1e-12));
            let p1 = schatten_norm(o, NormKind::Trace).unwrap();
            let p2 = schatten_norm(o, NormKind::Schatten2).unwrap();
            assert!(op(o) <= p2 * (1.0 + 1e-12) && p2 <= p1 * (1.0 + 1e-12));
        }
    }
}

#[test]
fn operator_norm_of_hermitian_matches_singular_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = random_operator(&mut rng, 5).hermitian_part();
    let svd = h.singular_values().unwrap()[0];
    assert!((schatten_norm(&h, NormKind::Operator).unwrap() - svd).abs() < 1e-12 * svd);
}

#[test]
fn restrict_examples() {
    let lattice = chain(2);
    let x0 = pauli("X0", 2);
    let r1 = local_restrict(&x0, &lattice.region([1]).unwrap()).unwrap();
    assert_eq!(r1.max_abs_diff(&DenseOperator::zeros(2)), 0.0);
    let r0 = local_restrict(&x0, &lattice.region([0]).unwrap()).unwrap();
    assert!(r0.max_abs_diff(&x0) < 1e-15);
    let full = local_restrict(&x0, &lattice.full_region()).unwrap();
    assert_eq!(full.max_abs_diff(&x0), 0.0);

    let evolver = Evolver::new(&zz(), 12).unwrap();
    for k in 0..25 {
        let t = 0.13 * k as f64;
        let wt = evolver.evolve(&x0, t).unwrap();
        let r = local_restrict(&wt, &lattice.region([0]).unwrap()).unwrap();
        assert!(r.max_abs_diff(&x0.scale(C::new((2.0 * t).cos(), 0.0))) < 1e-13);
        let err = schatten_norm(&(&wt - &r), NormKind::NormalizedFrobenius).unwrap();
        assert!((err - (2.0 * t).sin().abs()).abs() < 1e-13);
    }
}

#[test]
fn restrict_is_a_contracting_idempotent_local_projection() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let lattice = chain(5);
    for sites in [vec![0], vec![1, 3], vec![0, 2, 4], vec![2, 3]] {
        let region = lattice.region(sites.clone()).unwrap();
        let outside: Vec<usize> = (0..5).filter(|s| !sites.contains(s)).collect();
        let o = random_operator(&mut rng, 5);
        let r = local_restrict(&o, &region).unwrap();
        assert!(local_restrict(&r, &region).unwrap().max_abs_diff(&r) < 1e-14);
        assert!(r.operator_norm().unwrap() <= o.operator_norm().unwrap() * (1.0 + 1e-12));
        let b = random_local(&mut rng, 5, &outside, 6);
        assert!(r.commutator(&b).max_abs_diff(&DenseOperator::zeros(5)) < 1e-12);
        let a = random_local(&mut rng, 5, &sites, 6);
        assert!(local_restrict(&a, &region).unwrap().max_abs_diff(&a) < 1e-13);
    }
}

#[test]
fn restrict_is_frobenius_optimal() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let lattice = chain(4);
    for _ in 0..20 {
        let k = rng.gen_range(1..4);
        let mut sites: Vec<usize> = (0..4).collect();
        sites.retain(|_| rng.gen_bool(0.6));
        sites.truncate(k);
        if sites.is_empty() {
            sites.push(1);
        }
        let region = lattice.region(sites.clone()).unwrap();
        let o = random_operator(&mut rng, 4).hermitian_part();
        let best = (&o - &local_restrict(&o, &region).unwrap()).normalized_frobenius();
        for _ in 0..30 {
            let a = random_local(&mut rng, 4, &sites, 8);
            assert!(best <= (&o - &a).normalized_frobenius() + 1e-12);
        }
    }
}

#[test]
fn approx_error_examples() {
    let h = zz();
    let lattice = h.lattice().clone();
    let evolver = Evolver::new(&h, 12).unwrap();
    let x = lattice.region([0]).unwrap();
    let x0 = pauli("X0", 2);
    for t in [0.0, 0.2, 0.9, -1.4] {
        let rec = approx_error(&h, &evolver, &x0, &x, t, 0, NormKind::NormalizedFrobenius).unwrap();
        assert!((rec.error - (2.0 * t).sin().abs()).abs() < 1e-13);
        let wide = approx_error(&h, &evolver, &x0, &x, t, 1, NormKind::Operator).unwrap();
        assert!(wide.error < 1e-13);
        assert_eq!(wide.region, lattice.full_region());
    }
}

#[test]
fn zz_otoc_closed_form() {
    let evolver = Evolver::new(&zz(), 12).unwrap();
    let times: Vec<f64> = (0..50).map(|k| -2.0 + 0.09 * k as f64).collect();
    let dense = otoc(&evolver, &pauli("X0", 2), &pauli("X1", 2), &times).unwrap();
    let fast = otoc_pauli(&evolver, &pauli("X0", 2), &"X1".parse().unwrap(), &times).unwrap();
    for ((t, a), b) in times.iter().zip(&dense).zip(&fast) {
        let expect = 4.0 * (2.0 * t).sin().powi(2);
        assert!((a - expect).abs() < 1e-10);
        assert!((b - expect).abs() < 1e-10);
    }
}

#[test]
fn otoc_bounds_and_chain_inequality() {
    let n = 7;
    let lattice = chain(n);
    for alpha in [1.5, 3.0] {
        let h = Hamiltonian::build(&ModelSpec::ising(1.0, alpha, 0.7), &lattice).unwrap();
        let evolver = Evolver::new(&h, 12).unwrap();
        let w = pauli("Z0", n);
        let x = lattice.region([0]).unwrap();
        let times = [0.0, 0.1, 0.4, 1.0, 2.5];
        for big_r in 1..n {
            let v: PauliString = format!("X{big_r}").parse().unwrap();
            let c = otoc_pauli(&evolver, &w, &v, &times).unwrap();
            assert_eq!(c[0], 0.0);
            for (&t, &value) in times.iter().zip(&c) {
                assert!((-1e-12..=4.0 + 1e-12).contains(&value));
                let rec = approx_error(&h, &evolver, &w, &x, t, big_r - 1, NormKind::NormalizedFrobenius).unwrap();
                assert!(value <= 4.0 * rec.error.powi(2) * (1.0 + 1e-10) + 1e-14, "R {big_r} t {t}");
            }
        }
    }
}

#[test]
fn single_step_recursion_is_the_direct_projection() {
    let n = 6;
    let lattice = chain(n);
    let h = Hamiltonian::build(&ModelSpec::ising(1.0, 2.0, 0.5), &lattice).unwrap();
    let evolver = Evolver::new(&h, 12).unwrap();
    let w = pauli("X2", n);
    let norms = [NormKind::NormalizedFrobenius, NormKind::Operator];
    let trace = unitary_connection(&h, &evolver, &w, 2, 0, 0.6, 1, 2, &norms, None).unwrap();
    for kind in norms {
        let rec = approx_error(&h, &evolver, &w, &lattice.region([2]).unwrap(), 0.6, 2, kind).unwrap();
        assert!((trace.telescoped[&kind] - rec.error).abs() < 1e-12);
        assert!((trace.direct[&kind] - rec.error).abs() < 1e-12);
    }
}

#[test]
fn zero_time_recursion_is_trivial() {
    let n = 5;
    let h = Hamiltonian::build(&ModelSpec::ising(1.0, 2.0, 0.5), &chain(n)).unwrap();
    let evolver = Evolver::new(&h, 12).unwrap();
    let w = pauli("Z1", n);
    let trace = unitary_connection(&h, &evolver, &w, 1, 0, 0.0, 3, 3, &[NormKind::Operator], None).unwrap();
    assert!(trace.steps.iter().all(|s| s.errors[&NormKind::Operator] < 1e-13));
    assert!(trace.final_operator.max_abs_diff(&w) < 1e-13);
}

#[test]
fn recursion_on_a_ten_site_chain() {
    let n = 10;
    let lattice = chain(n);
    let h = Hamiltonian::build(&ModelSpec::ising(1.0, 2.0, 0.0), &lattice).unwrap();
    let evolver = Evolver::new(&h, 12).unwrap();
    let w = pauli("Z4", n);
    let norms = [NormKind::NormalizedFrobenius, NormKind::Operator];
    let trace = unitary_connection(&h, &evolver, &w, 4, 0, 0.5, 2, 4, &norms, None).unwrap();
    assert_eq!(trace.dr, 2);
    assert!(!trace.radius_rounded);
    assert_eq!(trace.regions.len(), 3);
    assert_eq!(trace.regions[2], lattice.ball(4, 4).unwrap());
    assert!((trace.dt * trace.m_t as f64 - trace.t).abs() < 1e-15);
    for kind in norms {
        let sum: f64 = trace.steps.iter().map(|s| s.errors[&kind]).sum();
        assert!((sum - trace.telescoped[&kind]).abs() < 1e-15);
        assert!(trace.direct[&kind] <= trace.telescoped[&kind] * (1.0 + 1e-12));
        assert!(trace.steps.iter().all(|s| s.errors[&kind] >= 0.0));
    }
    let f = NormKind::NormalizedFrobenius;
    assert!(trace.projection[&f] <= trace.direct[&f] * (1.0 + 1e-12));
}

#[test]
fn rounded_radius_and_slice_warning() {
    let n = 6;
    let h = Hamiltonian::build(&ModelSpec::ising(1.0, 2.0, 0.0), &chain(n)).unwrap();
    let evolver = Evolver::new(&h, 12).unwrap();
    let w = pauli("Z0", n);
    let trace = unitary_connection(&h, &evolver, &w, 0, 0, 0.3, 2, 3, &[NormKind::Operator], Some(0.1)).unwrap();
    assert!(trace.radius_rounded);
    assert_eq!(trace.dr, 1);
    assert_eq!(trace.regions[1].len(), 2);
    assert_eq!(trace.regions[2].len(), 4);
    assert_eq!(trace.warnings.len(), 1);
    assert!(unitary_connection(&h, &evolver, &w, 0, 0, 0.3, 0, 3, &[NormKind::Operator], None).is_err());
}

#[test]
fn time_reversal_symmetry_on_presets() {
    let n = 5;
    let h = Hamiltonian::build(&ModelSpec::ising(1.0, 2.0, 0.5), &chain(n)).unwrap();
    let evolver = Evolver::new(&h, 12).unwrap();
    let w = pauli("Z0", n);
    let times = [0.3, 0.8];
    let back: Vec<f64> = times.iter().map(|t| -t).collect();
    let v: PauliString = "Z3".parse().unwrap();
    let fwd = otoc_pauli(&evolver, &w, &v, &times).unwrap();
    let rev = otoc_pauli(&evolver, &w, &v, &back).unwrap();
    for (a, b) in fwd.iter().zip(&rev) {
        assert!((a - b).abs() < 1e-12);
    }
}
