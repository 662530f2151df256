use std::collections::VecDeque;

use otoc_core::lattice::GammaWitness;
use otoc_core::{Boundary, Error, Lattice};
use proptest::prelude::*;

/// Breadth-first distances over the nearest-neighbour graph, built from
/// coordinates independently of the library's metric.
fn bfs_distances(extents: &[usize], periodic: bool) -> Vec<Vec<usize>> {
    let n: usize = extents.iter().product();
    let coords = |mut s: usize| {
        let mut c = vec![0; extents.len()];
        for ax in (0..extents.len()).rev() {
            c[ax] = s % extents[ax];
            s /= extents[ax];
        }
        c
    };
    let index = |c: &[usize]| c.iter().zip(extents).fold(0, |acc, (&x, &e)| acc * e + x);
    let neighbours = |s: usize| {
        let c = coords(s);
        let mut out = Vec::new();
        for ax in 0..extents.len() {
            for step in [-1i64, 1] {
                let mut d = c.clone();
                let x = c[ax] as i64 + step;
                let e = extents[ax] as i64;
                if x < 0 || x >= e {
                    if !periodic || e < 2 {
                        continue;
                    }
                    d[ax] = x.rem_euclid(e) as usize;
                } else {
                    d[ax] = x as usize;
                }
                out.push(index(&d));
            }
        }
        out
    };
    (0..n)
        .map(|src| {
            let mut dist = vec![usize::MAX; n];
            dist[src] = 0;
            let mut queue = VecDeque::from([src]);
            while let Some(s) = queue.pop_front() {
                for t in neighbours(s) {
                    if dist[t] == usize::MAX {
                        dist[t] = dist[s] + 1;
                        queue.push_back(t);
                    }
                }
            }
            dist
        })
        .collect()
}

fn shapes() -> Vec<(Vec<usize>, Boundary)> {
    vec![
        (vec![1], Boundary::Open),
        (vec![9], Boundary::Open),
        (vec![8], Boundary::Periodic),
        (vec![5, 5], Boundary::Open),
        (vec![4, 6], Boundary::Periodic),
        (vec![3, 3, 3], Boundary::Open),
        (vec![10, 10, 10], Boundary::Periodic),
    ]
}

#[test]
fn distance_matches_breadth_first_search() {
    for (extents, boundary) in shapes().into_iter().filter(|(e, _)| e.iter().product::<usize>() <= 100) {
        let lattice = Lattice::new(extents.clone(), boundary).unwrap();
        let oracle = bfs_distances(&extents, boundary == Boundary::Periodic);
        for a in 0..lattice.n_sites() {
            for b in 0..lattice.n_sites() {
                assert_eq!(lattice.distance(a, b), oracle[a][b], "{extents:?} {a} {b}");
            }
        }
    }
}

#[test]
fn metric_axioms_hold_up_to_a_thousand_sites() {
    for (extents, boundary) in shapes() {
        let lattice = Lattice::new(extents.clone(), boundary).unwrap();
        let n = lattice.n_sites();
        assert_eq!(n, extents.iter().product::<usize>());
        let d: Vec<Vec<usize>> = (0..n).map(|a| (0..n).map(|b| lattice.distance(a, b)).collect()).collect();
        for a in 0..n {
            assert_eq!(d[a][a], 0);
            for b in 0..n {
                assert_eq!(d[a][b], d[b][a]);
                assert!(a == b || d[a][b] > 0);
            }
        }
        // The triangle inequality is cubic; on the largest lattice sample
        // a deterministic stride of middle points.
        let stride = if n > 200 { 37 } else { 1 };
        for a in 0..n {
            for b in 0..n {
                for c in (0..n).step_by(stride) {
                    assert!(d[a][b] <= d[a][c] + d[c][b], "{extents:?} {a} {b} {c}");
                }
            }
        }
    }
}

#[test]
fn ball_examples() {
    let chain = Lattice::chain(9, Boundary::Open).unwrap();
    assert_eq!(chain.ball(4, 0).unwrap().sites(), &[4]);
    assert_eq!(chain.ball(4, 2).unwrap().sites(), &[2, 3, 4, 5, 6]);
    let grid = Lattice::new(vec![5, 5], Boundary::Open).unwrap();
    let center = grid.site(&[2, 2]).unwrap();
    assert_eq!(grid.ball(center, 1).unwrap().len(), 5);
    assert!(matches!(chain.ball(9, 1), Err(Error::SiteOutOfRange { site: 9, n: 9 })));
}

#[test]
fn balls_grow_monotonically() {
    for (extents, boundary) in shapes().into_iter().filter(|(e, _)| e.iter().product::<usize>() <= 100) {
        let lattice = Lattice::new(extents, boundary).unwrap();
        for i in 0..lattice.n_sites() {
            for r in 0..=lattice.diameter() {
                let small = lattice.ball(i, r).unwrap();
                let big = lattice.ball(i, r + 1).unwrap();
                assert!(small.is_subset(&big));
            }
        }
    }
}

#[test]
fn extend_region_examples() {
    let chain = Lattice::chain(9, Boundary::Open).unwrap();
    let x = chain.region([3, 4]).unwrap();
    assert_eq!(chain.extend_region(&x, 1).unwrap().sites(), &[2, 3, 4, 5]);
    assert_eq!(chain.extend_region(&x, 0).unwrap(), x);
    let single = chain.region([6]).unwrap();
    assert_eq!(chain.extend_region(&single, 2).unwrap(), chain.ball(6, 2).unwrap());
    let all = chain.full_region();
    assert_eq!(chain.extend_region(&all, 3).unwrap(), all);
}

#[test]
fn shells_follow_the_inner_boundary_convention() {
    let chain = Lattice::chain(9, Boundary::Open).unwrap();
    let x = chain.region(0..5).unwrap();
    assert_eq!(chain.surface(&x).unwrap().sites(), &[4]);
    assert_eq!(chain.shell(&x, 0).unwrap().sites(), &[4]);
    assert_eq!(chain.shell(&x, 1).unwrap().sites(), &[5]);
    assert_eq!(chain.shell(&x, -2).unwrap().sites(), &[2]);
    assert!(chain.shell(&x, 20).unwrap().is_empty());
    let inside: Vec<usize> = (-10..=0).flat_map(|s| chain.shell(&x, s).unwrap().sites().to_vec()).collect();
    let mut inside = inside;
    inside.sort_unstable();
    assert_eq!(inside, x.sites());
    assert!(matches!(chain.shell(&chain.full_region(), 0), Err(Error::DegenerateRegion)));
}

#[test]
fn shells_partition_the_lattice() {
    for (extents, boundary) in shapes().into_iter().filter(|(e, _)| e.iter().product::<usize>() <= 100) {
        let lattice = Lattice::new(extents.clone(), boundary).unwrap();
        if lattice.n_sites() < 2 {
            continue;
        }
        let diam = lattice.diameter() as i64;
        for center in [0, lattice.n_sites() / 2] {
            for r in 0..lattice.diameter() {
                let x = lattice.ball(center, r).unwrap();
                if x.len() == lattice.n_sites() {
                    continue;
                }
                let mut seen = vec![0u32; lattice.n_sites()];
                for s in -diam - 1..=diam + 1 {
                    for &i in lattice.shell(&x, s).unwrap().sites() {
                        seen[i] += 1;
                    }
                }
                assert!(seen.iter().all(|&c| c == 1), "{extents:?} center {center} r {r}");
                let table: usize = lattice.shell_table(&x).unwrap().iter().map(|(_, c)| c).sum();
                assert_eq!(table, lattice.n_sites());
            }
        }
    }
}

fn inner_shells_within_surface(lattice: &Lattice, i: usize, r0: usize) -> bool {
    let x = lattice.ball(i, r0).unwrap();
    let surface = lattice.surface(&x).unwrap().len();
    (1..=r0 as i64).all(|s| lattice.shell(&x, -s).unwrap().len() <= surface)
}

#[test]
fn inner_shells_stay_within_the_surface_on_chains_and_unclipped_balls() {
    for lattice in [
        Lattice::chain(9, Boundary::Open).unwrap(),
        Lattice::chain(8, Boundary::Periodic).unwrap(),
        Lattice::chain(13, Boundary::Open).unwrap(),
    ] {
        for i in 0..lattice.n_sites() {
            for r0 in 0..lattice.diameter() {
                if lattice.ball(i, r0).unwrap().len() < lattice.n_sites() {
                    assert!(inner_shells_within_surface(&lattice, i, r0), "chain i={i} r0={r0}");
                }
            }
        }
    }
    let grid = Lattice::new(vec![9, 9], Boundary::Open).unwrap();
    let center = grid.site(&[4, 4]).unwrap();
    for r0 in 0..=3 {
        assert!(inner_shells_within_surface(&grid, center, r0));
    }
}

#[test]
fn clipped_corner_ball_breaks_the_inner_shell_relation() {
    // A ball clipped by two open edges has a shorter surface than its
    // first inner shell, so the relation is checked per lattice.
    let grid = Lattice::new(vec![5, 5], Boundary::Open).unwrap();
    let x = grid.ball(0, 5).unwrap();
    assert_eq!(grid.surface(&x).unwrap().len(), 4);
    assert_eq!(grid.shell(&x, -1).unwrap().len(), 5);
    assert!(!inner_shells_within_surface(&grid, 0, 5));
}

#[test]
fn gamma_examples() {
    let chain = Lattice::chain(41, Boundary::Open).unwrap();
    let cert = chain.certify_gamma(10);
    assert_eq!(cert.gamma, 3.0);
    assert_eq!(cert.witness, GammaWitness::Ball);
    assert_eq!(cert.radius, 1);
    assert_eq!(Lattice::chain(1, Boundary::Open).unwrap().certify_gamma(5).gamma, 1.0);
    let grid = Lattice::new(vec![7, 7], Boundary::Open).unwrap();
    assert!(grid.certify_gamma(6).gamma >= 5.0);
}

/// |i[r]|, |∂i[r]| and the sphere size by brute force.
fn ball_stats(lattice: &Lattice, i: usize, r: usize) -> [usize; 3] {
    let ball = lattice.ball(i, r).unwrap();
    let sphere = (0..lattice.n_sites()).filter(|&j| lattice.distance(i, j) == r).count();
    let surface = if ball.len() == lattice.n_sites() { 0 } else { lattice.surface(&ball).unwrap().len() };
    [ball.len(), surface, sphere]
}

#[test]
fn gamma_is_the_tightest_valid_constant() {
    for (extents, boundary) in shapes().into_iter().filter(|(e, _)| e.iter().product::<usize>() <= 100) {
        let lattice = Lattice::new(extents.clone(), boundary).unwrap();
        let max_r = lattice.diameter().max(1);
        let cert = lattice.certify_gamma(max_r);
        let d = lattice.dimension() as i32;
        let mut tight = 1.0f64;
        for i in 0..lattice.n_sites() {
            for r in 1..=max_r {
                let [ball, surface, sphere] = ball_stats(&lattice, i, r);
                let rd = (r as f64).powi(d);
                let rs = (r as f64).powi(d - 1);
                assert!(ball as f64 <= cert.gamma * rd + 1e-12);
                assert!(surface as f64 <= cert.gamma * rs + 1e-12);
                assert!(sphere as f64 <= cert.gamma * rs + 1e-12);
                tight = tight.max(ball as f64 / rd).max(surface as f64 / rs).max(sphere as f64 / rs);
            }
        }
        assert_eq!(cert.gamma, tight, "{extents:?}");
    }
}

#[test]
fn lambda_two_site_by_hand() {
    let pair = Lattice::chain(2, Boundary::Open).unwrap();
    let alpha = 2.0;
    let cert = pair.certify_lambda(alpha).unwrap();
    // Diagonal: 1 + 2^{-2α}; off-diagonal: 2·2^{-α} / 2^{-α} = 2.
    let diag = 1.0 + 2f64.powf(-2.0 * alpha);
    let off = 2.0;
    assert!((cert.lambda - diag.max(off)).abs() < 1e-15);
    assert_eq!(cert.pairs_checked, 3);
}

#[test]
fn lambda_at_least_one_and_valid_for_every_pair() {
    for (extents, boundary) in shapes().into_iter().filter(|(e, _)| e.iter().product::<usize>() <= 64) {
        let lattice = Lattice::new(extents.clone(), boundary).unwrap();
        let dim = lattice.dimension() as f64;
        for alpha in [dim + 0.5, dim + 1.0, dim + 2.0] {
            let lambda = lattice.certify_lambda(alpha).unwrap().lambda;
            assert!(lambda >= 1.0);
            let w = |d: usize| ((d + 1) as f64).powf(-alpha);
            for i in 0..lattice.n_sites() {
                for ip in 0..lattice.n_sites() {
                    let conv: f64 = (0..lattice.n_sites())
                        .map(|i0| w(lattice.distance(i, i0)) * w(lattice.distance(i0, ip)))
                        .sum();
                    assert!(conv <= lambda * w(lattice.distance(i, ip)) * (1.0 + 1e-12));
                }
            }
        }
    }
    let chain = Lattice::chain(5, Boundary::Open).unwrap();
    assert!(matches!(
        chain.certify_lambda(1.0),
        Err(Error::InvalidDecayExponent { .. })
    ));
}

#[test]
fn decay_sum_examples() {
    let chain = Lattice::chain(50, Boundary::Open).unwrap();
    let check = chain.decay_sum_check(25, 5, 2.0).unwrap();
    let gamma = chain.certify_gamma(chain.diameter()).gamma;
    let lhs: f64 = (0..50usize)
        .map(|i| i.abs_diff(25))
        .filter(|&d| d > 5)
        .map(|d| ((d + 1) as f64).powi(-2))
        .sum();
    assert!((check.lhs - lhs).abs() < 1e-15);
    assert!((check.rhs - gamma / 1.0 * 6f64.powi(-1)).abs() < 1e-15);
    assert!(check.lhs <= check.rhs);
    let far = chain.decay_sum_check(0, 60, 2.0).unwrap();
    assert_eq!(far.lhs, 0.0);
    let steep = chain.decay_sum_check(25, 0, 60.0).unwrap();
    assert!(steep.lhs < 1e-17);
    assert!(chain.decay_sum_check(0, 1, 0.5).is_err());
}

#[test]
fn decay_sum_grid() {
    for (extents, boundary) in shapes().into_iter().filter(|(e, _)| e.iter().product::<usize>() <= 100) {
        let lattice = Lattice::new(extents, boundary).unwrap();
        let dim = lattice.dimension() as f64;
        let gamma = lattice.certify_gamma(lattice.diameter().max(1)).gamma;
        for ip in 0..lattice.n_sites() {
            for r in 0..=lattice.diameter() + 1 {
                for a in [dim + 0.25, dim + 1.0, dim + 3.0] {
                    let s = lattice.decay_sum_check_with_gamma(gamma, ip, r, a).unwrap();
                    assert!(s.lhs <= s.rhs, "site {ip} r {r} a {a}");
                }
            }
        }
    }
}

#[test]
fn rejects_bad_shapes() {
    assert!(matches!(Lattice::new(vec![], Boundary::Open), Err(Error::InvalidLattice(_))));
    assert!(matches!(Lattice::new(vec![3, 0], Boundary::Open), Err(Error::InvalidLattice(_))));
    let a = Lattice::chain(4, Boundary::Open).unwrap();
    let b = Lattice::chain(4, Boundary::Periodic).unwrap();
    let region = b.region([0]).unwrap();
    assert!(matches!(a.surface(&region), Err(Error::LatticeMismatch)));
}

#[test]
fn periodic_distance_wraps() {
    let ring = Lattice::chain(8, Boundary::Periodic).unwrap();
    assert_eq!(ring.distance(0, 7), 1);
    assert_eq!(ring.distance(1, 6), 3);
    let open = Lattice::chain(8, Boundary::Open).unwrap();
    assert_eq!(open.distance(0, 7), 7);
}

#[test]
fn coordinates_are_row_major() {
    let grid = Lattice::new(vec![3, 4], Boundary::Open).unwrap();
    assert_eq!(grid.coords(5), vec![1, 1]);
    assert_eq!(grid.site(&[2, 3]).unwrap(), 11);
    for s in 0..grid.n_sites() {
        assert_eq!(grid.site(&grid.coords(s)).unwrap(), s);
    }
}

proptest! {
    #[test]
    fn ball_is_exactly_the_distance_sublevel_set(
        e0 in 1usize..7, e1 in 1usize..7, periodic in any::<bool>(), r in 0usize..8, seed in 0usize..1000
    ) {
        let boundary = if periodic { Boundary::Periodic } else { Boundary::Open };
        let lattice = Lattice::new(vec![e0, e1], boundary).unwrap();
        let i = seed % lattice.n_sites();
        let ball = lattice.ball(i, r).unwrap();
        let expect: Vec<usize> = (0..lattice.n_sites()).filter(|&j| lattice.distance(i, j) <= r).collect();
        prop_assert_eq!(ball.sites(), expect.as_slice());
    }
}
