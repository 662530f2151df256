//! Hypercubic lattice geometry: distances, balls, surface shells and the
//! finite-lattice certificates for the constants γ and λ.
//!
//! Sites are indexed row-major over coordinates (the last axis varies
//! fastest). Distances are graph distances on the nearest-neighbour graph,
//! i.e. the L1 metric, wrapped on periodic axes.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

#[derive(Clone, Debug)]
pub struct Lattice {
    extents: Vec<usize>,
    boundary: Boundary,
    n: usize,
    id: u64,
    neighbors: Vec<Vec<usize>>,
}

/// Sorted, duplicate-free set of sites tied to the lattice it was built on.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Region {
    sites: Vec<usize>,
    #[serde(skip)]
    lattice_id: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaWitness {
    /// `|i[r]| / r^D`
    Ball,
    /// `|∂ i[r]| / r^(D-1)`
    Boundary,
    /// `|{i' : d(i,i') = r}| / r^(D-1)`
    Sphere,
    /// Nothing exceeded the floor γ = 1.
    Floor,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GammaCertificate {
    pub gamma: f64,
    pub max_r: usize,
    pub site: usize,
    pub radius: usize,
    pub witness: GammaWitness,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LambdaCertificate {
    pub lambda: f64,
    pub alpha: f64,
    pub pairs_checked: usize,
    pub pair: (usize, usize),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeometricConstants {
    pub gamma: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub max_r: usize,
    pub pairs_checked: usize,
    pub gamma_certificate: GammaCertificate,
    pub lambda_certificate: LambdaCertificate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecaySum {
    pub lhs: f64,
    pub rhs: f64,
}

impl Lattice {
    pub fn new(extents: Vec<usize>, boundary: Boundary) -> Result<Self> {
        if extents.is_empty() {
            return Err(Error::InvalidLattice("at least one axis is required".into()));
        }
        if extents.iter().any(|&e| e == 0) {
            return Err(Error::InvalidLattice("every extent must be positive".into()));
        }
        let n = extents
            .iter()
            .try_fold(1usize, |acc, &e| acc.checked_mul(e))
            .ok_or_else(|| Error::InvalidLattice("site count overflows".into()))?;

        let mut hasher = DefaultHasher::new();
        extents.hash(&mut hasher);
        boundary.hash(&mut hasher);
        let id = hasher.finish();

        let mut lattice = Self {
            extents,
            boundary,
            n,
            id,
            neighbors: Vec::new(),
        };
        lattice.neighbors = (0..n).map(|i| lattice.compute_neighbors(i)).collect();
        Ok(lattice)
    }

    pub fn chain(n: usize, boundary: Boundary) -> Result<Self> {
        Self::new(vec![n], boundary)
    }

    pub fn dimension(&self) -> usize {
        self.extents.len()
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn coords(&self, site: usize) -> Vec<usize> {
        let mut rem = site;
        let mut out = vec![0; self.extents.len()];
        for (axis, &e) in self.extents.iter().enumerate().rev() {
            out[axis] = rem % e;
            rem /= e;
        }
        out
    }

    pub fn site(&self, coords: &[usize]) -> Result<usize> {
        if coords.len() != self.extents.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} coordinates, got {}",
                self.extents.len(),
                coords.len()
            )));
        }
        let mut idx = 0;
        for (&c, &e) in coords.iter().zip(&self.extents) {
            if c >= e {
                return Err(Error::InvalidArgument(format!("coordinate {c} outside extent {e}")));
            }
            idx = idx * e + c;
        }
        Ok(idx)
    }

    pub fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.n {
            return Err(Error::SiteOutOfRange { site, n: self.n });
        }
        Ok(())
    }

    pub fn distance(&self, a: usize, b: usize) -> usize {
        let mut ra = a;
        let mut rb = b;
        let mut d = 0;
        for &e in self.extents.iter().rev() {
            let (ca, cb) = (ra % e, rb % e);
            ra /= e;
            rb /= e;
            let diff = ca.abs_diff(cb);
            d += match self.boundary {
                Boundary::Open => diff,
                Boundary::Periodic => diff.min(e - diff),
            };
        }
        d
    }

    pub fn neighbors(&self, site: usize) -> &[usize] {
        &self.neighbors[site]
    }

    fn compute_neighbors(&self, site: usize) -> Vec<usize> {
        let coords = self.coords(site);
        let mut out = Vec::new();
        for (axis, &e) in self.extents.iter().enumerate() {
            let c = coords[axis];
            let mut candidates = Vec::with_capacity(2);
            match self.boundary {
                Boundary::Open => {
                    if c > 0 {
                        candidates.push(c - 1);
                    }
                    if c + 1 < e {
                        candidates.push(c + 1);
                    }
                }
                Boundary::Periodic => {
                    candidates.push((c + e - 1) % e);
                    candidates.push((c + 1) % e);
                }
            }
            for nc in candidates {
                if nc == c {
                    continue;
                }
                let mut moved = coords.clone();
                moved[axis] = nc;
                let idx = self.site(&moved).expect("neighbour coordinates are in range");
                if !out.contains(&idx) {
                    out.push(idx);
                }
            }
        }
        out.sort_unstable();
        out
    }

    pub fn diameter(&self) -> usize {
        self.extents
            .iter()
            .map(|&e| match self.boundary {
                Boundary::Open => e - 1,
                Boundary::Periodic => e / 2,
            })
            .sum()
    }

    pub fn region<I: IntoIterator<Item = usize>>(&self, sites: I) -> Result<Region> {
        let mut v: Vec<usize> = sites.into_iter().collect();
        for &s in &v {
            self.check_site(s)?;
        }
        v.sort_unstable();
        v.dedup();
        Ok(Region {
            sites: v,
            lattice_id: self.id,
        })
    }

    pub fn full_region(&self) -> Region {
        Region {
            sites: (0..self.n).collect(),
            lattice_id: self.id,
        }
    }

    fn owns(&self, region: &Region) -> Result<()> {
        if region.lattice_id != self.id {
            return Err(Error::LatticeMismatch);
        }
        Ok(())
    }

    pub fn complement(&self, region: &Region) -> Result<Region> {
        self.owns(region)?;
        Ok(Region {
            sites: (0..self.n).filter(|s| !region.contains(*s)).collect(),
            lattice_id: self.id,
        })
    }

    /// `i[r] = {i' : d(i,i') ≤ r}`.
    pub fn ball(&self, i: usize, r: usize) -> Result<Region> {
        self.check_site(i)?;
        Ok(Region {
            sites: (0..self.n).filter(|&j| self.distance(i, j) <= r).collect(),
            lattice_id: self.id,
        })
    }

    /// `d(i, X) = min_{x∈X} d(i, x)`; `None` for empty `X`.
    pub fn distance_to_region(&self, i: usize, region: &Region) -> Option<usize> {
        region.sites.iter().map(|&x| self.distance(i, x)).min()
    }

    /// `X[r] = {i : d(X, i) ≤ r}`.
    pub fn extend_region(&self, region: &Region, r: usize) -> Result<Region> {
        self.owns(region)?;
        if region.is_empty() {
            return Err(Error::EmptyRegion);
        }
        Ok(Region {
            sites: (0..self.n)
                .filter(|&j| self.distance_to_region(j, region).is_some_and(|d| d <= r))
                .collect(),
            lattice_id: self.id,
        })
    }

    /// Inner boundary `∂X = {i ∈ X : some neighbour of i lies outside X}`.
    pub fn surface(&self, region: &Region) -> Result<Region> {
        self.owns(region)?;
        Ok(Region {
            sites: region
                .sites
                .iter()
                .copied()
                .filter(|&i| self.neighbors[i].iter().any(|&j| !region.contains(j)))
                .collect(),
            lattice_id: self.id,
        })
    }

    /// `(∂X)_s`: for `s ≤ 0` the sites of `X` at distance `|s|` from `∂X`,
    /// for `s > 0` the sites of `X^c` at distance `s` from `∂X`.
    pub fn shell(&self, region: &Region, s: i64) -> Result<Region> {
        let surface = self.checked_surface(region)?;
        let target = s.unsigned_abs() as usize;
        let inside = s <= 0;
        Ok(Region {
            sites: (0..self.n)
                .filter(|&i| region.contains(i) == inside)
                .filter(|&i| self.distance_to_region(i, &surface) == Some(target))
                .collect(),
            lattice_id: self.id,
        })
    }

    /// Shell sizes `|(∂X)_s|` for every non-empty `s`, ascending in `s`.
    pub fn shell_table(&self, region: &Region) -> Result<Vec<(i64, usize)>> {
        let surface = self.checked_surface(region)?;
        let mut counts = std::collections::BTreeMap::new();
        for i in 0..self.n {
            let d = self
                .distance_to_region(i, &surface)
                .expect("surface is non-empty") as i64;
            let s = if region.contains(i) { -d } else { d };
            *counts.entry(s).or_insert(0usize) += 1;
        }
        Ok(counts.into_iter().collect())
    }

    fn checked_surface(&self, region: &Region) -> Result<Region> {
        self.owns(region)?;
        if region.is_empty() {
            return Err(Error::EmptyRegion);
        }
        if region.len() == self.n {
            return Err(Error::DegenerateRegion);
        }
        self.surface(region)
    }

    /// Smallest γ ≥ 1 with `|i[r]| ≤ γ r^D`, `|∂i[r]| ≤ γ r^(D−1)` and
    /// `|{d(i,·) = r}| ≤ γ r^(D−1)` for every site and `1 ≤ r ≤ max_r`.
    pub fn certify_gamma(&self, max_r: usize) -> GammaCertificate {
        let dim = self.dimension() as i32;
        let max_r = max_r.max(1);
        let mut best = GammaCertificate {
            gamma: 1.0,
            max_r,
            site: 0,
            radius: 1,
            witness: GammaWitness::Floor,
        };
        let mut dist = vec![0usize; self.n];
        let mut sphere = vec![0usize; max_r + 2];
        let mut outer = vec![0usize; max_r + 2];
        for i in 0..self.n {
            sphere.iter_mut().for_each(|c| *c = 0);
            outer.iter_mut().for_each(|c| *c = 0);
            for (j, d) in dist.iter_mut().enumerate() {
                *d = self.distance(i, j);
            }
            for j in 0..self.n {
                let d = dist[j];
                if d > max_r {
                    continue;
                }
                sphere[d] += 1;
                if self.neighbors[j].iter().any(|&k| dist[k] == d + 1) {
                    outer[d] += 1;
                }
            }
            let mut ball = sphere[0];
            for r in 1..=max_r {
                ball += sphere[r];
                let rd = (r as f64).powi(dim);
                let rs = (r as f64).powi(dim - 1);
                for (value, witness) in [
                    (ball as f64 / rd, GammaWitness::Ball),
                    (outer[r] as f64 / rs, GammaWitness::Boundary),
                    (sphere[r] as f64 / rs, GammaWitness::Sphere),
                ] {
                    if value > best.gamma {
                        best = GammaCertificate {
                            gamma: value,
                            max_r,
                            site: i,
                            radius: r,
                            witness,
                        };
                    }
                }
            }
        }
        best
    }

    /// Tightest λ with `Σ_{i0} (d(i,i0)+1)^−α (d(i0,i')+1)^−α ≤ λ (d(i,i')+1)^−α`
    /// over every ordered pair, diagonal included.
    pub fn certify_lambda(&self, alpha: f64) -> Result<LambdaCertificate> {
        self.check_alpha(alpha)?;
        let diam = self.diameter();
        let weight: Vec<f64> = (0..=diam).map(|d| ((d + 1) as f64).powf(-alpha)).collect();
        let dist: Vec<Vec<usize>> = (0..self.n)
            .map(|i| (0..self.n).map(|j| self.distance(i, j)).collect())
            .collect();
        let mut best = LambdaCertificate {
            lambda: 0.0,
            alpha,
            pairs_checked: 0,
            pair: (0, 0),
        };
        for i in 0..self.n {
            for ip in i..self.n {
                let conv: f64 = (0..self.n)
                    .map(|i0| weight[dist[i][i0]] * weight[dist[i0][ip]])
                    .sum();
                let ratio = conv / weight[dist[i][ip]];
                best.pairs_checked += 1;
                if ratio > best.lambda {
                    best.lambda = ratio;
                    best.pair = (i, ip);
                }
            }
        }
        Ok(best)
    }

    /// Both certificates; γ is certified over the full lattice diameter.
    pub fn certify(&self, alpha: f64) -> Result<GeometricConstants> {
        let gamma_certificate = self.certify_gamma(self.diameter().max(1));
        let lambda_certificate = self.certify_lambda(alpha)?;
        Ok(GeometricConstants {
            gamma: gamma_certificate.gamma,
            lambda: lambda_certificate.lambda,
            alpha,
            max_r: gamma_certificate.max_r,
            pairs_checked: lambda_certificate.pairs_checked,
            gamma_certificate,
            lambda_certificate,
        })
    }

    /// `lhs = Σ_{d(i,i')>r} (d+1)^−a` against `rhs = γ/(a−D) (r+1)^(−a+D)`.
    pub fn decay_sum_check(&self, i_prime: usize, r: usize, a: f64) -> Result<DecaySum> {
        let gamma = self.certify_gamma(self.diameter().max(1)).gamma;
        self.decay_sum_check_with_gamma(gamma, i_prime, r, a)
    }

    pub fn decay_sum_check_with_gamma(
        &self,
        gamma: f64,
        i_prime: usize,
        r: usize,
        a: f64,
    ) -> Result<DecaySum> {
        self.check_site(i_prime)?;
        self.check_alpha(a)?;
        let dim = self.dimension() as f64;
        let lhs = (0..self.n)
            .map(|i| self.distance(i, i_prime))
            .filter(|&d| d > r)
            .map(|d| ((d + 1) as f64).powf(-a))
            .sum();
        let rhs = gamma / (a - dim) * ((r + 1) as f64).powf(-a + dim);
        Ok(DecaySum { lhs, rhs })
    }

    pub fn check_alpha(&self, alpha: f64) -> Result<()> {
        if !(alpha > self.dimension() as f64) || !alpha.is_finite() {
            return Err(Error::InvalidDecayExponent {
                alpha,
                dimension: self.dimension(),
            });
        }
        Ok(())
    }
}

impl Region {
    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn contains(&self, site: usize) -> bool {
        self.sites.binary_search(&site).is_ok()
    }

    pub fn lattice_id(&self) -> u64 {
        self.lattice_id
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        self.sites.iter().all(|&s| other.contains(s))
    }

    /// Bitmask over sites; `None` when a site index is 64 or larger.
    pub fn mask(&self) -> Option<u64> {
        self.sites
            .iter()
            .try_fold(0u64, |m, &s| (s < 64).then(|| m | (1u64 << s)))
    }

    pub fn union(&self, other: &Region) -> Region {
        let mut sites = self.sites.clone();
        sites.extend_from_slice(&other.sites);
        sites.sort_unstable();
        sites.dedup();
        Region {
            sites,
            lattice_id: self.lattice_id,
        }
    }

    pub fn diameter(&self, lattice: &Lattice) -> usize {
        let mut best = 0;
        for (k, &a) in self.sites.iter().enumerate() {
            for &b in &self.sites[k + 1..] {
                best = best.max(lattice.distance(a, b));
            }
        }
        best
    }
}
