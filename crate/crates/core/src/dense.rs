//! Dense operators on `2^n`-dimensional spin Hilbert spaces.
//!
//! Storage is column-major so the matrix can be handed to BLAS/LAPACK
//! without copies. Basis index bit `s` is the computational state of site
//! `s`: site 0 is the least significant qubit, so `X0 Z1` materializes as
//! `Z ⊗ X` in textbook Kronecker order.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Largest site count materialized densely unless a caller raises it.
pub const DEFAULT_DENSE_CUTOFF: usize = 12;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

pub fn ensure_dense(n: usize, cutoff: usize) -> Result<()> {
    if n > cutoff {
        return Err(Error::ResourceLimit { n, cutoff });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    n_sites: usize,
    data: Vec<C64>,
    label: Option<String>,
}

impl DenseOperator {
    pub fn zeros(n_sites: usize) -> Self {
        let dim = 1usize << n_sites;
        Self {
            n_sites,
            data: vec![ZERO; dim * dim],
            label: None,
        }
    }

    pub fn identity(n_sites: usize) -> Self {
        let mut out = Self::zeros(n_sites);
        for k in 0..out.dim() {
            out.set(k, k, ONE);
        }
        out
    }

    /// Builds the operator entrywise from `f(row, col)`.
    pub fn from_fn(n_sites: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let dim = 1usize << n_sites;
        let mut data = Vec::with_capacity(dim * dim);
        for col in 0..dim {
            for row in 0..dim {
                data.push(f(row, col));
            }
        }
        Self {
            n_sites,
            data,
            label: None,
        }
    }

    pub fn from_column_major(n_sites: usize, data: Vec<C64>) -> Result<Self> {
        let dim = 1usize << n_sites;
        if data.len() != dim * dim {
            return Err(Error::InvalidArgument(format!(
                "expected {} entries for {} sites, got {}",
                dim * dim,
                n_sites,
                data.len()
            )));
        }
        Ok(Self {
            n_sites,
            data,
            label: None,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_sites
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[col * self.dim() + row]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        let dim = self.dim();
        self.data[col * dim + row] = value;
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_column_major(self) -> Vec<C64> {
        self.data
    }

    pub fn adjoint(&self) -> Self {
        let dim = self.dim();
        let mut data = vec![ZERO; dim * dim];
        for col in 0..dim {
            for row in 0..dim {
                data[row * dim + col] = self.data[col * dim + row].conj();
            }
        }
        Self {
            n_sites: self.n_sites,
            data,
            label: None,
        }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            n_sites: self.n_sites,
            data: self.data.iter().map(|z| z * factor).collect(),
            label: None,
        }
    }

    /// `self += factor * other`.
    pub fn axpy(&mut self, factor: C64, other: &DenseOperator) {
        assert_eq!(self.n_sites, other.n_sites, "operator size mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += factor * b;
        }
    }

    pub fn matmul(&self, other: &DenseOperator) -> DenseOperator {
        gemm(self, Op::None, other, Op::None)
    }

    /// `self† · other` without forming the adjoint.
    pub fn adjoint_matmul(&self, other: &DenseOperator) -> DenseOperator {
        gemm(self, Op::Adjoint, other, Op::None)
    }

    /// `self · other†` without forming the adjoint.
    pub fn matmul_adjoint(&self, other: &DenseOperator) -> DenseOperator {
        gemm(self, Op::None, other, Op::Adjoint)
    }

    /// `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &DenseOperator) -> DenseOperator {
        let mut ab = self.matmul(other);
        let ba = other.matmul(self);
        ab.axpy(-ONE, &ba);
        ab
    }

    /// `self ⊗ other`, with `self` on the high sites.
    pub fn kron(&self, other: &DenseOperator) -> DenseOperator {
        let db = other.dim();
        DenseOperator::from_fn(self.n_sites + other.n_sites, |row, col| {
            self.get(row / db, col / db) * other.get(row % db, col % db)
        })
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|k| self.get(k, k)).sum()
    }

    /// `tr(O)/2^n`.
    pub fn normalized_trace(&self) -> C64 {
        self.trace() / self.dim() as f64
    }

    /// Unnormalized `tr(O†O)`.
    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `sqrt(tr(O†O)/2^n)`.
    pub fn normalized_frobenius(&self) -> f64 {
        (self.frobenius_sq() / self.dim() as f64).sqrt()
    }

    pub fn max_abs_diff(&self, other: &DenseOperator) -> f64 {
        assert_eq!(self.n_sites, other.n_sites, "operator size mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// True when `‖O − O†‖_max ≤ tol · max(1, ‖O‖_max)`.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        let dim = self.dim();
        let scale = self.data.iter().map(|z| z.norm()).fold(1.0, f64::max);
        for col in 0..dim {
            for row in col..dim {
                if (self.get(row, col) - self.get(col, row).conj()).norm() > tol * scale {
                    return false;
                }
            }
        }
        true
    }

    /// `(O + O†)/2`.
    pub fn hermitian_part(&self) -> DenseOperator {
        DenseOperator::from_fn(self.n_sites, |row, col| {
            (self.get(row, col) + self.get(col, row).conj()) * 0.5
        })
    }

    /// Matrix-vector product `O·x`.
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let dim = self.dim();
        assert_eq!(x.len(), dim, "vector length mismatch");
        let mut y = vec![ZERO; dim];
        for (col, xc) in x.iter().enumerate() {
            if *xc == ZERO {
                continue;
            }
            let column = &self.data[col * dim..(col + 1) * dim];
            for (yr, a) in y.iter_mut().zip(column) {
                *yr += a * xc;
            }
        }
        y
    }

    /// Eigenvalues (ascending) of a Hermitian operator. Only the lower
    /// triangle is read.
    pub fn eigvalsh(&self) -> Result<Vec<f64>> {
        let mut a = self.data.clone();
        heevd_values(self.dim(), &mut a)
    }

    /// Eigenvalues (ascending) and orthonormal eigenvectors as columns.
    pub fn eigh(&self) -> Result<(Vec<f64>, DenseOperator)> {
        let mut a = self.data.clone();
        let (values, z) = heevr(self.dim(), &mut a)?;
        Ok((
            values,
            DenseOperator {
                n_sites: self.n_sites,
                data: z,
                label: None,
            },
        ))
    }

    /// Singular values, descending.
    pub fn singular_values(&self) -> Result<Vec<f64>> {
        let mut a = self.data.clone();
        gesdd_values(self.dim(), &mut a)
    }

    /// Absolute values of the spectrum for Hermitian input, singular
    /// values otherwise.
    pub fn singular_values_auto(&self) -> Result<Vec<f64>> {
        if self.is_hermitian(1e-12) {
            Ok(self
                .hermitian_part()
                .eigvalsh()?
                .into_iter()
                .map(f64::abs)
                .collect())
        } else {
            self.singular_values()
        }
    }

    /// Schatten-∞ norm.
    pub fn operator_norm(&self) -> Result<f64> {
        Ok(self.singular_values_auto()?.into_iter().fold(0.0, f64::max))
    }

    /// Schatten-1 norm.
    pub fn trace_norm(&self) -> Result<f64> {
        Ok(self.singular_values_auto()?.into_iter().sum())
    }
}

impl Add<&DenseOperator> for &DenseOperator {
    type Output = DenseOperator;

    fn add(self, rhs: &DenseOperator) -> DenseOperator {
        let mut out = self.clone();
        out.axpy(ONE, rhs);
        out.label = None;
        out
    }
}

impl Sub<&DenseOperator> for &DenseOperator {
    type Output = DenseOperator;

    fn sub(self, rhs: &DenseOperator) -> DenseOperator {
        let mut out = self.clone();
        out.axpy(-ONE, rhs);
        out.label = None;
        out
    }
}

impl Mul<&DenseOperator> for &DenseOperator {
    type Output = DenseOperator;

    fn mul(self, rhs: &DenseOperator) -> DenseOperator {
        self.matmul(rhs)
    }
}

#[derive(Clone, Copy)]
enum Op {
    None,
    Adjoint,
}

impl Op {
    fn cblas(self) -> cblas_sys::CBLAS_TRANSPOSE {
        match self {
            Op::None => cblas_sys::CblasNoTrans,
            Op::Adjoint => cblas_sys::CblasConjTrans,
        }
    }
}

fn gemm(a: &DenseOperator, op_a: Op, b: &DenseOperator, op_b: Op) -> DenseOperator {
    assert_eq!(a.n_sites, b.n_sites, "operator size mismatch");
    let dim = a.dim();
    let n = dim as i32;
    let mut c = vec![ZERO; dim * dim];
    // SAFETY: all three buffers are dim×dim column-major with leading
    // dimension dim; Complex64 is repr(C) and layout-compatible with [f64; 2].
    unsafe {
        cblas_sys::cblas_zgemm(
            cblas_sys::CblasColMajor,
            op_a.cblas(),
            op_b.cblas(),
            n,
            n,
            n,
            &ONE as *const C64 as *const _,
            a.data.as_ptr() as *const _,
            n,
            b.data.as_ptr() as *const _,
            n,
            &ZERO as *const C64 as *const _,
            c.as_mut_ptr() as *mut _,
            n,
        );
    }
    DenseOperator {
        n_sites: a.n_sites,
        data: c,
        label: None,
    }
}

fn lapack_char(c: u8) -> *const std::os::raw::c_char {
    // LAPACK reads a single byte through the pointer; statics keep it alive.
    static N: u8 = b'N';
    static V: u8 = b'V';
    static L: u8 = b'L';
    static A: u8 = b'A';
    let r: &'static u8 = match c {
        b'N' => &N,
        b'V' => &V,
        b'L' => &L,
        b'A' => &A,
        _ => unreachable!("unsupported LAPACK flag"),
    };
    r as *const u8 as *const _
}

/// Eigenvectors come from `zheevr`: the divide-and-conquer driver in
/// OpenBLAS 0.3.20 returns non-orthonormal vectors from dimension 512 on.
fn heevr(dim: usize, a: &mut [C64]) -> Result<(Vec<f64>, Vec<C64>)> {
    let n = dim as i32;
    let (jobz, range, uplo) = (lapack_char(b'V'), lapack_char(b'A'), lapack_char(b'L'));
    let mut w = vec![0.0f64; dim];
    let mut z = vec![ZERO; dim * dim];
    let mut isuppz = vec![0i32; 2 * dim.max(1)];
    let mut found = 0i32;
    let mut info = 0i32;
    let mut work_q = [ZERO];
    let mut rwork_q = [0.0f64];
    let mut iwork_q = [0i32];
    let mut call = |work: &mut [C64], lwork: i32, rwork: &mut [f64], lrwork: i32, iwork: &mut [i32], liwork: i32| {
        // SAFETY: `a` and `z` hold dim² entries, `w` dim and `isuppz` 2·dim;
        // the workspaces are either the 1-element query buffers with
        // length -1 or sized from that query.
        unsafe {
            lapack_sys::zheevr_(
                jobz,
                range,
                uplo,
                &n,
                a.as_mut_ptr() as *mut _,
                &n,
                &0.0,
                &0.0,
                &0,
                &0,
                &0.0,
                &mut found,
                w.as_mut_ptr(),
                z.as_mut_ptr() as *mut _,
                &n,
                isuppz.as_mut_ptr(),
                work.as_mut_ptr() as *mut _,
                &lwork,
                rwork.as_mut_ptr(),
                &lrwork,
                iwork.as_mut_ptr(),
                &liwork,
                &mut info,
            );
        }
        info
    };
    let info = call(&mut work_q, -1, &mut rwork_q, -1, &mut iwork_q, -1);
    if info != 0 {
        return Err(Error::Lapack { routine: "zheevr", info });
    }
    let lwork = (work_q[0].re as i32).max(1);
    let lrwork = (rwork_q[0] as i32).max(1);
    let liwork = iwork_q[0].max(1);
    let mut work = vec![ZERO; lwork as usize];
    let mut rwork = vec![0.0f64; lrwork as usize];
    let mut iwork = vec![0i32; liwork as usize];
    let info = call(&mut work, lwork, &mut rwork, lrwork, &mut iwork, liwork);
    if info != 0 || found != n {
        return Err(Error::Lapack { routine: "zheevr", info });
    }
    Ok((w, z))
}

fn heevd_values(dim: usize, a: &mut [C64]) -> Result<Vec<f64>> {
    let n = dim as i32;
    let jobz = lapack_char(b'N');
    let uplo = lapack_char(b'L');
    let mut w = vec![0.0f64; dim];
    let mut info = 0i32;
    let mut work_q = [ZERO];
    let mut rwork_q = [0.0f64];
    let mut iwork_q = [0i32];
    // SAFETY: workspace query; every pointer refers to live storage of the
    // sizes LAPACK expects for lwork = lrwork = liwork = -1.
    unsafe {
        lapack_sys::zheevd_(
            jobz,
            uplo,
            &n,
            a.as_mut_ptr() as *mut _,
            &n,
            w.as_mut_ptr(),
            work_q.as_mut_ptr() as *mut _,
            &-1,
            rwork_q.as_mut_ptr(),
            &-1,
            iwork_q.as_mut_ptr(),
            &-1,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "zheevd",
            info,
        });
    }
    let lwork = (work_q[0].re as i32).max(1);
    let lrwork = (rwork_q[0] as i32).max(1);
    let liwork = iwork_q[0].max(1);
    let mut work = vec![ZERO; lwork as usize];
    let mut rwork = vec![0.0f64; lrwork as usize];
    let mut iwork = vec![0i32; liwork as usize];
    // SAFETY: buffers sized from the workspace query above.
    unsafe {
        lapack_sys::zheevd_(
            jobz,
            uplo,
            &n,
            a.as_mut_ptr() as *mut _,
            &n,
            w.as_mut_ptr(),
            work.as_mut_ptr() as *mut _,
            &lwork,
            rwork.as_mut_ptr(),
            &lrwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "zheevd",
            info,
        });
    }
    Ok(w)
}

fn gesdd_values(dim: usize, a: &mut [C64]) -> Result<Vec<f64>> {
    let n = dim as i32;
    let jobz = lapack_char(b'N');
    let mut s = vec![0.0f64; dim];
    let mut u = [ZERO];
    let mut vt = [ZERO];
    let one = 1i32;
    let mut rwork = vec![0.0f64; 7 * dim.max(1)];
    let mut iwork = vec![0i32; 8 * dim.max(1)];
    let mut info = 0i32;
    let mut work_q = [ZERO];
    // SAFETY: workspace query with lwork = -1; U and VT are not referenced
    // for jobz = 'N'.
    unsafe {
        lapack_sys::zgesdd_(
            jobz,
            &n,
            &n,
            a.as_mut_ptr() as *mut _,
            &n,
            s.as_mut_ptr(),
            u.as_mut_ptr() as *mut _,
            &one,
            vt.as_mut_ptr() as *mut _,
            &one,
            work_q.as_mut_ptr() as *mut _,
            &-1,
            rwork.as_mut_ptr(),
            iwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "zgesdd",
            info,
        });
    }
    let lwork = (work_q[0].re as i32).max(1);
    let mut work = vec![ZERO; lwork as usize];
    // SAFETY: work sized by the query; rwork holds 7·n doubles as required
    // for jobz = 'N'.
    unsafe {
        lapack_sys::zgesdd_(
            jobz,
            &n,
            &n,
            a.as_mut_ptr() as *mut _,
            &n,
            s.as_mut_ptr(),
            u.as_mut_ptr() as *mut _,
            &one,
            vt.as_mut_ptr() as *mut _,
            &one,
            work.as_mut_ptr() as *mut _,
            &lwork,
            rwork.as_mut_ptr(),
            iwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "zgesdd",
            info,
        });
    }
    Ok(s)
}
