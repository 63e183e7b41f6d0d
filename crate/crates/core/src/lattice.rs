//! Integer dilation-matrix arithmetic: digit sets, coset decomposition,
//! operator norms, spectral bounds, isotropy.
//!
//! All membership and decomposition tests run in exact integer arithmetic
//! (adjugate over determinant), so points that land exactly on the boundary
//! of the half-open cell `[-1/2, 1/2)^d` are classified correctly.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance for the eigenvalue-magnitude spread in the isotropy test.
pub const ISOTROPY_TOL: f64 = 1e-9;

/// Square integer matrix with exact helpers. Entries are kept in `i128`
/// so adjugates and small powers never overflow at desk scale.
#[derive(Clone, PartialEq, Eq)]
pub struct IntMatrix {
    dim: usize,
    /// Row-major entries.
    entries: Vec<i128>,
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IntMatrix{}x{}{:?}", self.dim, self.dim, self.entries)
    }
}

impl IntMatrix {
    pub fn new(dim: usize, entries: Vec<i128>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::InvalidMatrix(format!(
                "expected {dim}x{dim} entries, got {}",
                entries.len()
            )));
        }
        Ok(IntMatrix { dim, entries })
    }

    pub fn from_i64(dim: usize, entries: &[i64]) -> Result<Self> {
        Self::new(dim, entries.iter().map(|&e| e as i128).collect())
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1;
        }
        IntMatrix { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> i128 {
        self.entries[r * self.dim + c]
    }

    pub fn transpose(&self) -> Self {
        let d = self.dim;
        let mut entries = vec![0; d * d];
        for r in 0..d {
            for c in 0..d {
                entries[c * d + r] = self.get(r, c);
            }
        }
        IntMatrix { dim: d, entries }
    }

    pub fn mul(&self, other: &IntMatrix) -> Self {
        assert_eq!(self.dim, other.dim);
        let d = self.dim;
        let mut entries = vec![0i128; d * d];
        for r in 0..d {
            for c in 0..d {
                let mut acc = 0i128;
                for k in 0..d {
                    acc += self.get(r, k) * other.get(k, c);
                }
                entries[r * d + c] = acc;
            }
        }
        IntMatrix { dim: d, entries }
    }

    pub fn pow(&self, j: u32) -> Self {
        let mut out = IntMatrix::identity(self.dim);
        for _ in 0..j {
            out = out.mul(self);
        }
        out
    }

    pub fn mul_vec(&self, v: &[i128]) -> Vec<i128> {
        let d = self.dim;
        assert_eq!(v.len(), d);
        (0..d)
            .map(|r| (0..d).map(|c| self.get(r, c) * v[c]).sum())
            .collect()
    }

    /// Determinant by Laplace expansion; fine for the small dimensions used here.
    pub fn det(&self) -> i128 {
        let d = self.dim;
        match d {
            1 => self.get(0, 0),
            2 => self.get(0, 0) * self.get(1, 1) - self.get(0, 1) * self.get(1, 0),
            _ => {
                let mut acc = 0i128;
                for c in 0..d {
                    let sign = if c % 2 == 0 { 1 } else { -1 };
                    acc += sign * self.get(0, c) * self.minor(0, c).det();
                }
                acc
            }
        }
    }

    fn minor(&self, row: usize, col: usize) -> IntMatrix {
        let d = self.dim;
        let mut entries = Vec::with_capacity((d - 1) * (d - 1));
        for r in 0..d {
            if r == row {
                continue;
            }
            for c in 0..d {
                if c == col {
                    continue;
                }
                entries.push(self.get(r, c));
            }
        }
        IntMatrix {
            dim: d - 1,
            entries,
        }
    }

    /// Adjugate matrix: `self * adjugate() == det * I`.
    pub fn adjugate(&self) -> IntMatrix {
        let d = self.dim;
        if d == 1 {
            return IntMatrix {
                dim: 1,
                entries: vec![1],
            };
        }
        let mut entries = vec![0i128; d * d];
        for r in 0..d {
            for c in 0..d {
                let sign = if (r + c) % 2 == 0 { 1 } else { -1 };
                // adj[r][c] = cofactor(c, r)
                entries[r * d + c] = sign * self.minor(c, r).det();
            }
        }
        IntMatrix { dim: d, entries }
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |r, c| self.get(r, c) as f64)
    }

    pub fn spectral_norm(&self) -> f64 {
        spectral_norm_f64(&self.to_f64())
    }
}

fn spectral_norm_f64(m: &DMatrix<f64>) -> f64 {
    m.singular_values().max()
}

/// Exact data for working with one integer matrix `A`: its adjugate and
/// determinant, normalized so the determinant is positive. Supports
/// membership tests in `A[-1/2,1/2)^d`, coset decomposition, and exact
/// evaluation of `A^{-1} k` in floating point.
#[derive(Clone, Debug)]
pub struct Level {
    mat: IntMatrix,
    adj: IntMatrix,
    det_pos: i128,
}

impl Level {
    pub fn new(mat: IntMatrix) -> Result<Self> {
        let det = mat.det();
        if det == 0 {
            return Err(Error::SingularMatrix);
        }
        let mut adj = mat.adjugate();
        let det_pos = if det < 0 {
            for e in adj.entries.iter_mut() {
                *e = -*e;
            }
            -det
        } else {
            det
        };
        Ok(Level { mat, adj, det_pos })
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.mat
    }

    pub fn det_abs(&self) -> u64 {
        self.det_pos as u64
    }

    /// `A^{-1} k` componentwise; exact rational `adj*k / det` rounded once.
    pub fn inv_apply_f64(&self, k: &[i64]) -> Vec<f64> {
        let v = self
            .adj
            .mul_vec(&k.iter().map(|&x| x as i128).collect::<Vec<_>>());
        let d = self.det_pos as f64;
        v.iter().map(|&x| x as f64 / d).collect()
    }

    /// Is `k` in the digit set `D(A) = A[-1/2,1/2)^d ∩ Z^d`? Exact.
    pub fn contains_digit(&self, k: &[i64]) -> bool {
        let v = self
            .adj
            .mul_vec(&k.iter().map(|&x| x as i128).collect::<Vec<_>>());
        let d = self.det_pos;
        v.iter().all(|&x| -d <= 2 * x && 2 * x < d)
    }

    /// Unique decomposition `k = A n + r` with `r ∈ D(A)`.
    pub fn decompose(&self, k: &[i64]) -> Coset {
        let v = self
            .adj
            .mul_vec(&k.iter().map(|&x| x as i128).collect::<Vec<_>>());
        let d = self.det_pos;
        // n_i = floor(v_i/d + 1/2) = floor((2 v_i + d) / (2 d))
        let n: Vec<i128> = v.iter().map(|&x| (2 * x + d).div_euclid(2 * d)).collect();
        let an = self.mat.mul_vec(&n);
        let r: Vec<i64> = k
            .iter()
            .zip(an.iter())
            .map(|(&ki, &ai)| (ki as i128 - ai) as i64)
            .collect();
        debug_assert!(self.contains_digit(&r));
        Coset {
            quotient: n.iter().map(|&x| x as i64).collect(),
            digit: r,
        }
    }

    /// All `|det A|` digits, in lexicographic order.
    pub fn digit_set(&self) -> Vec<Vec<i64>> {
        let pts = self.lattice_points_in_box(0.5);
        let digits: Vec<Vec<i64>> = pts.into_iter().filter(|k| self.contains_digit(k)).collect();
        debug_assert_eq!(digits.len() as u64, self.det_abs());
        digits
    }

    /// Integer points in the bounding box of `A [-rho, rho]^d`, inflated by one.
    /// Lexicographic scan order.
    fn lattice_points_in_box(&self, rho: f64) -> Vec<Vec<i64>> {
        let d = self.dim();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        // Map all corners of [-rho, rho]^d through A.
        for mask in 0..(1u32 << d) {
            let corner: Vec<f64> = (0..d)
                .map(|i| if mask & (1 << i) != 0 { rho } else { -rho })
                .collect();
            for r in 0..d {
                let y: f64 = (0..d).map(|c| self.mat.get(r, c) as f64 * corner[c]).sum();
                lo[r] = lo[r].min(y);
                hi[r] = hi[r].max(y);
            }
        }
        let lo: Vec<i64> = lo.iter().map(|&x| x.floor() as i64 - 1).collect();
        let hi: Vec<i64> = hi.iter().map(|&x| x.ceil() as i64 + 1).collect();
        let mut out = Vec::new();
        let mut cur: Vec<i64> = lo.clone();
        'outer: loop {
            out.push(cur.clone());
            for i in (0..d).rev() {
                cur[i] += 1;
                if cur[i] <= hi[i] {
                    continue 'outer;
                }
                cur[i] = lo[i];
                if i == 0 {
                    break 'outer;
                }
            }
        }
        out
    }

    /// Integer points `k` with `|A^{-1} k| <= rho` (Euclidean; strict if `strict`).
    pub fn points_in_ball(&self, rho: f64, strict: bool) -> Vec<Vec<i64>> {
        self.lattice_points_in_box(rho)
            .into_iter()
            .filter(|k| {
                let xi = self.inv_apply_f64(k);
                let n2: f64 = xi.iter().map(|x| x * x).sum();
                if strict {
                    n2 < rho * rho
                } else {
                    n2 <= rho * rho
                }
            })
            .collect()
    }

    /// Integer points `k` with `max_i |(A^{-1} k)_i| <= rho`.
    pub fn points_in_sup_box(&self, rho: f64) -> Vec<Vec<i64>> {
        self.lattice_points_in_box(rho)
            .into_iter()
            .filter(|k| {
                let xi = self.inv_apply_f64(k);
                xi.iter().all(|x| x.abs() <= rho)
            })
            .collect()
    }
}

/// Quotient/digit pair from the unique representation `k = A n + r`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coset {
    pub quotient: Vec<i64>,
    pub digit: Vec<i64>,
}

/// Digit set `D(A) = A[-1/2,1/2)^d ∩ Z^d` of an invertible integer matrix.
pub fn digit_set(dim: usize, entries: &[i64]) -> Result<Vec<Vec<i64>>> {
    let level = Level::new(IntMatrix::from_i64(dim, entries)?)?;
    let digits = level.digit_set();
    if digits.len() as u64 != level.det_abs() {
        return Err(Error::Internal(format!(
            "digit enumeration found {} points, |det| = {}",
            digits.len(),
            level.det_abs()
        )));
    }
    Ok(digits)
}

/// Unique decomposition `k = A n + r`, `r ∈ D(A)`.
pub fn decompose(dim: usize, entries: &[i64], k: &[i64]) -> Result<Coset> {
    let level = Level::new(IntMatrix::from_i64(dim, entries)?)?;
    Ok(level.decompose(k))
}

/// Spectral data for `M^j` / `M^{-j}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralInfo {
    /// Spectral norm of `M^j` for the requested `j` (may be negative).
    pub op_norm: f64,
    /// Smallest eigenvalue modulus of `M` itself.
    pub min_eig_abs: f64,
    pub isotropic: bool,
    /// Common eigenvalue modulus when isotropic.
    pub eig_abs: Option<f64>,
}

/// Integer dilation matrix: all eigenvalue moduli exceed 1 and `|det| >= 2`.
/// Immutable after construction; cheap to clone and safe to share.
#[derive(Clone, Debug)]
pub struct DilationMatrix {
    mat: IntMatrix,
    dim: usize,
    det_abs: u64,
    eigenvalues: Vec<Complex64>,
    isotropic: bool,
    eig_abs: Option<f64>,
}

impl DilationMatrix {
    pub fn new(dim: usize, entries: &[i64]) -> Result<Self> {
        let mat = IntMatrix::from_i64(dim, entries)?;
        let det = mat.det();
        let det_abs = det.unsigned_abs();
        if det == 0 {
            return Err(Error::SingularMatrix);
        }
        if det_abs < 2 {
            return Err(Error::InvalidMatrix(format!(
                "|det M| = {det_abs}, need >= 2"
            )));
        }
        let fm = mat.to_f64();
        let eig = fm.complex_eigenvalues();
        let eigenvalues: Vec<Complex64> = eig.iter().map(|z| Complex64::new(z.re, z.im)).collect();
        for z in &eigenvalues {
            if z.norm() <= 1.0 + 1e-9 {
                return Err(Error::InvalidMatrix(format!(
                    "eigenvalue {z} has modulus {:.6} <= 1; not expanding",
                    z.norm()
                )));
            }
        }
        let moduli: Vec<f64> = eigenvalues.iter().map(|z| z.norm()).collect();
        let max_m = moduli.iter().cloned().fold(f64::MIN, f64::max);
        let min_m = moduli.iter().cloned().fold(f64::MAX, f64::min);
        let spread_ok = (max_m - min_m) <= ISOTROPY_TOL * max_m;
        let isotropic = spread_ok && diagonalizable(&fm, &eigenvalues);
        let eig_abs = if isotropic { Some(max_m) } else { None };
        Ok(DilationMatrix {
            mat,
            dim,
            det_abs: det_abs as u64,
            eigenvalues,
            isotropic,
            eig_abs,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn det_abs(&self) -> u64 {
        self.det_abs
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.mat
    }

    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    pub fn is_isotropic(&self) -> bool {
        self.isotropic
    }

    /// `m^j = |det M|^j`.
    pub fn det_abs_pow(&self, j: u32) -> u64 {
        self.det_abs.pow(j)
    }

    /// Exact data for `M^j`.
    pub fn level(&self, j: u32) -> Level {
        Level::new(self.mat.pow(j)).expect("dilation matrix power is invertible")
    }

    /// Exact data for `(M*)^j = (M^j)*`.
    pub fn star_level(&self, j: u32) -> Level {
        Level::new(self.mat.pow(j).transpose()).expect("dilation matrix power is invertible")
    }

    /// Spectral norm of `M^j` (any sign of `j`), smallest eigenvalue modulus
    /// of `M`, and the isotropy flag. Norms of `(M*)^j` coincide with these.
    pub fn spectral_info(&self, j: i32) -> SpectralInfo {
        let op_norm = if j >= 0 {
            self.mat.pow(j as u32).spectral_norm()
        } else {
            let lvl = self.level((-j) as u32);
            let inv = lvl.matrix().to_f64().try_inverse().expect("invertible");
            spectral_norm_f64(&inv)
        };
        let min_eig_abs = self
            .eigenvalues
            .iter()
            .map(|z| z.norm())
            .fold(f64::MAX, f64::min);
        SpectralInfo {
            op_norm,
            min_eig_abs,
            isotropic: self.isotropic,
            eig_abs: self.eig_abs,
        }
    }
}

/// Numerical diagonalizability check. Eigenvalues with distinct values are
/// harmless; for a repeated real eigenvalue the geometric multiplicity
/// (kernel dimension of `M - lambda I`) must match the algebraic one.
/// Repeated complex pairs (d >= 4) are not checked.
fn diagonalizable(m: &DMatrix<f64>, eigenvalues: &[Complex64]) -> bool {
    let d = m.nrows();
    let scale = spectral_norm_f64(m).max(1.0);
    let tol = 1e-8 * scale;
    let mut seen = vec![false; eigenvalues.len()];
    for i in 0..eigenvalues.len() {
        if seen[i] {
            continue;
        }
        let lam = eigenvalues[i];
        let mut mult = 0;
        for (j, other) in eigenvalues.iter().enumerate() {
            if (other - lam).norm() <= tol {
                seen[j] = true;
                mult += 1;
            }
        }
        if mult >= 2 && lam.im.abs() <= tol {
            let shifted = m - DMatrix::<f64>::identity(d, d) * lam.re;
            let sv = shifted.singular_values();
            let kernel_dim = sv.iter().filter(|&&s| s <= tol).count();
            if kernel_dim < mult {
                return false;
            }
        }
    }
    true
}

impl FromStr for DilationMatrix {
    type Err = Error;

    /// Row-major integer lists, rows separated by `;`, e.g. `"1,-1;1,1"`.
    fn from_str(s: &str) -> Result<Self> {
        let rows: Vec<&str> = s.split(';').map(str::trim).collect();
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            let cells: Vec<&str> = row.split(',').map(str::trim).collect();
            if cells.len() != dim {
                return Err(Error::InvalidMatrix(format!(
                    "row {row:?} has {} entries, expected {dim}",
                    cells.len()
                )));
            }
            for cell in cells {
                let v: i64 = cell
                    .parse()
                    .map_err(|_| Error::InvalidMatrix(format!("bad integer entry {cell:?}")))?;
                entries.push(v);
            }
        }
        DilationMatrix::new(dim, &entries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(entries: &[i64]) -> DilationMatrix {
        let d = (entries.len() as f64).sqrt() as usize;
        DilationMatrix::new(d, entries).unwrap()
    }

    #[test]
    fn digit_set_scalar_three() {
        assert_eq!(
            digit_set(1, &[3]).unwrap(),
            vec![vec![-1], vec![0], vec![1]]
        );
    }

    #[test]
    fn digit_set_scalar_two() {
        assert_eq!(digit_set(1, &[2]).unwrap(), vec![vec![-1], vec![0]]);
    }

    #[test]
    fn digit_set_quincunx() {
        let digits = digit_set(2, &[1, -1, 1, 1]).unwrap();
        assert_eq!(digits, vec![vec![0, -1], vec![0, 0]]);
    }

    #[test]
    fn isotropic_norm_envelope() {
        // for isotropic M the norms of M^j stay within fixed multiples of
        // |lambda|^j in both directions; exercised on a non-normal matrix
        // with eigenvalues 1 +/- i sqrt(2)
        let mat = m(&[1, -2, 1, 1]);
        assert!(mat.is_isotropic());
        let lam = mat.spectral_info(1).eig_abs.unwrap();
        assert!((lam - 3f64.sqrt()).abs() < 1e-10);
        let mut lo = f64::MAX;
        let mut hi = f64::MIN;
        for j in 1..=10i32 {
            let fwd = mat.spectral_info(j).op_norm / lam.powi(j);
            let inv = mat.spectral_info(-j).op_norm * lam.powi(j);
            lo = lo.min(fwd.min(inv));
            hi = hi.max(fwd.max(inv));
        }
        assert!(lo >= 0.5 && hi <= 2.0, "envelope [{lo:.4}, {hi:.4}] drifts");
    }

    #[test]
    fn digit_set_singular_rejected() {
        assert!(matches!(
            digit_set(2, &[1, 1, 1, 1]),
            Err(Error::SingularMatrix)
        ));
    }

    #[test]
    fn decompose_examples() {
        let c = decompose(1, &[2], &[5]).unwrap();
        assert_eq!(c.quotient, vec![3]);
        assert_eq!(c.digit, vec![-1]);

        let c = decompose(1, &[2], &[0]).unwrap();
        assert_eq!(c.quotient, vec![0]);
        assert_eq!(c.digit, vec![0]);

        let c = decompose(2, &[1, -1, 1, 1], &[2, 1]).unwrap();
        assert!(c.digit == vec![0, 0] || c.digit == vec![0, -1]);
        // reconstruct: k = A n + r
        let a = IntMatrix::from_i64(2, &[1, -1, 1, 1]).unwrap();
        let an = a.mul_vec(&c.quotient.iter().map(|&x| x as i128).collect::<Vec<_>>());
        assert_eq!(an[0] + c.digit[0] as i128, 2);
        assert_eq!(an[1] + c.digit[1] as i128, 1);
    }

    #[test]
    fn digits_pairwise_noncongruent() {
        for entries in [
            vec![3i64],
            vec![2, 1, 0, 2],
            vec![1, -1, 1, 1],
            vec![2, 0, 0, 3],
        ] {
            let d = (entries.len() as f64).sqrt() as usize;
            let level = Level::new(IntMatrix::from_i64(d, &entries).unwrap()).unwrap();
            let digits = level.digit_set();
            for (i, a) in digits.iter().enumerate() {
                for b in digits.iter().skip(i + 1) {
                    let diff: Vec<i64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
                    // congruent mod A Z^d would mean diff decomposes with digit 0
                    let c = level.decompose(&diff);
                    assert_ne!(c.digit, vec![0; d], "digits {a:?} and {b:?} congruent");
                }
            }
        }
    }

    #[test]
    fn spectral_scalar_negative_power() {
        let info = m(&[2]).spectral_info(-3);
        assert!((info.op_norm - 0.125).abs() < 1e-12);
    }

    #[test]
    fn spectral_quincunx_isotropic() {
        let info = m(&[1, -1, 1, 1]).spectral_info(1);
        assert!((info.op_norm - 2f64.sqrt()).abs() < 1e-10);
        assert!(info.isotropic);
        assert!((info.eig_abs.unwrap() - 2f64.sqrt()).abs() < 1e-10);
        assert!((info.min_eig_abs - 2f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn spectral_diag_not_isotropic() {
        let info = m(&[2, 0, 0, 3]).spectral_info(1);
        assert!(!info.isotropic);
        assert_eq!(info.eig_abs, None);
    }

    #[test]
    fn shear_not_isotropic() {
        // Repeated eigenvalue 2 with a Jordan block: equal moduli but not diagonalizable.
        let info = m(&[2, 1, 0, 2]).spectral_info(1);
        assert!(!info.isotropic);
    }

    #[test]
    fn inverse_norm_bound() {
        for mat in [
            m(&[2]),
            m(&[1, -1, 1, 1]),
            m(&[2, 0, 0, 3]),
            m(&[2, 1, 0, 2]),
        ] {
            let fwd = mat.spectral_info(1).op_norm;
            let inv = mat.spectral_info(-1).op_norm;
            assert!(1.0 / fwd <= inv * (1.0 + 1e-12));
        }
    }

    #[test]
    fn opnorm_submultiplicative() {
        for mat in [m(&[2]), m(&[1, -1, 1, 1]), m(&[2, 0, 0, 3])] {
            for (j1, j2) in [(1, 1), (1, 2), (2, 3)] {
                let a = mat.spectral_info(j1).op_norm;
                let b = mat.spectral_info(j2).op_norm;
                let ab = mat.spectral_info(j1 + j2).op_norm;
                assert!(ab <= a * b * (1.0 + 1e-10));
            }
        }
    }

    #[test]
    fn roundtrip_box() {
        // decompose round-trips and is injective on a test box
        let level = Level::new(IntMatrix::from_i64(2, &[1, -1, 1, 1]).unwrap()).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for x in -20..=20i64 {
            for y in -20..=20i64 {
                let c = level.decompose(&[x, y]);
                let an = level
                    .matrix()
                    .mul_vec(&c.quotient.iter().map(|&v| v as i128).collect::<Vec<_>>());
                assert_eq!(an[0] + c.digit[0] as i128, x as i128);
                assert_eq!(an[1] + c.digit[1] as i128, y as i128);
                assert!(seen.insert((c.quotient.clone(), c.digit.clone())));
            }
        }
    }

    #[test]
    fn parse_matrix_strings() {
        let q: DilationMatrix = "1,-1;1,1".parse().unwrap();
        assert_eq!(q.dim(), 2);
        assert_eq!(q.det_abs(), 2);
        let s: DilationMatrix = "2".parse().unwrap();
        assert_eq!(s.dim(), 1);
        assert!("1,2;3".parse::<DilationMatrix>().is_err());
        assert!("1,x;0,2".parse::<DilationMatrix>().is_err());
        // |det| = 1 rejected
        assert!("1,1;0,1".parse::<DilationMatrix>().is_err());
    }

    #[test]
    fn eigenvalue_modulus_one_rejected() {
        // eigenvalues 2 and -1
        assert!(DilationMatrix::new(2, &[0, 1, 2, 1]).is_err());
    }

    #[test]
    fn digit_count_matches_det() {
        // |D(A)| = |det A| over a family of small matrices
        for a in [
            vec![4i64],
            vec![-5],
            vec![2, 1, 0, 2],
            vec![3, 1, 1, 2],
            vec![0, -2, 3, 1],
            vec![1, -1, 1, 1],
        ] {
            let d = (a.len() as f64).sqrt() as usize;
            let level = Level::new(IntMatrix::from_i64(d, &a).unwrap()).unwrap();
            assert_eq!(level.digit_set().len() as u64, level.det_abs());
        }
    }
}
