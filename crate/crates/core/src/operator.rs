//! The quasi-projection operator `Q_j`: analysis coefficients, Fourier-domain
//! application, an independent space-domain cross-check, best approximations,
//! de la Vallée-Poussin means, and discrete norms.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::{self, TrigPoly};
use crate::generators::{AnalyzerFamily, GeneratorFamily};
use crate::lattice::DilationMatrix;

/// Analysis data `<f, phitilde_j(. - M^{-j} k)>` for every digit `k` of `M^j`.
#[derive(Clone, Debug)]
pub struct AnalysisVector {
    pub level_j: u32,
    /// Digits of `M^j` in lexicographic order; exactly `m^j` of them.
    pub digits: Vec<Vec<i64>>,
    pub values: Vec<Complex64>,
}

impl AnalysisVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Discrete norm `((1/m^j) sum |a_k|^p)^{1/p}`, sup for `p = inf`.
    pub fn discrete_norm(&self, p: f64) -> f64 {
        discrete_norm(&self.values, p)
    }
}

/// `((1/len) sum |a_k|^p)^{1/p}`; sup norm for `p = inf`.
pub fn discrete_norm(values: &[Complex64], p: f64) -> f64 {
    assert!(p >= 1.0);
    if values.is_empty() {
        return 0.0;
    }
    if p.is_infinite() {
        values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    } else {
        let sum: f64 = values.iter().map(|v| v.norm().powf(p)).sum();
        (sum / values.len() as f64).powf(1.0 / p)
    }
}

/// `<f, phitilde_j(. - M^{-j} k)> = sum_l fhat(l) conj(phitildehat_j(l))
/// e^{2 pi i (k, (M*)^{-j} l)}` for every digit `k` of `M^j`. Finite sum over
/// the support of `f`.
pub fn analysis_coefficients(
    f: &TrigPoly,
    a: &AnalyzerFamily,
    m: &DilationMatrix,
    j: u32,
) -> AnalysisVector {
    let star = m.star_level(j);
    let digits = m.level(j).digit_set();
    // weight and phase base per support frequency
    let terms: Vec<(Vec<f64>, Complex64)> = f
        .iter()
        .map(|(l, c)| {
            let xi = star.inv_apply_f64(l);
            let w = c * a.symbol(&xi).conj();
            (xi, w)
        })
        .collect();
    let two_pi = 2.0 * std::f64::consts::PI;
    let values: Vec<Complex64> = digits
        .iter()
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (xi, w) in &terms {
                let phase: f64 = k.iter().zip(xi).map(|(&ki, &x)| ki as f64 * x).sum();
                acc += w * Complex64::from_polar(1.0, two_pi * phase);
            }
            acc
        })
        .collect();
    AnalysisVector {
        level_j: j,
        digits,
        values,
    }
}

/// Outcome of one operator application.
#[derive(Clone, Debug)]
pub struct OperatorResult {
    pub qf: TrigPoly,
    /// `f - Q_j f`, coefficient-exact: `qf + error_coeffs = f`.
    pub error_coeffs: TrigPoly,
    pub diagnostics: Diagnostics,
}

#[derive(Clone, Debug)]
pub struct Diagnostics {
    /// `A_2^0` mass of the error inside `D((M*)^j)`.
    pub error_in: f64,
    /// ... and outside.
    pub error_out: f64,
    pub elapsed: Duration,
}

/// Fourier-domain application:
/// `(Q_j f)^(n) = phihat_j(n) * sum_l fhat(n + (M*)^j l) conj(phitildehat_j(...))`.
/// The alias sum depends on `n` only through its digit, so it is accumulated
/// once per coset of the support of `f`.
pub fn apply(
    f: &TrigPoly,
    g: &GeneratorFamily,
    a: &AnalyzerFamily,
    m: &DilationMatrix,
    j: u32,
    gen_trunc: Option<f64>,
) -> Result<OperatorResult> {
    let start = std::time::Instant::now();
    g.check_dim(m.dim())?;
    a.check_dim(m.dim())?;
    let spec = g.spectrum(m, j, gen_trunc)?;
    let star = m.star_level(j);

    // coset sums S(r) = sum_{l == r mod (M*)^j} fhat(l) conj(phitildehat_j(l))
    let mut coset_sums: BTreeMap<Vec<i64>, Complex64> = BTreeMap::new();
    for (l, c) in f.iter() {
        let digit = star.decompose(l).digit;
        let w = c * a.coeff(m, j, l).conj();
        *coset_sums.entry(digit).or_insert(Complex64::new(0.0, 0.0)) += w;
    }

    let mut out_freqs: BTreeSet<Vec<i64>> = f.support().cloned().collect();
    out_freqs.extend(spec.iter().cloned());

    let mut qf_pairs = Vec::new();
    let mut err_pairs = Vec::new();
    for n in &out_freqs {
        let phi = g.coeff(m, j, n);
        let q = if phi.norm() == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            let digit = star.decompose(n).digit;
            match coset_sums.get(&digit) {
                Some(s) => phi * s,
                None => Complex64::new(0.0, 0.0),
            }
        };
        qf_pairs.push((n.clone(), q));
        err_pairs.push((n.clone(), f.coeff(n) - q));
    }
    let qf = TrigPoly::from_coeffs(f.dim(), qf_pairs);
    let error_coeffs = TrigPoly::from_coeffs(f.dim(), err_pairs);
    let (error_in, error_out) = fourier::in_out_norms(&error_coeffs, 2.0, 0.0, m, j);
    Ok(OperatorResult {
        qf,
        error_coeffs,
        diagnostics: Diagnostics {
            error_in,
            error_out,
            elapsed: start.elapsed(),
        },
    })
}

/// Literal space-domain application: synthesize the analysis data against
/// translated copies of `phi_j` on a grid, then read the coefficients back by
/// forward FFT. Serves as an independent check of [`apply`]; the two paths
/// must agree to about `1e-9` relative in `A_2^0`.
pub fn apply_sampling(
    f: &TrigPoly,
    g: &GeneratorFamily,
    a: &AnalyzerFamily,
    m: &DilationMatrix,
    j: u32,
    gen_trunc: Option<f64>,
    grid_oversample: usize,
) -> Result<TrigPoly> {
    g.check_dim(m.dim())?;
    a.check_dim(m.dim())?;
    let d = m.dim();
    let spec = g.spectrum(m, j, gen_trunc)?;
    let mj = m.det_abs_pow(j) as usize;

    // Grid must hold the result support without aliasing and contain every
    // translate M^{-j} k, i.e. be a multiple of m^j.
    let max_axis = spec
        .iter()
        .flat_map(|k| k.iter().map(|v| v.unsigned_abs()))
        .max()
        .unwrap_or(0) as usize;
    let needed = grid_oversample.max(1) * (2 * max_axis + 1);
    let grid = mj * needed.div_ceil(mj);
    let total = grid.pow(d as u32);
    if total > 1 << 26 {
        return Err(Error::InvalidParameter {
            name: "grid",
            detail: format!("sampling grid {grid}^{d} too large"),
        });
    }

    let phi_poly = TrigPoly::from_coeffs(d, spec.iter().map(|k| (k.clone(), g.coeff(m, j, k))));
    let phi_vals = fourier::synthesize_grid(&phi_poly, grid)?;

    let analysis = analysis_coefficients(f, a, m, j);
    let level = m.level(j);
    let scale = grid as i128 / mj as i128;

    let mut acc = vec![Complex64::new(0.0, 0.0); total];
    let adj_scaled = |k: &[i64]| -> Vec<usize> {
        // grid offset of the translate M^{-j} k: (grid/m^j) * adj(M^j) k mod grid
        let kk: Vec<i128> = k.iter().map(|&x| x as i128).collect();
        let det = level.matrix().det();
        let sign = if det < 0 { -1 } else { 1 };
        let v = level.matrix().adjugate().mul_vec(&kk);
        v.iter()
            .map(|&x| (sign * x * scale).rem_euclid(grid as i128) as usize)
            .collect()
    };
    for (k, value) in analysis.digits.iter().zip(&analysis.values) {
        let shift = adj_scaled(k);
        // accumulate value * phi_j(x - M^{-j} k) over the grid
        match d {
            1 => {
                let s = shift[0];
                for (t, slot) in acc.iter_mut().enumerate() {
                    let src = (t + grid - s) % grid;
                    *slot += value * phi_vals[src];
                }
            }
            2 => {
                let (sx, sy) = (shift[0], shift[1]);
                for tx in 0..grid {
                    let rx = (tx + grid - sx) % grid;
                    for ty in 0..grid {
                        let ry = (ty + grid - sy) % grid;
                        acc[tx * grid + ty] += value * phi_vals[rx * grid + ry];
                    }
                }
            }
            _ => {
                return Err(Error::UnsupportedDimension {
                    expected: 2,
                    got: d,
                });
            }
        }
    }
    let inv_mj = Complex64::new(1.0 / mj as f64, 0.0);
    for v in acc.iter_mut() {
        *v *= inv_mj;
    }

    let coeffs = fourier::grid_coefficients(&acc, d, grid, &spec);
    Ok(TrigPoly::from_coeffs(d, spec.into_iter().zip(coeffs)))
}

/// Best `L_2` approximation by restriction to a frequency region; exact by
/// Parseval. Returns the restricted polynomial and the error norm.
pub fn best_approx_l2<F: Fn(&[i64]) -> bool>(f: &TrigPoly, region: F) -> (TrigPoly, f64) {
    let inside = f.filter(&region);
    let outside = f.filter(|n| !region(n));
    let err = fourier::a_norm(&outside, 2.0, 0.0);
    (inside, err)
}

/// Frequency region `|M^{-j} k| < rho` (strict) or `<= rho`, as used by the
/// best-approximation classes.
pub fn ball_region(m: &DilationMatrix, j: u32, rho: f64, strict: bool) -> impl Fn(&[i64]) -> bool {
    let level = m.level(j);
    move |k: &[i64]| {
        let xi = level.inv_apply_f64(k);
        let n2: f64 = xi.iter().map(|x| x * x).sum();
        if strict {
            n2 < rho * rho
        } else {
            n2 <= rho * rho
        }
    }
}

/// Like [`ball_region`] but measured through `(M*)^{-j} k`.
pub fn star_ball_region(
    m: &DilationMatrix,
    j: u32,
    rho: f64,
    strict: bool,
) -> impl Fn(&[i64]) -> bool {
    let level = m.star_level(j);
    move |k: &[i64]| {
        let xi = level.inv_apply_f64(k);
        let n2: f64 = xi.iter().map(|x| x * x).sum();
        if strict {
            n2 < rho * rho
        } else {
            n2 <= rho * rho
        }
    }
}

/// Infinitely smooth bridge profile on `[0, 1]`: 1 at 0, 0 at 1.
pub fn smooth_bump_profile(t: f64) -> f64 {
    fn sigma(t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            (-1.0 / t).exp()
        }
    }
    let a = sigma(1.0 - t);
    let b = sigma(t);
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

/// De la Vallée-Poussin mean: coefficientwise multiplication by
/// `v_delta(M^{-j} k)` where `v_delta = 1` on `|xi| < delta`, `0` outside the
/// open cell `(-1/2, 1/2)^d`, and `profile((|xi| - delta)/(1/2 - delta))`
/// radially in between.
pub fn vallee_poussin<P: Fn(f64) -> f64>(
    f: &TrigPoly,
    delta: f64,
    m: &DilationMatrix,
    j: u32,
    profile: P,
) -> TrigPoly {
    assert!(delta > 0.0 && delta < 0.5);
    let level = m.level(j);
    f.multiplier(|k| {
        let xi = level.inv_apply_f64(k);
        let norm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        let v = if !xi.iter().all(|x| x.abs() < 0.5) {
            0.0
        } else if norm < delta {
            1.0
        } else {
            profile((norm - delta) / (0.5 - delta))
        };
        Complex64::new(v, 0.0)
    })
}

/// Truncated anisotropic Besov diagnostic:
/// `||f||_p + sum_{nu=1}^{nu_max} m^{(s/d) nu} E_nu` with the inner Besov sum
/// exponent fixed to 1. `E_nu` is exact for `p = 2`; for `p` in `{1, inf}` it
/// is the de la Vallée-Poussin near-best surrogate.
#[derive(Clone, Debug)]
pub struct BesovDiagnostic {
    pub value: f64,
    pub terms: Vec<f64>,
    /// True when the last computed best-approximation error is still nonzero,
    /// i.e. the tail was genuinely truncated.
    pub truncated: bool,
}

pub fn besov_seminorm(
    f: &TrigPoly,
    p: f64,
    s_exponent: f64,
    nu_max: u32,
    m: &DilationMatrix,
    oversample: usize,
) -> Result<BesovDiagnostic> {
    let d = m.dim() as f64;
    let base_norm = if p == 2.0 {
        fourier::a_norm(f, 2.0, 0.0)
    } else {
        fourier::lp_norm(f, p, oversample)
    };
    let mut terms = Vec::new();
    let mut last_e = 0.0;
    for nu in 1..=nu_max {
        let e = if p == 2.0 {
            best_approx_l2(f, ball_region(m, nu, 1.0, true)).1
        } else if p == 1.0 || p.is_infinite() {
            let v = vallee_poussin(f, 0.25, m, nu, smooth_bump_profile);
            fourier::lp_norm(&f.sub(&v), p, oversample)
        } else {
            return Err(Error::InvalidParameter {
                name: "p",
                detail: format!("besov diagnostic supports p in {{1, 2, inf}}, got {p}"),
            });
        };
        last_e = e;
        let weight = (m.det_abs() as f64).powf(s_exponent / d * nu as f64);
        terms.push(weight * e);
        if e == 0.0 {
            break;
        }
    }
    Ok(BesovDiagnostic {
        value: base_norm + terms.iter().sum::<f64>(),
        terms,
        truncated: last_e > 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{
        dirichlet, fundamental_dirichlet, ideal_sampling, inverse_dual, kantorovich,
        periodized_bspline, smoothed_sampling,
    };
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn m2() -> DilationMatrix {
        DilationMatrix::new(1, &[2]).unwrap()
    }

    fn random_poly(rng: &mut ChaCha8Rng, dim: usize, r: i64, density: f64) -> TrigPoly {
        let mut pairs = Vec::new();
        let mut cur = vec![-r; dim];
        loop {
            if rng.gen_bool(density) {
                pairs.push((
                    cur.clone(),
                    cx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                ));
            }
            let mut i = dim;
            loop {
                if i == 0 {
                    return TrigPoly::from_coeffs(dim, pairs);
                }
                i -= 1;
                cur[i] += 1;
                if cur[i] <= r {
                    break;
                }
                cur[i] = -r;
            }
        }
    }

    #[test]
    fn analysis_constant_function() {
        let f = TrigPoly::one(1);
        let v = analysis_coefficients(&f, &ideal_sampling(), &m2(), 3);
        assert_eq!(v.len(), 8);
        for val in &v.values {
            assert!((val - cx(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn analysis_ideal_sampling_is_point_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let m = m2();
        for j in 1..=4u32 {
            let f = random_poly(&mut rng, 1, 10, 0.6);
            let v = analysis_coefficients(&f, &ideal_sampling(), &m, j);
            let mj = m.det_abs_pow(j) as f64;
            for (k, val) in v.digits.iter().zip(&v.values) {
                let direct = f.eval(&[k[0] as f64 / mj]);
                assert!((val - direct).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn analysis_kantorovich_is_cell_average() {
        // quadrature oracle: m^j int over the translated cell
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let m = m2();
        let j = 2u32;
        let f = random_poly(&mut rng, 1, 6, 0.7);
        let v = analysis_coefficients(&f, &kantorovich(), &m, j);
        let mj = m.det_abs_pow(j) as f64;
        let n = 100_000usize;
        for (k, val) in v.digits.iter().zip(&v.values) {
            let center = k[0] as f64 / mj;
            let mut acc = cx(0.0, 0.0);
            for t in 0..n {
                let x = center + (-0.5 + (t as f64 + 0.5) / n as f64) / mj;
                acc += f.eval(&[x]);
            }
            let oracle = acc / n as f64; // m^j * (cell width / n) sum = mean
            assert!((val - oracle).norm() < 1e-8, "k={k:?}");
        }
    }

    #[test]
    fn analysis_smoothed_is_three_point_stencil() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let m = m2();
        for j in 1..=4u32 {
            let f = random_poly(&mut rng, 1, 12, 0.5);
            let v = analysis_coefficients(&f, &smoothed_sampling(), &m, j);
            let mj = m.det_abs_pow(j) as f64;
            for (k, val) in v.digits.iter().zip(&v.values) {
                let x = k[0] as f64;
                let stencil = f.eval(&[x / mj]) * 0.5
                    + f.eval(&[(x + 1.0) / mj]) * 0.25
                    + f.eval(&[(x - 1.0) / mj]) * 0.25;
                assert!((val - stencil).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn apply_constant_exact() {
        let f = TrigPoly::one(1);
        let r = apply(
            &f,
            &dirichlet(0.5).unwrap(),
            &ideal_sampling(),
            &m2(),
            1,
            None,
        )
        .unwrap();
        assert!(r.error_coeffs.is_empty());
        assert_eq!(r.qf.coeff(&[0]), cx(1.0, 0.0));
    }

    #[test]
    fn apply_worked_alias_example() {
        // d=1, M=2, j=1, fhat(3)=1, Dirichlet(1/2) + ideal sampling.
        // Expected values frozen from brute-force summation of the alias
        // formula (see brute_force_reference below).
        let f = TrigPoly::from_coeffs(1, [(vec![3], cx(1.0, 0.0))]);
        let g = dirichlet(0.5).unwrap();
        let r = apply(&f, &g, &ideal_sampling(), &m2(), 1, None).unwrap();
        assert_eq!(r.qf.coeff(&[-1]), cx(1.0, 0.0));
        assert_eq!(r.qf.coeff(&[1]), cx(1.0, 0.0));
        assert_eq!(r.qf.coeff(&[0]), cx(0.0, 0.0));
        assert_eq!(r.qf.coeff(&[3]), cx(0.0, 0.0));
        assert_eq!(r.error_coeffs.coeff(&[-1]), cx(-1.0, 0.0));
        assert_eq!(r.error_coeffs.coeff(&[1]), cx(-1.0, 0.0));
        assert_eq!(r.error_coeffs.coeff(&[3]), cx(1.0, 0.0));
    }

    /// Independent brute force: loop alias index l over a box instead of
    /// grouping the support by cosets.
    fn brute_force_reference(
        f: &TrigPoly,
        g: &GeneratorFamily,
        a: &AnalyzerFamily,
        m: &DilationMatrix,
        j: u32,
        n: &[i64],
        lbox: i64,
    ) -> Complex64 {
        let d = m.dim();
        let mjmat = m.star_level(j);
        let mut acc = cx(0.0, 0.0);
        let mut l = vec![-lbox; d];
        loop {
            let ml = mjmat
                .matrix()
                .mul_vec(&l.iter().map(|&x| x as i128).collect::<Vec<_>>());
            let shifted: Vec<i64> = n.iter().zip(&ml).map(|(&ni, &mi)| ni + mi as i64).collect();
            acc += f.coeff(&shifted) * a.coeff(m, j, &shifted).conj();
            let mut i = d;
            loop {
                if i == 0 {
                    return g.coeff(m, j, n) * acc;
                }
                i -= 1;
                l[i] += 1;
                if l[i] <= lbox {
                    break;
                }
                l[i] = -lbox;
            }
        }
    }

    #[test]
    fn apply_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let m = m2();
        let q = DilationMatrix::new(2, &[1, -1, 1, 1]).unwrap();
        for trial in 0..5 {
            let f = random_poly(&mut rng, 1, 9, 0.6);
            let g = dirichlet(0.5).unwrap();
            let a = smoothed_sampling();
            let j = 1 + trial % 3;
            let r = apply(&f, &g, &a, &m, j, None).unwrap();
            for n in [-3i64, -1, 0, 2, 5, 9] {
                let want = brute_force_reference(&f, &g, &a, &m, j, &[n], 16);
                let got = r.qf.coeff(&[n]);
                assert!((want - got).norm() < 1e-12, "n={n} j={j}");
            }
        }
        // quincunx spot check
        let f = random_poly(&mut rng, 2, 4, 0.4);
        let g = dirichlet(0.5).unwrap();
        let a = ideal_sampling();
        let r = apply(&f, &g, &a, &q, 2, None).unwrap();
        for n in [[0i64, 0], [1, -1], [2, 1], [-3, 2]] {
            let want = brute_force_reference(&f, &g, &a, &q, 2, &n, 8);
            assert!((want - r.qf.coeff(&n)).norm() < 1e-12);
        }
    }

    #[test]
    fn reconstruction_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let m = m2();
        let f = random_poly(&mut rng, 1, 20, 0.5);
        let g = periodized_bspline(2).unwrap();
        let r = apply(&f, &g, &smoothed_sampling(), &m, 3, Some(8.0)).unwrap();
        let back = r.qf.add(&r.error_coeffs);
        let diff = back.sub(&f);
        assert!(fourier::a_norm(&diff, f64::INFINITY, 0.0) < 1e-15);
    }

    #[test]
    fn linearity() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        let m = m2();
        let f1 = random_poly(&mut rng, 1, 12, 0.5);
        let f2 = random_poly(&mut rng, 1, 12, 0.5);
        let al = cx(0.7, -0.3);
        let be = cx(-1.1, 0.2);
        let g = dirichlet(0.5).unwrap();
        let a = smoothed_sampling();
        let combo = f1.scaled(al).add(&f2.scaled(be));
        let lhs = apply(&combo, &g, &a, &m, 2, None).unwrap().qf;
        let r1 = apply(&f1, &g, &a, &m, 2, None).unwrap().qf;
        let r2 = apply(&f2, &g, &a, &m, 2, None).unwrap().qf;
        let rhs = r1.scaled(al).add(&r2.scaled(be));
        let diff = lhs.sub(&rhs);
        assert!(fourier::a_norm(&diff, f64::INFINITY, 0.0) < 1e-12);
    }

    #[test]
    fn error_formula_locality() {
        // ghat(n) = fhat(n) wherever phihat_j(n) = 0
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let m = m2();
        let f = random_poly(&mut rng, 1, 30, 0.4);
        let g = dirichlet(0.25).unwrap();
        let r = apply(&f, &g, &ideal_sampling(), &m, 2, None).unwrap();
        for (n, c) in f.iter() {
            if g.coeff(&m, 2, n).norm() == 0.0 {
                assert!((r.error_coeffs.coeff(n) - c).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn projection_property_strict_pair() {
        // strictly compatible class-B pair reproduces band-limited f exactly
        let m = m2();
        let g = inverse_dual(kantorovich(), 0.25, 1).unwrap();
        let a = kantorovich();
        let mut rng = ChaCha8Rng::seed_from_u64(28);
        for j in 2..=6u32 {
            let band = m.star_level(2).points_in_ball(0.25, false);
            let f = TrigPoly::from_coeffs(
                1,
                band.iter().map(|k| {
                    (
                        k.clone(),
                        cx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                    )
                }),
            );
            let r = apply(&f, &g, &a, &m, j, None).unwrap();
            let rel = fourier::a_norm(&r.error_coeffs, 2.0, 0.0) / fourier::a_norm(&f, 2.0, 0.0);
            assert!(rel <= 1e-10, "j={j} rel={rel:.3e}");
        }
    }

    #[test]
    fn interpolation_property() {
        // fundamental Dirichlet + ideal sampling interpolates at grid nodes
        let m = m2();
        let g = fundamental_dirichlet();
        let a = ideal_sampling();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for j in 1..=6u32 {
            let f = random_poly(&mut rng, 1, 17, 0.5);
            let r = apply(&f, &g, &a, &m, j, None).unwrap();
            let mj = m.det_abs_pow(j) as f64;
            for k in m.level(j).digit_set() {
                let x = [k[0] as f64 / mj];
                assert!(
                    (r.qf.eval(&x) - f.eval(&x)).norm() < 1e-10,
                    "j={j} k={:?}",
                    k
                );
            }
        }
    }

    #[test]
    fn dual_path_agreement() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let m = m2();
        let q = DilationMatrix::new(2, &[1, -1, 1, 1]).unwrap();
        let cases: Vec<(GeneratorFamily, AnalyzerFamily)> = vec![
            (dirichlet(0.5).unwrap(), ideal_sampling()),
            (dirichlet(0.25).unwrap(), smoothed_sampling()),
            (fundamental_dirichlet(), ideal_sampling()),
            (periodized_bspline(2).unwrap(), smoothed_sampling()),
            (inverse_dual(kantorovich(), 0.25, 1).unwrap(), kantorovich()),
        ];
        for (g, a) in &cases {
            for j in 1..=3u32 {
                let f = random_poly(&mut rng, 1, 8, 0.5);
                let trunc = if g.has_finite_spectrum() {
                    None
                } else {
                    Some(8.0)
                };
                let r = apply(&f, g, a, &m, j, trunc).unwrap();
                let sampled = apply_sampling(&f, g, a, &m, j, trunc, 2).unwrap();
                let diff = fourier::a_norm(&r.qf.sub(&sampled), 2.0, 0.0);
                let scale = fourier::a_norm(&f, 2.0, 0.0).max(1e-30);
                assert!(diff / scale < 1e-9, "{} + {} j={j}", g.name(), a.name());
            }
        }
        // quincunx
        for j in 1..=2u32 {
            let f = random_poly(&mut rng, 2, 3, 0.4);
            let g = dirichlet(0.5).unwrap();
            let a = kantorovich();
            let r = apply(&f, &g, &a, &q, j, None).unwrap();
            let sampled = apply_sampling(&f, &g, &a, &q, j, None, 2).unwrap();
            let diff = fourier::a_norm(&r.qf.sub(&sampled), 2.0, 0.0);
            let scale = fourier::a_norm(&f, 2.0, 0.0).max(1e-30);
            assert!(diff / scale < 1e-9, "quincunx j={j}");
        }
    }

    #[test]
    fn best_approx_examples() {
        // f inside region: E = 0
        let f = TrigPoly::from_coeffs(1, [(vec![1], cx(1.0, 0.0))]);
        let (t, e) = best_approx_l2(&f, |n| n[0].abs() < 4);
        assert_eq!(e, 0.0);
        assert_eq!(t, f);

        // fhat(n) = |n|^{-2} on 1 <= |n| <= 8, region |n| < 4
        let law = crate::fourier::DecayLaw::new(1, 1.0, 2.0).unwrap();
        let f = law.truncate(8);
        let (_, e) = best_approx_l2(&f, |n| n[0].abs() < 4);
        let expect: f64 = (2.0 * (4..=8).map(|n| (n as f64).powi(-4)).sum::<f64>()).sqrt();
        assert_relative_eq!(e, expect, max_relative = 1e-14);

        // larger region means error cannot grow
        let (_, e2) = best_approx_l2(&f, |n| n[0].abs() < 6);
        assert!(e2 <= e);
    }

    #[test]
    fn vallee_poussin_plateau_and_cutoff() {
        let m = m2();
        let j = 3u32;
        // inside |M^{-j} k| < delta: untouched
        let f = TrigPoly::from_coeffs(1, [(vec![1], cx(0.7, 0.1))]);
        let v = vallee_poussin(&f, 0.25, &m, j, smooth_bump_profile);
        assert_eq!(v, f);
        // outside the open cell: zeroed (|4/8| = 1/2)
        let f = TrigPoly::from_coeffs(1, [(vec![4], cx(1.0, 0.0))]);
        let v = vallee_poussin(&f, 0.25, &m, j, smooth_bump_profile);
        assert!(v.is_empty());
    }

    #[test]
    fn vallee_poussin_near_best() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let m = m2();
        let law = crate::fourier::DecayLaw::new(1, 1.0, 2.5).unwrap();
        let f = law.truncate(64).add(&random_poly(&mut rng, 1, 8, 0.3));
        for j in 2..=5u32 {
            let v = vallee_poussin(&f, 0.25, &m, j, smooth_bump_profile);
            let err2 = fourier::a_norm(&f.sub(&v), 2.0, 0.0);
            let (_, e_best) = best_approx_l2(&f, ball_region(&m, j, 0.25, true));
            // multiplier is bounded by 1, so the V_j error is controlled by
            // the mass outside the delta-region, i.e. the best approximation
            assert!(err2 <= 2.0 * e_best + 1e-15, "j={j}");
        }
    }

    #[test]
    fn discrete_norm_examples() {
        let ones = vec![cx(1.0, 0.0); 8];
        for &p in &[1.0, 2.0, f64::INFINITY] {
            assert_relative_eq!(discrete_norm(&ones, p), 1.0, max_relative = 1e-15);
        }
        // discrete Parseval: spec f inside D(M^j), samples on the level grid
        let m = m2();
        let j = 4u32;
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let freqs = m.level(j).digit_set();
        let f = TrigPoly::from_coeffs(
            1,
            freqs.iter().map(|k| {
                (
                    k.clone(),
                    cx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                )
            }),
        );
        let v = analysis_coefficients(&f, &ideal_sampling(), &m, j);
        assert_relative_eq!(
            v.discrete_norm(2.0),
            fourier::a_norm(&f, 2.0, 0.0),
            max_relative = 1e-12
        );
    }

    #[test]
    fn besov_diagnostic() {
        let m = m2();
        // trigonometric polynomial: sum terminates once E = 0
        let f = TrigPoly::from_coeffs(1, [(vec![1], cx(1.0, 0.0)), (vec![-1], cx(1.0, 0.0))]);
        let d1 = besov_seminorm(&f, 2.0, 1.0, 10, &m, 8).unwrap();
        assert!(!d1.truncated);
        assert!(d1.terms.len() < 10);

        // decaying coefficients: geometric term decay, monotone in nu_max.
        // E_{M^nu} for |n|^{-4} behaves like 2^{-3.5 nu}, so the weighted
        // terms 2^nu E shrink by about 2^{-2.5} per level.
        let law = crate::fourier::DecayLaw::new(1, 1.0, 4.0).unwrap();
        let f = law.truncate(256);
        let d4 = besov_seminorm(&f, 2.0, 1.0, 4, &m, 8).unwrap();
        let d6 = besov_seminorm(&f, 2.0, 1.0, 6, &m, 8).unwrap();
        assert!(d6.value >= d4.value);
        for w in d4.terms.windows(2) {
            assert!(
                w[1] < 0.25 * w[0],
                "terms should decay geometrically: {:?}",
                d4.terms
            );
        }
    }
}
