//! Periodic functions represented by finite Fourier-coefficient maps:
//! weighted coefficient norms, in/out partial norms, grid synthesis via FFT,
//! and `L_p` quadrature on the torus.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::lattice::DilationMatrix;

/// Weight `theta_alpha(x) = (1 + |x|^2)^(alpha/2)`.
pub fn theta_weight(alpha: f64, x: &[f64]) -> f64 {
    debug_assert!(alpha >= 0.0);
    let n2: f64 = x.iter().map(|v| v * v).sum();
    (1.0 + n2).powf(alpha / 2.0)
}

fn theta_weight_int(alpha: f64, n: &[i64]) -> f64 {
    let n2: f64 = n.iter().map(|&v| (v as f64) * (v as f64)).sum();
    (1.0 + n2).powf(alpha / 2.0)
}

/// Trigonometric polynomial `f(x) = sum_n fhat(n) e^{2 pi i (n, x)}` stored as
/// a sparse map over `Z^d`. Immutable after construction.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigPoly {
    dim: usize,
    coeffs: BTreeMap<Vec<i64>, Complex64>,
    support_radius: f64,
    max_axis_freq: i64,
    real_valued: bool,
}

impl TrigPoly {
    pub fn empty(dim: usize) -> Self {
        TrigPoly {
            dim,
            coeffs: BTreeMap::new(),
            support_radius: 0.0,
            max_axis_freq: 0,
            real_valued: true,
        }
    }

    /// The constant function 1.
    pub fn one(dim: usize) -> Self {
        Self::from_coeffs(dim, [(vec![0; dim], Complex64::new(1.0, 0.0))])
    }

    /// Build from `(frequency, coefficient)` pairs. Exact zeros are dropped;
    /// duplicate frequencies are summed.
    pub fn from_coeffs<I>(dim: usize, pairs: I) -> Self
    where
        I: IntoIterator<Item = (Vec<i64>, Complex64)>,
    {
        let mut coeffs: BTreeMap<Vec<i64>, Complex64> = BTreeMap::new();
        for (n, c) in pairs {
            assert_eq!(n.len(), dim, "frequency dimension mismatch");
            *coeffs.entry(n).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        coeffs.retain(|_, c| c.re != 0.0 || c.im != 0.0);
        let mut support_radius: f64 = 0.0;
        let mut max_axis_freq: i64 = 0;
        for n in coeffs.keys() {
            let r2: f64 = n.iter().map(|&v| (v as f64) * (v as f64)).sum();
            support_radius = support_radius.max(r2.sqrt());
            for &v in n {
                max_axis_freq = max_axis_freq.max(v.abs());
            }
        }
        let real_valued = coeffs.iter().all(|(n, c)| {
            let neg: Vec<i64> = n.iter().map(|&v| -v).collect();
            match coeffs.get(&neg) {
                Some(cc) => cc.re == c.re && cc.im == -c.im,
                None => false,
            }
        });
        TrigPoly {
            dim,
            coeffs,
            support_radius,
            max_axis_freq,
            real_valued,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Maximal Euclidean frequency norm over the support.
    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    /// Maximal `|n_i|` over the support; per-axis Nyquist bound.
    pub fn max_axis_freq(&self) -> i64 {
        self.max_axis_freq
    }

    pub fn is_real_valued(&self) -> bool {
        self.real_valued
    }

    pub fn coeff(&self, n: &[i64]) -> Complex64 {
        self.coeffs
            .get(n)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Iterate `(frequency, coefficient)` in lexicographic frequency order.
    pub fn iter(&self) -> impl Iterator<Item = (&Vec<i64>, &Complex64)> {
        self.coeffs.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &Vec<i64>> {
        self.coeffs.keys()
    }

    pub fn scaled(&self, factor: Complex64) -> TrigPoly {
        TrigPoly::from_coeffs(self.dim, self.iter().map(|(n, c)| (n.clone(), c * factor)))
    }

    pub fn add(&self, other: &TrigPoly) -> TrigPoly {
        assert_eq!(self.dim, other.dim);
        TrigPoly::from_coeffs(
            self.dim,
            self.iter()
                .map(|(n, c)| (n.clone(), *c))
                .chain(other.iter().map(|(n, c)| (n.clone(), *c))),
        )
    }

    pub fn sub(&self, other: &TrigPoly) -> TrigPoly {
        self.add(&other.scaled(Complex64::new(-1.0, 0.0)))
    }

    /// Keep only frequencies satisfying the predicate.
    pub fn filter<F: Fn(&[i64]) -> bool>(&self, keep: F) -> TrigPoly {
        TrigPoly::from_coeffs(
            self.dim,
            self.iter()
                .filter(|(n, _)| keep(n))
                .map(|(n, c)| (n.clone(), *c)),
        )
    }

    /// Multiply coefficients by a frequency-dependent factor.
    pub fn multiplier<F: Fn(&[i64]) -> Complex64>(&self, m: F) -> TrigPoly {
        TrigPoly::from_coeffs(self.dim, self.iter().map(|(n, c)| (n.clone(), c * m(n))))
    }

    /// Direct evaluation `f(x)` by summing the Fourier series.
    pub fn eval(&self, x: &[f64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (n, c) in self.iter() {
            let phase: f64 = n.iter().zip(x).map(|(&ni, xi)| ni as f64 * xi).sum();
            acc += c * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * phase);
        }
        acc
    }

    /// Text serialization: header `trigpoly <d>`, then one line per
    /// coefficient: `n_1 ... n_d re im` with 17-significant-digit floats.
    pub fn write_text<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "trigpoly {}", self.dim)?;
        for (n, c) in self.iter() {
            for v in n {
                write!(w, "{v} ")?;
            }
            writeln!(w, "{:.16e} {:.16e}", c.re, c.im)?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: &mut R) -> Result<TrigPoly> {
        let mut header = String::new();
        r.read_line(&mut header)?;
        let mut it = header.split_whitespace();
        if it.next() != Some("trigpoly") {
            return Err(Error::Parse("missing trigpoly header".into()));
        }
        let dim: usize = it
            .next()
            .ok_or_else(|| Error::Parse("missing dimension in header".into()))?
            .parse()
            .map_err(|_| Error::Parse("bad dimension in header".into()))?;
        let mut pairs = Vec::new();
        for line in r.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != dim + 2 {
                return Err(Error::Parse(format!(
                    "expected {} tokens per line, got {}",
                    dim + 2,
                    toks.len()
                )));
            }
            let mut n = Vec::with_capacity(dim);
            for t in &toks[..dim] {
                n.push(
                    t.parse::<i64>()
                        .map_err(|_| Error::Parse(format!("bad frequency {t:?}")))?,
                );
            }
            let re: f64 = toks[dim]
                .parse()
                .map_err(|_| Error::Parse(format!("bad float {:?}", toks[dim])))?;
            let im: f64 = toks[dim + 1]
                .parse()
                .map_err(|_| Error::Parse(format!("bad float {:?}", toks[dim + 1])))?;
            pairs.push((n, Complex64::new(re, im)));
        }
        Ok(TrigPoly::from_coeffs(dim, pairs))
    }
}

/// Weighted coefficient norm `||f||_{A_q^alpha}`; `q = inf` gives the
/// weighted sup.
pub fn a_norm(f: &TrigPoly, q: f64, alpha: f64) -> f64 {
    assert!(q >= 1.0);
    if q.is_infinite() {
        f.iter()
            .map(|(n, c)| c.norm() * theta_weight_int(alpha, n))
            .fold(0.0, f64::max)
    } else {
        let sum: f64 = f
            .iter()
            .map(|(n, c)| (c.norm() * theta_weight_int(alpha, n)).powf(q))
            .sum();
        sum.powf(1.0 / q)
    }
}

/// Split of the `A_q^alpha` norm into the part supported on `D((M*)^j)` (In)
/// and its complement (Out). For finite `q`, `In^q + Out^q = a_norm^q`.
pub fn in_out_norms(f: &TrigPoly, q: f64, alpha: f64, m: &DilationMatrix, j: u32) -> (f64, f64) {
    assert!(j >= 1);
    let level = m.star_level(j);
    let mut in_acc = 0.0f64;
    let mut out_acc = 0.0f64;
    let finite = !q.is_infinite();
    for (n, c) in f.iter() {
        let term = c.norm() * theta_weight_int(alpha, n);
        let inside = level.contains_digit(n);
        if finite {
            let t = term.powf(q);
            if inside {
                in_acc += t;
            } else {
                out_acc += t;
            }
        } else if inside {
            in_acc = in_acc.max(term);
        } else {
            out_acc = out_acc.max(term);
        }
    }
    if finite {
        (in_acc.powf(1.0 / q), out_acc.powf(1.0 / q))
    } else {
        (in_acc, out_acc)
    }
}

/// n-dimensional FFT, unnormalized, row-major data of shape `dims`.
/// Forward uses `e^{-2 pi i}`, inverse `e^{+2 pi i}`.
fn fft_nd(data: &mut [Complex64], dims: &[usize], inverse: bool) {
    let total: usize = dims.iter().product();
    assert_eq!(data.len(), total);
    let mut planner = FftPlanner::new();
    for (axis, &len) in dims.iter().enumerate() {
        if len <= 1 {
            continue;
        }
        let fft = if inverse {
            planner.plan_fft_inverse(len)
        } else {
            planner.plan_fft_forward(len)
        };
        // stride between consecutive elements along `axis`
        let stride: usize = dims[axis + 1..].iter().product();
        let lines = total / len;
        let mut scratch = vec![Complex64::new(0.0, 0.0); len];
        for line in 0..lines {
            // `line` enumerates all index combinations of the other axes
            let outer = line / stride;
            let inner = line % stride;
            let base = outer * stride * len + inner;
            for (i, s) in scratch.iter_mut().enumerate() {
                *s = data[base + i * stride];
            }
            fft.process(&mut scratch);
            for (i, s) in scratch.iter().enumerate() {
                data[base + i * stride] = *s;
            }
        }
    }
}

fn grid_index(n: &[i64], grid: usize) -> usize {
    let g = grid as i64;
    let mut idx = 0usize;
    for &v in n {
        let b = v.rem_euclid(g) as usize;
        idx = idx * grid + b;
    }
    idx
}

/// Values `f(t/grid)` on the uniform grid `t in {0..grid-1}^d`, computed by
/// placing coefficients into an FFT buffer. Errors if two support frequencies
/// collide modulo the grid.
pub fn synthesize_grid(f: &TrigPoly, grid: usize) -> Result<Vec<Complex64>> {
    if grid < 2 {
        return Err(Error::InvalidParameter {
            name: "grid",
            detail: format!("grid size {grid} < 2"),
        });
    }
    let d = f.dim();
    let total = grid.pow(d as u32);
    let mut buf = vec![Complex64::new(0.0, 0.0); total];
    let mut occupied: BTreeMap<usize, Vec<i64>> = BTreeMap::new();
    for (n, c) in f.iter() {
        let idx = grid_index(n, grid);
        if let Some(prev) = occupied.get(&idx) {
            return Err(Error::GridTooSmall {
                grid,
                a: prev.clone(),
                b: n.clone(),
            });
        }
        occupied.insert(idx, n.clone());
        buf[idx] = *c;
    }
    fft_nd(&mut buf, &vec![grid; d], true);
    Ok(buf)
}

/// Recover selected Fourier coefficients from grid values:
/// `fhat(n) = (1/grid^d) * forward-FFT bin (n mod grid)`.
pub fn grid_coefficients(
    values: &[Complex64],
    dim: usize,
    grid: usize,
    freqs: &[Vec<i64>],
) -> Vec<Complex64> {
    let total = grid.pow(dim as u32);
    assert_eq!(values.len(), total);
    let mut buf = values.to_vec();
    fft_nd(&mut buf, &vec![grid; dim], false);
    let scale = 1.0 / total as f64;
    freqs
        .iter()
        .map(|n| buf[grid_index(n, grid)] * scale)
        .collect()
}

/// `L_p` norm on the torus by rectangle-rule quadrature on a uniform grid of
/// at least `oversample * (2*max_axis_freq + 1)` points per axis. For
/// `p = inf` this is the grid max, which undercounts the true sup by
/// `O(oversample^{-2})` for smooth functions.
pub fn lp_norm(f: &TrigPoly, p: f64, oversample: usize) -> f64 {
    assert!(p >= 1.0);
    assert!(oversample >= 2);
    if f.is_empty() {
        return 0.0;
    }
    let grid = oversample * (2 * f.support_radius().ceil() as usize + 1);
    lp_norm_on_grid(f, p, grid).expect("grid exceeds Nyquist by construction")
}

/// `L_p` quadrature on an explicit grid (must avoid aliasing collisions).
/// Exposed so callers can force the grid to contain specific sample points.
pub fn lp_norm_on_grid(f: &TrigPoly, p: f64, grid: usize) -> Result<f64> {
    if f.is_empty() {
        return Ok(0.0);
    }
    let values = synthesize_grid(f, grid)?;
    let total = values.len() as f64;
    if p.is_infinite() {
        Ok(values.iter().map(|v| v.norm()).fold(0.0, f64::max))
    } else {
        let sum: f64 = values.iter().map(|v| v.norm().powf(p)).sum();
        Ok((sum / total).powf(1.0 / p))
    }
}

/// Closed-form coefficient rule `n -> c |n|^{-kappa}` (zero at the origin)
/// with truncation and tail estimates for the discarded `A_q^gamma` mass.
#[derive(Clone, Debug)]
pub struct DecayLaw {
    pub dim: usize,
    pub amplitude: f64,
    pub kappa: f64,
}

impl DecayLaw {
    pub fn new(dim: usize, amplitude: f64, kappa: f64) -> Result<Self> {
        if kappa <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "kappa",
                detail: format!("decay exponent {kappa} must be positive"),
            });
        }
        Ok(DecayLaw {
            dim,
            amplitude,
            kappa,
        })
    }

    pub fn rule(&self, n: &[i64]) -> Complex64 {
        let n2: f64 = n.iter().map(|&v| (v as f64) * (v as f64)).sum();
        if n2 == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(self.amplitude * n2.sqrt().powf(-self.kappa), 0.0)
        }
    }

    /// All frequencies with `0 < |n| <= radius` (Euclidean).
    pub fn truncate(&self, radius: u64) -> TrigPoly {
        let r = radius as i64;
        let mut pairs = Vec::new();
        let mut cur = vec![-r; self.dim];
        loop {
            let n2: i64 = cur.iter().map(|&v| v * v).sum();
            if n2 != 0 && n2 <= r * r {
                pairs.push((cur.clone(), self.rule(&cur)));
            }
            let mut i = self.dim;
            loop {
                if i == 0 {
                    return TrigPoly::from_coeffs(self.dim, pairs);
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

    /// Upper estimate of the `A_q^gamma` mass discarded beyond `radius`,
    /// via `theta_gamma(n) <= (sqrt(2)|n|)^gamma` for `|n| >= 1` and an
    /// integral comparison with a crude lattice shell-count constant.
    /// Monotonically decreasing in the radius.
    pub fn tail_bound(&self, radius: u64, q: f64, gamma: f64) -> Result<f64> {
        let c = self.amplitude.abs() * 2f64.powf(gamma / 2.0);
        let r = radius as f64;
        let shell = match self.dim {
            1 => 2.0,
            2 => 41.0,
            d => (4.0f64).powi(d as i32) * d as f64, // very crude, d >= 3
        };
        if q.is_infinite() {
            if self.kappa <= gamma {
                return Err(Error::DivergentRegime {
                    got: self.kappa - gamma,
                    dim: self.dim,
                });
            }
            return Ok(c * r.powf(gamma - self.kappa));
        }
        let expo = (gamma - self.kappa) * q + (self.dim as f64 - 1.0);
        if expo >= -1.0 {
            return Err(Error::DivergentRegime {
                got: (self.kappa - gamma) * q - self.dim as f64,
                dim: self.dim,
            });
        }
        // sum_{|n| > R} <= shell * int_R^inf r^expo dr
        let integral = r.powf(expo + 1.0) / (-(expo + 1.0));
        Ok((c.powf(q) * shell * integral).powf(1.0 / q))
    }

    /// Smallest radius whose tail bound is below `rel_tol` times the retained
    /// norm, capped. Returns `(radius, tail_bound)`.
    pub fn choose_truncation_radius(
        &self,
        q: f64,
        gamma: f64,
        rel_tol: f64,
        cap: u64,
    ) -> Result<(u64, f64)> {
        let reference = a_norm(&self.truncate(64.min(cap)), q, gamma).max(f64::MIN_POSITIVE);
        let mut radius = 64u64;
        loop {
            let tail = self.tail_bound(radius, q, gamma)?;
            if tail <= rel_tol * reference || radius >= cap {
                return Ok((radius.min(cap), tail));
            }
            radius = (radius * 2).min(cap);
        }
    }
}

/// Exponent bundle `(q, alpha, p, gamma)` used throughout the estimates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormSpec {
    pub q: f64,
    pub alpha: f64,
    pub p: f64,
    pub gamma: f64,
}

impl NormSpec {
    pub fn new(q: f64, alpha: f64, p: f64, gamma: f64) -> Result<Self> {
        if !(1.0..=f64::INFINITY).contains(&q) || !(1.0..=f64::INFINITY).contains(&p) {
            return Err(Error::InvalidParameter {
                name: "p/q",
                detail: format!("exponents p={p}, q={q} must lie in [1, inf]"),
            });
        }
        if alpha < 0.0 {
            return Err(Error::InvalidParameter {
                name: "alpha",
                detail: format!("{alpha} < 0"),
            });
        }
        let spec = NormSpec { q, alpha, p, gamma };
        if !spec.duality_holds() {
            return Err(Error::InvalidParameter {
                name: "p/q",
                detail: format!("1/{p} + 1/{q} != 1"),
            });
        }
        if gamma < alpha {
            return Err(Error::InvalidParameter {
                name: "gamma",
                detail: format!("gamma = {gamma} < alpha = {alpha}"),
            });
        }
        Ok(spec)
    }

    pub fn duality_holds(&self) -> bool {
        let inv = |x: f64| if x.is_infinite() { 0.0 } else { 1.0 / x };
        (inv(self.p) + inv(self.q) - 1.0).abs() <= 1e-12
    }

    /// Dual exponent: `1/p + 1/q = 1`.
    pub fn dual(p: f64) -> f64 {
        if p.is_infinite() {
            1.0
        } else if p == 1.0 {
            f64::INFINITY
        } else {
            p / (p - 1.0)
        }
    }
}
