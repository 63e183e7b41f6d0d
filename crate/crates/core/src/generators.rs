//! Concrete kernel families: synthesis generators `{phi_j}` and analyzers
//! `{phitilde_j}`, each given by a symbol `h` with level-`j` Fourier
//! coefficient `h((M*)^{-j} k)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::DilationMatrix;

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `sin(t)/t` with a series branch near zero to avoid cancellation.
pub fn sinc(t: f64) -> f64 {
    if t.abs() < 1e-4 {
        let t2 = t * t;
        1.0 - t2 / 6.0 + t2 * t2 / 120.0
    } else {
        t.sin() / t
    }
}

fn sup_norm(xi: &[f64]) -> f64 {
    xi.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

fn eucl_norm_sq(xi: &[f64]) -> f64 {
    xi.iter().map(|x| x * x).sum()
}

fn in_half_open_cell(xi: &[f64]) -> bool {
    xi.iter().all(|&x| (-0.5..0.5).contains(&x))
}

/// Synthesis-kernel families. Fourier rule: `phihat_j(k) = symbol((M*)^{-j} k)`.
#[derive(Clone, Debug)]
pub enum GeneratorFamily {
    /// `1` on `|xi| <= delta`, else `0`.
    Dirichlet { delta: f64 },
    /// `1` exactly on the half-open cell `[-1/2,1/2)^d`; with ideal sampling
    /// the operator becomes grid interpolation.
    FundamentalDirichlet,
    /// `1 - c_f ||xi||_inf` on `|xi| <= delta`, else `0`.
    TruncatedFejer { delta: f64, c_f: f64 },
    /// `1 - c_f ||xi||_inf` on `||xi||_inf <= 1`, else `0`.
    FejerFull { c_f: f64 },
    /// `sinc(pi xi)^s`, d = 1 scalar dilation, `s` even.
    PeriodizedBspline { s: u32 },
    /// `(u1 + u2 cos(2 pi xi)) sinc(pi xi)^s`, d = 1.
    ShiftedSplineCombo { s: u32, u1: f64, u2: f64 },
    /// `1 / conj(analyzer symbol)` on `|xi| <= delta`, else `0`; strictly
    /// compatible with the analyzer by construction.
    InverseDual {
        analyzer: Box<AnalyzerFamily>,
        delta: f64,
        /// Verified lower bound on `|analyzer symbol|` over the region.
        min_symbol: f64,
    },
}

/// Analyzer families. Fourier rule: `phitildehat_j(k) = symbol((M*)^{-j} k)`.
#[derive(Clone, Debug)]
pub enum AnalyzerFamily {
    /// Constant 1: point evaluation at the grid nodes.
    IdealSampling,
    /// `1/2 + cos(2 pi xi)/2`: the three-point smoothing stencil, d = 1.
    SmoothedSampling,
    /// `sum_b c_b (2 pi i xi)^b`, d = 1, `c_0 != 0`.
    Differential { coeffs: Vec<f64> },
    /// Normalized cell indicator; symbol `prod_i sinc(pi xi_i)`.
    Kantorovich,
    /// Scalar multiple of another analyzer (both symbol and density).
    Scaled {
        factor: f64,
        inner: Box<AnalyzerFamily>,
    },
}

pub fn dirichlet(delta: f64) -> Result<GeneratorFamily> {
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(Error::InvalidParameter {
            name: "delta",
            detail: format!("{delta} not in (0, 1/2]"),
        });
    }
    Ok(GeneratorFamily::Dirichlet { delta })
}

pub fn fundamental_dirichlet() -> GeneratorFamily {
    GeneratorFamily::FundamentalDirichlet
}

pub fn truncated_fejer(delta: f64, c_f: f64) -> Result<GeneratorFamily> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::InvalidParameter {
            name: "delta",
            detail: format!("{delta} not in (0, 1/2)"),
        });
    }
    if c_f <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "c_f",
            detail: format!("{c_f} must be positive"),
        });
    }
    Ok(GeneratorFamily::TruncatedFejer { delta, c_f })
}

pub fn fejer_full(c_f: f64) -> Result<GeneratorFamily> {
    if c_f <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "c_f",
            detail: format!("{c_f} must be positive"),
        });
    }
    Ok(GeneratorFamily::FejerFull { c_f })
}

pub fn periodized_bspline(s: u32) -> Result<GeneratorFamily> {
    if s == 0 || !s.is_multiple_of(2) {
        return Err(Error::InvalidParameter {
            name: "s",
            detail: format!("spline order {s} must be even and positive"),
        });
    }
    Ok(GeneratorFamily::PeriodizedBspline { s })
}

pub fn shifted_spline_combo(s: u32, u1: f64, u2: f64) -> Result<GeneratorFamily> {
    if s == 0 {
        return Err(Error::InvalidParameter {
            name: "s",
            detail: "spline order must be positive".into(),
        });
    }
    // The compatibility constructions need u1 + u2 = 1 exactly; rounding the
    // two weights independently leaves an O(1e-16) constant residual that the
    // order-s ratio scans amplify. Snap to the constraint when intended.
    let u2 = if (u1 + u2 - 1.0).abs() < 1e-12 {
        1.0 - u1
    } else {
        u2
    };
    Ok(GeneratorFamily::ShiftedSplineCombo { s, u1, u2 })
}

/// Constructs the strictly compatible partner of `analyzer` on `|xi| <= delta`
/// by inverting its symbol. Scans a dense grid over the region and fails with
/// a witness if the symbol gets within `1e-9` of zero.
pub fn inverse_dual(analyzer: AnalyzerFamily, delta: f64, dim: usize) -> Result<GeneratorFamily> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::InvalidParameter {
            name: "delta",
            detail: format!("{delta} not in (0, 1/2)"),
        });
    }
    let per_axis: usize = match dim {
        1 => 4097,
        2 => 257,
        _ => 65,
    };
    let min_required = 1e-9;
    let mut min_symbol = f64::INFINITY;
    let mut min_witness = vec![0.0f64; dim];
    // For a symbol that is real on the (connected) region, attaining both
    // signs proves a zero between the grid points even when no sample lands
    // near it.
    let mut all_real = true;
    let mut has_pos = false;
    let mut has_neg = false;
    let mut xi = vec![0.0f64; dim];
    let mut idx = vec![0usize; dim];
    'scan: loop {
        for (i, &t) in idx.iter().enumerate() {
            xi[i] = -delta + 2.0 * delta * t as f64 / (per_axis - 1) as f64;
        }
        if eucl_norm_sq(&xi) <= delta * delta {
            let s = analyzer.symbol(&xi);
            let v = s.norm();
            if v < min_symbol {
                min_symbol = v;
                min_witness = xi.clone();
            }
            if s.im.abs() > 1e-12 * (1.0 + s.re.abs()) {
                all_real = false;
            }
            has_pos |= s.re > 1e-12;
            has_neg |= s.re < -1e-12;
        }
        let mut i = dim;
        loop {
            if i == 0 {
                break 'scan;
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < per_axis {
                break;
            }
            idx[i] = 0;
        }
    }
    if min_symbol < min_required || (all_real && has_pos && has_neg) {
        return Err(Error::ConstructionFailed {
            witness: min_witness,
            value: min_symbol,
            min_required,
        });
    }
    Ok(GeneratorFamily::InverseDual {
        analyzer: Box::new(analyzer),
        delta,
        min_symbol,
    })
}

pub fn ideal_sampling() -> AnalyzerFamily {
    AnalyzerFamily::IdealSampling
}

pub fn smoothed_sampling() -> AnalyzerFamily {
    AnalyzerFamily::SmoothedSampling
}

/// Coefficients `c_0, c_1, ..., c_N` of the differential symbol. `c_0 != 0`
/// so the symbol is invertible near the origin.
pub fn differential(coeffs: Vec<f64>) -> Result<AnalyzerFamily> {
    match coeffs.first() {
        Some(&c0) if c0 != 0.0 => Ok(AnalyzerFamily::Differential { coeffs }),
        _ => Err(Error::InvalidParameter {
            name: "coeffs",
            detail: "c_0 must be nonzero".into(),
        }),
    }
}

pub fn kantorovich() -> AnalyzerFamily {
    AnalyzerFamily::Kantorovich
}

impl GeneratorFamily {
    pub fn symbol(&self, xi: &[f64]) -> Complex64 {
        match self {
            GeneratorFamily::Dirichlet { delta } => {
                if eucl_norm_sq(xi) <= delta * delta {
                    ONE
                } else {
                    ZERO
                }
            }
            GeneratorFamily::FundamentalDirichlet => {
                if in_half_open_cell(xi) {
                    ONE
                } else {
                    ZERO
                }
            }
            GeneratorFamily::TruncatedFejer { delta, c_f } => {
                if eucl_norm_sq(xi) <= delta * delta {
                    Complex64::new(1.0 - c_f * sup_norm(xi), 0.0)
                } else {
                    ZERO
                }
            }
            GeneratorFamily::FejerFull { c_f } => {
                let s = sup_norm(xi);
                if s <= 1.0 {
                    Complex64::new(1.0 - c_f * s, 0.0)
                } else {
                    ZERO
                }
            }
            GeneratorFamily::PeriodizedBspline { s } => {
                debug_assert_eq!(xi.len(), 1);
                Complex64::new(sinc(std::f64::consts::PI * xi[0]).powi(*s as i32), 0.0)
            }
            GeneratorFamily::ShiftedSplineCombo { s, u1, u2 } => {
                debug_assert_eq!(xi.len(), 1);
                let x = xi[0];
                let b = sinc(std::f64::consts::PI * x).powi(*s as i32);
                Complex64::new((u1 + u2 * (2.0 * std::f64::consts::PI * x).cos()) * b, 0.0)
            }
            GeneratorFamily::InverseDual {
                analyzer, delta, ..
            } => {
                if eucl_norm_sq(xi) <= delta * delta {
                    ONE / analyzer.symbol(xi).conj()
                } else {
                    ZERO
                }
            }
        }
    }

    /// Level-`j` Fourier coefficient `phihat_j(k)`.
    pub fn coeff(&self, m: &DilationMatrix, j: u32, k: &[i64]) -> Complex64 {
        self.symbol(&m.star_level(j).inv_apply_f64(k))
    }

    pub fn has_finite_spectrum(&self) -> bool {
        !matches!(
            self,
            GeneratorFamily::PeriodizedBspline { .. } | GeneratorFamily::ShiftedSplineCombo { .. }
        )
    }

    /// Frequencies where the level-`j` symbol may be nonzero, lexicographic.
    /// Families with infinite spectrum require a truncation radius in symbol
    /// units (`||xi||_inf <= trunc`).
    pub fn spectrum(
        &self,
        m: &DilationMatrix,
        j: u32,
        trunc: Option<f64>,
    ) -> Result<Vec<Vec<i64>>> {
        let level = m.star_level(j);
        match self {
            GeneratorFamily::Dirichlet { delta }
            | GeneratorFamily::TruncatedFejer { delta, .. }
            | GeneratorFamily::InverseDual { delta, .. } => Ok(level.points_in_ball(*delta, false)),
            GeneratorFamily::FundamentalDirichlet => Ok(level.digit_set()),
            GeneratorFamily::FejerFull { .. } => Ok(level.points_in_sup_box(1.0)),
            GeneratorFamily::PeriodizedBspline { .. }
            | GeneratorFamily::ShiftedSplineCombo { .. } => match trunc {
                Some(r) if r > 0.0 => Ok(level.points_in_sup_box(r)),
                _ => Err(Error::InfiniteSpectrum),
            },
        }
    }

    /// Uniform coefficient bound `C'_phi` over all levels.
    pub fn coeff_bound(&self) -> f64 {
        match self {
            GeneratorFamily::Dirichlet { .. } | GeneratorFamily::FundamentalDirichlet => 1.0,
            GeneratorFamily::TruncatedFejer { delta, c_f } => {
                (1.0f64).max((1.0 - c_f * delta).abs())
            }
            GeneratorFamily::FejerFull { c_f } => (1.0f64).max((c_f - 1.0).abs()),
            GeneratorFamily::PeriodizedBspline { .. } => 1.0,
            GeneratorFamily::ShiftedSplineCombo { u1, u2, .. } => u1.abs() + u2.abs(),
            GeneratorFamily::InverseDual { min_symbol, .. } => 1.0 / min_symbol,
        }
    }

    /// Class-B parameters `(delta, R)` when the family consists of
    /// trigonometric polynomials with spectra away from the nonzero lattice.
    pub fn class_b_params(&self, dim: usize) -> Option<(f64, f64)> {
        match self {
            GeneratorFamily::Dirichlet { delta }
            | GeneratorFamily::TruncatedFejer { delta, .. } => {
                let gap = if *delta < 0.5 {
                    (delta + 0.5) / 2.0
                } else {
                    0.5
                };
                Some((gap, *delta))
            }
            GeneratorFamily::InverseDual { delta, .. } => Some(((delta + 0.5) / 2.0, *delta)),
            GeneratorFamily::FundamentalDirichlet => Some((0.5, (dim as f64).sqrt() / 2.0)),
            _ => None,
        }
    }

    /// Claimed per-`n` Strang-Fix constant for order `s`, when the family
    /// carries one.
    pub fn claimed_bn_bound(&self, s: f64, n: &[i64]) -> Option<f64> {
        match self {
            GeneratorFamily::Dirichlet { delta }
            | GeneratorFamily::TruncatedFejer { delta, .. }
            | GeneratorFamily::InverseDual { delta, .. } => {
                Some(self.coeff_bound() * delta.powf(-s))
            }
            GeneratorFamily::FundamentalDirichlet => Some(self.coeff_bound() * 2f64.powf(s)),
            GeneratorFamily::FejerFull { c_f } => {
                if *c_f == 1.0 && s == 1.0 {
                    Some(if sup_norm_i64(n) == 1 { 1.0 } else { 0.0 })
                } else {
                    None
                }
            }
            GeneratorFamily::PeriodizedBspline { s: order } => {
                if s == *order as f64 {
                    let a = (2 * n[0].abs() - 1) as f64;
                    Some(2f64.powi(*order as i32) / a.powi(*order as i32))
                } else {
                    None
                }
            }
            GeneratorFamily::ShiftedSplineCombo { s: order, u1, u2 } => {
                if s == *order as f64 {
                    let a = (2 * n[0].abs() - 1) as f64;
                    Some((u1.abs() + u2.abs()) * 2f64.powi(*order as i32) / a.powi(*order as i32))
                } else {
                    None
                }
            }
        }
    }

    /// Claimed Strang-Fix order, when the family declares one.
    pub fn claimed_sf_order(&self) -> Option<f64> {
        match self {
            GeneratorFamily::FejerFull { c_f } if *c_f == 1.0 => Some(1.0),
            GeneratorFamily::PeriodizedBspline { s } => Some(*s as f64),
            GeneratorFamily::ShiftedSplineCombo { s, .. } => Some(*s as f64),
            _ => None,
        }
    }

    /// Dimensions the family supports.
    pub fn check_dim(&self, dim: usize) -> Result<()> {
        match self {
            GeneratorFamily::PeriodizedBspline { .. }
            | GeneratorFamily::ShiftedSplineCombo { .. }
                if dim != 1 =>
            {
                Err(Error::UnsupportedDimension {
                    expected: 1,
                    got: dim,
                })
            }
            GeneratorFamily::InverseDual { analyzer, .. } => analyzer.check_dim(dim),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GeneratorFamily::Dirichlet { .. } => "dirichlet",
            GeneratorFamily::FundamentalDirichlet => "fundamental",
            GeneratorFamily::TruncatedFejer { .. } => "fejer_trunc",
            GeneratorFamily::FejerFull { .. } => "fejer_full",
            GeneratorFamily::PeriodizedBspline { .. } => "bspline",
            GeneratorFamily::ShiftedSplineCombo { .. } => "spline_combo",
            GeneratorFamily::InverseDual { .. } => "inverse_dual",
        }
    }
}

fn sup_norm_i64(n: &[i64]) -> i64 {
    n.iter().map(|v| v.abs()).max().unwrap_or(0)
}

impl AnalyzerFamily {
    pub fn symbol(&self, xi: &[f64]) -> Complex64 {
        match self {
            AnalyzerFamily::IdealSampling => ONE,
            AnalyzerFamily::SmoothedSampling => {
                debug_assert_eq!(xi.len(), 1);
                Complex64::new(0.5 + 0.5 * (2.0 * std::f64::consts::PI * xi[0]).cos(), 0.0)
            }
            AnalyzerFamily::Differential { coeffs } => {
                debug_assert_eq!(xi.len(), 1);
                let z = Complex64::new(0.0, 2.0 * std::f64::consts::PI * xi[0]);
                let mut acc = ZERO;
                let mut pw = ONE;
                for &c in coeffs {
                    acc += pw * c;
                    pw *= z;
                }
                acc
            }
            AnalyzerFamily::Kantorovich => {
                let mut acc = 1.0;
                for &x in xi {
                    acc *= sinc(std::f64::consts::PI * x);
                }
                Complex64::new(acc, 0.0)
            }
            AnalyzerFamily::Scaled { factor, inner } => inner.symbol(xi) * *factor,
        }
    }

    /// Level-`j` Fourier coefficient `phitildehat_j(k)`.
    pub fn coeff(&self, m: &DilationMatrix, j: u32, k: &[i64]) -> Complex64 {
        self.symbol(&m.star_level(j).inv_apply_f64(k))
    }

    /// Growth order `N` of the coefficients outside the level cell.
    pub fn growth_order(&self) -> f64 {
        match self {
            AnalyzerFamily::Differential { coeffs } => (coeffs.len() - 1) as f64,
            AnalyzerFamily::Scaled { inner, .. } => inner.growth_order(),
            _ => 0.0,
        }
    }

    /// Claimed growth constant `C_phitilde`.
    pub fn growth_constant(&self) -> f64 {
        match self {
            AnalyzerFamily::IdealSampling
            | AnalyzerFamily::SmoothedSampling
            | AnalyzerFamily::Kantorovich => 1.0,
            AnalyzerFamily::Differential { coeffs } => {
                let n = (coeffs.len() - 1) as i32;
                let sum: f64 = coeffs
                    .iter()
                    .enumerate()
                    .map(|(b, c)| c.abs() * std::f64::consts::PI.powi(b as i32))
                    .sum();
                2f64.powi(n) * sum
            }
            AnalyzerFamily::Scaled { factor, inner } => factor.abs() * inner.growth_constant(),
        }
    }

    /// Pointwise density `|phitilde_j(x)|` for analyzers that are genuine
    /// functions; `None` for distributional ones.
    pub fn density(&self, m: &DilationMatrix, j: u32, x: &[f64]) -> Option<f64> {
        match self {
            AnalyzerFamily::Kantorovich => {
                // periodic cell indicator scaled by m^j
                let reduced: Vec<f64> = x.iter().map(|&t| t - t.round()).collect();
                let level = m.level(j);
                let mapped: Vec<f64> = (0..m.dim())
                    .map(|r| {
                        (0..m.dim())
                            .map(|c| level.matrix().get(r, c) as f64 * reduced[c])
                            .sum()
                    })
                    .collect();
                if in_half_open_cell(&mapped) {
                    Some(m.det_abs_pow(j) as f64)
                } else {
                    Some(0.0)
                }
            }
            AnalyzerFamily::Scaled { factor, inner } => {
                inner.density(m, j, x).map(|d| factor.abs() * d)
            }
            _ => None,
        }
    }

    pub fn has_density(&self) -> bool {
        match self {
            AnalyzerFamily::Kantorovich => true,
            AnalyzerFamily::Scaled { inner, .. } => inner.has_density(),
            _ => false,
        }
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        match self {
            AnalyzerFamily::SmoothedSampling | AnalyzerFamily::Differential { .. } if dim != 1 => {
                Err(Error::UnsupportedDimension {
                    expected: 1,
                    got: dim,
                })
            }
            AnalyzerFamily::Scaled { inner, .. } => inner.check_dim(dim),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AnalyzerFamily::IdealSampling => "ideal",
            AnalyzerFamily::SmoothedSampling => "smoothed",
            AnalyzerFamily::Differential { .. } => "differential",
            AnalyzerFamily::Kantorovich => "kantorovich",
            AnalyzerFamily::Scaled { .. } => "scaled",
        }
    }
}
