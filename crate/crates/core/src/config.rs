//! Flat key-value run configuration: one `key = value` per line, `#` starts
//! a comment, arrays are comma-separated. CLI overrides replace any key.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::conditions::Window;
use crate::error::{Error, Result};
use crate::experiments::{ErrorNorm, ExperimentConfig, FunctionSpec, PredictedSpec, DEFAULT_SEED};
use crate::fourier::{DecayLaw, TrigPoly};
use crate::generators::{self, AnalyzerFamily, GeneratorFamily};
use crate::lattice::DilationMatrix;

/// Recognized configuration keys with one-line descriptions; the CLI help
/// prints this table.
pub const CONFIG_KEYS: &[(&str, &str)] = &[
    ("matrix", "dilation matrix, row-major rows separated by ';' (e.g. 2 or 1,-1;1,1)"),
    ("j", "single level for approx runs"),
    ("j_min", "first level of the run range"),
    ("j_max", "last level of the run range"),
    ("f", "function kind: decay | file | single"),
    ("f_kappa", "decay exponent kappa for f = decay"),
    ("f_c", "amplitude for f = decay (default 1)"),
    ("f_radius", "truncation radius for f = decay (default 4096 for d=1, 128 for d=2)"),
    ("f_path", "coefficient file for f = file"),
    ("f_freq", "frequency (comma-separated components) for f = single"),
    ("generator", "dirichlet | fundamental | fejer_trunc | fejer_full | bspline | spline_combo | inverse_dual"),
    ("gen_delta", "support radius delta for dirichlet/fejer_trunc/inverse_dual"),
    ("gen_cf", "slope constant for the Fejér kernels (default 1)"),
    ("gen_s", "spline order for bspline/spline_combo"),
    ("gen_u1", "first weight for spline_combo"),
    ("gen_u2", "second weight for spline_combo"),
    ("gen_radius", "symbol-domain truncation radius for infinite-spectrum generators (default 32)"),
    ("analyzer", "ideal | smoothed | differential | kantorovich"),
    ("an_coeffs", "comma-separated c_0..c_N for analyzer = differential"),
    ("norm", "error norm: lp | aq"),
    ("norm_p", "exponent for norm = lp (default 2; inf allowed)"),
    ("norm_q", "coefficient exponent for norm = aq"),
    ("norm_alpha", "weight order for norm = aq"),
    ("predicted", "rate statement: aq_alpha | lp_min | coeff_decay | slope"),
    ("predicted_slope", "explicit exponent for predicted = slope"),
    ("s", "claimed order s for predictions, splits and condition checks"),
    ("gamma", "source smoothness gamma"),
    ("alpha", "target smoothness alpha (aq_alpha prediction)"),
    ("n_order", "analyzer growth order N (default from analyzer)"),
    ("kappa", "coefficient decay exponent (defaults to f_kappa)"),
    ("delta", "compatibility region radius (default 0.25)"),
    ("slope_tol", "acceptance margin on the fitted slope (default 0.2)"),
    ("oversample", "grid oversampling factor (default 16)"),
    ("seed", "RNG seed for randomized trials (default 41394)"),
    ("trials", "number of randomized trials (default 100)"),
    ("run", "rates verb: convergence | split | kantorovich | mz"),
    ("conditions", "check verb: comma list of growth,strang_fix,weak_compat,bounded,strict_compat,class_b,lq_class"),
    ("window_jmin", "condition window start (default 1)"),
    ("window_jmax", "condition window end (default 6)"),
    ("window_radius", "condition window frequency radius (default 512 for d=1, 64 else)"),
    ("lambda", "spectral radius factor for mz runs (default 0.4)"),
    ("output", "output path (CSV or coefficient dump)"),
];

/// Raw parsed key-value map.
#[derive(Clone, Debug, Default)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            values.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(RawConfig { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Apply `key=value` overrides.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<()> {
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override {o:?} is not key=value")))?;
            self.values
                .insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::Config(format!("missing required key {key:?}")))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => parse_f64(key, v),
        }
    }

    pub fn f64_req(&self, key: &str) -> Result<f64> {
        parse_f64(key, self.require(key)?)
    }

    pub fn u32_or(&self, key: &str, default: u32) -> Result<u32> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("key {key}: bad integer {v:?}"))),
        }
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("key {key}: bad integer {v:?}"))),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("key {key}: bad integer {v:?}"))),
        }
    }

    pub fn matrix(&self) -> Result<DilationMatrix> {
        self.require("matrix")?
            .parse()
            .map_err(|e| Error::Config(format!("key matrix: {e}")))
    }

    pub fn output(&self) -> Option<PathBuf> {
        self.get("output").map(PathBuf::from)
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    match v {
        "inf" | "Inf" | "INF" => Ok(f64::INFINITY),
        _ => v
            .parse()
            .map_err(|_| Error::Config(format!("key {key}: bad number {v:?}"))),
    }
}

fn parse_f64_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|c| parse_f64(key, c.trim())).collect()
}

pub fn build_generator(raw: &RawConfig, dim: usize) -> Result<GeneratorFamily> {
    let g = match raw.require("generator")? {
        "dirichlet" => generators::dirichlet(raw.f64_or("gen_delta", 0.5)?)?,
        "fundamental" => generators::fundamental_dirichlet(),
        "fejer_trunc" => {
            generators::truncated_fejer(raw.f64_or("gen_delta", 0.25)?, raw.f64_or("gen_cf", 1.0)?)?
        }
        "fejer_full" => generators::fejer_full(raw.f64_or("gen_cf", 1.0)?)?,
        "bspline" => generators::periodized_bspline(raw.u32_or("gen_s", 2)?)?,
        "spline_combo" => generators::shifted_spline_combo(
            raw.u32_or("gen_s", 4)?,
            raw.f64_req("gen_u1")?,
            raw.f64_req("gen_u2")?,
        )?,
        "inverse_dual" => {
            let analyzer = build_analyzer(raw, dim)?;
            generators::inverse_dual(analyzer, raw.f64_or("gen_delta", 0.25)?, dim)?
        }
        other => {
            return Err(Error::Config(format!("unknown generator {other:?}")));
        }
    };
    g.check_dim(dim)?;
    Ok(g)
}

pub fn build_analyzer(raw: &RawConfig, dim: usize) -> Result<AnalyzerFamily> {
    let a = match raw.require("analyzer")? {
        "ideal" => generators::ideal_sampling(),
        "smoothed" => generators::smoothed_sampling(),
        "differential" => {
            let coeffs = parse_f64_list("an_coeffs", raw.require("an_coeffs")?)?;
            generators::differential(coeffs)?
        }
        "kantorovich" => generators::kantorovich(),
        other => {
            return Err(Error::Config(format!("unknown analyzer {other:?}")));
        }
    };
    a.check_dim(dim)?;
    Ok(a)
}

pub fn build_function(raw: &RawConfig, dim: usize) -> Result<FunctionSpec> {
    match raw.require("f")? {
        "decay" => {
            let kappa = raw.f64_req("f_kappa")?;
            let c = raw.f64_or("f_c", 1.0)?;
            let default_radius = if dim == 1 { 4096 } else { 128 };
            let radius = raw.u64_or("f_radius", default_radius)?;
            Ok(FunctionSpec::Decay {
                law: DecayLaw::new(dim, c, kappa)?,
                radius,
            })
        }
        "file" => {
            let path = raw.require("f_path")?;
            let file = std::fs::File::open(path)
                .map_err(|e| Error::Config(format!("f_path {path:?}: {e}")))?;
            let mut reader = std::io::BufReader::new(file);
            let poly = TrigPoly::read_text(&mut reader)?;
            if poly.dim() != dim {
                return Err(Error::Config(format!(
                    "f_path {path:?} has dimension {}, matrix has {dim}",
                    poly.dim()
                )));
            }
            Ok(FunctionSpec::Poly(poly))
        }
        "single" => {
            let freq: Vec<i64> = raw
                .require("f_freq")?
                .split(',')
                .map(|c| {
                    c.trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("bad f_freq component {c:?}")))
                })
                .collect::<Result<_>>()?;
            if freq.len() != dim {
                return Err(Error::Config(format!(
                    "f_freq has {} components, matrix has {dim}",
                    freq.len()
                )));
            }
            Ok(FunctionSpec::Poly(TrigPoly::from_coeffs(
                dim,
                [(freq, num_complex::Complex64::new(1.0, 0.0))],
            )))
        }
        other => Err(Error::Config(format!("unknown function kind {other:?}"))),
    }
}

fn build_norm(raw: &RawConfig) -> Result<ErrorNorm> {
    match raw.get("norm").unwrap_or("lp") {
        "lp" => Ok(ErrorNorm::Lp(raw.f64_or("norm_p", 2.0)?)),
        "aq" => Ok(ErrorNorm::Aq {
            q: raw.f64_or("norm_q", 2.0)?,
            alpha: raw.f64_or("norm_alpha", 0.0)?,
        }),
        other => Err(Error::Config(format!("unknown norm {other:?}"))),
    }
}

fn build_predicted(raw: &RawConfig, analyzer: &AnalyzerFamily) -> Result<PredictedSpec> {
    let n_order = raw.f64_or("n_order", analyzer.growth_order())?;
    let q = match build_norm(raw)? {
        ErrorNorm::Lp(p) => crate::fourier::NormSpec::dual(p),
        ErrorNorm::Aq { q, .. } => q,
    };
    if raw.get("predicted").is_none() {
        // ratio-style runs never consult the prediction
        let kind = raw.get("run").unwrap_or("convergence");
        if matches!(kind, "kantorovich" | "mz") {
            return Ok(PredictedSpec::Explicit(0.0));
        }
    }
    match raw.get("predicted").unwrap_or("slope") {
        "aq_alpha" => Ok(PredictedSpec::AqAlpha {
            gamma: raw.f64_req("gamma")?,
            alpha: raw.f64_or("alpha", 0.0)?,
            s: raw.f64_req("s")?,
            n_order,
            q,
        }),
        "lp_min" => Ok(PredictedSpec::LpMin {
            s: raw.f64_req("s")?,
            gamma: raw.f64_req("gamma")?,
            n_order,
            q,
        }),
        "coeff_decay" => {
            let kappa = match raw.get("kappa") {
                Some(v) => parse_f64("kappa", v)?,
                None => raw.f64_req("f_kappa")?,
            };
            Ok(PredictedSpec::CoefficientDecay {
                s: raw.f64_req("s")?,
                kappa,
                q,
                n_order,
            })
        }
        "slope" => Ok(PredictedSpec::Explicit(raw.f64_req("predicted_slope")?)),
        other => Err(Error::Config(format!("unknown prediction {other:?}"))),
    }
}

/// Full experiment configuration for the `rates` verb.
pub fn build_experiment(raw: &RawConfig) -> Result<ExperimentConfig> {
    let matrix = raw.matrix()?;
    let dim = matrix.dim();
    let generator = build_generator(raw, dim)?;
    let analyzer = build_analyzer(raw, dim)?;
    let predicted = build_predicted(raw, &analyzer)?;
    let gen_radius = if generator.has_finite_spectrum() {
        match raw.get("gen_radius") {
            Some(v) => Some(parse_f64("gen_radius", v)?),
            None => None,
        }
    } else {
        Some(raw.f64_or("gen_radius", 32.0)?)
    };
    Ok(ExperimentConfig {
        j_min: raw.u32_or("j_min", 2)?,
        j_max: raw.u32_or("j_max", 8)?,
        function: build_function(raw, dim)?,
        generator,
        analyzer,
        norm: build_norm(raw)?,
        predicted,
        gen_radius,
        oversample: raw.usize_or("oversample", 16)?,
        slope_tol: raw.f64_or("slope_tol", 0.2)?,
        delta: raw.f64_or("delta", 0.25)?,
        gamma: raw.f64_or("gamma", 2.0)?,
        s_order: raw.f64_or("s", 1.0)?,
        seed: raw.u64_or("seed", DEFAULT_SEED)?,
        trials: raw.usize_or("trials", 100)?,
        matrix,
    })
}

/// Requested condition checks for the `check`/`report` verbs.
#[derive(Clone, Debug)]
pub struct CheckConfig {
    pub matrix: DilationMatrix,
    pub generator: GeneratorFamily,
    pub analyzer: AnalyzerFamily,
    pub conditions: Vec<String>,
    pub window: Window,
    pub s_order: f64,
    pub n_order: f64,
    pub delta: f64,
    pub class_b_radius: f64,
}

pub fn build_check(raw: &RawConfig) -> Result<CheckConfig> {
    let matrix = raw.matrix()?;
    let dim = matrix.dim();
    let generator = build_generator(raw, dim)?;
    let analyzer = build_analyzer(raw, dim)?;
    let conditions: Vec<String> = raw
        .require("conditions")?
        .split(',')
        .map(|c| c.trim().to_string())
        .collect();
    let default_radius = if dim == 1 { 512 } else { 64 };
    let window = Window::new(
        raw.u32_or("window_jmin", 1)?,
        raw.u32_or("window_jmax", 6)?,
        raw.u64_or("window_radius", default_radius)? as i64,
    );
    let delta = raw.f64_or("delta", 0.25)?;
    let class_b_radius = match generator.class_b_params(dim) {
        Some((_, r)) => r,
        None => raw.f64_or("gen_delta", 0.5)?,
    };
    Ok(CheckConfig {
        n_order: raw.f64_or("n_order", analyzer.growth_order())?,
        s_order: raw.f64_or("s", generator.claimed_sf_order().unwrap_or(1.0))?,
        matrix,
        generator,
        analyzer,
        conditions,
        window,
        delta,
        class_b_radius,
    })
}

/// Single-application configuration for the `approx` verb.
#[derive(Clone, Debug)]
pub struct ApproxConfig {
    pub matrix: DilationMatrix,
    pub j: u32,
    pub function: FunctionSpec,
    pub generator: GeneratorFamily,
    pub analyzer: AnalyzerFamily,
    pub gen_radius: Option<f64>,
    pub oversample: usize,
}

pub fn build_approx(raw: &RawConfig) -> Result<ApproxConfig> {
    let matrix = raw.matrix()?;
    let dim = matrix.dim();
    let generator = build_generator(raw, dim)?;
    let gen_radius = if generator.has_finite_spectrum() {
        None
    } else {
        Some(raw.f64_or("gen_radius", 32.0)?)
    };
    Ok(ApproxConfig {
        j: raw.u32_or("j", 1)?,
        function: build_function(raw, dim)?,
        analyzer: build_analyzer(raw, dim)?,
        generator,
        gen_radius,
        oversample: raw.usize_or("oversample", 16)?,
        matrix,
    })
}
