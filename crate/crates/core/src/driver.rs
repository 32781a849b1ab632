//! Sweep orchestration, scaling-law fitting, figure-reproduction presets and
//! the columnar output format used by the CLI.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

/// Scaling-law model fitted by ordinary least squares in a transformed
/// space where it is linear.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FitModel {
    /// `F = a·e^{bT}` — linear in (T, ln F).
    Exponential,
    /// `F = a·T^p` — linear in (ln T, ln F).
    Power,
    /// `T = c + a·ln(1/s)` — linear in (ln(1/s), T); `s` is the swept
    /// variable in units of its critical value.
    LogTime,
    /// `T = a·s^{−q}` — linear in (ln s, ln T).
    InversePower,
    /// `T = c + a·s^{−q}` with fixed exponent `q` — linear in (s^{−q}, T);
    /// robust when the protocol carries an O(1) additive time offset.
    InversePowerFixed { q: f64 },
}

/// One fitted coefficient with its standard error.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitCoefficient {
    pub name: String,
    pub value: f64,
    pub std_err: f64,
}

/// Result of a scaling-law fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub coefficients: Vec<FitCoefficient>,
    /// Window applied to the first (swept) coordinate.
    pub window: (f64, f64),
    /// Residual RMS in the transformed (linear) space.
    pub residual_rms: f64,
    pub n_samples: usize,
}

impl FitResult {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.coefficients.iter().find(|c| c.name == name).map(|c| c.value)
    }
}

/// Ordinary least squares `y = c0 + c1·x` with standard errors.
fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64, f64, f64, f64) {
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let c1 = sxy / sxx;
    let c0 = ybar - c1 * xbar;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - c0 - c1 * x).powi(2))
        .sum();
    let dof = (xs.len().max(3) - 2) as f64;
    let s2 = rss / dof;
    let se1 = (s2 / sxx).sqrt();
    let se0 = (s2 * (1.0 / n + xbar * xbar / sxx)).sqrt();
    let rms = (rss / n).sqrt();
    (c0, c1, se0, se1, rms)
}

/// Fit a scaling law to `(swept, value)` samples restricted to `window` on
/// the swept coordinate.
pub fn fit_scaling(samples: &[(f64, f64)], model: FitModel, window: (f64, f64)) -> Result<FitResult> {
    let (lo, hi) = if window.0 <= window.1 {
        window
    } else {
        (window.1, window.0)
    };
    let sel: Vec<(f64, f64)> = samples
        .iter()
        .copied()
        .filter(|(x, _)| *x >= lo && *x <= hi)
        .collect();
    if sel.len() < 10 {
        return Err(Error::InsufficientData {
            n: sel.len(),
            need: 10,
        });
    }
    let check_positive = |vals: &[f64]| -> Result<()> {
        for (i, v) in vals.iter().enumerate() {
            if *v <= 0.0 {
                return Err(Error::NonPositiveData {
                    value: *v,
                    index: i,
                });
            }
        }
        Ok(())
    };
    let xs_raw: Vec<f64> = sel.iter().map(|p| p.0).collect();
    let ys_raw: Vec<f64> = sel.iter().map(|p| p.1).collect();

    let (xs, ys, names): (Vec<f64>, Vec<f64>, [&str; 2]) = match model {
        FitModel::Exponential => {
            check_positive(&ys_raw)?;
            (
                xs_raw.clone(),
                ys_raw.iter().map(|y| y.ln()).collect(),
                ["ln_a", "b"],
            )
        }
        FitModel::Power => {
            check_positive(&xs_raw)?;
            check_positive(&ys_raw)?;
            (
                xs_raw.iter().map(|x| x.ln()).collect(),
                ys_raw.iter().map(|y| y.ln()).collect(),
                ["ln_a", "p"],
            )
        }
        FitModel::LogTime => {
            check_positive(&xs_raw)?;
            (
                xs_raw.iter().map(|x| (1.0 / x).ln()).collect(),
                ys_raw.clone(),
                ["c", "a"],
            )
        }
        FitModel::InversePower => {
            check_positive(&xs_raw)?;
            check_positive(&ys_raw)?;
            (
                xs_raw.iter().map(|x| x.ln()).collect(),
                ys_raw.iter().map(|y| y.ln()).collect(),
                ["ln_a", "neg_q"],
            )
        }
        FitModel::InversePowerFixed { q } => {
            check_positive(&xs_raw)?;
            (
                xs_raw.iter().map(|x| x.powf(-q)).collect(),
                ys_raw.clone(),
                ["c", "a"],
            )
        }
    };
    let (c0, c1, se0, se1, rms) = ols(&xs, &ys);
    let mut coefficients = Vec::new();
    match model {
        FitModel::Exponential => {
            coefficients.push(FitCoefficient {
                name: "a".into(),
                value: c0.exp(),
                std_err: c0.exp() * se0,
            });
            coefficients.push(FitCoefficient {
                name: "b".into(),
                value: c1,
                std_err: se1,
            });
        }
        FitModel::Power => {
            coefficients.push(FitCoefficient {
                name: "a".into(),
                value: c0.exp(),
                std_err: c0.exp() * se0,
            });
            coefficients.push(FitCoefficient {
                name: "p".into(),
                value: c1,
                std_err: se1,
            });
        }
        FitModel::LogTime | FitModel::InversePowerFixed { .. } => {
            coefficients.push(FitCoefficient {
                name: "a".into(),
                value: c1,
                std_err: se1,
            });
            coefficients.push(FitCoefficient {
                name: "c".into(),
                value: c0,
                std_err: se0,
            });
        }
        FitModel::InversePower => {
            coefficients.push(FitCoefficient {
                name: "a".into(),
                value: c0.exp(),
                std_err: c0.exp() * se0,
            });
            coefficients.push(FitCoefficient {
                name: "q".into(),
                value: -c1,
                std_err: se1,
            });
        }
    }
    let _ = names;
    Ok(FitResult {
        model,
        coefficients,
        window: (lo, hi),
        residual_rms: rms,
        n_samples: sel.len(),
    })
}

/// Columnar output with a one-line JSON metadata header.
#[derive(Debug, Clone)]
pub struct OutputRecord {
    pub metadata: BTreeMap<String, String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl OutputRecord {
    pub fn new(columns: &[&str]) -> Self {
        OutputRecord {
            metadata: BTreeMap::new(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: &str) -> &mut Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row does not match columns");
        self.rows.push(row);
    }

    /// Render the record: `# {json}` header, column-name line, then rows in
    /// full-precision scientific notation.
    pub fn render(&self) -> String {
        let mut meta = self.metadata.clone();
        meta.insert("artifact_version".into(), env!("CARGO_PKG_VERSION").into());
        let json = serde_json::to_string(&meta).expect("metadata serializes");
        let mut out = String::new();
        let _ = writeln!(out, "# {json}");
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

/// SHA-256 hash (hex) of a serializable configuration, embedded in output
/// metadata so identical configs are identifiable.
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let bytes = serde_json::to_vec(config).expect("config serializes");
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

// ---------------------------------------------------------------------------
// Model presets
// ---------------------------------------------------------------------------

/// A named physical parameter set.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ModelPreset {
    pub omega_q: f64,
    pub omega: f64,
    pub kappa_p: f64,
    pub kappa_a: f64,
}

/// Resolve a model preset by name.
///
/// * `main-text`: ω = 0.25, Ω = 2.5·10⁵, so g_c = 500 and Ω/ω = 10⁶.
/// * `trapped-ion`: ω = 2π·1 kHz, Ω = 2π·250 kHz, κ_p = 0.01ω, κ_a = 0.01Ω.
pub fn model_preset(name: &str) -> Result<ModelPreset> {
    match name {
        "main-text" => Ok(ModelPreset {
            omega_q: 2.5e5,
            omega: 0.25,
            kappa_p: 0.0,
            kappa_a: 0.0,
        }),
        "trapped-ion" => {
            let omega = 2.0 * std::f64::consts::PI * 1.0e3;
            let omega_q = 2.0 * std::f64::consts::PI * 2.5e5;
            Ok(ModelPreset {
                omega_q,
                omega,
                kappa_p: 0.01 * omega,
                kappa_a: 0.01 * omega_q,
            })
        }
        other => Err(Error::Config {
            detail: format!("unknown model preset '{other}'"),
        }),
    }
}

// ---------------------------------------------------------------------------
// Sweep configuration and orchestration
// ---------------------------------------------------------------------------

use crate::evolve::excitation_amplitude;
use crate::fockspace::{build_squeeze_op, FockBasis, PureState};
use crate::models::{
    jcm_np_solution, np_solution, AqrmParams, JcmParams,
};
use crate::qfi::{
    qfi_fidelity, qfi_jcm_analytic, qfi_np_analytic, snr_photon_number, DEFAULT_STEP_REL,
};
use crate::schedules::{
    build_schedule, predict, ModelBase, PathSpec, Prediction, RampLaw, RampSpec,
};
use rayon::prelude::*;

fn default_true() -> bool {
    true
}

fn default_fit_decades() -> f64 {
    1.0
}

/// Which derived quantities a sweep computes per row.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OutputsRequested {
    /// Fidelity-susceptibility QFI column (the analytic column is always on).
    #[serde(default = "default_true")]
    pub qfi: bool,
    /// Photon-number SNR column.
    #[serde(default)]
    pub snr: bool,
    /// Perturbative excitation series (the |c₂|² column).
    #[serde(default = "default_true")]
    pub trajectory: bool,
    /// Scaling-law fits over the final window.
    #[serde(default = "default_true")]
    pub fits: bool,
}

/// A fully serializable, random-free sweep specification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Sweep name, recorded in output metadata.
    pub name: String,
    /// Model preset name (see [`model_preset`]).
    pub preset: String,
    pub path: PathSpec,
    pub ramp: RampSpec,
    /// Start and end values of the dimensionless swept control.
    pub s_start: f64,
    pub s_end: f64,
    /// Maximum number of reported rows (0 = every schedule sample).
    #[serde(default)]
    pub report_rows: usize,
    pub outputs: OutputsRequested,
    /// Optional dissipation; when set the sweep refuses to run (dissipative
    /// dynamics go through the `lindblad` subcommand) but the field keeps
    /// configs self-describing.
    #[serde(default)]
    pub dissipation: Option<crate::evolve::LindbladConfig>,
    /// Fit window width in decades of the swept variable, counted from the
    /// endpoint.
    #[serde(default = "default_fit_decades")]
    pub fit_window_decades: f64,
    /// All computations are deterministic; kept explicit in the config.
    #[serde(default = "default_true")]
    pub random_free: bool,
}

impl SweepConfig {
    /// Model base parameters implied by the preset and the path family.
    pub fn base(&self) -> Result<ModelBase> {
        let m = model_preset(&self.preset)?;
        match self.path {
            PathSpec::JcmLine { .. } => {
                Ok(ModelBase::Jcm(JcmParams::new(m.omega_q, m.omega, 0.0, 0.0)))
            }
            _ => Ok(ModelBase::Aqrm(AqrmParams::new(m.omega_q, m.omega, 0.0, 0.0))),
        }
    }
}

/// Built-in sweep presets.
pub fn preset_sweep(name: &str) -> Result<SweepConfig> {
    let outputs_full = OutputsRequested {
        qfi: true,
        snr: false,
        trajectory: true,
        fits: true,
    };
    let outputs_fits = OutputsRequested {
        qfi: false,
        snr: false,
        trajectory: false,
        fits: true,
    };
    let cfg = |path: PathSpec,
               ramp: RampSpec,
               s_start: f64,
               s_end: f64,
               outputs: OutputsRequested|
     -> SweepConfig {
        SweepConfig {
            name: name.to_string(),
            preset: "main-text".to_string(),
            path,
            ramp,
            s_start,
            s_end,
            report_rows: 0,
            outputs,
            dissipation: None,
            fit_window_decades: 1.0,
            random_free: true,
        }
    };
    match name {
        "fig2-k2" => Ok(cfg(
            PathSpec::StraightLine { k: 2.0 },
            RampSpec::new(1e-3, RampLaw::GapLinear)?,
            0.5,
            1e-3,
            outputs_full,
        )),
        "fig2-k1.5" => Ok(cfg(
            PathSpec::StraightLine { k: 1.5 },
            RampSpec::new(1e-3, RampLaw::GapLinear)?,
            0.5,
            1e-3,
            outputs_fits,
        )),
        "heisenberg-k2" => Ok(cfg(
            PathSpec::StraightLine { k: 2.0 },
            RampSpec::new(1e-3, RampLaw::GapQuadratic)?,
            0.5,
            1e-3,
            outputs_fits,
        )),
        "figS4-eta-1" => Ok(cfg(
            PathSpec::BoundaryLine { eta: -1.0 },
            RampSpec::new(1e-3, RampLaw::GapCubic)?,
            0.05,
            0.5 * (1.0 - 1e-3),
            outputs_fits,
        )),
        "figS4-eta-3" => Ok(cfg(
            PathSpec::BoundaryLine { eta: -3.0 },
            RampSpec::new(1e-3, RampLaw::GapCubic)?,
            0.075,
            0.75 * (1.0 - 1e-3),
            outputs_fits,
        )),
        "figS6-jcm" => Ok(cfg(
            PathSpec::JcmLine {
                k_t: 3.0,
                beta_t: 1.0,
            },
            RampSpec::new(1e-3, RampLaw::GapLinear)?,
            0.3,
            1e-4,
            outputs_full,
        )),
        // β = 1/3 needs a deep endpoint: corrections to the asymptotic
        // exponents decay only as s^{1/3}.
        "tableI-beta-1o3" => Ok(cfg(
            PathSpec::PowerCurve {
                k: 2.0,
                beta: 1.0 / 3.0,
            },
            RampSpec::new(1e-3, RampLaw::GapLinear)?,
            0.9 * 0.5f64.powf(3.0),
            1e-6,
            outputs_fits,
        )),
        "tableI-beta-1o2" => Ok(cfg(
            PathSpec::PowerCurve { k: 2.0, beta: 0.5 },
            RampSpec::new(1e-3, RampLaw::GapLinear)?,
            0.9 * 0.25,
            1e-4,
            outputs_fits,
        )),
        "tableI-beta-2o3" => Ok(cfg(
            PathSpec::PowerCurve {
                k: 2.0,
                beta: 2.0 / 3.0,
            },
            RampSpec::new(1e-3, RampLaw::GapLinear)?,
            0.9 * 0.5f64.powf(1.5),
            1e-3,
            outputs_fits,
        )),
        other => Err(Error::Config {
            detail: format!("unknown sweep preset '{other}'"),
        }),
    }
}

/// Result of [`run_sweep`]: the columnar record, the fit suite and the
/// closed-form prediction when one exists for the path/ramp pair.
#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub config: SweepConfig,
    pub record: OutputRecord,
    /// `(s, T, F_analytic)` triples for every reported row, kept for
    /// window-sensitivity refits.
    pub series: Vec<(f64, f64, f64)>,
    pub fits: BTreeMap<String, FitResult>,
    pub prediction: Option<Prediction>,
}

/// Abscissa used by the scaling fits: the swept control itself, except on
/// the boundary line where the gap closes at finite control value and the
/// natural variable is the distance ε to closure.
pub fn fit_abscissa(path: &PathSpec, s: f64) -> f64 {
    match *path {
        PathSpec::BoundaryLine { eta } => 1.0 - (1.0 - 1.0 / eta) * s,
        _ => s,
    }
}

fn is_exponential_class(path: &PathSpec, law: RampLaw) -> bool {
    if !matches!(law, RampLaw::GapLinear) {
        return false;
    }
    match *path {
        PathSpec::StraightLine { .. } | PathSpec::Parabola { .. } => true,
        PathSpec::PowerCurve { beta, .. } => beta == 1.0,
        PathSpec::JcmLine { beta_t, .. } => beta_t == 1.0,
        PathSpec::BoundaryLine { .. } => false,
    }
}

/// The standard two-fit suite for a sweep series: a time fit `T` against the
/// swept variable and a QFI fit `F`, with models chosen by the path/ramp
/// scaling class. `series` holds `(s, T, F)` rows; the window spans
/// `decades` decades of the fit abscissa from the endpoint.
pub fn sweep_fits(
    path: &PathSpec,
    ramp: &RampSpec,
    decades: f64,
    series: &[(f64, f64, f64)],
) -> Result<BTreeMap<String, FitResult>> {
    if series.is_empty() {
        return Err(Error::InsufficientData { n: 0, need: 10 });
    }
    let xs: Vec<f64> = series.iter().map(|r| fit_abscissa(path, r.0)).collect();
    let x_end = xs.last().copied().unwrap();
    let window = (x_end, x_end * 10f64.powf(decades));
    let mut fits = BTreeMap::new();

    let t_samples: Vec<(f64, f64)> = xs.iter().zip(series).map(|(x, r)| (*x, r.1)).collect();
    let exp_class = is_exponential_class(path, ramp.law);
    let t_model = if exp_class {
        FitModel::LogTime
    } else {
        match ramp.law {
            RampLaw::GapQuadratic => FitModel::InversePowerFixed { q: 1.0 },
            RampLaw::GapCubic => FitModel::InversePowerFixed { q: 0.5 },
            _ => FitModel::InversePower,
        }
    };
    fits.insert("T".to_string(), fit_scaling(&t_samples, t_model, window)?);

    if exp_class {
        // F grows exponentially with T; fit in the (T, F) plane over the
        // rows selected by the abscissa window.
        let sel: Vec<(f64, f64)> = xs
            .iter()
            .zip(series)
            .filter(|(x, _)| **x >= window.0 && **x <= window.1)
            .map(|(_, r)| (r.1, r.2))
            .collect();
        let (tmin, tmax) = sel
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (t, _)| {
                (lo.min(*t), hi.max(*t))
            });
        fits.insert(
            "F".to_string(),
            fit_scaling(&sel, FitModel::Exponential, (tmin, tmax))?,
        );
    } else {
        let f_samples: Vec<(f64, f64)> =
            xs.iter().zip(series).map(|(x, r)| (*x, r.2)).collect();
        fits.insert(
            "F".to_string(),
            fit_scaling(&f_samples, FitModel::InversePower, window)?,
        );
    }
    Ok(fits)
}

/// Fidelity-susceptibility QFI of the NP ground state at `p`, with the
/// basis sized from the local squeezing factor. Returns NaN when the
/// required basis would be impractically large.
fn fidelity_qfi_aqrm(p: &AqrmParams, gamma: f64) -> Result<f64> {
    let need = FockBasis::n_min_for_squeeze(1.1 * gamma.abs() + 0.05) + 8;
    if need > 240 {
        return Ok(f64::NAN);
    }
    // The ground state is ω-independent where ∂γ/∂ω vanishes (e.g. on the
    // single-coupling axes); there the overlap deficit is pure rounding
    // noise and the QFI is exactly zero.
    let dw = 1e-6 * p.omega;
    let dgamma = np_solution(&p.with_omega(p.omega + dw))?.gamma
        - np_solution(&p.with_omega(p.omega - dw))?.gamma;
    if dgamma.abs() < 1e-13 {
        return Ok(0.0);
    }
    let f_rough = 2.0 * (dgamma / (2.0 * dw)).powi(2);
    let basis = FockBasis::bosonic(need);
    let state_at = |w: f64| -> Result<PureState> {
        let sol = np_solution(&p.with_omega(w))?;
        Ok(build_squeeze_op(basis, sol.gamma)?.apply(&PureState::vacuum(basis)))
    };
    Ok(qfi_fidelity(state_at, p.omega, fidelity_step(p.omega, f_rough))?.value)
}

/// Initial finite-difference step for the fidelity estimator, sized so the
/// overlap deficit `F·δλ²/8 ≈ 1e-8` sits far above rounding noise while the
/// step stays a small fraction of λ.
fn fidelity_step(lambda: f64, f_rough: f64) -> f64 {
    let target = (8.0e-8 / f_rough.max(f64::MIN_POSITIVE)).sqrt();
    target.clamp(DEFAULT_STEP_REL * lambda.abs(), 0.02 * lambda.abs())
}

/// Fidelity-susceptibility QFI of the JCM NP ground state w.r.t. ω̃.
fn fidelity_qfi_jcm(p: &JcmParams, gamma_t: f64) -> Result<f64> {
    let need = FockBasis::n_min_for_squeeze(1.1 * gamma_t.abs() + 0.05) + 8;
    if need > 240 {
        return Ok(f64::NAN);
    }
    let dw = 1e-6 * p.omega_t;
    let gamma_at = |w: f64| -> Result<f64> {
        Ok(jcm_np_solution(&JcmParams { omega_t: w, ..*p })?.gamma_t)
    };
    let dgamma = gamma_at(p.omega_t + dw)? - gamma_at(p.omega_t - dw)?;
    if dgamma.abs() < 1e-13 {
        return Ok(0.0);
    }
    let f_rough = 2.0 * (dgamma / (2.0 * dw)).powi(2);
    let basis = FockBasis::bosonic(need);
    let state_at = |omega_t: f64| -> Result<PureState> {
        let q = JcmParams { omega_t, ..*p };
        let sol = jcm_np_solution(&q)?;
        Ok(build_squeeze_op(basis, sol.gamma_t)?.apply(&PureState::vacuum(basis)))
    };
    Ok(qfi_fidelity(state_at, p.omega_t, fidelity_step(p.omega_t, f_rough))?.value)
}

fn snr_aqrm(p: &AqrmParams, gamma: f64) -> Result<f64> {
    let need = FockBasis::n_min_for_squeeze(1.1 * gamma.abs() + 0.05) + 8;
    if need > 240 {
        return Ok(f64::NAN);
    }
    let basis = FockBasis::bosonic(need);
    let state = |w: f64| -> Result<PureState> {
        let sol = np_solution(&p.with_omega(w))?;
        Ok(build_squeeze_op(basis, sol.gamma)?.apply(&PureState::vacuum(basis)))
    };
    let d = DEFAULT_STEP_REL * p.omega;
    let est = snr_photon_number(
        &state(p.omega)?,
        &state(p.omega + 0.5 * d)?,
        &state(p.omega - 0.5 * d)?,
        d,
    )?;
    Ok(est.value)
}

/// Execute a sweep: build the certified schedule, evaluate the per-row
/// quantities concurrently, merge rows in sweep order and run the fit suite.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepOutput> {
    if !config.random_free {
        return Err(Error::Config {
            detail: "sweeps are deterministic; set random_free = true".into(),
        });
    }
    if config.dissipation.is_some() {
        return Err(Error::Config {
            detail: "dissipative runs go through the `lindblad` subcommand".into(),
        });
    }
    let base = config.base()?;
    let schedule = build_schedule(&config.path, &config.ramp, &base, config.s_start, config.s_end)?;

    let n = schedule.samples.len();
    let indices: Vec<usize> = if config.report_rows == 0 || n <= config.report_rows {
        (0..n).collect()
    } else {
        let m = config.report_rows;
        (0..m)
            .map(|j| (j as f64 / (m - 1) as f64 * (n - 1) as f64).round() as usize)
            .collect()
    };

    // |c₂(t)|² series from the perturbative excitation integral.
    let exc = if config.outputs.trajectory {
        Some(excitation_amplitude(&schedule)?)
    } else {
        None
    };
    let c2_at = |t: f64| -> f64 {
        match &exc {
            Some(recs) if !recs.is_empty() => {
                let i = recs.partition_point(|r| r.t < t);
                let r = if i >= recs.len() { &recs[recs.len() - 1] } else { &recs[i] };
                r.c2.norm_sqr()
            }
            _ => f64::NAN,
        }
    };

    let swept_column = match config.path {
        PathSpec::BoundaryLine { .. } => "g1",
        PathSpec::JcmLine { .. } => "h",
        _ => "g2",
    };

    struct Row {
        swept: f64,
        t: f64,
        f_an: f64,
        f_fid: f64,
        n_mean: f64,
        snr: f64,
        s: f64,
    }

    let rows: Result<Vec<Row>> = indices
        .par_iter()
        .map(|&i| -> Result<Row> {
            let smp = &schedule.samples[i];
            match base {
                ModelBase::Aqrm(b) => {
                    let p = b.with_couplings(smp.g1, smp.g2);
                    let sol = np_solution(&p)?;
                    let f_an = qfi_np_analytic(&p)?.value;
                    let f_fid = if config.outputs.qfi {
                        fidelity_qfi_aqrm(&p, sol.gamma)?
                    } else {
                        f64::NAN
                    };
                    let snr = if config.outputs.snr {
                        snr_aqrm(&p, sol.gamma)?
                    } else {
                        f64::NAN
                    };
                    let swept = match config.path {
                        PathSpec::BoundaryLine { .. } => smp.g1,
                        _ => smp.g2,
                    };
                    Ok(Row {
                        swept,
                        t: smp.t,
                        f_an,
                        f_fid,
                        n_mean: sol.mean_n,
                        snr,
                        s: smp.s,
                    })
                }
                ModelBase::Jcm(b) => {
                    let p = JcmParams {
                        g_t: smp.g1,
                        h: smp.g2,
                        ..b
                    };
                    let sol = jcm_np_solution(&p)?;
                    let f_an = qfi_jcm_analytic(&p)?.value;
                    let f_fid = if config.outputs.qfi {
                        fidelity_qfi_jcm(&p, sol.gamma_t)?
                    } else {
                        f64::NAN
                    };
                    Ok(Row {
                        swept: smp.g2,
                        t: smp.t,
                        f_an,
                        f_fid,
                        n_mean: sol.gamma_t.sinh().powi(2),
                        snr: f64::NAN,
                        s: smp.s,
                    })
                }
            }
        })
        .collect();
    let rows = rows?;

    let mut columns = vec![swept_column, "T", "F_analytic", "F_fidelity", "c2_sq", "N"];
    if config.outputs.snr {
        columns.push("S");
    }
    let mut record = OutputRecord::new(&columns);
    record.meta("config_hash", &config_hash(config));
    record.meta("preset", &config.name);
    record.meta("model_preset", &config.preset);
    record.meta("total_time", &format!("{:.17e}", schedule.total_time));
    record.meta("certificate", &format!("{:.3e}", schedule.certificate));
    for r in &rows {
        let mut row = vec![r.swept, r.t, r.f_an, r.f_fid, c2_at(r.t), r.n_mean];
        if config.outputs.snr {
            row.push(r.snr);
        }
        record.push(row);
    }

    let series: Vec<(f64, f64, f64)> = rows.iter().map(|r| (r.s, r.t, r.f_an)).collect();
    let fits = if config.outputs.fits {
        sweep_fits(&config.path, &config.ramp, config.fit_window_decades, &series)?
    } else {
        BTreeMap::new()
    };
    if !fits.is_empty() {
        let json = serde_json::to_string(&fits).expect("fits serialize");
        record.meta("fits", &json);
    }
    let prediction = predict(&config.path, &config.ramp, &base, config.s_end).ok();

    Ok(SweepOutput {
        config: config.clone(),
        record,
        series,
        fits,
        prediction,
    })
}

// ---------------------------------------------------------------------------
// Figure reproduction
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictStatus {
    Pass,
    /// A comparison against a reference constant known to be sensitive to an
    /// unknown fit window; reported, never asserted.
    Flag,
    Fail,
}

/// One comparison in a reproduction report. Every verdict cites the preset
/// it ran, the computed value, the reference value and the tolerance applied.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Verdict {
    pub preset: String,
    pub quantity: String,
    pub computed: f64,
    pub reference: f64,
    /// Relative tolerance on `computed` vs `reference`.
    pub tolerance: f64,
    pub status: VerdictStatus,
    pub note: String,
}

/// Reproduction report: verdicts plus any columnar records produced.
#[derive(Debug, Clone)]
pub struct Report {
    pub figure: String,
    pub verdicts: Vec<Verdict>,
    pub records: Vec<(String, OutputRecord)>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.status != VerdictStatus::Fail)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for v in &self.verdicts {
            let tag = match v.status {
                VerdictStatus::Pass => "PASS",
                VerdictStatus::Flag => "FLAG",
                VerdictStatus::Fail => "FAIL",
            };
            let _ = writeln!(
                out,
                "[{tag}] {}/{} preset={} computed={:.6e} reference={:.6e} tol={:.1}%{}",
                self.figure,
                v.quantity,
                v.preset,
                v.computed,
                v.reference,
                v.tolerance * 100.0,
                if v.note.is_empty() {
                    String::new()
                } else {
                    format!(" ({})", v.note)
                }
            );
        }
        out
    }
}

fn check(preset: &str, quantity: &str, computed: f64, reference: f64, tol: f64, note: &str) -> Verdict {
    let ok = (computed - reference).abs() <= tol * reference.abs();
    Verdict {
        preset: preset.to_string(),
        quantity: quantity.to_string(),
        computed,
        reference,
        tolerance: tol,
        status: if ok { VerdictStatus::Pass } else { VerdictStatus::Fail },
        note: note.to_string(),
    }
}

fn check_abs(preset: &str, quantity: &str, computed: f64, bound: f64, note: &str) -> Verdict {
    let ok = computed.abs() <= bound;
    Verdict {
        preset: preset.to_string(),
        quantity: quantity.to_string(),
        computed,
        reference: 0.0,
        tolerance: bound,
        status: if ok { VerdictStatus::Pass } else { VerdictStatus::Fail },
        note: note.to_string(),
    }
}

fn flag(preset: &str, quantity: &str, computed: f64, reference: f64, note: &str) -> Verdict {
    Verdict {
        preset: preset.to_string(),
        quantity: quantity.to_string(),
        computed,
        reference,
        tolerance: 0.0,
        status: VerdictStatus::Flag,
        note: note.to_string(),
    }
}

/// Run a figure-reproduction preset and compare the extracted constants to
/// the reference values, with PASS/FLAG/FAIL verdicts.
pub fn reproduce(figure_id: &str) -> Result<Report> {
    match figure_id {
        "fig2" => reproduce_fig2(),
        "fig3" => reproduce_fig3(),
        "figS2" => reproduce_fig_s2(),
        "figS3" => reproduce_fig_s3(),
        "figS4" => reproduce_fig_s4(),
        "figS6" => reproduce_fig_s6(),
        "tableI" => reproduce_table_i(),
        other => Err(Error::UnknownFigure {
            id: other.to_string(),
        }),
    }
}

fn reproduce_fig2() -> Result<Report> {
    let cfg = preset_sweep("fig2-k2")?;
    let out = run_sweep(&cfg)?;
    let (k, delta, omega): (f64, f64, f64) = (2.0, 1e-3, 0.25);
    let a_t_exact = k / (4.0 * delta * omega * (k * k - 1.0).sqrt());
    let b_exact = 2.0 / a_t_exact;
    let mut verdicts = Vec::new();

    // Window sensitivity: report the fitted constants over three candidate
    // windows; the default (one-decade) window carries the assertion.
    for decades in [1.0, 1.5, 2.0] {
        let fits = sweep_fits(&cfg.path, &cfg.ramp, decades, &out.series)?;
        let a_t = fits["T"].coefficient("a").unwrap();
        let b = fits["F"].coefficient("b").unwrap();
        let w = format!("[{decades}dec]");
        verdicts.push(check(
            "fig2-k2",
            &format!("a_T{w}"),
            a_t,
            a_t_exact,
            0.10,
            "reference fitted value 1159.2",
        ));
        verdicts.push(check(
            "fig2-k2",
            &format!("b{w}"),
            b,
            b_exact,
            0.15,
            "reference fitted value 1.6e-3",
        ));
        if decades == 1.0 {
            verdicts.push(check("fig2-k2", "b*a_T", b * a_t, 2.0, 0.02, "internal identity"));
        }
    }

    // Quadrature endpoint against the asymptotic coefficient.
    let t_end = out.series.last().unwrap().1;
    verdicts.push(check(
        "fig2-k2",
        "T_end/ln(1/s_end)",
        t_end / (1.0 / cfg.s_end).ln(),
        a_t_exact,
        0.10,
        "quadrature endpoint vs asymptote",
    ));

    // k = 1.5 companion: the reference rate constant is inconsistent with
    // its own time coefficient, so it is flagged, not asserted.
    let cfg15 = preset_sweep("fig2-k1.5")?;
    let out15 = run_sweep(&cfg15)?;
    let b15 = out15.fits["F"].coefficient("b").unwrap();
    verdicts.push(flag(
        "fig2-k1.5",
        "b",
        b15,
        5.5e-3,
        "reference rate constant inconsistent with its companion time coefficient; reported only",
    ));

    Ok(Report {
        figure: "fig2".into(),
        verdicts,
        records: vec![("fig2-k2".into(), out.record), ("fig2-k1.5".into(), out15.record)],
    })
}

fn reproduce_fig_s4() -> Result<Report> {
    let mut verdicts = Vec::new();
    let mut records = Vec::new();
    let cases = [
        ("figS4-eta-1", 2828.4271, 0.05, "2813", 7.8125e-15, 0.10, "7.412e-15"),
        ("figS4-eta-3", 3265.9863, 0.12, "3115", 4.39453125e-15, 0.12, "4.819e-15"),
    ];
    for (name, a_t_ref, a_t_tol, a_t_note, a_f_ref, a_f_tol, a_f_note) in cases {
        let cfg = preset_sweep(name)?;
        let out = run_sweep(&cfg)?;
        let a_t = out.fits["T"].coefficient("a").unwrap();
        let a_x = out.fits["F"].coefficient("a").unwrap();
        let q_f = out.fits["F"].coefficient("q").unwrap();
        // T = c + a_T ε^{−1/2} and F = a_x ε^{−2} compose to F = a_F T⁴
        // with a_F = a_x / a_T⁴.
        let p = q_f / 0.5;
        let a_f = a_x / a_t.powi(4);
        verdicts.push(check(name, "p", p, 4.0, 0.025, "composed F-vs-T exponent"));
        verdicts.push(check(
            name,
            "a_T",
            a_t,
            a_t_ref,
            a_t_tol,
            &format!("reference fitted value {a_t_note}"),
        ));
        verdicts.push(check(
            name,
            "a_F",
            a_f,
            a_f_ref,
            a_f_tol,
            &format!("reference fitted value {a_f_note}"),
        ));
        records.push((name.to_string(), out.record));
    }
    Ok(Report {
        figure: "figS4".into(),
        verdicts,
        records,
    })
}

fn reproduce_fig_s6() -> Result<Report> {
    let cfg = preset_sweep("figS6-jcm")?;
    let out = run_sweep(&cfg)?;
    let a_t = out.fits["T"].coefficient("a").unwrap();
    let b = out.fits["F"].coefficient("b").unwrap();
    let mut verdicts = vec![check(
        "figS6-jcm",
        "b*a_T",
        b * a_t,
        2.0,
        0.02,
        "internal identity from the artifact's own fits",
    )];
    let pred_b = out
        .prediction
        .as_ref()
        .and_then(|p| p.coefficients.get("b").copied())
        .unwrap_or(f64::NAN);
    verdicts.push(check(
        "figS6-jcm",
        "predict.b",
        pred_b,
        2.0 * 1e-3 * 0.25 * 8.0f64.sqrt(), // 2δω̃√(k̃²−1) = 1.414e-3
        0.05,
        "asymptotic exponential rate",
    ));
    verdicts.push(flag(
        "figS6-jcm",
        "a_T",
        a_t,
        1084.0,
        "window-sensitive reference pair; reported only",
    ));
    verdicts.push(flag(
        "figS6-jcm",
        "b",
        b,
        1.2e-3,
        "window-sensitive reference pair; reported only",
    ));
    Ok(Report {
        figure: "figS6".into(),
        verdicts,
        records: vec![("figS6-jcm".into(), out.record)],
    })
}

fn reproduce_table_i() -> Result<Report> {
    let mut verdicts = Vec::new();
    let mut records = Vec::new();

    // β = 1/3: T still diverges but the QFI vanishes, F ∝ T^{−2}.
    {
        let cfg = preset_sweep("tableI-beta-1o3")?;
        let out = run_sweep(&cfg)?;
        let q_t = out.fits["T"].coefficient("q").unwrap();
        let q_f = out.fits["F"].coefficient("q").unwrap();
        verdicts.push(check(
            "tableI-beta-1o3",
            "p=q_F/q_T",
            q_f / q_t,
            -2.0,
            0.10,
            "limit row: decreasing QFI",
        ));
        records.push(("tableI-beta-1o3".to_string(), out.record));
    }
    // β = 1/2: the QFI saturates at 1/(8ω²k⁴).
    {
        let cfg = preset_sweep("tableI-beta-1o2")?;
        let out = run_sweep(&cfg)?;
        let f_end = out.series.last().unwrap().2;
        let f_ref = 1.0 / (8.0 * 0.25f64.powi(2) * 2.0f64.powi(4));
        verdicts.push(check(
            "tableI-beta-1o2",
            "F(s_end)",
            f_end,
            f_ref,
            0.05,
            "limit row: constant QFI 1/(8ω²k⁴)",
        ));
        records.push(("tableI-beta-1o2".to_string(), out.record));
    }
    // β = 2/3: sub-Heisenberg power p = 2(2 − 1/β) = 1.
    {
        let cfg = preset_sweep("tableI-beta-2o3")?;
        let out = run_sweep(&cfg)?;
        let q_t = out.fits["T"].coefficient("q").unwrap();
        let q_f = out.fits["F"].coefficient("q").unwrap();
        verdicts.push(check(
            "tableI-beta-2o3",
            "p=q_F/q_T",
            q_f / q_t,
            1.0,
            0.10,
            "limit row: sub-Heisenberg",
        ));
        records.push(("tableI-beta-2o3".to_string(), out.record));
    }
    // β = 1: exponential super-Heisenberg limit, b·a_T = 2.
    {
        let cfg = preset_sweep("fig2-k1.5")?;
        let mut cfg = cfg;
        cfg.name = "tableI-beta-1".into();
        let out = run_sweep(&cfg)?;
        let a_t = out.fits["T"].coefficient("a").unwrap();
        let b = out.fits["F"].coefficient("b").unwrap();
        verdicts.push(check(
            "tableI-beta-1",
            "b*a_T",
            b * a_t,
            2.0,
            0.02,
            "limit row: exponential super-Heisenberg",
        ));
        records.push(("tableI-beta-1".to_string(), out.record));
    }

    Ok(Report {
        figure: "tableI".into(),
        verdicts,
        records,
    })
}

/// Phase code used in surface records.
fn phase_code(label: crate::models::PhaseLabel) -> f64 {
    use crate::models::PhaseLabel::*;
    match label {
        Np => 0.0,
        SpX => 1.0,
        SpP => 2.0,
        Boundary => 3.0,
        TriplePoint => 4.0,
    }
}

/// Ground-state surface row at (g1, g2): (phase, |α|, ⟨x⟩, ⟨p⟩, Δx, Δp).
fn surface_point(base: &AqrmParams, g1: f64, g2: f64) -> [f64; 6] {
    use crate::models::PhaseLabel;
    let p = base.with_couplings(g1, g2);
    match crate::models::classify_phase(&p) {
        Ok(PhaseLabel::Np) => match np_solution(&p) {
            Ok(sol) => [0.0, 0.0, 0.0, 0.0, sol.dx, sol.dp],
            Err(_) => [0.0, f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN],
        },
        Ok(label @ (PhaseLabel::SpX | PhaseLabel::SpP)) => {
            match crate::models::sp_solution(&p) {
                Ok(sol) => [
                    phase_code(label),
                    sol.alpha.norm(),
                    sol.x_mean(),
                    sol.p_mean(),
                    sol.dx(),
                    sol.dp(),
                ],
                Err(_) => [
                    phase_code(label),
                    f64::NAN,
                    f64::NAN,
                    f64::NAN,
                    f64::NAN,
                    f64::NAN,
                ],
            }
        }
        Ok(label) => [phase_code(label), f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN],
        // on the SP–SP line the ground state is ambiguous
        Err(_) => [5.0, f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN],
    }
}

/// Ground-state surface over `g1 ∈ [0, span·g_c]`, `g2 ∈ [−span, span]·g_c`
/// on a `grid × grid` lattice (the g2 range covers both SP branches).
pub fn surface_record(preset: &str, grid: usize, span: f64) -> Result<(AqrmParams, OutputRecord)> {
    let m = model_preset(preset)?;
    let base = AqrmParams::new(m.omega_q, m.omega, 0.0, 0.0);
    let gc = base.g_c();
    let mut record = OutputRecord::new(&[
        "g1", "g2", "phase", "alpha_abs", "x_mean", "p_mean", "dx", "dp",
    ]);
    record.meta("preset", "surface");
    record.meta("model_preset", preset);
    record.meta("grid", &grid.to_string());
    let cells: Vec<(f64, f64)> = (0..grid)
        .flat_map(|i| {
            let g1 = span * gc * i as f64 / (grid - 1) as f64;
            (0..grid).map(move |j| {
                let g2 = -span * gc + 2.0 * span * gc * j as f64 / (grid - 1) as f64;
                (g1, g2)
            })
        })
        .collect();
    let rows: Vec<Vec<f64>> = cells
        .par_iter()
        .map(|&(g1, g2)| {
            let obs = surface_point(&base, g1, g2);
            vec![g1, g2, obs[0], obs[1], obs[2], obs[3], obs[4], obs[5]]
        })
        .collect();
    for row in rows {
        record.push(row);
    }
    Ok((base, record))
}

fn reproduce_fig_s2() -> Result<Report> {
    let (base, record) = surface_record("main-text", 101, 1.5)?;
    let gc = base.g_c();
    let mut verdicts = Vec::new();

    // |α| = 0 throughout the NP by the closed-form solution; verify on the
    // emitted surface.
    let max_np_alpha = record
        .rows
        .iter()
        .filter(|r| r[2] == 0.0)
        .map(|r| r[3])
        .fold(0.0f64, f64::max);
    verdicts.push(check_abs(
        "surface",
        "max|alpha| in NP",
        max_np_alpha,
        0.0,
        "normal phase carries no displacement",
    ));

    // Continuity: |α| → 0 approaching the NP→SP boundary along g1 = g2.
    let alpha_at = |scale: f64| -> f64 {
        let u = scale * gc;
        surface_point(&base, 0.5 * u, 0.5 * u)[1]
    };
    let ratio = alpha_at(1.0 + 1e-8) / alpha_at(1.1);
    verdicts.push(check_abs(
        "surface",
        "alpha(boundary+1e-8)/alpha(boundary+0.1)",
        ratio,
        0.01,
        "second-order line: continuous onset",
    ));

    // Discontinuity across the SP–SP line (the axis beyond the triple
    // point): the displaced quadrature flips between x and p.
    let above = surface_point(&base, 1.2 * gc, 1e-3 * gc);
    let below = surface_point(&base, 1.2 * gc, -1e-3 * gc);
    let jump = (above[2] - below[2]).abs();
    verdicts.push(check(
        "surface",
        "x_mean jump across SP-SP line",
        jump,
        above[2].abs(),
        0.05,
        "first-order line: order parameter direction flips",
    ));
    verdicts.push(check(
        "surface",
        "|alpha| continuity across SP-SP line",
        below[1],
        above[1],
        0.05,
        "the magnitude matches while the direction flips",
    ));

    Ok(Report {
        figure: "figS2".into(),
        verdicts,
        records: vec![("figS2-surface".into(), record)],
    })
}

fn reproduce_fig_s3() -> Result<Report> {
    let (base, record) = surface_record("main-text", 101, 1.5)?;
    let gc = base.g_c();
    let mut verdicts = Vec::new();
    let isq2 = 1.0 / 2.0f64.sqrt();

    // Δx = Δp = 1/√2 exactly on the axes inside the NP.
    let mut axis_dev = 0.0f64;
    for i in 0..99 {
        let g = 0.99 * gc * i as f64 / 98.0;
        for (g1, g2) in [(g, 0.0), (0.0, g)] {
            let obs = surface_point(&base, g1, g2);
            axis_dev = axis_dev.max((obs[4] - isq2).abs()).max((obs[5] - isq2).abs());
        }
    }
    verdicts.push(check_abs(
        "surface",
        "max|Δ-1/√2| on axes",
        axis_dev,
        1e-12,
        "no squeezing on the single-coupling lines",
    ));

    // Minimum-uncertainty product throughout the NP surface.
    let max_prod_dev = record
        .rows
        .iter()
        .filter(|r| r[2] == 0.0)
        .map(|r| (r[6] * r[7] - 0.5).abs())
        .fold(0.0f64, f64::max);
    verdicts.push(check_abs(
        "surface",
        "max|Δx·Δp-1/2| in NP",
        max_prod_dev,
        1e-12,
        "squeezed vacuum stays minimum-uncertainty",
    ));

    // Squeezing diverges at the second-order boundary: approaching s₊ → 1
    // the p quadrature collapses (Δp → 0) while Δx diverges.
    let near = np_solution(&base.with_couplings(0.5 * (1.0 - 1e-6) * gc, 0.5 * (1.0 - 1e-6) * gc))?;
    verdicts.push(check_abs(
        "surface",
        "√2·Δp at boundary-1e-6",
        2.0f64.sqrt() * near.dp,
        0.05,
        "squeezing diverges on the critical line",
    ));

    Ok(Report {
        figure: "figS3".into(),
        verdicts,
        records: vec![("figS3-surface".into(), record)],
    })
}

fn reproduce_fig3() -> Result<Report> {
    use crate::evolve::{lindblad_evolve, LindbladConfig, LindbladMode};
    use crate::fockspace::{eig_hermitian, DensityOperator};
    use crate::models::build_full_aqrm;

    // Full-model open dynamics at Ω/ω = 200. The protocol duration T is
    // varied through the adiabaticity parameter δ at a fixed endpoint: fast
    // ramps lose signal to diabatic error, slow ramps to photon loss, so
    // the end-of-protocol SNR rises and then falls along T.
    let omega = 0.25;
    let omega_q = 50.0;
    let base = ModelBase::Aqrm(AqrmParams::new(omega_q, omega, 0.0, 0.0));
    let path = PathSpec::StraightLine { k: 2.0 };
    let basis = FockBasis::with_spin(20);
    let lcfg = LindbladConfig {
        kappa_p: 0.08 * omega,
        kappa_a: 0.01 * omega_q,
        mode: LindbladMode::FullModel,
    };
    let d_om = 1e-3 * omega;
    let deltas = [0.4, 0.2, 0.1, 0.05, 0.025, 0.0125];

    let run = |delta: f64, w: f64| -> Result<(f64, f64, f64)> {
        // Same rate law as GapLinear (v = 2δΔ/k) with the speed folded into
        // the prefactor, so the protocol duration can be swept over a wider
        // range than a single δ admits.
        let ramp = RampSpec::new(
            0.1,
            RampLaw::Custom {
                exponent: 1.0,
                prefactor: 2.0 * (delta / 0.1) / 2.0,
            },
        )?;
        let schedule = build_schedule(&path, &ramp, &base, 0.45, 1.5e-3)?;
        let builder = move |g1: f64, g2: f64| {
            Ok(build_full_aqrm(
                &AqrmParams::new(omega_q, w, g1, g2),
                basis,
            ))
        };
        let s0 = &schedule.samples[0];
        let h0 = builder(s0.g1, s0.g2)?;
        let (_, vecs) = eig_hermitian(&h0)?;
        let rho0 = DensityOperator::from_pure(&vecs[0]);
        let traj = lindblad_evolve(builder, &schedule, &lcfg, &rho0)?;
        let last = traj.samples.last().ok_or(Error::InsufficientData { n: 0, need: 1 })?;
        Ok((schedule.total_time, last.mean_n, last.var_n))
    };

    // (δ, ±) work units in parallel; deterministic merge by index.
    let jobs: Vec<(f64, f64)> = deltas
        .iter()
        .flat_map(|&d| [(d, omega - d_om), (d, omega + d_om)])
        .collect();
    let results: Result<Vec<(f64, f64, f64)>> =
        jobs.par_iter().map(|&(d, w)| run(d, w)).collect();
    let results = results?;

    let mut record = OutputRecord::new(&["delta", "T", "dn_domega", "var_n", "snr"]);
    record.meta("preset", "fig3-full-model");
    let mut series = Vec::new();
    for (i, &d) in deltas.iter().enumerate() {
        let (t_lo, n_lo, v_lo) = results[2 * i];
        let (t_hi, n_hi, v_hi) = results[2 * i + 1];
        let t = 0.5 * (t_lo + t_hi);
        let dn = (n_hi - n_lo) / (2.0 * d_om);
        let var = 0.5 * (v_lo + v_hi);
        let s = if var > 0.0 { dn * dn / var } else { 0.0 };
        record.push(vec![d, t, dn, var, s]);
        series.push((t, s));
    }
    // order by protocol duration (δ descending already gives ascending T)
    series.sort_by(|a, b| a.0.total_cmp(&b.0));
    let snr: Vec<f64> = series.iter().map(|p| p.1).collect();

    let (peak_idx, peak) = snr
        .iter()
        .enumerate()
        .fold((0usize, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
            if v > bv {
                (i, v)
            } else {
                (bi, bv)
            }
        });
    let first = snr.first().copied().unwrap_or(0.0);
    let last = snr.last().copied().unwrap_or(0.0);
    let n = snr.len();

    let mut verdicts = Vec::new();
    let interior = peak_idx > 0 && peak_idx + 1 < n;
    verdicts.push(Verdict {
        preset: "fig3-full-model".into(),
        quantity: "snr_peak_interior".into(),
        computed: peak_idx as f64 / (n.max(2) - 1) as f64,
        reference: 0.5,
        tolerance: 0.5,
        status: if interior { VerdictStatus::Pass } else { VerdictStatus::Fail },
        note: "peak position across protocol durations, as a fraction of the T range".into(),
    });
    verdicts.push(Verdict {
        preset: "fig3-full-model".into(),
        quantity: "snr_rise (S_peak/S_shortest)".into(),
        computed: peak / first.max(f64::MIN_POSITIVE),
        reference: 2.0,
        tolerance: 0.0,
        status: if peak >= 2.0 * first { VerdictStatus::Pass } else { VerdictStatus::Fail },
        note: "qualitative: slower ramps gain signal while the gap dominates".into(),
    });
    verdicts.push(Verdict {
        preset: "fig3-full-model".into(),
        quantity: "snr_fall (S_longest/S_peak)".into(),
        computed: last / peak,
        reference: 0.8,
        tolerance: 0.0,
        status: if last <= 0.8 * peak { VerdictStatus::Pass } else { VerdictStatus::Fail },
        note: "qualitative: decoherence degrades the SNR for the longest protocols".into(),
    });

    Ok(Report {
        figure: "fig3".into(),
        verdicts,
        records: vec![("fig3-snr".into(), record)],
    })
}

// ---------------------------------------------------------------------------
// Command-line interface
// ---------------------------------------------------------------------------

pub mod cli {
    //! Subcommand wiring for the `tripoint` binary.

    use std::path::PathBuf;

    use clap::{Args, Parser, Subcommand};
    use serde::Serialize;

    use super::{
        config_hash, fit_scaling, model_preset, preset_sweep, reproduce, run_sweep,
        surface_record, FitModel, OutputRecord, SweepConfig,
    };
    use crate::evolve::{
        gaussian_evolve, gamma_at, lindblad_evolve, np_builder, schrodinger_evolve,
        LindbladConfig, LindbladMode, Trajectory,
    };
    use crate::fockspace::{
        build_squeeze_op, eig_hermitian, DensityOperator, FockBasis, PureState,
    };
    use crate::models::{build_full_aqrm, np_solution, AqrmParams, JcmParams};
    use crate::qfi::qfi_np_analytic;
    use crate::schedules::{build_schedule, ModelBase, PathSpec, RampLaw, RampSpec, Schedule};
    use crate::{Error, Result};

    #[derive(Debug, Parser)]
    #[command(name = "tripoint", version, about = "Critical metrology near aQRM triple points")]
    pub struct Cli {
        #[command(subcommand)]
        pub command: Command,
        /// Write the columnar output here instead of stdout (for `reproduce`,
        /// a directory for the per-record files).
        #[arg(long, global = true)]
        pub out: Option<PathBuf>,
    }

    #[derive(Debug, Subcommand)]
    pub enum Command {
        /// Ground-state phase surface over the (g1, g2) plane.
        PhaseDiagram {
            #[arg(long, default_value_t = 101)]
            grid: usize,
            /// Half-range of the plane in units of g_c.
            #[arg(long, default_value_t = 1.5)]
            span: f64,
            #[arg(long, default_value = "main-text")]
            preset: String,
        },
        /// Closed-form normal-phase solution at one point.
        Np {
            /// g1 in units of g_c.
            #[arg(long)]
            g1: f64,
            /// g2 in units of g_c.
            #[arg(long)]
            g2: f64,
            #[arg(long, default_value = "main-text")]
            preset: String,
        },
        /// Analytic and fidelity QFI over a grid strictly inside the NP.
        QfiMap {
            #[arg(long, default_value_t = 20)]
            grid: usize,
            /// Margin to the phase boundary in units of g_c.
            #[arg(long, default_value_t = 0.02)]
            margin: f64,
            #[arg(long, default_value = "main-text")]
            preset: String,
        },
        /// Build and print a certified adiabatic schedule.
        Schedule {
            #[command(flatten)]
            proto: ProtocolArgs,
        },
        /// Closed-system evolution along a schedule.
        Evolve {
            #[command(flatten)]
            proto: ProtocolArgs,
            /// "gaussian" (exact quadratic propagation) or "fock"
            /// (Schrödinger integration in a truncated basis).
            #[arg(long, default_value = "gaussian")]
            engine: String,
            #[arg(long, default_value_t = 80)]
            n_max: usize,
        },
        /// Open-system (Lindblad) evolution along a schedule.
        Lindblad {
            #[command(flatten)]
            proto: ProtocolArgs,
            /// Photon loss rate; defaults to the preset's κ_p.
            #[arg(long)]
            kappa_p: Option<f64>,
            /// Spin decay rate (full mode); defaults to the preset's κ_a.
            #[arg(long)]
            kappa_a: Option<f64>,
            /// "bosonic" (effective quadratic model) or "full" (spin ⊗ boson).
            #[arg(long, default_value = "bosonic")]
            mode: String,
            #[arg(long, default_value_t = 60)]
            n_max: usize,
        },
        /// Fit a scaling law to a two-column data file.
        Fit {
            #[arg(long)]
            input: PathBuf,
            /// exponential | power | log-time | inverse-power | inverse-power-fixed
            #[arg(long)]
            model: String,
            /// Fixed exponent for inverse-power-fixed.
            #[arg(long)]
            q: Option<f64>,
            /// Fit window "lo,hi" on the first column (default: all data).
            #[arg(long)]
            window: Option<String>,
            #[arg(long, default_value_t = 0)]
            xcol: usize,
            #[arg(long, default_value_t = 1)]
            ycol: usize,
        },
        /// Reproduce a figure or table and print PASS/FLAG/FAIL verdicts.
        Reproduce {
            /// fig2 | fig3 | figS2 | figS3 | figS4 | figS6 | tableI
            figure_id: String,
        },
        /// Run a sweep described by a JSON config file.
        Sweep { config: PathBuf },
    }

    /// Shared protocol description: path, ramp law and control range.
    #[derive(Debug, Clone, Args, Serialize)]
    pub struct ProtocolArgs {
        /// straight | parabola | power | boundary | jcm
        #[arg(long, default_value = "straight")]
        pub path: String,
        #[arg(long, default_value_t = 2.0)]
        pub k: f64,
        #[arg(long, default_value_t = 2.0 / 3.0)]
        pub beta: f64,
        #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
        pub eta: f64,
        #[arg(long, default_value_t = 3.0)]
        pub k_t: f64,
        #[arg(long, default_value_t = 1.0)]
        pub beta_t: f64,
        /// Adiabaticity parameter δ.
        #[arg(long, default_value_t = 1e-3)]
        pub delta: f64,
        /// linear | quadratic | cubic | custom
        #[arg(long, default_value = "linear")]
        pub law: String,
        #[arg(long)]
        pub exponent: Option<f64>,
        #[arg(long)]
        pub prefactor: Option<f64>,
        #[arg(long)]
        pub s_start: Option<f64>,
        #[arg(long)]
        pub s_end: Option<f64>,
        #[arg(long, default_value = "main-text")]
        pub preset: String,
    }

    impl ProtocolArgs {
        pub fn resolve(&self) -> Result<(PathSpec, RampSpec, ModelBase, f64, f64)> {
            let path = match self.path.as_str() {
                "straight" => PathSpec::StraightLine { k: self.k },
                "parabola" => PathSpec::Parabola { k: self.k },
                "power" => PathSpec::PowerCurve {
                    k: self.k,
                    beta: self.beta,
                },
                "boundary" => PathSpec::BoundaryLine { eta: self.eta },
                "jcm" => PathSpec::JcmLine {
                    k_t: self.k_t,
                    beta_t: self.beta_t,
                },
                other => {
                    return Err(Error::Config {
                        detail: format!("unknown path '{other}'"),
                    })
                }
            };
            let law = match self.law.as_str() {
                "linear" => RampLaw::GapLinear,
                "quadratic" => RampLaw::GapQuadratic,
                "cubic" => RampLaw::GapCubic,
                "custom" => RampLaw::Custom {
                    exponent: self.exponent.ok_or_else(|| Error::Config {
                        detail: "custom law requires --exponent".into(),
                    })?,
                    prefactor: self.prefactor.ok_or_else(|| Error::Config {
                        detail: "custom law requires --prefactor".into(),
                    })?,
                },
                other => {
                    return Err(Error::Config {
                        detail: format!("unknown ramp law '{other}'"),
                    })
                }
            };
            let ramp = RampSpec::new(self.delta, law)?;
            let m = model_preset(&self.preset)?;
            let base = match path {
                PathSpec::JcmLine { .. } => {
                    ModelBase::Jcm(JcmParams::new(m.omega_q, m.omega, 0.0, 0.0))
                }
                _ => ModelBase::Aqrm(AqrmParams::new(m.omega_q, m.omega, 0.0, 0.0)),
            };
            // Path-family default control ranges.
            let (d_start, d_end) = match path {
                PathSpec::StraightLine { .. } | PathSpec::Parabola { .. } => (0.25_f64.min(0.5 / self.k), 1e-3),
                PathSpec::PowerCurve { k, beta } => (0.9 * (1.0 / k).powf(1.0 / beta), 1e-3),
                PathSpec::BoundaryLine { eta } => {
                    let s_max = eta / (eta - 1.0);
                    (0.1 * s_max, s_max * (1.0 - 1e-3))
                }
                PathSpec::JcmLine { k_t, .. } => (0.9 / k_t, 1e-4),
            };
            let s_start = self.s_start.unwrap_or(d_start);
            let s_end = self.s_end.unwrap_or(d_end);
            Ok((path, ramp, base, s_start, s_end))
        }
    }

    fn trajectory_record(schedule: &Schedule, traj: &Trajectory, meta: &[(&str, String)]) -> OutputRecord {
        let mut rec = OutputRecord::new(&[
            "t", "g1", "g2", "mean_n", "var_n", "fid_gs", "c2_sq", "parity",
        ]);
        for (k, v) in meta {
            rec.meta(k, v);
        }
        rec.meta("total_time", &format!("{:.17e}", schedule.total_time));
        for s in &traj.samples {
            rec.push(vec![
                s.t,
                s.g1,
                s.g2,
                s.mean_n,
                s.var_n,
                s.fid_gs.unwrap_or(f64::NAN),
                s.c2_sq.unwrap_or(f64::NAN),
                s.parity,
            ]);
        }
        rec
    }

    fn emit(record: &OutputRecord, out: &Option<PathBuf>) -> Result<()> {
        let text = record.render();
        match out {
            Some(path) => std::fs::write(path, text).map_err(|e| Error::Config {
                detail: format!("cannot write output: {e}"),
            }),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    pub fn run(cli: Cli) -> Result<()> {
        match cli.command {
            Command::PhaseDiagram { grid, span, preset } => {
                if grid < 2 {
                    return Err(Error::Config {
                        detail: "--grid must be at least 2".into(),
                    });
                }
                let (_, mut record) = surface_record(&preset, grid, span)?;
                record.meta(
                    "config_hash",
                    &config_hash(&("phase-diagram", &preset, grid, span)),
                );
                emit(&record, &cli.out)
            }
            Command::Np { g1, g2, preset } => {
                let m = model_preset(&preset)?;
                let base = AqrmParams::new(m.omega_q, m.omega, 0.0, 0.0);
                let gc = base.g_c();
                let p = base.with_couplings(g1 * gc, g2 * gc);
                let sol = np_solution(&p)?;
                let mut rec = OutputRecord::new(&[
                    "g1", "g2", "gamma", "gap", "e0", "mean_n", "dx", "dp",
                ]);
                rec.meta("config_hash", &config_hash(&("np", &preset, g1, g2)));
                rec.meta("model_preset", &preset);
                rec.push(vec![
                    p.g1, p.g2, sol.gamma, sol.gap, sol.e0, sol.mean_n, sol.dx, sol.dp,
                ]);
                emit(&rec, &cli.out)
            }
            Command::QfiMap { grid, margin, preset } => {
                if grid < 2 {
                    return Err(Error::Config {
                        detail: "--grid must be at least 2".into(),
                    });
                }
                let m = model_preset(&preset)?;
                let base = AqrmParams::new(m.omega_q, m.omega, 0.0, 0.0);
                let gc = base.g_c();
                let mut cells = Vec::new();
                for i in 0..grid {
                    for j in 0..grid {
                        let g1 = margin * gc
                            + (1.0 - 2.0 * margin) * gc * i as f64 / (grid - 1) as f64;
                        let g2 = margin * gc
                            + (1.0 - 2.0 * margin) * gc * j as f64 / (grid - 1) as f64;
                        if g1 + g2 <= (1.0 - margin) * gc {
                            cells.push((g1, g2));
                        }
                    }
                }
                use rayon::prelude::*;
                let rows: Result<Vec<Vec<f64>>> = cells
                    .par_iter()
                    .map(|&(g1, g2)| -> Result<Vec<f64>> {
                        let p = base.with_couplings(g1, g2);
                        let sol = np_solution(&p)?;
                        let f_an = qfi_np_analytic(&p)?.value;
                        let f_fid = super::fidelity_qfi_aqrm(&p, sol.gamma)?;
                        Ok(vec![g1, g2, f_an, f_fid, sol.gamma, sol.gap])
                    })
                    .collect();
                let mut rec = OutputRecord::new(&[
                    "g1", "g2", "F_analytic", "F_fidelity", "gamma", "gap",
                ]);
                rec.meta(
                    "config_hash",
                    &config_hash(&("qfi-map", &preset, grid, margin)),
                );
                rec.meta("model_preset", &preset);
                for row in rows? {
                    rec.push(row);
                }
                emit(&rec, &cli.out)
            }
            Command::Schedule { proto } => {
                let (path, ramp, base, s_start, s_end) = proto.resolve()?;
                let schedule = build_schedule(&path, &ramp, &base, s_start, s_end)?;
                let mut rec = OutputRecord::new(&["t", "g1", "g2", "v", "gap"]);
                rec.meta("config_hash", &config_hash(&("schedule", &proto)));
                rec.meta("total_time", &format!("{:.17e}", schedule.total_time));
                rec.meta("certificate", &format!("{:.3e}", schedule.certificate));
                for s in &schedule.samples {
                    rec.push(vec![s.t, s.g1, s.g2, s.v, s.gap]);
                }
                emit(&rec, &cli.out)
            }
            Command::Evolve {
                proto,
                engine,
                n_max,
            } => {
                let (path, ramp, base, s_start, s_end) = proto.resolve()?;
                let schedule = build_schedule(&path, &ramp, &base, s_start, s_end)?;
                let traj = match engine.as_str() {
                    "gaussian" => gaussian_evolve(&schedule)?,
                    "fock" => {
                        let basis = FockBasis::bosonic(n_max);
                        let g0 = gamma_at(&schedule, schedule.samples[0].s)?;
                        let psi0 =
                            build_squeeze_op(basis, g0)?.apply(&PureState::vacuum(basis));
                        let builder = np_builder(base, basis);
                        schrodinger_evolve(builder, &schedule, &psi0)?
                    }
                    other => {
                        return Err(Error::Config {
                            detail: format!("unknown engine '{other}'"),
                        })
                    }
                };
                let rec = trajectory_record(
                    &schedule,
                    &traj,
                    &[
                        ("config_hash", config_hash(&("evolve", &proto, &engine))),
                        ("engine", engine.clone()),
                    ],
                );
                emit(&rec, &cli.out)
            }
            Command::Lindblad {
                proto,
                kappa_p,
                kappa_a,
                mode,
                n_max,
            } => {
                let (path, ramp, base, s_start, s_end) = proto.resolve()?;
                let m = model_preset(&proto.preset)?;
                let schedule = build_schedule(&path, &ramp, &base, s_start, s_end)?;
                let kp = kappa_p.unwrap_or(m.kappa_p);
                let ka = kappa_a.unwrap_or(m.kappa_a);
                let traj = match mode.as_str() {
                    "bosonic" => {
                        let cfg = LindbladConfig {
                            kappa_p: kp,
                            kappa_a: 0.0,
                            mode: LindbladMode::BosonicOnly,
                        };
                        let basis = FockBasis::bosonic(n_max);
                        let g0 = gamma_at(&schedule, schedule.samples[0].s)?;
                        let psi0 =
                            build_squeeze_op(basis, g0)?.apply(&PureState::vacuum(basis));
                        let rho0 = DensityOperator::from_pure(&psi0);
                        let builder = np_builder(base, basis);
                        lindblad_evolve(builder, &schedule, &cfg, &rho0)?
                    }
                    "full" => {
                        let p = match base {
                            ModelBase::Aqrm(p) => p,
                            ModelBase::Jcm(_) => {
                                return Err(Error::Config {
                                    detail: "full mode requires an aQRM path".into(),
                                })
                            }
                        };
                        let cfg = LindbladConfig {
                            kappa_p: kp,
                            kappa_a: ka,
                            mode: LindbladMode::FullModel,
                        };
                        let basis = FockBasis::with_spin(n_max);
                        let builder = move |g1: f64, g2: f64| {
                            Ok(build_full_aqrm(&p.with_couplings(g1, g2), basis))
                        };
                        let s0 = &schedule.samples[0];
                        let h0 = builder(s0.g1, s0.g2)?;
                        let (_, vecs) = eig_hermitian(&h0)?;
                        let rho0 = DensityOperator::from_pure(&vecs[0]);
                        lindblad_evolve(builder, &schedule, &cfg, &rho0)?
                    }
                    other => {
                        return Err(Error::Config {
                            detail: format!("unknown mode '{other}'"),
                        })
                    }
                };
                let rec = trajectory_record(
                    &schedule,
                    &traj,
                    &[
                        (
                            "config_hash",
                            config_hash(&("lindblad", &proto, &mode, kp, ka)),
                        ),
                        ("mode", mode.clone()),
                    ],
                );
                emit(&rec, &cli.out)
            }
            Command::Fit {
                input,
                model,
                q,
                window,
                xcol,
                ycol,
            } => {
                let text = std::fs::read_to_string(&input).map_err(|e| Error::Config {
                    detail: format!("cannot read {}: {e}", input.display()),
                })?;
                let mut samples = Vec::new();
                for line in text.lines() {
                    let line = line.trim();
                    if line.is_empty() || line.starts_with('#') {
                        continue;
                    }
                    let cells: Vec<&str> = line.split(',').map(str::trim).collect();
                    let parse = |i: usize| cells.get(i).and_then(|c| c.parse::<f64>().ok());
                    if let (Some(x), Some(y)) = (parse(xcol), parse(ycol)) {
                        samples.push((x, y));
                    }
                }
                let model = match model.as_str() {
                    "exponential" => FitModel::Exponential,
                    "power" => FitModel::Power,
                    "log-time" => FitModel::LogTime,
                    "inverse-power" => FitModel::InversePower,
                    "inverse-power-fixed" => FitModel::InversePowerFixed {
                        q: q.ok_or_else(|| Error::Config {
                            detail: "inverse-power-fixed requires --q".into(),
                        })?,
                    },
                    other => {
                        return Err(Error::Config {
                            detail: format!("unknown fit model '{other}'"),
                        })
                    }
                };
                let window = match window {
                    Some(w) => {
                        let parts: Vec<&str> = w.split(',').collect();
                        let bad = || Error::Config {
                            detail: "window must be 'lo,hi'".into(),
                        };
                        if parts.len() != 2 {
                            return Err(bad());
                        }
                        (
                            parts[0].trim().parse::<f64>().map_err(|_| bad())?,
                            parts[1].trim().parse::<f64>().map_err(|_| bad())?,
                        )
                    }
                    None => samples.iter().fold(
                        (f64::INFINITY, f64::NEG_INFINITY),
                        |(lo, hi), (x, _)| (lo.min(*x), hi.max(*x)),
                    ),
                };
                let fit = fit_scaling(&samples, model, window)?;
                println!(
                    "{}",
                    serde_json::to_string_pretty(&fit).expect("fit serializes")
                );
                Ok(())
            }
            Command::Reproduce { figure_id } => {
                let report = reproduce(&figure_id)?;
                print!("{}", report.render());
                if let Some(dir) = &cli.out {
                    std::fs::create_dir_all(dir).map_err(|e| Error::Config {
                        detail: format!("cannot create {}: {e}", dir.display()),
                    })?;
                    for (name, rec) in &report.records {
                        let path = dir.join(format!("{name}.csv"));
                        std::fs::write(&path, rec.render()).map_err(|e| Error::Config {
                            detail: format!("cannot write {}: {e}", path.display()),
                        })?;
                    }
                }
                Ok(())
            }
            Command::Sweep { config } => {
                let text = std::fs::read_to_string(&config).map_err(|e| Error::Config {
                    detail: format!("cannot read {}: {e}", config.display()),
                })?;
                // Allow either a full config document or a preset reference
                // {"preset_sweep": "fig2-k2"}.
                #[derive(serde::Deserialize)]
                struct PresetRef {
                    preset_sweep: String,
                }
                let cfg: SweepConfig = match serde_json::from_str::<PresetRef>(&text) {
                    Ok(r) => preset_sweep(&r.preset_sweep)?,
                    Err(_) => serde_json::from_str(&text).map_err(|e| Error::Config {
                        detail: format!("invalid sweep config: {e}"),
                    })?,
                };
                let out = run_sweep(&cfg)?;
                emit(&out.record, &cli.out)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_model_recovery() {
        let samples: Vec<(f64, f64)> = (1..=50)
            .map(|i| {
                let t = i as f64 * 0.2;
                (t, 2.0 * (0.5 * t).exp())
            })
            .collect();
        let fit = fit_scaling(&samples, FitModel::Exponential, (0.0, 100.0)).unwrap();
        assert_relative_eq!(fit.coefficient("a").unwrap(), 2.0, max_relative = 1e-10);
        assert_relative_eq!(fit.coefficient("b").unwrap(), 0.5, max_relative = 1e-10);
        assert!(fit.residual_rms < 1e-12);

        let samples: Vec<(f64, f64)> = (1..=50)
            .map(|i| {
                let t = i as f64 * 0.2;
                (t, 3.0 * t.powf(4.0))
            })
            .collect();
        let fit = fit_scaling(&samples, FitModel::Power, (0.0, 100.0)).unwrap();
        assert_relative_eq!(fit.coefficient("a").unwrap(), 3.0, max_relative = 1e-10);
        assert_relative_eq!(fit.coefficient("p").unwrap(), 4.0, max_relative = 1e-10);

        let samples: Vec<(f64, f64)> = (1..=40)
            .map(|i| {
                let s = 0.5 * 0.9f64.powi(i);
                (s, 7.0 + 1154.7 * (1.0 / s).ln())
            })
            .collect();
        let fit = fit_scaling(&samples, FitModel::LogTime, (0.0, 1.0)).unwrap();
        assert_relative_eq!(fit.coefficient("a").unwrap(), 1154.7, max_relative = 1e-10);
        assert_relative_eq!(fit.coefficient("c").unwrap(), 7.0, max_relative = 1e-8);

        let samples: Vec<(f64, f64)> = (1..=40)
            .map(|i| {
                let s = 0.5 * 0.9f64.powi(i);
                (s, 2828.4 * s.powf(-0.5))
            })
            .collect();
        let fit = fit_scaling(&samples, FitModel::InversePower, (0.0, 1.0)).unwrap();
        assert_relative_eq!(fit.coefficient("a").unwrap(), 2828.4, max_relative = 1e-10);
        assert_relative_eq!(fit.coefficient("q").unwrap(), 0.5, max_relative = 1e-10);

        let samples: Vec<(f64, f64)> = (1..=40)
            .map(|i| {
                let s = 0.5 * 0.9f64.powi(i);
                (s, 11.0 + 2828.4 * s.powf(-0.5))
            })
            .collect();
        let fit = fit_scaling(&samples, FitModel::InversePowerFixed { q: 0.5 }, (0.0, 1.0)).unwrap();
        assert_relative_eq!(fit.coefficient("a").unwrap(), 2828.4, max_relative = 1e-10);
        assert_relative_eq!(fit.coefficient("c").unwrap(), 11.0, max_relative = 1e-8);
    }

    #[test]
    fn fit_errors() {
        let few: Vec<(f64, f64)> = (0..5).map(|i| (i as f64 + 1.0, 1.0)).collect();
        assert!(matches!(
            fit_scaling(&few, FitModel::Power, (0.0, 10.0)),
            Err(Error::InsufficientData { .. })
        ));
        let neg: Vec<(f64, f64)> = (0..12).map(|i| (i as f64 + 1.0, -1.0)).collect();
        assert!(matches!(
            fit_scaling(&neg, FitModel::Exponential, (0.0, 20.0)),
            Err(Error::NonPositiveData { .. })
        ));
    }

    #[test]
    fn output_record_renders() {
        let mut rec = OutputRecord::new(&["t", "mean_n"]);
        rec.meta("preset", "demo");
        rec.push(vec![0.0, 1.0]);
        rec.push(vec![0.5, 0.25]);
        let text = rec.render();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("# {"));
        assert!(header.contains("\"preset\":\"demo\""));
        assert_eq!(lines.next().unwrap(), "t,mean_n");
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn config_hash_deterministic() {
        #[derive(Serialize)]
        struct C {
            x: f64,
        }
        let h1 = config_hash(&C { x: 1.0 });
        let h2 = config_hash(&C { x: 1.0 });
        let h3 = config_hash(&C { x: 2.0 });
        assert_eq!(h1, h2);
        assert_ne!(h1, h3);
        assert_eq!(h1.len(), 64);
    }

    #[test]
    fn preset_sweeps_are_well_formed() {
        let names = [
            "fig2-k2",
            "fig2-k1.5",
            "heisenberg-k2",
            "figS4-eta-1",
            "figS4-eta-3",
            "figS6-jcm",
            "tableI-beta-1o3",
            "tableI-beta-1o2",
            "tableI-beta-2o3",
        ];
        for name in names {
            let cfg = preset_sweep(name).unwrap();
            assert_eq!(cfg.name, name);
            let base = cfg.base().unwrap();
            // Every preset must yield a buildable schedule.
            let schedule =
                crate::schedules::build_schedule(&cfg.path, &cfg.ramp, &base, cfg.s_start, cfg.s_end)
                    .unwrap();
            assert!(schedule.total_time > 0.0, "{name}: empty schedule");
        }
        assert!(preset_sweep("no-such-sweep").is_err());
    }

    #[test]
    fn model_presets() {
        let m = model_preset("main-text").unwrap();
        assert_relative_eq!(m.omega_q, 2.5e5);
        assert_relative_eq!(m.omega, 0.25);
        let t = model_preset("trapped-ion").unwrap();
        assert!(t.kappa_p > 0.0 && t.kappa_a > 0.0);
        assert!(model_preset("unknown").is_err());
    }

    #[test]
    fn sweep_rejects_bad_configs() {
        let mut cfg = preset_sweep("fig2-k2").unwrap();
        cfg.random_free = false;
        assert!(matches!(run_sweep(&cfg), Err(Error::Config { .. })));
        let mut cfg = preset_sweep("fig2-k2").unwrap();
        cfg.dissipation = Some(crate::evolve::LindbladConfig {
            kappa_p: 1e-3,
            kappa_a: 0.0,
            mode: crate::evolve::LindbladMode::BosonicOnly,
        });
        assert!(matches!(run_sweep(&cfg), Err(Error::Config { .. })));
    }

    #[test]
    fn sweep_is_deterministic() {
        // Identical configs must hash identically and render bitwise-identical
        // output, including every floating-point row.
        let mut cfg = preset_sweep("fig2-k2").unwrap();
        cfg.s_end = 0.05;
        cfg.report_rows = 6;
        cfg.outputs = OutputsRequested {
            qfi: false,
            snr: false,
            trajectory: false,
            fits: false,
        };
        let out1 = run_sweep(&cfg).unwrap();
        let out2 = run_sweep(&cfg).unwrap();
        assert_eq!(out1.record.render(), out2.record.render());
        assert_eq!(out1.series.len(), 6);
        // T grows monotonically as the sweep approaches the endpoint.
        for w in out1.series.windows(2) {
            assert!(w[1].1 > w[0].1);
        }
    }

    #[test]
    fn surface_record_layout() {
        let (params, rec) = surface_record("main-text", 11, 1.5).unwrap();
        assert_relative_eq!(params.g_c(), 500.0, max_relative = 1e-12);
        assert_eq!(rec.columns.len(), 8);
        assert_eq!(rec.rows.len(), 11 * 11);
    }
}
