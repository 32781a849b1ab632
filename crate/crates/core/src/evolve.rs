//! Time-dependent dynamics along a schedule: Schrödinger evolution of the
//! effective bosonic Hamiltonian, an exact Gaussian fast path, the
//! perturbative excitation amplitude c₂, instantaneous-frame decomposition,
//! and Lindblad dissipative evolution.
//!
//! All unitary stepping is second-order midpoint-exponential: the generator
//! is frozen at the step midpoint and exponentiated exactly through its
//! Hermitian eigendecomposition. Dissipative runs use classic fourth-order
//! explicit stepping (photon-loss only) or a Strang split (full model) on
//! the same certified time grid.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::fockspace::{
    build_ladder_ops, build_squeeze_op, expm_antihermitian, parity_expectation,
    parity_expectation_rho, quadrature_ops, spin_ops, ComplexOperator, DensityOperator, FockBasis,
    PureState,
};
use crate::models::{jcm_np_solution, np_solution, JcmParams};
use crate::qfi::{photon_mean_var, photon_mean_var_rho};
use crate::schedules::{path_point, ModelBase, Schedule, ScheduleSample};
use crate::{Error, Result};

/// Observables recorded at a schedule sample.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ObservableSample {
    pub t: f64,
    pub s: f64,
    pub g1: f64,
    pub g2: f64,
    pub mean_n: f64,
    pub var_n: f64,
    pub x_mean: f64,
    pub p_mean: f64,
    /// Fidelity to the instantaneous ground state (bosonic engines).
    pub fid_gs: Option<f64>,
    /// Population of the second instantaneous excited level.
    pub c2_sq: Option<f64>,
    /// ⟨σ_z⟩ (full model only).
    pub sigma_z: Option<f64>,
    pub parity: f64,
}

/// Result of an evolution run: per-sample observables plus the final state
/// in whichever representation the engine uses.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<ObservableSample>,
    pub final_pure: Option<PureState>,
    pub final_rho: Option<DensityOperator>,
    pub final_gaussian: Option<GaussianState>,
}

impl Trajectory {
    fn empty() -> Self {
        Trajectory {
            samples: Vec::new(),
            final_pure: None,
            final_rho: None,
            final_gaussian: None,
        }
    }
}

/// Pure Gaussian state: quadrature means and 2×2 covariance (vacuum = I/2).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GaussianState {
    pub x_mean: f64,
    pub p_mean: f64,
    /// [[Vxx, Vxp], [Vxp, Vpp]].
    pub cov: [[f64; 2]; 2],
}

impl GaussianState {
    pub fn vacuum() -> Self {
        GaussianState {
            x_mean: 0.0,
            p_mean: 0.0,
            cov: [[0.5, 0.0], [0.0, 0.5]],
        }
    }

    /// NP ground state Γ(γ)|0⟩: Δx² = e^{−2γ}/2, Δp² = e^{2γ}/2.
    pub fn np_ground(gamma: f64) -> Self {
        GaussianState {
            x_mean: 0.0,
            p_mean: 0.0,
            cov: [[0.5 * (-2.0 * gamma).exp(), 0.0], [0.0, 0.5 * (2.0 * gamma).exp()]],
        }
    }

    pub fn det_cov(&self) -> f64 {
        self.cov[0][0] * self.cov[1][1] - self.cov[0][1] * self.cov[0][1]
    }

    /// ⟨a†a⟩ = (tr V − 1)/2 + (⟨x⟩² + ⟨p⟩²)/2.
    pub fn mean_n(&self) -> f64 {
        0.5 * (self.cov[0][0] + self.cov[1][1] - 1.0)
            + 0.5 * (self.x_mean * self.x_mean + self.p_mean * self.p_mean)
    }

    /// Photon-number variance of a Gaussian state:
    /// `(2 tr V² − 1)/4 + m^T V m` with m the mean vector.
    pub fn var_n(&self) -> f64 {
        let v = &self.cov;
        let tr_v2 = v[0][0] * v[0][0] + 2.0 * v[0][1] * v[0][1] + v[1][1] * v[1][1];
        let m = [self.x_mean, self.p_mean];
        let mvm = m[0] * (v[0][0] * m[0] + v[0][1] * m[1]) + m[1] * (v[0][1] * m[0] + v[1][1] * m[1]);
        0.25 * (2.0 * tr_v2 - 1.0) + mvm
    }

    /// Fidelity |⟨ψ1|ψ2⟩|² between two pure Gaussian states:
    /// `exp(−½ δ^T (V1+V2)^{−1} δ) / √det(V1+V2)`.
    pub fn fidelity(&self, other: &GaussianState) -> f64 {
        let s = [
            [self.cov[0][0] + other.cov[0][0], self.cov[0][1] + other.cov[0][1]],
            [self.cov[0][1] + other.cov[0][1], self.cov[1][1] + other.cov[1][1]],
        ];
        let det = s[0][0] * s[1][1] - s[0][1] * s[0][1];
        let d = [self.x_mean - other.x_mean, self.p_mean - other.p_mean];
        // S^{-1} d
        let inv_d = [
            (s[1][1] * d[0] - s[0][1] * d[1]) / det,
            (-s[0][1] * d[0] + s[0][0] * d[1]) / det,
        ];
        let quad = d[0] * inv_d[0] + d[1] * inv_d[1];
        (-0.5 * quad).exp() / det.sqrt()
    }
}

/// Photon-loss / spin-decay configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LindbladConfig {
    pub kappa_p: f64,
    pub kappa_a: f64,
    pub mode: LindbladMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LindbladMode {
    /// Spin⊗boson model with 𝓛[a] and 𝓛[σ₋].
    FullModel,
    /// Effective bosonic model with 𝓛[a] only (κ_a unused).
    BosonicOnly,
}

/// Amplitude/phase/susceptibility sample of the perturbative c₂ integral.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ExcitationRecord {
    pub t: f64,
    pub s: f64,
    pub c2: Complex64,
    /// Accumulated dynamical phase Θ = ∫ 2Δ dt′.
    pub theta: f64,
    /// Susceptibility 𝓕 = −∂γ/∂(swept coupling).
    pub f_susc: f64,
}

/// Squeezing factor of the instantaneous ground state at control value `s`.
pub fn gamma_at(schedule: &Schedule, s: f64) -> Result<f64> {
    let (c1, c2) = path_point(&schedule.path, &schedule.base, s)?;
    match schedule.base {
        ModelBase::Aqrm(p) => Ok(np_solution(&p.with_couplings(c1, c2))?.gamma),
        ModelBase::Jcm(p) => Ok(jcm_np_solution(&JcmParams {
            g_t: c1,
            h: c2,
            ..p
        })?
        .gamma_t),
    }
}

/// Quadratic-form coefficients `H = (A x² + B p²)/2` at a path point.
pub fn quadratic_coefficients(base: &ModelBase, c1: f64, c2: f64) -> (f64, f64) {
    match base {
        ModelBase::Aqrm(p) => {
            let gc2 = p.g_c().powi(2);
            let cn = 1.0 - (c1 * c1 + c2 * c2) / gc2;
            let csq = c1 * c2 / gc2;
            (p.omega * (cn - 2.0 * csq), p.omega * (cn + 2.0 * csq))
        }
        ModelBase::Jcm(p) => {
            let det = 1.0 - (c1 / p.g_c()).powi(2);
            (p.omega_t * det + c2, p.omega_t * det - c2)
        }
    }
}

/// Convenience builder for the effective NP Hamiltonian of a schedule's base
/// model, suitable for [`schrodinger_evolve`] / [`lindblad_evolve`].
pub fn np_builder(
    base: ModelBase,
    basis: FockBasis,
) -> impl Fn(f64, f64) -> Result<ComplexOperator> {
    move |c1: f64, c2: f64| {
        let (a, b) = quadratic_coefficients(&base, c1, c2);
        // H = ω_eff a†a − χ(a†²+a²) with ω_eff=(A+B)/2, χ=(B−A)/4
        let (op_a, op_adag, op_n) = build_ladder_ops(basis);
        let quad = op_a.mul(&op_a).matrix() + op_adag.mul(&op_adag).matrix();
        let w = 0.5 * (a + b);
        let chi = 0.25 * (a - b);
        let mat = op_n.matrix().map(|z| z * w) + quad.map(|z| z * chi);
        Ok(ComplexOperator::new(basis, mat))
    }
}

fn record_pure(
    schedule: &Schedule,
    sample: &ScheduleSample,
    state: &PureState,
    x_op: &ComplexOperator,
    p_op: &ComplexOperator,
) -> Result<ObservableSample> {
    let (mean_n, var_n) = photon_mean_var(state);
    let gamma = gamma_at(schedule, sample.s)?;
    let coeffs = instantaneous_decompose(state, gamma)?;
    Ok(ObservableSample {
        t: sample.t,
        s: sample.s,
        g1: sample.g1,
        g2: sample.g2,
        mean_n,
        var_n,
        x_mean: x_op.expectation(state).re,
        p_mean: p_op.expectation(state).re,
        fid_gs: Some(coeffs[0].norm_sqr()),
        c2_sq: Some(coeffs[2].norm_sqr()),
        sigma_z: None,
        parity: parity_expectation(state),
    })
}

/// Second-order midpoint-exponential Schrödinger evolution along a schedule.
///
/// `builder` maps the physical coupling pair of a path point to the
/// (Hermitian) Hamiltonian. Observables are recorded at every coarse
/// schedule sample; `substeps` subdivides each dynamics step (used by the
/// order certificate; 1 for production runs).
pub fn schrodinger_evolve_with_substeps<B>(
    builder: B,
    schedule: &Schedule,
    psi0: &PureState,
    substeps: usize,
) -> Result<Trajectory>
where
    B: Fn(f64, f64) -> Result<ComplexOperator>,
{
    assert!(substeps >= 1);
    if schedule.samples.is_empty() {
        return Ok(Trajectory::empty());
    }
    let basis = psi0.basis();
    let fine = schedule.refine_for_dynamics()?;
    let (x_op, p_op) = quadrature_ops(basis);
    let coarse_s: Vec<f64> = schedule.samples.iter().map(|c| c.s).collect();
    let mut next_coarse = 0usize;

    let mut vec = psi0.amplitudes().clone();
    let mut out = Vec::with_capacity(schedule.samples.len());
    // initial record
    if coarse_s[0] == fine[0].s {
        let st = PureState::from_normalized(basis, vec.clone());
        out.push(record_pure(schedule, &fine[0], &st, &x_op, &p_op)?);
        next_coarse = 1;
    }
    for w in fine.windows(2) {
        let (a, b) = (w[0], w[1]);
        let dt = (b.t - a.t) / substeps as f64;
        for j in 0..substeps {
            let frac = (j as f64 + 0.5) / substeps as f64;
            let s_mid = a.s + (b.s - a.s) * frac;
            let (c1, c2) = path_point(&schedule.path, &schedule.base, s_mid)?;
            let h = builder(c1, c2)?;
            let gen = h.matrix().map(|z| z * Complex64::new(0.0, -dt));
            let u = expm_antihermitian(basis, &gen)?;
            vec = u.matrix() * &vec;
        }
        if next_coarse < coarse_s.len() && b.s == coarse_s[next_coarse] {
            let norm = vec.norm();
            if (norm - 1.0).abs() > 1e-8 {
                return Err(Error::Truncation {
                    leakage: 1.0 - norm * norm,
                    limit: 1e-8,
                    n_max: basis.n_max,
                });
            }
            let st = PureState::from_unnormalized(basis, vec.clone());
            out.push(record_pure(schedule, &b, &st, &x_op, &p_op)?);
            next_coarse += 1;
        }
    }
    let final_pure = PureState::from_unnormalized(basis, vec);
    Ok(Trajectory {
        samples: out,
        final_pure: Some(final_pure),
        final_rho: None,
        final_gaussian: None,
    })
}

/// See [`schrodinger_evolve_with_substeps`]; production entry point.
pub fn schrodinger_evolve<B>(builder: B, schedule: &Schedule, psi0: &PureState) -> Result<Trajectory>
where
    B: Fn(f64, f64) -> Result<ComplexOperator>,
{
    schrodinger_evolve_with_substeps(builder, schedule, psi0, 1)
}

/// Evolve a pure state under a frozen Hamiltonian (exact per-step
/// exponential; the step count only controls observable resolution).
pub fn schrodinger_hold(
    h: &ComplexOperator,
    psi0: &PureState,
    t_total: f64,
    n_steps: usize,
) -> Result<PureState> {
    let basis = psi0.basis();
    let dt = t_total / n_steps.max(1) as f64;
    let gen = h.matrix().map(|z| z * Complex64::new(0.0, -dt));
    let u = expm_antihermitian(basis, &gen)?;
    let mut vec = psi0.amplitudes().clone();
    for _ in 0..n_steps.max(1) {
        vec = u.matrix() * &vec;
    }
    Ok(PureState::from_unnormalized(basis, vec))
}

/// One exact rotation step of the quadratic Hamiltonian `(A x² + B p²)/2`.
fn gaussian_step(state: &mut GaussianState, a: f64, b: f64, dt: f64) {
    let nu = (a * b).sqrt();
    let (c, sn) = if nu * dt != 0.0 {
        ((nu * dt).cos(), (nu * dt).sin() / nu)
    } else {
        (1.0, dt)
    };
    // M = cos(νdt) I + sin(νdt)/ν · [[0, B], [−A, 0]]
    let m = [[c, sn * b], [-sn * a, c]];
    let (x, p) = (state.x_mean, state.p_mean);
    state.x_mean = m[0][0] * x + m[0][1] * p;
    state.p_mean = m[1][0] * x + m[1][1] * p;
    let v = state.cov;
    let mut mv = [[0.0f64; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            mv[i][j] = m[i][0] * v[0][j] + m[i][1] * v[1][j];
        }
    }
    let mut out = [[0.0f64; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = mv[i][0] * m[j][0] + mv[i][1] * m[j][1];
        }
    }
    // exact symmetrization against rounding
    let off = 0.5 * (out[0][1] + out[1][0]);
    state.cov = [[out[0][0], off], [off, out[1][1]]];
}

/// Exact Gaussian evolution of the quadratic effective model along a
/// schedule, starting from the NP ground state at the schedule start.
pub fn gaussian_evolve(schedule: &Schedule) -> Result<Trajectory> {
    if schedule.samples.is_empty() {
        return Ok(Trajectory::empty());
    }
    let fine = schedule.refine_for_dynamics()?;
    let mut state = GaussianState::np_ground(gamma_at(schedule, fine[0].s)?);
    let coarse_s: Vec<f64> = schedule.samples.iter().map(|c| c.s).collect();
    let mut next_coarse = 0usize;
    let mut out = Vec::with_capacity(schedule.samples.len());
    let mut record = |sample: &ScheduleSample, state: &GaussianState| -> Result<()> {
        let ground = GaussianState::np_ground(gamma_at(schedule, sample.s)?);
        let fid = state.fidelity(&ground);
        out.push(ObservableSample {
            t: sample.t,
            s: sample.s,
            g1: sample.g1,
            g2: sample.g2,
            mean_n: state.mean_n(),
            var_n: state.var_n(),
            x_mean: state.x_mean,
            p_mean: state.p_mean,
            fid_gs: Some(fid),
            // parity-even quadratic dynamics: the deficit is dominated by
            // the second instantaneous level
            c2_sq: Some(1.0 - fid),
            sigma_z: None,
            parity: 1.0,
        });
        Ok(())
    };
    if coarse_s[0] == fine[0].s {
        record(&fine[0], &state)?;
        next_coarse = 1;
    }
    for w in fine.windows(2) {
        let (a, b) = (w[0], w[1]);
        let s_mid = 0.5 * (a.s + b.s);
        let (c1, c2) = path_point(&schedule.path, &schedule.base, s_mid)?;
        let (ca, cb) = quadratic_coefficients(&schedule.base, c1, c2);
        gaussian_step(&mut state, ca, cb, b.t - a.t);
        if next_coarse < coarse_s.len() && b.s == coarse_s[next_coarse] {
            record(&b, &state)?;
            next_coarse += 1;
        }
    }
    Ok(Trajectory {
        samples: out,
        final_pure: None,
        final_rho: None,
        final_gaussian: Some(state),
    })
}

/// Hold a Gaussian state under frozen quadratic coefficients, recording
/// (t, ⟨n⟩) at every step.
pub fn gaussian_hold(
    a: f64,
    b: f64,
    mut state: GaussianState,
    t_total: f64,
    n_steps: usize,
) -> (GaussianState, Vec<(f64, f64)>) {
    let dt = t_total / n_steps.max(1) as f64;
    let mut series = Vec::with_capacity(n_steps + 1);
    series.push((0.0, state.mean_n()));
    for i in 1..=n_steps.max(1) {
        gaussian_step(&mut state, a, b, dt);
        series.push((i as f64 * dt, state.mean_n()));
    }
    (state, series)
}

/// Decompose a pure state in the instantaneous NP frame:
/// `c_n = ⟨n|Γ(γ)†|ψ⟩` for n ≤ 6. Errors if the retained coefficients carry
/// less than 1 − 1e-6 of the norm.
pub fn instantaneous_decompose(state: &PureState, gamma: f64) -> Result<Vec<Complex64>> {
    let basis = state.basis();
    let rotated = build_squeeze_op(basis, gamma)?.adjoint().apply(state);
    let coeffs: Vec<Complex64> = rotated.amplitudes().iter().take(7).cloned().collect();
    let kept: f64 = coeffs.iter().map(|z| z.norm_sqr()).sum();
    if kept < 1.0 - 1e-6 {
        return Err(Error::Truncation {
            leakage: 1.0 - kept,
            limit: 1e-6,
            n_max: basis.n_max,
        });
    }
    Ok(coeffs)
}

/// Perturbative excitation amplitude
/// `c₂(t) = (1/√2) ∫ e^{iΘ(t′)} γ̇ dt′`, `Θ = ∫ 2Δ dt′`,
/// integrated on the refined dynamics grid (phase advance ≤ 0.2 per step by
/// construction; steps advancing further are bisected). Records are emitted
/// at every coarse schedule sample with the exact susceptibility
/// `𝓕 = −∂γ/∂(swept coupling)`.
pub fn excitation_amplitude(schedule: &Schedule) -> Result<Vec<ExcitationRecord>> {
    if schedule.samples.is_empty() {
        return Ok(Vec::new());
    }
    let fine = schedule.refine_for_dynamics()?;
    // physical scale of the swept coupling: g_c (aQRM), ω̃ (JCM h)
    let sweep_scale = match schedule.base {
        ModelBase::Aqrm(p) => p.g_c(),
        ModelBase::Jcm(p) => p.omega_t,
    };
    let gammas: Vec<f64> = fine
        .iter()
        .map(|f| gamma_at(schedule, f.s))
        .collect::<Result<_>>()?;
    let coarse_s: Vec<f64> = schedule.samples.iter().map(|c| c.s).collect();

    let dgamma_ds = |i: usize| -> f64 {
        if i == 0 {
            (gammas[1] - gammas[0]) / (fine[1].s - fine[0].s)
        } else if i + 1 == fine.len() {
            (gammas[i] - gammas[i - 1]) / (fine[i].s - fine[i - 1].s)
        } else {
            (gammas[i + 1] - gammas[i - 1]) / (fine[i + 1].s - fine[i - 1].s)
        }
    };

    let mut theta = 0.0f64;
    let mut c2 = Complex64::new(0.0, 0.0);
    let mut out = Vec::with_capacity(schedule.samples.len());
    let mut next_coarse = 0usize;
    let mut emit = |i: usize, theta: f64, c2: Complex64, next: &mut usize| {
        if *next < coarse_s.len() && fine[i].s == coarse_s[*next] {
            out.push(ExcitationRecord {
                t: fine[i].t,
                s: fine[i].s,
                c2,
                theta,
                f_susc: -dgamma_ds(i) / sweep_scale,
            });
            *next += 1;
        }
    };
    emit(0, theta, c2, &mut next_coarse);
    let inv_sqrt2 = 1.0 / 2.0f64.sqrt();
    for i in 0..fine.len() - 1 {
        let (a, b) = (&fine[i], &fine[i + 1]);
        let dt = b.t - a.t;
        let dtheta = (a.gap + b.gap) * dt; // trapezoid of 2Δ
        // bisect any step advancing the phase too far
        let n_sub = ((dtheta / 0.3).ceil() as usize).max(1);
        let dgam = (gammas[i + 1] - gammas[i]) / n_sub as f64;
        for j in 0..n_sub {
            let th_mid = theta + dtheta * (j as f64 + 0.5) / n_sub as f64;
            c2 += Complex64::new(0.0, th_mid).exp() * (inv_sqrt2 * dgam);
        }
        theta += dtheta;
        emit(i + 1, theta, c2, &mut next_coarse);
    }
    Ok(out)
}

fn lindblad_rhs(
    h: &DMatrix<Complex64>,
    jumps: &[(f64, DMatrix<Complex64>, DMatrix<Complex64>)],
    rho: &DMatrix<Complex64>,
) -> DMatrix<Complex64> {
    let comm = h * rho - rho * h;
    let mut out = comm.map(|z| z * Complex64::new(0.0, -1.0));
    for (kappa, l, ldl) in jumps {
        if *kappa == 0.0 {
            continue;
        }
        let lr = l * rho * l.adjoint();
        let anti = ldl * rho + rho * ldl;
        out += (lr - anti.map(|z| z * 0.5)).map(|z| z * *kappa);
    }
    out
}

fn rk4_step(
    h: &DMatrix<Complex64>,
    jumps: &[(f64, DMatrix<Complex64>, DMatrix<Complex64>)],
    rho: &DMatrix<Complex64>,
    dt: f64,
) -> DMatrix<Complex64> {
    let k1 = lindblad_rhs(h, jumps, rho);
    let k2 = lindblad_rhs(h, jumps, &(rho + k1.map(|z| z * (0.5 * dt))));
    let k3 = lindblad_rhs(h, jumps, &(rho + k2.map(|z| z * (0.5 * dt))));
    let k4 = lindblad_rhs(h, jumps, &(rho + k3.map(|z| z * dt)));
    rho + (k1 + k2.map(|z| z * 2.0) + k3.map(|z| z * 2.0) + k4).map(|z| z * (dt / 6.0))
}

fn build_jumps(
    basis: FockBasis,
    config: &LindbladConfig,
) -> Vec<(f64, DMatrix<Complex64>, DMatrix<Complex64>)> {
    let (a, _, _) = build_ladder_ops(basis);
    let mut jumps = Vec::new();
    let adl = a.adjoint().mul(&a).into_matrix();
    jumps.push((config.kappa_p, a.into_matrix(), adl));
    if matches!(config.mode, LindbladMode::FullModel) {
        let (_, _, sm) = spin_ops(basis);
        let smd = sm.adjoint().mul(&sm).into_matrix();
        jumps.push((config.kappa_a, sm.into_matrix(), smd));
    }
    jumps
}

fn inf_norm(m: &DMatrix<Complex64>) -> f64 {
    let mut best = 0.0f64;
    for i in 0..m.nrows() {
        let row: f64 = (0..m.ncols()).map(|j| m[(i, j)].norm()).sum();
        best = best.max(row);
    }
    best
}

fn record_rho(sample: &ScheduleSample, rho: &DensityOperator) -> Result<ObservableSample> {
    let basis = rho.basis();
    let (mean_n, var_n) = photon_mean_var_rho(rho);
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-8 {
        return Err(Error::Truncation {
            leakage: (tr.re - 1.0).abs().max(tr.im.abs()),
            limit: 1e-8,
            n_max: basis.n_max,
        });
    }
    let sigma_z = if basis.with_spin {
        let nb = basis.n_max + 1;
        let mut sz = 0.0;
        for i in 0..basis.dim() {
            let w = if i / nb == 0 { -1.0 } else { 1.0 };
            sz += w * rho.matrix()[(i, i)].re;
        }
        Some(sz)
    } else {
        None
    };
    Ok(ObservableSample {
        t: sample.t,
        s: sample.s,
        g1: sample.g1,
        g2: sample.g2,
        mean_n,
        var_n,
        x_mean: f64::NAN,
        p_mean: f64::NAN,
        fid_gs: None,
        c2_sq: None,
        sigma_z,
        parity: parity_expectation_rho(rho),
    })
}

/// Lindblad master-equation evolution along a schedule.
///
/// `BosonicOnly` integrates the full right-hand side with classic
/// fourth-order stepping (step bounded by the generator norm);
/// `FullModel` uses a Strang split — exact unitary midpoint exponential
/// between two half-steps of the dissipator — so the stiff Ω-scale phases
/// never limit the step. Trace and positivity are monitored at every coarse
/// sample; a positivity dip below −1e-6 re-runs the segment with a halved
/// step, and −1e-4 is a hard error.
pub fn lindblad_evolve<B>(
    builder: B,
    schedule: &Schedule,
    config: &LindbladConfig,
    rho0: &DensityOperator,
) -> Result<Trajectory>
where
    B: Fn(f64, f64) -> Result<ComplexOperator>,
{
    if schedule.samples.is_empty() {
        return Ok(Trajectory::empty());
    }
    let basis = rho0.basis();
    if matches!(config.mode, LindbladMode::FullModel) {
        assert!(basis.with_spin, "FullModel requires a with_spin basis");
    }
    let jumps = build_jumps(basis, config);
    let fine = schedule.refine_for_dynamics()?;
    let coarse_s: Vec<f64> = schedule.samples.iter().map(|c| c.s).collect();
    let mut next_coarse = 0usize;
    let mut out = Vec::with_capacity(schedule.samples.len());

    let mut rho = rho0.matrix().clone();
    if coarse_s[0] == fine[0].s {
        out.push(record_rho(
            &fine[0],
            &DensityOperator::from_matrix_unchecked(basis, rho.clone()),
        )?);
        next_coarse = 1;
    }
    // segment = fine steps between consecutive coarse samples, so a
    // positivity retry can restart from the last checked state
    let mut segment_start_rho = rho.clone();
    let mut segment: Vec<(ScheduleSample, ScheduleSample)> = Vec::new();
    let mut idx = 0usize;
    while idx + 1 < fine.len() {
        segment.push((fine[idx], fine[idx + 1]));
        let at_coarse =
            next_coarse < coarse_s.len() && fine[idx + 1].s == coarse_s[next_coarse];
        if at_coarse || idx + 2 == fine.len() {
            // integrate the segment, retrying with finer substeps on
            // positivity loss
            let mut refine = 1usize;
            loop {
                let mut work = segment_start_rho.clone();
                for (a, b) in &segment {
                    let dt_full = b.t - a.t;
                    let s_mid = 0.5 * (a.s + b.s);
                    let (c1, c2) = path_point(&schedule.path, &schedule.base, s_mid)?;
                    let h = builder(c1, c2)?;
                    match config.mode {
                        LindbladMode::BosonicOnly => {
                            let scale = inf_norm(h.matrix()).max(1e-300);
                            let n_sub = ((dt_full * scale / 0.5).ceil() as usize).max(1) * refine;
                            let dt = dt_full / n_sub as f64;
                            for _ in 0..n_sub {
                                work = rk4_step(h.matrix(), &jumps, &work, dt);
                            }
                        }
                        LindbladMode::FullModel => {
                            let n_sub = refine;
                            let dt = dt_full / n_sub as f64;
                            let gen = h.matrix().map(|z| z * Complex64::new(0.0, -dt));
                            let u = expm_antihermitian(basis, &gen)?;
                            let zero = DMatrix::<Complex64>::zeros(basis.dim(), basis.dim());
                            for _ in 0..n_sub {
                                work = rk4_step(&zero, &jumps, &work, 0.5 * dt);
                                work = u.matrix() * work * u.matrix().adjoint();
                                work = rk4_step(&zero, &jumps, &work, 0.5 * dt);
                            }
                        }
                    }
                }
                // enforce exact Hermiticity against rounding drift
                work = (work.clone() + work.adjoint()).map(|z| z * 0.5);
                let candidate = DensityOperator::from_matrix_unchecked(basis, work);
                let min_eig = candidate.min_eigenvalue();
                if min_eig >= -1e-6 {
                    rho = candidate.matrix().clone();
                    break;
                }
                if refine >= 64 {
                    if min_eig < -1e-4 {
                        return Err(Error::Positivity { min_eig });
                    }
                    rho = candidate.matrix().clone();
                    break;
                }
                refine *= 2;
            }
            if at_coarse {
                out.push(record_rho(
                    &fine[idx + 1],
                    &DensityOperator::from_matrix_unchecked(basis, rho.clone()),
                )?);
                next_coarse += 1;
            }
            segment_start_rho = rho.clone();
            segment.clear();
        }
        idx += 1;
    }
    let final_rho = DensityOperator::from_matrix_unchecked(basis, rho);
    Ok(Trajectory {
        samples: out,
        final_pure: None,
        final_rho: Some(final_rho),
        final_gaussian: None,
    })
}

/// Fixed-step Lindblad evolution under a frozen Hamiltonian; returns the
/// final state and the (t, ⟨n⟩) series.
pub fn lindblad_hold(
    h: &ComplexOperator,
    config: &LindbladConfig,
    rho0: &DensityOperator,
    t_total: f64,
    n_steps: usize,
) -> Result<(DensityOperator, Vec<(f64, f64)>)> {
    let basis = rho0.basis();
    let jumps = build_jumps(basis, config);
    let dt = t_total / n_steps.max(1) as f64;
    let mut rho = rho0.matrix().clone();
    let mut series = Vec::with_capacity(n_steps + 1);
    let push = |rho: &DMatrix<Complex64>, t: f64, series: &mut Vec<(f64, f64)>| {
        let d = DensityOperator::from_matrix_unchecked(basis, rho.clone());
        let (n, _) = photon_mean_var_rho(&d);
        series.push((t, n));
    };
    push(&rho, 0.0, &mut series);
    for i in 1..=n_steps.max(1) {
        rho = rk4_step(h.matrix(), &jumps, &rho, dt);
        push(&rho, i as f64 * dt, &mut series);
    }
    let rho = (rho.clone() + rho.adjoint()).map(|z| z * 0.5);
    Ok((DensityOperator::from_matrix_unchecked(basis, rho), series))
}

/// Trace distance `½‖ρ₁−ρ₂‖₁`.
pub fn trace_distance(r1: &DensityOperator, r2: &DensityOperator) -> f64 {
    let diff = r1.matrix() - r2.matrix();
    let herm = (diff.clone() + diff.adjoint()).map(|z| z * 0.5);
    let eig = nalgebra::linalg::SymmetricEigen::new(herm);
    0.5 * eig.eigenvalues.iter().map(|v| v.abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_np_hamiltonian, AqrmParams};
    use crate::schedules::{build_schedule, PathSpec, RampLaw, RampSpec};
    use approx::assert_relative_eq;

    fn base() -> ModelBase {
        ModelBase::Aqrm(AqrmParams::new(2.5e5, 0.25, 0.0, 0.0))
    }

    fn short_schedule(delta: f64, s_end: f64) -> Schedule {
        build_schedule(
            &PathSpec::StraightLine { k: 2.0 },
            &RampSpec::new(delta, RampLaw::GapLinear).unwrap(),
            &base(),
            0.5,
            s_end,
        )
        .unwrap()
    }

    #[test]
    fn stationary_ground_stays_put() {
        let basis = FockBasis::bosonic(40);
        let p = AqrmParams::new(2.5e5, 0.25, 0.35 * 500.0, 0.35 * 500.0);
        let h = build_np_hamiltonian(&p, basis).unwrap();
        let sol = np_solution(&p).unwrap();
        let ground = build_squeeze_op(basis, sol.gamma)
            .unwrap()
            .apply(&PureState::vacuum(basis));
        let evolved = schrodinger_hold(&h, &ground, 100.0 / 0.25, 128).unwrap();
        assert!(evolved.fidelity(&ground) >= 1.0 - 1e-10);
    }

    #[test]
    fn adiabatic_run_engine_equivalence_and_parity() {
        let basis = FockBasis::bosonic(40);
        let sched = short_schedule(1e-3, 0.25);
        let psi0 = {
            let g = gamma_at(&sched, 0.5).unwrap();
            build_squeeze_op(basis, g).unwrap().apply(&PureState::vacuum(basis))
        };
        let traj = schrodinger_evolve(np_builder(base(), basis), &sched, &psi0).unwrap();
        let gauss = gaussian_evolve(&sched).unwrap();
        assert_eq!(traj.samples.len(), sched.samples.len());
        assert_eq!(gauss.samples.len(), sched.samples.len());
        for (a, b) in traj.samples.iter().zip(gauss.samples.iter()) {
            assert!((a.parity - 1.0).abs() <= 1e-8);
            let tol = 1e-6 + 1e-4 * a.mean_n.abs();
            assert!(
                (a.mean_n - b.mean_n).abs() <= tol,
                "mean_n {} vs {}",
                a.mean_n,
                b.mean_n
            );
            let tolv = 1e-6 + 1e-4 * a.var_n.abs();
            assert!((a.var_n - b.var_n).abs() <= tolv);
        }
        // adiabatic: stays near the instantaneous ground
        let last = traj.samples.last().unwrap();
        assert!(last.fid_gs.unwrap() > 1.0 - 1e-4);
        // purity of the Gaussian engine
        let g = gauss.final_gaussian.unwrap();
        assert_relative_eq!(g.det_cov(), 0.25, epsilon = 1e-9);
        let dxdp = g.cov[0][0].sqrt() * g.cov[1][1].sqrt();
        assert_relative_eq!(dxdp, 0.5, epsilon = 1e-6);
    }

    #[test]
    fn order_two_certificate() {
        let basis = FockBasis::bosonic(30);
        // deliberately coarse: a fast schedule so stepping error is visible
        let sched = build_schedule(
            &PathSpec::StraightLine { k: 2.0 },
            &RampSpec::new(0.05, RampLaw::GapLinear).unwrap(),
            &base(),
            0.5,
            0.3,
        )
        .unwrap();
        let psi0 = {
            let g = gamma_at(&sched, 0.5).unwrap();
            build_squeeze_op(basis, g).unwrap().apply(&PureState::vacuum(basis))
        };
        let reference =
            schrodinger_evolve_with_substeps(np_builder(base(), basis), &sched, &psi0, 8)
                .unwrap()
                .final_pure
                .unwrap();
        let coarse = schrodinger_evolve_with_substeps(np_builder(base(), basis), &sched, &psi0, 1)
            .unwrap()
            .final_pure
            .unwrap();
        let halved = schrodinger_evolve_with_substeps(np_builder(base(), basis), &sched, &psi0, 2)
            .unwrap()
            .final_pure
            .unwrap();
        let e1 = 1.0 - coarse.fidelity(&reference);
        let e2 = 1.0 - halved.fidelity(&reference);
        assert!(
            e1 / e2 >= 3.5,
            "order-2 certificate failed: {e1:.3e} vs {e2:.3e}"
        );
    }

    #[test]
    fn adiabatic_deficit_scales_as_delta_squared() {
        let basis = FockBasis::bosonic(40);
        let mut deficits = Vec::new();
        for delta in [1e-2, 1e-3] {
            let sched = build_schedule(
                &PathSpec::StraightLine { k: 2.0 },
                &RampSpec::new(delta, RampLaw::GapLinear).unwrap(),
                &base(),
                0.5,
                0.2,
            )
            .unwrap();
            let psi0 = {
                let g = gamma_at(&sched, 0.5).unwrap();
                build_squeeze_op(basis, g).unwrap().apply(&PureState::vacuum(basis))
            };
            let traj = schrodinger_evolve(np_builder(base(), basis), &sched, &psi0).unwrap();
            deficits.push(1.0 - traj.samples.last().unwrap().fid_gs.unwrap());
        }
        let ratio = deficits[0] / deficits[1];
        assert!(
            (70.0..130.0).contains(&ratio),
            "deficit ratio {ratio} (deficits {deficits:?})"
        );
    }

    #[test]
    fn gaussian_quench_oscillates_with_period_pi_over_gap() {
        let p = AqrmParams::new(2.5e5, 0.25, 0.35 * 500.0, 0.35 * 500.0);
        let sol = np_solution(&p).unwrap();
        let (a, b) = quadratic_coefficients(&ModelBase::Aqrm(p), p.g1, p.g2);
        assert_relative_eq!((a * b).sqrt(), sol.gap, epsilon = 1e-12);
        let period = std::f64::consts::PI / sol.gap;
        let (_, series) = gaussian_hold(a, b, GaussianState::vacuum(), period, 256);
        let maxn = series.iter().map(|x| x.1).fold(0.0f64, f64::max);
        assert!(maxn > 0.05, "no oscillation, max {maxn}");
        let at_period = series.last().unwrap().1;
        assert!(at_period.abs() < 1e-8, "not periodic: {at_period}");

        // oracle: Fock-basis evolution of the same quench
        let basis = FockBasis::bosonic(50);
        let h = build_np_hamiltonian(&p, basis).unwrap();
        let half = schrodinger_hold(&h, &PureState::vacuum(basis), 0.5 * period, 64).unwrap();
        let (n_fock, _) = photon_mean_var(&half);
        let n_gauss = series[128].1;
        assert!((n_fock - n_gauss).abs() <= 1e-6 + 1e-4 * n_fock);
    }

    #[test]
    fn decompose_ground_and_selection_rule() {
        let basis = FockBasis::bosonic(40);
        let gamma = -0.21;
        let psi = build_squeeze_op(basis, gamma).unwrap().apply(&PureState::vacuum(basis));
        let c = instantaneous_decompose(&psi, gamma).unwrap();
        assert_relative_eq!(c[0].norm(), 1.0, epsilon = 1e-10);
        for n in 1..7 {
            assert!(c[n].norm() < 1e-10);
        }

        // evolved state: odd coefficients stay empty (parity selection)
        let sched = short_schedule(1e-3, 0.3);
        let psi0 = {
            let g = gamma_at(&sched, 0.5).unwrap();
            build_squeeze_op(basis, g).unwrap().apply(&PureState::vacuum(basis))
        };
        let traj = schrodinger_evolve(np_builder(base(), basis), &sched, &psi0).unwrap();
        let fin = traj.final_pure.unwrap();
        let gend = gamma_at(&sched, 0.3).unwrap();
        let c = instantaneous_decompose(&fin, gend).unwrap();
        assert!(c[1].norm() <= 1e-8);
        assert!(c[3].norm() <= 1e-8);
    }

    #[test]
    fn excitation_susceptibility_endpoints() {
        let sched = short_schedule(1e-3, 1e-3);
        let recs = excitation_amplitude(&sched).unwrap();
        let gc = 500.0;
        let k = 2.0f64;
        let start = recs.first().unwrap().f_susc;
        let end = recs.last().unwrap().f_susc;
        assert_relative_eq!(start, -k * k / ((k * k - 1.0) * gc), max_relative = 1e-2);
        assert_relative_eq!(end, -1.0 / (4.0 * gc), max_relative = 1e-2);
        // final |c2|² within a factor 2 of δ²/(32k²)
        let c2_sq = recs.last().unwrap().c2.norm_sqr();
        let budget: f64 = 1e-6 / 32.0 / 4.0;
        assert!(
            c2_sq < 2.0 * budget.max(c2_sq) && c2_sq / budget < 30.0,
            "c2_sq {c2_sq} vs budget {budget}"
        );
        assert!(recs.iter().all(|r| r.c2.norm_sqr() <= 1.0));

        // boundary susceptibility starts at zero
        let bsched = build_schedule(
            &PathSpec::BoundaryLine { eta: -1.0 },
            &RampSpec::new(1e-3, RampLaw::GapCubic).unwrap(),
            &base(),
            1e-4,
            0.45,
        )
        .unwrap();
        let brecs = excitation_amplitude(&bsched).unwrap();
        assert!(brecs.first().unwrap().f_susc.abs() < 1e-5);
    }

    #[test]
    fn excitation_scales_as_delta_squared() {
        let mut vals = Vec::new();
        for delta in [1e-3, 1e-4] {
            let sched = build_schedule(
                &PathSpec::StraightLine { k: 2.0 },
                &RampSpec::new(delta, RampLaw::GapLinear).unwrap(),
                &base(),
                0.5,
                0.01,
            )
            .unwrap();
            let recs = excitation_amplitude(&sched).unwrap();
            vals.push(recs.last().unwrap().c2.norm_sqr());
        }
        let ratio = vals[0] / vals[1];
        assert!((50.0..200.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn lindblad_decay_law() {
        let basis = FockBasis::bosonic(8);
        let (_, _, n) = build_ladder_ops(basis);
        let h = n.scale(Complex64::new(0.25, 0.0));
        let kappa = 0.01 * 0.25;
        let config = LindbladConfig {
            kappa_p: kappa,
            kappa_a: 0.0,
            mode: LindbladMode::BosonicOnly,
        };
        let rho0 = DensityOperator::from_pure(&PureState::basis_state(basis, 1));
        let t_total = 2.0 / kappa;
        let (fin, series) = lindblad_hold(&h, &config, &rho0, t_total, 4000).unwrap();
        for (t, nval) in &series {
            let expect = (-kappa * t).exp();
            assert!((nval - expect).abs() < 1e-6, "t={t}: {nval} vs {expect}");
        }
        assert!((fin.trace().re - 1.0).abs() < 1e-8);
        fin.validate().unwrap();
    }

    #[test]
    fn lindblad_kappa_zero_matches_unitary() {
        let basis = FockBasis::bosonic(30);
        let sched = short_schedule(5e-2, 0.4);
        let psi0 = {
            let g = gamma_at(&sched, 0.5).unwrap();
            build_squeeze_op(basis, g).unwrap().apply(&PureState::vacuum(basis))
        };
        let traj = schrodinger_evolve(np_builder(base(), basis), &sched, &psi0).unwrap();
        let config = LindbladConfig {
            kappa_p: 0.0,
            kappa_a: 0.0,
            mode: LindbladMode::BosonicOnly,
        };
        let rho0 = DensityOperator::from_pure(&psi0);
        let ltraj = lindblad_evolve(np_builder(base(), basis), &sched, &config, &rho0).unwrap();
        let fid = ltraj
            .final_rho
            .unwrap()
            .fidelity_pure(&traj.final_pure.unwrap());
        assert!(fid >= 1.0 - 1e-6, "fidelity {fid}");
        for s in &ltraj.samples {
            assert!(s.sigma_z.is_none());
        }
    }

    #[test]
    fn lindblad_order_four_certificate() {
        let basis = FockBasis::bosonic(10);
        let (_, _, n) = build_ladder_ops(basis);
        let h = n.scale(Complex64::new(0.25, 0.0));
        let config = LindbladConfig {
            kappa_p: 0.05,
            kappa_a: 0.0,
            mode: LindbladMode::BosonicOnly,
        };
        // superposition initial state so the unitary part matters
        let mut v = nalgebra::DVector::zeros(basis.dim());
        v[0] = Complex64::new(0.6, 0.0);
        v[3] = Complex64::new(0.8, 0.0);
        let rho0 = DensityOperator::from_pure(&PureState::from_normalized(basis, v));
        let t = 4.0;
        let run = |steps: usize| lindblad_hold(&h, &config, &rho0, t, steps).unwrap().0;
        let reference = run(4096);
        let err = |steps: usize| {
            let r = run(steps);
            (r.matrix() - reference.matrix())
                .iter()
                .map(|z| z.norm())
                .fold(0.0f64, f64::max)
        };
        let e1 = err(16);
        let e2 = err(32);
        assert!(e1 / e2 >= 12.0, "order-4 certificate: {e1:.3e}/{e2:.3e}");
    }

    #[test]
    fn lindblad_contraction() {
        let basis = FockBasis::bosonic(10);
        let (_, _, n) = build_ladder_ops(basis);
        let h = n.scale(Complex64::new(0.25, 0.0));
        let config = LindbladConfig {
            kappa_p: 0.02,
            kappa_a: 0.0,
            mode: LindbladMode::BosonicOnly,
        };
        let r1 = DensityOperator::from_pure(&PureState::basis_state(basis, 1));
        let r2 = DensityOperator::from_pure(&PureState::basis_state(basis, 2));
        let mut prev = trace_distance(&r1, &r2);
        let mut s1 = r1;
        let mut s2 = r2;
        for _ in 0..5 {
            s1 = lindblad_hold(&h, &config, &s1, 10.0, 200).unwrap().0;
            s2 = lindblad_hold(&h, &config, &s2, 10.0, 200).unwrap().0;
            let d = trace_distance(&s1, &s2);
            assert!(d <= prev + 1e-10, "trace distance grew: {d} > {prev}");
            prev = d;
        }
    }

    #[test]
    fn full_model_lindblad_smoke() {
        // short full-model segment at reduced frequency ratio
        let p = AqrmParams::new(50.0, 0.25, 0.0, 0.0);
        let b = ModelBase::Aqrm(p);
        let sched = build_schedule(
            &PathSpec::StraightLine { k: 2.0 },
            &RampSpec::new(5e-2, RampLaw::GapLinear).unwrap(),
            &b,
            0.5,
            0.4,
        )
        .unwrap();
        let basis = FockBasis::with_spin(14);
        let config = LindbladConfig {
            kappa_p: 0.01 * 0.25,
            kappa_a: 0.01 * 50.0,
            mode: LindbladMode::FullModel,
        };
        // start in |0⟩⊗|↓⟩ (NP ground at g1=0 up to O(ω/Ω))
        let rho0 = DensityOperator::from_pure(&PureState::vacuum(basis));
        let builder = |g1: f64, g2: f64| -> Result<ComplexOperator> {
            Ok(crate::models::build_full_aqrm(&p.with_couplings(g1, g2), basis))
        };
        let traj = lindblad_evolve(builder, &sched, &config, &rho0).unwrap();
        let last = traj.samples.last().unwrap();
        assert!(last.sigma_z.unwrap() < -0.9, "spin should stay down");
        let fin = traj.final_rho.unwrap();
        assert!((fin.trace().re - 1.0).abs() < 1e-8);
        assert!(fin.min_eigenvalue() > -1e-6);
    }
}
