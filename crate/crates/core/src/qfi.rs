//! Quantum Fisher information estimators and the photon-number SNR.
//!
//! Three independent estimators are provided for cross-validation: the
//! closed-form NP expression, the spectral perturbation sum, and a
//! fidelity-susceptibility finite difference. The ω-derivative convention
//! throughout treats `g_c = 2√(Ωω)` as ω-dependent while `g1`, `g2`, `Ω` are
//! held fixed — that is what makes `2(∂_ω γ)²` reproduce the closed form.

use serde::{Deserialize, Serialize};

use crate::fockspace::{ComplexOperator, DensityOperator, FockBasis, PureState};
use crate::models::{self, AqrmParams, JcmParams};
use crate::{Error, Result};

/// Default relative finite-difference step for ω-derivatives.
pub const DEFAULT_STEP_REL: f64 = 1e-5;
/// Step floor (relative to λ) for Richardson halving.
pub const STEP_FLOOR_REL: f64 = 1e-9;
/// Richardson agreement target.
pub const RICHARDSON_RTOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QfiMethod {
    Analytic,
    Perturbative,
    Fidelity,
}

/// A QFI value tagged with the estimator that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QfiEstimate {
    /// F_λ in units of 1/λ².
    pub value: f64,
    pub method: QfiMethod,
    /// Symbol tag of the estimated parameter ("omega", "omega_t", "lambda").
    pub parameter: &'static str,
    /// Finite-difference step actually used, where applicable.
    pub step_used: Option<f64>,
    /// Perturbative estimator only: fraction of the sum contributed by the
    /// top decile of retained states (truncation diagnostic).
    pub top_decile_fraction: Option<f64>,
    /// Set when the truncation diagnostic exceeds 1e-6.
    pub flagged: bool,
}

impl QfiEstimate {
    fn plain(value: f64, method: QfiMethod, parameter: &'static str) -> Self {
        QfiEstimate {
            value,
            method,
            parameter,
            step_used: None,
            top_decile_fraction: None,
            flagged: false,
        }
    }
}

/// Photon-number signal-to-noise ratio `S = (∂_ω⟨n⟩)² / var n`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnrEstimate {
    pub value: f64,
    pub mean_n: f64,
    pub var_n: f64,
    pub dn_domega: f64,
}

/// Closed-form NP QFI for ω:
/// `F_ω = (1/8ω²)[1/(1−((g1+g2)/g_c)²) − 1/(1−((g1−g2)/g_c)²)]²`.
pub fn qfi_np_analytic(params: &AqrmParams) -> Result<QfiEstimate> {
    // reuse the NP phase check
    models::np_solution(params)?;
    let gc = params.g_c();
    let sp = (params.g1 + params.g2) / gc;
    let sm = (params.g1 - params.g2) / gc;
    let bracket = 1.0 / (1.0 - sp * sp) - 1.0 / (1.0 - sm * sm);
    let value = bracket * bracket / (8.0 * params.omega * params.omega);
    Ok(QfiEstimate::plain(value, QfiMethod::Analytic, "omega"))
}

/// Closed-form JCM QFI for ω̃:
/// `F̃ = (1/2ω̃²)[(h/ω̃)/((1−g̃²/g̃_c²)² − (h/ω̃)²)]²`.
pub fn qfi_jcm_analytic(params: &JcmParams) -> Result<QfiEstimate> {
    models::jcm_np_solution(params)?;
    let det = params.detuning_factor();
    let r = params.h / params.omega_t;
    let bracket = r / (det * det - r * r);
    let value = bracket * bracket / (2.0 * params.omega_t * params.omega_t);
    Ok(QfiEstimate::plain(value, QfiMethod::Analytic, "omega_t"))
}

/// Spectral perturbation sum `F = 4 Σ_{n≠0} |⟨ψ_n|H₁|ψ_0⟩|²/(E_0−E_n)²`.
///
/// The fraction contributed by the top decile of retained states is reported
/// as a truncation diagnostic; the estimate is flagged when it exceeds 1e-6.
pub fn qfi_perturbative(h0: &ComplexOperator, h1: &ComplexOperator) -> Result<QfiEstimate> {
    let (vals, vecs) = crate::fockspace::eig_hermitian(h0)?;
    let hnorm = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let gap = vals[1] - vals[0];
    let threshold = 1e-10 * hnorm.max(1.0);
    if gap < threshold {
        return Err(Error::DegenerateGround {
            gap,
            threshold,
        });
    }
    let ground = &vecs[0];
    let h1_ground = h1.matrix() * ground.amplitudes();
    let mut terms = Vec::with_capacity(vals.len() - 1);
    for n in 1..vals.len() {
        let me = vecs[n].amplitudes().dotc(&h1_ground);
        let de = vals[0] - vals[n];
        terms.push(4.0 * me.norm_sqr() / (de * de));
    }
    let total: f64 = terms.iter().sum();
    let decile = (terms.len() / 10).max(1);
    let top: f64 = terms[terms.len() - decile..].iter().sum();
    let fraction = if total > 0.0 { top / total } else { 0.0 };
    Ok(QfiEstimate {
        value: total,
        method: QfiMethod::Perturbative,
        parameter: "lambda",
        step_used: None,
        top_decile_fraction: Some(fraction),
        flagged: fraction > 1e-6,
    })
}

/// Overlap deficits below this are dominated by rounding quantization
/// (machine-epsilon granularity of `1 − |⟨·|·⟩|`); halving the step further
/// only amplifies the noise.
pub const DEFICIT_NOISE_FLOOR: f64 = 1e-12;

/// Fidelity-susceptibility estimator
/// `F ≈ 8(1 − |⟨ψ(λ−δλ/2)|ψ(λ+δλ/2)⟩|)/δλ²`,
/// with Richardson step-halving until two consecutive estimates agree to
/// 1e-4 relative (step floor `1e-9·|λ|`) or the overlap deficit reaches
/// rounding granularity; the returned value extrapolates the last two
/// estimates, cancelling the O(δλ²) bias.
pub fn qfi_fidelity<S>(state_at: S, lambda: f64, dlambda: f64) -> Result<QfiEstimate>
where
    S: Fn(f64) -> Result<PureState>,
{
    assert!(dlambda > 0.0, "dlambda must be positive");
    let estimate = |step: f64| -> Result<(f64, f64)> {
        let minus = state_at(lambda - 0.5 * step)?;
        let plus = state_at(lambda + 0.5 * step)?;
        let deficit = 1.0 - minus.overlap(&plus).norm();
        Ok((deficit, 8.0 * deficit / (step * step)))
    };
    let floor = STEP_FLOOR_REL * lambda.abs().max(f64::MIN_POSITIVE);
    let mut step = dlambda;
    let (_, mut prev) = estimate(step)?;
    while step * 0.5 >= floor {
        step *= 0.5;
        let (deficit, cur) = estimate(step)?;
        let scale = prev.abs().max(cur.abs()).max(f64::MIN_POSITIVE);
        if (cur - prev).abs() <= RICHARDSON_RTOL * scale || deficit < DEFICIT_NOISE_FLOOR {
            return Ok(QfiEstimate {
                value: (4.0 * cur - prev) / 3.0,
                method: QfiMethod::Fidelity,
                parameter: "lambda",
                step_used: Some(step),
                top_decile_fraction: None,
                flagged: false,
            });
        }
        prev = cur;
    }
    Err(Error::NoConvergence {
        first: prev,
        second: estimate(step * 0.5)?.1,
    })
}

/// ω-derivative of the NP Hamiltonian by central finite difference of the
/// builder (g1, g2, Ω held fixed). Because g_c depends on ω the analytic
/// limit is exactly `a†a`, which this reproduces to rounding.
pub fn np_hamiltonian_omega_derivative(
    params: &AqrmParams,
    basis: FockBasis,
    d_omega: f64,
) -> Result<ComplexOperator> {
    let plus = models::build_np_hamiltonian(&params.with_omega(params.omega + 0.5 * d_omega), basis)?;
    let minus =
        models::build_np_hamiltonian(&params.with_omega(params.omega - 0.5 * d_omega), basis)?;
    let inv = num_complex::Complex64::new(1.0 / d_omega, 0.0);
    Ok(ComplexOperator::new(
        basis,
        (plus.matrix() - minus.matrix()).map(|z| z * inv),
    ))
}

/// Mean and variance of the photon number of a pure state (the number
/// operator is diagonal, so this is a weighted sum over amplitudes).
pub fn photon_mean_var(state: &PureState) -> (f64, f64) {
    let basis = state.basis();
    let nb = basis.n_max + 1;
    let mut mean = 0.0;
    let mut mean_sq = 0.0;
    for (i, z) in state.amplitudes().iter().enumerate() {
        let n = (i % nb) as f64;
        let p = z.norm_sqr();
        mean += n * p;
        mean_sq += n * n * p;
    }
    (mean, mean_sq - mean * mean)
}

/// Mean and variance of the photon number of a density operator.
pub fn photon_mean_var_rho(rho: &DensityOperator) -> (f64, f64) {
    let basis = rho.basis();
    let nb = basis.n_max + 1;
    let mut mean = 0.0;
    let mut mean_sq = 0.0;
    for i in 0..basis.dim() {
        let n = (i % nb) as f64;
        let p = rho.matrix()[(i, i)].re;
        mean += n * p;
        mean_sq += n * n * p;
    }
    (mean, mean_sq - mean * mean)
}

fn snr_from_parts(mean_n: f64, var_n: f64, n_plus: f64, n_minus: f64, d_omega: f64) -> Result<SnrEstimate> {
    if var_n < 1e-14 {
        return Err(Error::ZeroVariance { var_n });
    }
    let dn_domega = (n_plus - n_minus) / d_omega;
    Ok(SnrEstimate {
        value: dn_domega * dn_domega / var_n,
        mean_n,
        var_n,
        dn_domega,
    })
}

/// SNR from a final pure state and its paired ω±δω/2 references.
pub fn snr_photon_number(
    state: &PureState,
    at_plus: &PureState,
    at_minus: &PureState,
    d_omega: f64,
) -> Result<SnrEstimate> {
    let (mean_n, var_n) = photon_mean_var(state);
    let (n_plus, _) = photon_mean_var(at_plus);
    let (n_minus, _) = photon_mean_var(at_minus);
    snr_from_parts(mean_n, var_n, n_plus, n_minus, d_omega)
}

/// SNR from a final density operator and its paired ω±δω/2 references.
pub fn snr_photon_number_rho(
    rho: &DensityOperator,
    at_plus: &DensityOperator,
    at_minus: &DensityOperator,
    d_omega: f64,
) -> Result<SnrEstimate> {
    let (mean_n, var_n) = photon_mean_var_rho(rho);
    let (n_plus, _) = photon_mean_var_rho(at_plus);
    let (n_minus, _) = photon_mean_var_rho(at_minus);
    snr_from_parts(mean_n, var_n, n_plus, n_minus, d_omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{build_squeeze_op, FockBasis, PureState};
    use crate::models::{build_np_hamiltonian, np_solution};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use num_complex::Complex64;

    fn params(g1: f64, g2: f64) -> AqrmParams {
        let p = AqrmParams::new(2.5e5, 0.25, 0.0, 0.0);
        let gc = p.g_c();
        p.with_couplings(g1 * gc, g2 * gc)
    }

    #[test]
    fn analytic_examples() {
        assert_eq!(qfi_np_analytic(&params(0.7, 0.0)).unwrap().value, 0.0);
        let f = qfi_np_analytic(&params(0.998, 0.001)).unwrap().value;
        assert_relative_eq!(f, 222221.8, max_relative = 1e-6);
        assert_relative_eq!(f, 13888.86 / (0.25f64 * 0.25), max_relative = 1e-5);
    }

    #[test]
    fn analytic_equals_two_dgamma_sq() {
        let p = params(0.9, 0.05);
        let f = qfi_np_analytic(&p).unwrap().value;
        let gamma_at = |omega: f64| np_solution(&p.with_omega(omega)).unwrap().gamma;
        let d = 1e-6 * p.omega;
        let dgamma = (gamma_at(p.omega + d) - gamma_at(p.omega - d)) / (2.0 * d);
        assert_relative_eq!(f, 2.0 * dgamma * dgamma, max_relative = 1e-6);
    }

    #[test]
    fn table_one_beta_half_limit() {
        // path 1 − g1/g_c = k (g2/g_c)^{1/2}, k = 2, g2 → 0
        let k = 2.0;
        let s: f64 = 1e-6;
        let p = params(1.0 - k * s.sqrt(), s);
        let f = qfi_np_analytic(&p).unwrap().value;
        let limit = 1.0 / (8.0 * 0.25f64.powi(2) * k.powi(4));
        assert_relative_eq!(f, limit, max_relative = 1e-2);
    }

    #[test]
    fn perturbative_two_level_toy() {
        // σ_z/2 and σ_x/2 on the first two levels, third level decoupled
        let basis = FockBasis::bosonic(2);
        let mut h0 = DMatrix::zeros(3, 3);
        h0[(0, 0)] = Complex64::new(-0.5, 0.0);
        h0[(1, 1)] = Complex64::new(0.5, 0.0);
        h0[(2, 2)] = Complex64::new(100.0, 0.0);
        let mut h1 = DMatrix::zeros(3, 3);
        h1[(0, 1)] = Complex64::new(0.5, 0.0);
        h1[(1, 0)] = Complex64::new(0.5, 0.0);
        let est = qfi_perturbative(
            &ComplexOperator::new(basis, h0),
            &ComplexOperator::new(basis, h1),
        )
        .unwrap();
        assert_relative_eq!(est.value, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn perturbative_commuting_gives_zero() {
        let basis = FockBasis::bosonic(4);
        let h0 = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            5,
            (0..5).map(|n| Complex64::new(n as f64, 0.0)),
        ));
        let h1 = h0.map(|z| z * 3.0);
        let est = qfi_perturbative(
            &ComplexOperator::new(basis, h0),
            &ComplexOperator::new(basis, h1),
        )
        .unwrap();
        assert!(est.value.abs() < 1e-20);
    }

    #[test]
    fn perturbative_rejects_degenerate() {
        let basis = FockBasis::bosonic(2);
        let h0 = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            3,
            [0.0, 0.0, 1.0].iter().map(|&x| Complex64::new(x, 0.0)),
        ));
        let h1 = DMatrix::identity(3, 3);
        assert!(matches!(
            qfi_perturbative(
                &ComplexOperator::new(basis, h0),
                &ComplexOperator::new(basis, h1)
            ),
            Err(Error::DegenerateGround { .. })
        ));
    }

    #[test]
    fn perturbative_matches_analytic_on_np_point() {
        let basis = FockBasis::bosonic(80);
        let p = params(0.6, 0.3);
        let h0 = build_np_hamiltonian(&p, basis).unwrap();
        let h1 = np_hamiltonian_omega_derivative(&p, basis, DEFAULT_STEP_REL * p.omega).unwrap();
        let est = qfi_perturbative(&h0, &h1).unwrap();
        let analytic = qfi_np_analytic(&p).unwrap().value;
        assert_relative_eq!(est.value, analytic, max_relative = 1e-3);
        assert!(!est.flagged);
    }

    #[test]
    fn fidelity_lambda_independent_is_zero() {
        let basis = FockBasis::bosonic(10);
        let est = qfi_fidelity(|_| Ok(PureState::vacuum(basis)), 1.0, 1e-3).unwrap();
        assert!(est.value.abs() < 1e-8);
    }

    #[test]
    fn fidelity_matches_analytic_via_squeezed_vacuum() {
        let basis = FockBasis::bosonic(80);
        let p = params(0.9, 0.05);
        let state_at = |omega: f64| -> Result<PureState> {
            let sol = np_solution(&p.with_omega(omega))?;
            Ok(build_squeeze_op(basis, sol.gamma)?.apply(&PureState::vacuum(basis)))
        };
        let est = qfi_fidelity(state_at, p.omega, DEFAULT_STEP_REL * p.omega).unwrap();
        let analytic = qfi_np_analytic(&p).unwrap().value;
        assert_relative_eq!(est.value, analytic, max_relative = 1e-4 * 3.0);
    }

    #[test]
    fn fidelity_matches_jcm_analytic() {
        let basis = FockBasis::bosonic(80);
        let h = 0.02 * 0.25;
        let base = JcmParams::new(2.5e5, 0.25, 0.0, 0.0);
        let det: f64 = 3.0 * h / 0.25;
        let p = JcmParams::new(2.5e5, 0.25, base.g_c() * (1.0 - det).sqrt(), h);
        let analytic = qfi_jcm_analytic(&p).unwrap().value;
        let state_at = |omega_t: f64| -> Result<PureState> {
            // g̃, h, Ω̃ fixed; ω̃ varies (g̃_c varies with it)
            let q = JcmParams {
                omega_t,
                ..p
            };
            let sol = crate::models::jcm_np_solution(&q)?;
            Ok(build_squeeze_op(basis, sol.gamma_t)?.apply(&PureState::vacuum(basis)))
        };
        let est = qfi_fidelity(state_at, p.omega_t, DEFAULT_STEP_REL * p.omega_t).unwrap();
        assert_relative_eq!(est.value, analytic, max_relative = 1e-3);
    }

    #[test]
    fn jcm_asymptotic_value() {
        let h = 0.001 * 0.25;
        let base = JcmParams::new(2.5e5, 0.25, 0.0, 0.0);
        let det: f64 = 3.0 * h / 0.25;
        let p = JcmParams::new(2.5e5, 0.25, base.g_c() * (1.0 - det).sqrt(), h);
        let f = qfi_jcm_analytic(&p).unwrap().value;
        assert_relative_eq!(f, 125000.0, max_relative = 5e-3);
        assert_eq!(qfi_jcm_analytic(&JcmParams::new(2.5e5, 0.25, 100.0, 0.0)).unwrap().value, 0.0);
    }

    #[test]
    fn snr_saturates_qcrb_for_np_states() {
        let basis = FockBasis::bosonic(80);
        let p = params(0.998, 0.001);
        let state_at = |omega: f64| {
            let sol = np_solution(&p.with_omega(omega)).unwrap();
            build_squeeze_op(basis, sol.gamma)
                .unwrap()
                .apply(&PureState::vacuum(basis))
        };
        let d = DEFAULT_STEP_REL * p.omega;
        let snr = snr_photon_number(
            &state_at(p.omega),
            &state_at(p.omega + 0.5 * d),
            &state_at(p.omega - 0.5 * d),
            d,
        )
        .unwrap();
        let analytic = qfi_np_analytic(&p).unwrap().value;
        assert_relative_eq!(snr.value, analytic, max_relative = 1e-3);
    }

    #[test]
    fn snr_zero_variance() {
        let basis = FockBasis::bosonic(10);
        let v = PureState::vacuum(basis);
        assert!(matches!(
            snr_photon_number(&v, &v, &v, 1e-5),
            Err(Error::ZeroVariance { .. })
        ));
    }

    #[test]
    fn monotone_divergence_along_line() {
        // along g1 + k g2 = g_c, F grows as g2 decreases
        let k = 2.0;
        let mut prev = 0.0;
        for &s in &[0.4, 0.2, 0.1, 0.05, 0.01, 0.001] {
            let f = qfi_np_analytic(&params(1.0 - k * s, s)).unwrap().value;
            assert!(f > prev, "F not increasing at s={s}");
            prev = f;
        }
    }
}
