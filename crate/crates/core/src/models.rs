//! Physical parameter types, Hamiltonian builders and closed-form phase
//! solutions for the anisotropic Rabi model (aQRM) and the squeezed-mode
//! Jaynes–Cummings model (JCM).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::fockspace::{
    build_ladder_ops, spin_ops, ComplexOperator, FockBasis,
};
use crate::{Error, Result};

/// Classification tolerance band, in units of `g_c`.
pub const PHASE_TOL: f64 = 1e-9;

/// aQRM parameters: `H = Ω/2 σ_z + ω a†a + g1/2 (a†σ₋ + aσ₊) + g2/2 (a†σ₊ + aσ₋)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AqrmParams {
    /// Two-level splitting Ω.
    pub omega_q: f64,
    /// Field frequency ω.
    pub omega: f64,
    /// Rotating-wave coupling g₁.
    pub g1: f64,
    /// Counter-rotating coupling g₂.
    pub g2: f64,
}

impl AqrmParams {
    pub fn new(omega_q: f64, omega: f64, g1: f64, g2: f64) -> Self {
        assert!(omega_q > 0.0, "Omega must be positive");
        assert!(omega > 0.0, "omega must be positive");
        AqrmParams {
            omega_q,
            omega,
            g1,
            g2,
        }
    }

    /// Critical coupling `g_c = 2√(Ωω)`, always recomputed.
    pub fn g_c(&self) -> f64 {
        2.0 * (self.omega_q * self.omega).sqrt()
    }

    pub fn with_couplings(&self, g1: f64, g2: f64) -> Self {
        AqrmParams { g1, g2, ..*self }
    }

    pub fn with_omega(&self, omega: f64) -> Self {
        assert!(omega > 0.0);
        AqrmParams { omega, ..*self }
    }
}

/// Closed-form normal-phase solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NpSolution {
    /// Squeezing factor γ of Γ(γ) = exp[γ(a²−a†²)/2].
    pub gamma: f64,
    /// Energy gap Δ.
    pub gap: f64,
    /// Ground energy E₀ (reported separately; builders drop constants).
    pub e0: f64,
    /// Mean photon number N = ½(cosh 2γ − 1).
    pub mean_n: f64,
    /// Quadrature deviation Δx = e^{−γ}/√2.
    pub dx: f64,
    /// Quadrature deviation Δp = e^{γ}/√2.
    pub dp: f64,
}

/// Superradiant branch label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpBranch {
    /// Real displacement, ⟨x⟩ ≠ 0.
    XType,
    /// Imaginary displacement, ⟨p⟩ ≠ 0.
    PType,
}

/// Closed-form superradiant-phase solution (the + sign of the physically
/// degenerate ±α pair is returned deterministically; parity symmetry makes
/// the two choices equivalent).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpSolution {
    pub branch: SpBranch,
    /// Displacement α (real for x-type, purely imaginary for p-type).
    pub alpha: Complex64,
    /// SP squeezing factor γ′.
    pub gamma_p: f64,
    /// SP gap Δ′.
    pub gap_p: f64,
    /// Renormalized two-level splitting Ω′.
    pub omega_q_p: f64,
    /// Renormalized couplings g′₁, g′₂ and critical coupling g′_c = 2√(Ω′ω).
    pub g1p: f64,
    pub g2p: f64,
    pub gcp: f64,
    /// Displaced-frame ground energy E₀′ (constant of H^d_sp, including the
    /// condensate term).
    pub e0p: f64,
}

impl SpSolution {
    pub fn x_mean(&self) -> f64 {
        2.0f64.sqrt() * self.alpha.re
    }

    pub fn p_mean(&self) -> f64 {
        2.0f64.sqrt() * self.alpha.im
    }

    /// ⟨a†a⟩ = |α|² + ½(cosh 2γ′ − 1).
    pub fn mean_n(&self) -> f64 {
        self.alpha.norm_sqr() + 0.5 * ((2.0 * self.gamma_p).cosh() - 1.0)
    }

    pub fn dx(&self) -> f64 {
        (-self.gamma_p).exp() / 2.0f64.sqrt()
    }

    pub fn dp(&self) -> f64 {
        self.gamma_p.exp() / 2.0f64.sqrt()
    }
}

/// Squeezed-mode JCM parameters:
/// `H̃ = Ω̃/2 σ_z + ω̃ a†a + g̃/2 (a†σ₋ + aσ₊) + h/2 (a†² + a²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JcmParams {
    pub omega_q_t: f64,
    pub omega_t: f64,
    pub g_t: f64,
    /// Two-photon squeezing strength h.
    pub h: f64,
}

impl JcmParams {
    pub fn new(omega_q_t: f64, omega_t: f64, g_t: f64, h: f64) -> Self {
        assert!(omega_q_t > 0.0 && omega_t > 0.0, "frequencies must be positive");
        assert!(g_t >= 0.0, "g_t must be non-negative");
        assert!(h.abs() <= omega_t, "|h| must not exceed omega_t");
        JcmParams {
            omega_q_t,
            omega_t,
            g_t,
            h,
        }
    }

    pub fn g_c(&self) -> f64 {
        2.0 * (self.omega_q_t * self.omega_t).sqrt()
    }

    /// 1 − g̃²/g̃_c².
    pub fn detuning_factor(&self) -> f64 {
        1.0 - (self.g_t / self.g_c()).powi(2)
    }
}

/// Closed-form JCM normal-phase solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JcmNpSolution {
    /// Squeezing factor γ̃.
    pub gamma_t: f64,
    /// Gap Δ̃.
    pub gap_t: f64,
}

/// Phase label of an aQRM parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseLabel {
    Np,
    SpX,
    SpP,
    Boundary,
    TriplePoint,
}

/// Classify `(g1, g2)` with a tolerance band of `1e-9·g_c` around every
/// boundary; points inside the band are `Boundary`/`TriplePoint`, never
/// silently assigned to a bulk phase.
pub fn classify_phase(params: &AqrmParams) -> Result<PhaseLabel> {
    let gc = params.g_c();
    let tol = PHASE_TOL * gc;
    let (g1, g2) = (params.g1, params.g2);
    let s = (g1 + g2).abs();
    let d = (g1 - g2).abs();

    let near = |a: f64, b: f64| (a - b).abs() <= tol;
    if (near(g1.abs(), gc) && g2.abs() <= tol) || (g1.abs() <= tol && near(g2.abs(), gc)) {
        return Ok(PhaseLabel::TriplePoint);
    }
    if s < gc - tol && d < gc - tol {
        return Ok(PhaseLabel::Np);
    }
    let prod = g1 * g2;
    if prod > 0.0 && s > gc + tol {
        return Ok(PhaseLabel::SpX);
    }
    if prod < 0.0 && d > gc + tol {
        return Ok(PhaseLabel::SpP);
    }
    if prod == 0.0 && s > gc + tol && d > gc + tol {
        // both superradiant conditions hold exactly on the axis: report it
        return Err(Error::AmbiguousRegion { g1, g2 });
    }
    Ok(PhaseLabel::Boundary)
}

fn require_np(params: &AqrmParams) -> Result<()> {
    match classify_phase(params)? {
        PhaseLabel::Np => Ok(()),
        found => Err(Error::Phase {
            expected: "NP",
            found,
            g1: params.g1,
            g2: params.g2,
        }),
    }
}

/// Closed-form NP solution (squeezing, gap, ground energy, observables).
pub fn np_solution(params: &AqrmParams) -> Result<NpSolution> {
    require_np(params)?;
    let gc = params.g_c();
    let sp = (params.g1 + params.g2) / gc;
    let sm = (params.g1 - params.g2) / gc;
    let gamma = 0.25 * ((1.0 - sp * sp) / (1.0 - sm * sm)).ln();
    let gap = params.omega * ((1.0 - sm * sm) * (1.0 - sp * sp)).sqrt();
    let e0 = -0.5 * (params.omega_q + params.omega)
        + 0.5 * params.omega * (params.g1 * params.g1 - params.g2 * params.g2) / (gc * gc)
        + 0.5 * gap;
    let mean_n = 0.5 * ((2.0 * gamma).cosh() - 1.0);
    Ok(NpSolution {
        gamma,
        gap,
        e0,
        mean_n,
        dx: (-gamma).exp() / 2.0f64.sqrt(),
        dp: gamma.exp() / 2.0f64.sqrt(),
    })
}

/// Effective NP Hamiltonian (main energy-zero convention: constants dropped)
/// `H_np = ω[(1 − (g1²+g2²)/g_c²) a†a − (g1 g2/g_c²)(a†² + a²)]`.
pub fn build_np_hamiltonian(params: &AqrmParams, basis: FockBasis) -> Result<ComplexOperator> {
    assert!(!basis.with_spin, "H_np lives on the bosonic basis");
    require_np(params)?;
    Ok(build_np_quadratic(params, basis))
}

/// The same quadratic form without the phase check (used internally where a
/// schedule has already certified the path).
pub(crate) fn build_np_quadratic(params: &AqrmParams, basis: FockBasis) -> ComplexOperator {
    let gc2 = params.g_c().powi(2);
    let c_n = params.omega * (1.0 - (params.g1 * params.g1 + params.g2 * params.g2) / gc2);
    let c_sq = -params.omega * params.g1 * params.g2 / gc2;
    let (a, adag, n) = build_ladder_ops(basis);
    let quad = a.mul(&a).matrix() + adag.mul(&adag).matrix();
    let mat = n.matrix().map(|z| z * c_n) + quad.map(|z| z * c_sq);
    ComplexOperator::new(basis, mat)
}

/// Full aQRM Hamiltonian on a spin⊗Fock basis.
pub fn build_full_aqrm(params: &AqrmParams, basis: FockBasis) -> ComplexOperator {
    assert!(basis.with_spin, "full aQRM needs a with_spin basis");
    let (a, adag, n) = build_ladder_ops(basis);
    let (sz, sp, sm) = spin_ops(basis);
    let half = |x: f64| Complex64::new(0.5 * x, 0.0);
    let mat = sz.matrix().map(|z| z * half(params.omega_q))
        + n.matrix().map(|z| z * Complex64::new(params.omega, 0.0))
        + (adag.mul(&sm).matrix() + a.mul(&sp).matrix()).map(|z| z * half(params.g1))
        + (adag.mul(&sp).matrix() + a.mul(&sm).matrix()).map(|z| z * half(params.g2));
    ComplexOperator::new(basis, mat)
}

/// Closed-form superradiant solution; the +α branch is returned (the ±α pair
/// is exactly degenerate by parity).
pub fn sp_solution(params: &AqrmParams) -> Result<SpSolution> {
    let label = classify_phase(params)?;
    let gc = params.g_c();
    let omega = params.omega;
    let (branch, u) = match label {
        PhaseLabel::SpX => (SpBranch::XType, params.g1 + params.g2),
        PhaseLabel::SpP => (SpBranch::PType, params.g1 - params.g2),
        found => {
            return Err(Error::Phase {
                expected: "SP_x or SP_p",
                found,
                g1: params.g1,
                g2: params.g2,
            })
        }
    };
    let x = u / gc;
    let amp = params.omega_q / u.abs() * (x.powi(4) - 1.0).sqrt();
    let alpha = match branch {
        SpBranch::XType => Complex64::new(amp, 0.0),
        SpBranch::PType => Complex64::new(0.0, amp),
    };
    // renormalized couplings of the displaced-frame Hamiltonian
    let (g1p, g2p, cross) = match branch {
        SpBranch::XType => {
            let w = params.g1 - params.g2;
            (
                -0.5 * (w + gc * gc / u),
                0.5 * (w - gc * gc / u),
                w,
            )
        }
        SpBranch::PType => {
            let w = params.g1 + params.g2;
            (
                -0.5 * (w + gc * gc / u),
                -0.5 * (w - gc * gc / u),
                w,
            )
        }
    };
    let omega_q_p = params.omega_q * x * x;
    let gcp = 2.0 * (omega_q_p * omega).sqrt();
    let r_cross = cross / u; // (g1∓g2)/(g1±g2)
    let r_gc = (gc / u).powi(2);
    let gamma_p = 0.25 * ((1.0 - r_gc * r_gc) / (1.0 - r_cross * r_cross)).ln();
    let gap_p = omega * ((1.0 - r_cross * r_cross) * (1.0 - r_gc * r_gc)).sqrt();
    let e0p = -0.25 * params.omega_q * (x * x + 1.0 / (x * x)) - 0.5 * omega
        + 0.5 * omega * r_cross * r_gc
        + 0.5 * gap_p;
    Ok(SpSolution {
        branch,
        alpha,
        gamma_p,
        gap_p,
        omega_q_p,
        g1p,
        g2p,
        gcp,
        e0p,
    })
}

fn require_jcm_np(params: &JcmParams) -> Result<()> {
    let det = params.detuning_factor();
    let ratio = params.h / params.omega_t;
    if ratio.abs() < det - PHASE_TOL {
        Ok(())
    } else {
        Err(Error::Phase {
            expected: "JCM NP",
            found: PhaseLabel::Boundary,
            g1: params.g_t,
            g2: params.h,
        })
    }
}

/// Closed-form JCM NP solution (γ̃, Δ̃).
pub fn jcm_np_solution(params: &JcmParams) -> Result<JcmNpSolution> {
    require_jcm_np(params)?;
    let det = params.detuning_factor();
    let r = params.h / params.omega_t;
    let gamma_t = 0.25 * ((det + r) / (det - r)).ln();
    let gap_t = params.omega_t * (det * det - r * r).sqrt();
    Ok(JcmNpSolution { gamma_t, gap_t })
}

/// Effective JCM NP Hamiltonian (energy zero shifted, as for `H_np`):
/// `H̃_np = ω̃(1 − g̃²/g̃_c²) a†a + (h/2)(a†² + a²)`.
pub fn build_jcm_np_hamiltonian(params: &JcmParams, basis: FockBasis) -> Result<ComplexOperator> {
    assert!(!basis.with_spin, "H̃_np lives on the bosonic basis");
    require_jcm_np(params)?;
    let (a, adag, n) = build_ladder_ops(basis);
    let c_n = params.omega_t * params.detuning_factor();
    let quad = a.mul(&a).matrix() + adag.mul(&adag).matrix();
    let mat = n.matrix().map(|z| z * Complex64::new(c_n, 0.0))
        + quad.map(|z| z * Complex64::new(0.5 * params.h, 0.0));
    Ok(ComplexOperator::new(basis, mat))
}
