//! Truncated Fock-space (and spin⊗Fock) linear-algebra kernel.
//!
//! Dense complex matrices only — every operator in this crate lives on at
//! most ~500² elements, so sparse or Krylov machinery would be pure overhead.
//! All unitaries needed here (squeeze, displacement, time-step propagators)
//! have anti-Hermitian generators, so they are computed exactly through the
//! Hermitian eigendecomposition of `i·generator`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{Error, Result};

/// Tolerated norm leakage before a produced state is rejected.
pub const LEAKAGE_LIMIT: f64 = 1e-6;

/// Truncated Fock basis, optionally tensored with a two-level system.
///
/// With spin, the composite index is `s * (n_max + 1) + n` with the spin
/// index `s = 0` for |↓⟩ and `s = 1` for |↑⟩ (σ_z = diag(-1, +1)).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockBasis {
    pub n_max: usize,
    pub with_spin: bool,
}

impl FockBasis {
    pub fn bosonic(n_max: usize) -> Self {
        assert!(n_max >= 2, "n_max must be at least 2");
        FockBasis {
            n_max,
            with_spin: false,
        }
    }

    pub fn with_spin(n_max: usize) -> Self {
        assert!(n_max >= 2, "n_max must be at least 2");
        FockBasis {
            n_max,
            with_spin: true,
        }
    }

    pub fn dim(&self) -> usize {
        (self.n_max + 1) * if self.with_spin { 2 } else { 1 }
    }

    /// Minimum retained occupation for a squeeze factor `gamma`
    /// (`ceil(12 e^{2|γ|})`); squeezed-vacuum tails decay geometrically in
    /// `e^{-2|γ|}`, so this keeps the truncated unitarity error below 1e-8.
    pub fn n_min_for_squeeze(gamma: f64) -> usize {
        (12.0 * (2.0 * gamma.abs()).exp()).ceil() as usize
    }
}

/// Dense complex operator over a [`FockBasis`], with a cached Hermiticity flag.
#[derive(Debug, Clone)]
pub struct ComplexOperator {
    basis: FockBasis,
    mat: DMatrix<Complex64>,
    is_hermitian: bool,
}

fn hermiticity_defect(m: &DMatrix<Complex64>) -> f64 {
    let mut defect = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            if d > defect {
                defect = d;
            }
        }
    }
    defect
}

impl ComplexOperator {
    pub fn new(basis: FockBasis, mat: DMatrix<Complex64>) -> Self {
        assert_eq!(mat.nrows(), basis.dim(), "matrix does not match basis");
        assert_eq!(mat.ncols(), basis.dim(), "matrix must be square");
        let scale = mat.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        let is_hermitian = scale == 0.0 || hermiticity_defect(&mat) <= 1e-12 * scale;
        ComplexOperator {
            basis,
            mat,
            is_hermitian,
        }
    }

    pub fn zeros(basis: FockBasis) -> Self {
        Self::new(basis, DMatrix::zeros(basis.dim(), basis.dim()))
    }

    pub fn identity(basis: FockBasis) -> Self {
        Self::new(basis, DMatrix::identity(basis.dim(), basis.dim()))
    }

    pub fn basis(&self) -> FockBasis {
        self.basis
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.mat
    }

    pub fn is_hermitian(&self) -> bool {
        self.is_hermitian
    }

    pub fn adjoint(&self) -> ComplexOperator {
        ComplexOperator::new(self.basis, self.mat.adjoint())
    }

    pub fn mul(&self, rhs: &ComplexOperator) -> ComplexOperator {
        assert_eq!(self.basis, rhs.basis);
        ComplexOperator::new(self.basis, &self.mat * &rhs.mat)
    }

    pub fn scale(&self, z: Complex64) -> ComplexOperator {
        ComplexOperator::new(self.basis, self.mat.map(|m| m * z))
    }

    pub fn add(&self, rhs: &ComplexOperator) -> ComplexOperator {
        assert_eq!(self.basis, rhs.basis);
        ComplexOperator::new(self.basis, &self.mat + &rhs.mat)
    }

    /// ⟨ψ|M|ψ⟩.
    pub fn expectation(&self, state: &PureState) -> Complex64 {
        let mv = &self.mat * &state.vec;
        state.vec.dotc(&mv)
    }

    /// Tr(M ρ).
    pub fn expectation_rho(&self, rho: &DensityOperator) -> Complex64 {
        let mut tr = Complex64::new(0.0, 0.0);
        for i in 0..self.mat.nrows() {
            for k in 0..self.mat.ncols() {
                tr += self.mat[(i, k)] * rho.mat[(k, i)];
            }
        }
        tr
    }

    pub fn apply(&self, state: &PureState) -> PureState {
        assert_eq!(self.basis, state.basis);
        PureState::from_unnormalized(self.basis, &self.mat * &state.vec)
    }
}

/// Normalized pure state with truncation-leakage bookkeeping.
#[derive(Debug, Clone)]
pub struct PureState {
    basis: FockBasis,
    vec: DVector<Complex64>,
    norm_leakage: f64,
}

impl PureState {
    /// Basis state |n⟩ (bosonic basis) or |n⟩⊗|↓/↑⟩ via the composite index.
    pub fn basis_state(basis: FockBasis, index: usize) -> Self {
        assert!(index < basis.dim());
        let mut v = DVector::zeros(basis.dim());
        v[index] = Complex64::new(1.0, 0.0);
        PureState {
            basis,
            vec: v,
            norm_leakage: 0.0,
        }
    }

    pub fn vacuum(basis: FockBasis) -> Self {
        Self::basis_state(basis, 0)
    }

    /// Normalize `vec`, recording `1 - ||vec||²` as leakage (how much norm
    /// the producing operation dropped).
    pub fn from_unnormalized(basis: FockBasis, vec: DVector<Complex64>) -> Self {
        let norm = vec.norm();
        let leakage = 1.0 - norm * norm;
        PureState {
            basis,
            vec: vec / Complex64::new(norm, 0.0),
            norm_leakage: leakage,
        }
    }

    pub fn from_normalized(basis: FockBasis, vec: DVector<Complex64>) -> Self {
        let norm = vec.norm();
        assert!((norm - 1.0).abs() <= 1e-10, "state not normalized: {norm}");
        PureState {
            basis,
            vec,
            norm_leakage: 0.0,
        }
    }

    pub fn basis(&self) -> FockBasis {
        self.basis
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.vec
    }

    pub fn norm_leakage(&self) -> f64 {
        self.norm_leakage
    }

    pub fn check_leakage(&self) -> Result<()> {
        if self.norm_leakage.abs() > LEAKAGE_LIMIT {
            return Err(Error::Truncation {
                leakage: self.norm_leakage,
                limit: LEAKAGE_LIMIT,
                n_max: self.basis.n_max,
            });
        }
        Ok(())
    }

    pub fn overlap(&self, other: &PureState) -> Complex64 {
        self.vec.dotc(&other.vec)
    }

    pub fn fidelity(&self, other: &PureState) -> f64 {
        self.overlap(other).norm_sqr()
    }
}

/// Dense density operator with Hermiticity/trace/positivity contract.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    basis: FockBasis,
    mat: DMatrix<Complex64>,
}

impl DensityOperator {
    pub fn from_pure(state: &PureState) -> Self {
        let v = &state.vec;
        let mat = v * v.adjoint();
        DensityOperator {
            basis: state.basis,
            mat,
        }
    }

    /// Validates Hermiticity (1e-10), unit trace (1e-8) and tolerated
    /// negativity (smallest eigenvalue ≥ -1e-8).
    pub fn from_matrix(basis: FockBasis, mat: DMatrix<Complex64>) -> Result<Self> {
        let rho = DensityOperator { basis, mat };
        rho.validate()?;
        Ok(rho)
    }

    /// Internal constructor for integrators that enforce the invariants
    /// through their own monitoring.
    pub(crate) fn from_matrix_unchecked(basis: FockBasis, mat: DMatrix<Complex64>) -> Self {
        DensityOperator { basis, mat }
    }

    pub fn validate(&self) -> Result<()> {
        let defect = hermiticity_defect(&self.mat);
        if defect > 1e-10 {
            return Err(Error::NotHermitian { asymmetry: defect });
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-8 {
            return Err(Error::Config {
                detail: format!("density operator trace {tr} deviates from 1 beyond 1e-8"),
            });
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < -1e-8 {
            return Err(Error::Positivity { min_eig });
        }
        Ok(())
    }

    pub fn basis(&self) -> FockBasis {
        self.basis
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.mat.nrows()).map(|i| self.mat[(i, i)]).sum()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.mat + self.mat.adjoint()).map(|z| z * 0.5);
        let eig = nalgebra::linalg::SymmetricEigen::new(herm);
        eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Fidelity ⟨ψ|ρ|ψ⟩ against a pure reference.
    pub fn fidelity_pure(&self, state: &PureState) -> f64 {
        let mv = &self.mat * &state.vec;
        state.vec.dotc(&mv).re
    }

    /// Partial trace over the spin for a `with_spin` basis.
    pub fn trace_out_spin(&self) -> DensityOperator {
        assert!(self.basis.with_spin, "no spin to trace out");
        let nb = self.basis.n_max + 1;
        let mut out = DMatrix::zeros(nb, nb);
        for s in 0..2 {
            for i in 0..nb {
                for j in 0..nb {
                    out[(i, j)] += self.mat[(s * nb + i, s * nb + j)];
                }
            }
        }
        DensityOperator {
            basis: FockBasis::bosonic(self.basis.n_max),
            mat: out,
        }
    }
}

/// Ladder operators `(a, a†, n)` on a bosonic or spin⊗Fock basis (acting as
/// identity on the spin factor in the latter case).
pub fn build_ladder_ops(basis: FockBasis) -> (ComplexOperator, ComplexOperator, ComplexOperator) {
    let nb = basis.n_max + 1;
    let mut a = DMatrix::zeros(nb, nb);
    for n in 1..nb {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    let adag = a.adjoint();
    let num = &adag * &a;
    if basis.with_spin {
        let id2 = DMatrix::identity(2, 2);
        (
            ComplexOperator::new(basis, kron(&id2, &a)),
            ComplexOperator::new(basis, kron(&id2, &adag)),
            ComplexOperator::new(basis, kron(&id2, &num)),
        )
    } else {
        (
            ComplexOperator::new(basis, a),
            ComplexOperator::new(basis, adag),
            ComplexOperator::new(basis, num),
        )
    }
}

/// Quadratures `x = (a† + a)/√2`, `p = i(a† − a)/√2`.
pub fn quadrature_ops(basis: FockBasis) -> (ComplexOperator, ComplexOperator) {
    let (a, adag, _) = build_ladder_ops(basis);
    let inv_sqrt2 = Complex64::new(1.0 / 2.0f64.sqrt(), 0.0);
    let x = adag.add(&a).scale(inv_sqrt2);
    let p = adag.add(&a.scale(Complex64::new(-1.0, 0.0))).scale(inv_sqrt2 * Complex64::i());
    (x, p)
}

/// Spin operators `(σ_z, σ_+, σ_-)` embedded in a `with_spin` basis
/// (σ_- = |↓⟩⟨↑|).
pub fn spin_ops(basis: FockBasis) -> (ComplexOperator, ComplexOperator, ComplexOperator) {
    assert!(basis.with_spin, "spin operators need a with_spin basis");
    let nb = basis.n_max + 1;
    let idb = DMatrix::identity(nb, nb);
    let mut sz = DMatrix::zeros(2, 2);
    sz[(0, 0)] = Complex64::new(-1.0, 0.0);
    sz[(1, 1)] = Complex64::new(1.0, 0.0);
    let mut sm = DMatrix::zeros(2, 2);
    sm[(0, 1)] = Complex64::new(1.0, 0.0);
    let sp = sm.adjoint();
    (
        ComplexOperator::new(basis, kron(&sz, &idb)),
        ComplexOperator::new(basis, kron(&sp, &idb)),
        ComplexOperator::new(basis, kron(&sm, &idb)),
    )
}

/// Kronecker product (row-major composite index `i_a * dim_b + i_b`).
pub fn kron(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a.kronecker(b)
}

/// Exponential `exp(A)` of an anti-Hermitian `A`, through the Hermitian
/// eigendecomposition of `iA`; the result is exactly unitary up to the
/// eigensolver residual.
pub fn expm_antihermitian(basis: FockBasis, a: &DMatrix<Complex64>) -> Result<ComplexOperator> {
    let h = a.map(|z| z * Complex64::i());
    let herm = ComplexOperator::new(basis, h);
    if !herm.is_hermitian() {
        return Err(Error::NotHermitian {
            asymmetry: hermiticity_defect(&herm.mat),
        });
    }
    let eig = nalgebra::linalg::SymmetricEigen::new(herm.mat);
    // exp(A) = exp(-i (iA)) = V e^{-i λ} V†
    let d = eig.eigenvalues.len();
    let mut phases = DMatrix::zeros(d, d);
    for i in 0..d {
        let lam = eig.eigenvalues[i];
        phases[(i, i)] = Complex64::new(0.0, -lam).exp();
    }
    let v = eig.eigenvectors;
    let m = &v * phases * v.adjoint();
    Ok(ComplexOperator::new(basis, m))
}

/// Squeeze unitary Γ(γ) = exp[γ(a² − a†²)/2] on a bosonic basis.
///
/// Checks truncated unitarity `‖Γ†Γ − I‖_max ≤ 1e-8`, which holds whenever
/// `n_max ≥ n_min_for_squeeze(γ)`.
pub fn build_squeeze_op(basis: FockBasis, gamma: f64) -> Result<ComplexOperator> {
    assert!(!basis.with_spin, "squeeze operator acts on the bosonic basis");
    assert!(gamma.abs() <= 5.0, "|gamma| > 5 is outside the supported range");
    let (a, adag, _) = build_ladder_ops(basis);
    let gen = (a.mul(&a).matrix() - adag.mul(&adag).matrix()).map(|z| z * 0.5 * gamma);
    let gamma_op = expm_antihermitian(basis, &gen)?;
    check_unitarity(&gamma_op, basis.n_max)?;
    // The truncated generator still exponentiates to a unitary matrix, so a
    // unitarity check alone cannot detect an undersized basis. Probe the
    // squeezed-vacuum column instead: its occupation decays geometrically, so
    // any weight in the top decile of the basis signals truncation error.
    let tail_start = (basis.n_max as f64 * 0.9).floor() as usize;
    let tail: f64 = (tail_start..=basis.n_max)
        .map(|n| gamma_op.matrix()[(n, 0)].norm_sqr())
        .sum();
    if tail > LEAKAGE_LIMIT {
        return Err(Error::Truncation {
            leakage: tail,
            limit: LEAKAGE_LIMIT,
            n_max: basis.n_max,
        });
    }
    Ok(gamma_op)
}

/// Displacement unitary D(α) = exp(α a† − α* a) on a bosonic basis.
pub fn build_displacement_op(basis: FockBasis, alpha: Complex64) -> Result<ComplexOperator> {
    assert!(!basis.with_spin, "displacement operator acts on the bosonic basis");
    let amp = alpha.norm();
    if amp * amp + 6.0 * amp > basis.n_max as f64 {
        return Err(Error::Truncation {
            leakage: 1.0,
            limit: LEAKAGE_LIMIT,
            n_max: basis.n_max,
        });
    }
    let (a, adag, _) = build_ladder_ops(basis);
    let gen = adag.matrix().map(|z| z * alpha) - a.matrix().map(|z| z * alpha.conj());
    let d = expm_antihermitian(basis, &gen)?;
    check_unitarity(&d, basis.n_max)?;
    Ok(d)
}

fn check_unitarity(u: &ComplexOperator, n_max: usize) -> Result<()> {
    let prod = u.adjoint().mul(u);
    let mut defect = 0.0f64;
    for i in 0..prod.mat.nrows() {
        for j in 0..prod.mat.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            let d = (prod.mat[(i, j)] - Complex64::new(target, 0.0)).norm();
            if d > defect {
                defect = d;
            }
        }
    }
    if defect > 1e-8 {
        return Err(Error::Truncation {
            leakage: defect,
            limit: 1e-8,
            n_max,
        });
    }
    Ok(())
}

/// Hermitian eigendecomposition with ascending eigenvalues and a
/// deterministic phase convention: the largest-magnitude component of each
/// eigenvector is made real positive.
pub fn eig_hermitian(op: &ComplexOperator) -> Result<(Vec<f64>, Vec<PureState>)> {
    if !op.is_hermitian() {
        return Err(Error::NotHermitian {
            asymmetry: hermiticity_defect(&op.mat),
        });
    }
    let eig = nalgebra::linalg::SymmetricEigen::new(op.mat.clone());
    let d = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let mut values = Vec::with_capacity(d);
    let mut vectors = Vec::with_capacity(d);
    for &idx in &order {
        values.push(eig.eigenvalues[idx]);
        let mut v: DVector<Complex64> = eig.eigenvectors.column(idx).into_owned();
        // phase fix on the largest-magnitude component
        let (mut kmax, mut best) = (0usize, 0.0f64);
        for (k, z) in v.iter().enumerate() {
            let n = z.norm();
            if n > best {
                best = n;
                kmax = k;
            }
        }
        if best > 0.0 {
            let phase = v[kmax] / Complex64::new(best, 0.0);
            let correction = phase.conj();
            for z in v.iter_mut() {
                *z *= correction;
            }
        }
        vectors.push(PureState::from_unnormalized(op.basis, v));
    }
    Ok((values, vectors))
}

/// Parity expectation of a pure state: `(-1)^{a†a}` on a bosonic basis,
/// `(-1)^{a†a + n_↑}` (the global-phase-fixed full parity, spectrum ±1) on a
/// spin⊗Fock basis.
pub fn parity_expectation(state: &PureState) -> f64 {
    parity_weights(state.basis)
        .iter()
        .zip(state.vec.iter())
        .map(|(w, z)| w * z.norm_sqr())
        .sum()
}

/// Parity expectation Tr(𝒫ρ) for a density operator; same convention as
/// [`parity_expectation`].
pub fn parity_expectation_rho(rho: &DensityOperator) -> f64 {
    parity_weights(rho.basis)
        .iter()
        .enumerate()
        .map(|(i, w)| w * rho.mat[(i, i)].re)
        .sum()
}

fn parity_weights(basis: FockBasis) -> Vec<f64> {
    let nb = basis.n_max + 1;
    let spins = if basis.with_spin { 2 } else { 1 };
    let mut w = Vec::with_capacity(nb * spins);
    for s in 0..spins {
        for n in 0..nb {
            w.push(if (n + s) % 2 == 0 { 1.0 } else { -1.0 });
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ladder_matrix_elements() {
        let basis = FockBasis::bosonic(2);
        let (a, _, n) = build_ladder_ops(basis);
        assert_relative_eq!(a.matrix()[(0, 1)].re, 1.0);
        assert_relative_eq!(a.matrix()[(1, 2)].re, 2.0f64.sqrt());
        assert_eq!(a.matrix()[(0, 2)], Complex64::new(0.0, 0.0));
        // n|2> = 2|2>
        let two = PureState::basis_state(basis, 2);
        assert_relative_eq!(n.expectation(&two).re, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn ladder_commutator_truncated() {
        let basis = FockBasis::bosonic(12);
        let (a, adag, _) = build_ladder_ops(basis);
        let comm = a.mul(&adag).matrix() - adag.mul(&a).matrix();
        for i in 0..basis.n_max {
            for j in 0..=basis.n_max {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((comm[(i, j)] - Complex64::new(target, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn number_eigenvalues_exact() {
        let basis = FockBasis::bosonic(8);
        let (_, _, n) = build_ladder_ops(basis);
        for k in 0..=8usize {
            let s = PureState::basis_state(basis, k);
            assert_relative_eq!(n.expectation(&s).re, k as f64, epsilon = 1e-13);
        }
    }

    #[test]
    fn squeeze_identity_at_zero() {
        let basis = FockBasis::bosonic(20);
        let g = build_squeeze_op(basis, 0.0).unwrap();
        for i in 0..basis.dim() {
            for j in 0..basis.dim() {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((g.matrix()[(i, j)] - Complex64::new(target, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn squeezed_vacuum_even_parity_and_photon_number() {
        let basis = FockBasis::bosonic(60);
        let g = build_squeeze_op(basis, -0.1683).unwrap();
        let sv = g.apply(&PureState::vacuum(basis));
        for n in (1..=basis.n_max).step_by(2) {
            assert!(sv.amplitudes()[n].norm() < 1e-12, "odd component at n={n}");
        }
        assert_relative_eq!(parity_expectation(&sv), 1.0, epsilon = 1e-10);

        let g5 = build_squeeze_op(basis, 0.5).unwrap();
        let sv5 = g5.apply(&PureState::vacuum(basis));
        let (_, _, num) = build_ladder_ops(basis);
        let mean_n = num.expectation(&sv5).re;
        assert_relative_eq!(mean_n, 0.5f64.sinh().powi(2), epsilon = 1e-6);
        assert_relative_eq!(mean_n, 0.27154, epsilon = 1e-5);
    }

    #[test]
    fn squeeze_truncation_error_at_small_nmax() {
        let basis = FockBasis::bosonic(4);
        assert!(matches!(
            build_squeeze_op(basis, 1.2),
            Err(Error::Truncation { .. })
        ));
    }

    #[test]
    fn displacement_coherent_state() {
        let basis = FockBasis::bosonic(40);
        let d = build_displacement_op(basis, Complex64::new(1.0, 0.0)).unwrap();
        let coh = d.apply(&PureState::vacuum(basis));
        let (a, _, num) = build_ladder_ops(basis);
        assert_relative_eq!(num.expectation(&coh).re, 1.0, epsilon = 1e-8);
        assert_relative_eq!(a.expectation(&coh).re, 1.0, epsilon = 1e-6);

        let d2i = build_displacement_op(basis, Complex64::new(0.0, 2.0)).unwrap();
        let coh2i = d2i.apply(&PureState::vacuum(basis));
        let (_, p) = quadrature_ops(basis);
        assert_relative_eq!(p.expectation(&coh2i).re, 2.0 * 2.0f64.sqrt(), epsilon = 1e-6);
    }

    #[test]
    fn displacement_rejects_overflow_amplitude() {
        let basis = FockBasis::bosonic(10);
        assert!(build_displacement_op(basis, Complex64::new(3.0, 0.0)).is_err());
    }

    #[test]
    fn eig_sorts_ascending() {
        let basis = FockBasis::bosonic(2);
        let mut m = DMatrix::zeros(3, 3);
        m[(0, 0)] = Complex64::new(3.0, 0.0);
        m[(1, 1)] = Complex64::new(1.0, 0.0);
        m[(2, 2)] = Complex64::new(2.0, 0.0);
        let (vals, _) = eig_hermitian(&ComplexOperator::new(basis, m)).unwrap();
        assert_relative_eq!(vals[0], 1.0);
        assert_relative_eq!(vals[1], 2.0);
        assert_relative_eq!(vals[2], 3.0);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let basis = FockBasis::bosonic(2);
        let mut m = DMatrix::zeros(3, 3);
        m[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(matches!(
            eig_hermitian(&ComplexOperator::new(basis, m)),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn eig_free_oscillator_spectrum() {
        let basis = FockBasis::bosonic(30);
        let (_, _, num) = build_ladder_ops(basis);
        let omega = 0.25;
        let h = num.scale(Complex64::new(omega, 0.0));
        let (vals, _) = eig_hermitian(&h).unwrap();
        for (k, v) in vals.iter().enumerate().take(10) {
            assert_relative_eq!(*v, omega * k as f64, epsilon = 1e-10 * omega.max(1.0));
        }
    }

    #[test]
    fn eig_residual_and_deterministic_phase() {
        let basis = FockBasis::bosonic(25);
        let (a, adag, num) = build_ladder_ops(basis);
        let coupling = (a.mul(&a).matrix() + adag.mul(&adag).matrix()).map(|z| z * -0.1);
        let h = ComplexOperator::new(basis, num.matrix() + coupling);
        let (vals, vecs) = eig_hermitian(&h).unwrap();
        let hnorm = h.matrix().iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        for (e, v) in vals.iter().zip(vecs.iter()) {
            let res = (h.matrix() * v.amplitudes()
                - v.amplitudes().map(|z| z * Complex64::new(*e, 0.0)))
            .norm();
            assert!(res <= 1e-9 * hnorm.max(1.0), "residual {res}");
        }
        // bitwise determinism of the phase convention
        let (_, vecs2) = eig_hermitian(&h).unwrap();
        for (v1, v2) in vecs.iter().zip(vecs2.iter()) {
            assert_eq!(v1.amplitudes().as_slice(), v2.amplitudes().as_slice());
        }
    }

    #[test]
    fn parity_basics() {
        let bb = FockBasis::bosonic(10);
        assert_relative_eq!(parity_expectation(&PureState::vacuum(bb)), 1.0);
        assert_relative_eq!(parity_expectation(&PureState::basis_state(bb, 1)), -1.0);
        let bs = FockBasis::with_spin(10);
        // |0>⊗|down> -> +1 under the global-phase-fixed convention
        assert_relative_eq!(parity_expectation(&PureState::vacuum(bs)), 1.0);
        let rho = DensityOperator::from_pure(&PureState::basis_state(bb, 1));
        assert_relative_eq!(parity_expectation_rho(&rho), -1.0);
    }

    #[test]
    fn density_operator_contract() {
        let basis = FockBasis::bosonic(5);
        let rho = DensityOperator::from_pure(&PureState::basis_state(basis, 1));
        rho.validate().unwrap();
        assert_relative_eq!(rho.trace().re, 1.0, epsilon = 1e-14);
        // non-unit trace rejected
        let bad = rho.matrix().map(|z| z * 2.0);
        assert!(DensityOperator::from_matrix(basis, bad).is_err());
    }

    #[test]
    fn partial_trace_spin() {
        let basis = FockBasis::with_spin(4);
        // |1>⊗|up>
        let st = PureState::basis_state(basis, basis.n_max + 1 + 1);
        let reduced = DensityOperator::from_pure(&st).trace_out_spin();
        assert_relative_eq!(reduced.matrix()[(1, 1)].re, 1.0, epsilon = 1e-14);
        assert_relative_eq!(reduced.trace().re, 1.0, epsilon = 1e-14);
    }
}
