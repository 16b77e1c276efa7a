//! Metric operators and the calculus they induce: modified inner products,
//! pseudo-adjoints, spectral construction of metrics from eigensystems, and
//! the similarity map to an equivalent Hermitian operator.
//!
//! A metric operator η is Hermitian and positive definite. It defines the
//! inner product ⟨ζ, ξ⟩_η = ⟨ζ| η ξ⟩ and, for any operator H, the
//! pseudo-adjoint H♯ = η⁻¹ H† η. Operators with H♯ = H are the self-adjoint
//! ones in the η geometry; they are exactly the operators that a similarity
//! transform by ρ = η^{1/2} turns into ordinary Hermitian matrices.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    adjoint, cr, eigh_decomp, ensure_finite, ensure_square, hermitian_function,
    hermiticity_residual, max_abs, CMatrix, CVector, EigenSystem,
};
use crate::tol;

/// A validated metric: η together with its inverse and principal square roots.
///
/// All four matrices come from a single Hermitian eigendecomposition of the
/// symmetrized input, so they are mutually consistent to roundoff.
#[derive(Debug, Clone)]
pub struct MetricOperator {
    pub eta: CMatrix,
    pub eta_inv: CMatrix,
    /// ρ = η^{1/2}, the positive square root.
    pub rho: CMatrix,
    pub rho_inv: CMatrix,
    /// Smallest eigenvalue of η; a positivity margin for diagnostics.
    pub min_eig: f64,
}

impl MetricOperator {
    /// Validate Hermiticity and positive definiteness, then build η, η⁻¹,
    /// ρ = η^{1/2} and ρ⁻¹ from one eigendecomposition.
    pub fn new(eta: &CMatrix) -> Result<Self> {
        ensure_square(eta)?;
        ensure_finite(eta)?;
        let scale = max_abs(eta).max(1.0);
        let res = hermiticity_residual(eta);
        if res > tol::HERMITICITY * scale {
            return Err(Error::NotHermitian { residual: res });
        }
        let sym = (eta + &adjoint(eta)).mapv(|z| z * 0.5);
        let (w, v) = eigh_decomp(&sym)?;
        let wmax = w.iter().cloned().fold(0.0, f64::max);
        let floor = tol::POSITIVITY * wmax.max(1.0);
        let min_eig = w.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eig <= floor {
            return Err(Error::NotPositiveDefinite { min_eig });
        }
        Ok(Self {
            eta: sym.clone(),
            eta_inv: hermitian_function(&v, &w, |x| 1.0 / x),
            rho: hermitian_function(&v, &w, f64::sqrt),
            rho_inv: hermitian_function(&v, &w, |x| 1.0 / x.sqrt()),
            min_eig,
        })
    }

    /// The flat metric η = I.
    pub fn identity(n: usize) -> Self {
        Self {
            eta: Array2::eye(n),
            eta_inv: Array2::eye(n),
            rho: Array2::eye(n),
            rho_inv: Array2::eye(n),
            min_eig: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.eta.nrows()
    }

    /// ⟨ζ, ξ⟩_η = ζ† η ξ.
    pub fn inner(&self, zeta: &CVector, xi: &CVector) -> Complex64 {
        let eta_xi = self.eta.dot(xi);
        zeta.iter()
            .zip(eta_xi.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// ‖ξ‖_η = √⟨ξ, ξ⟩_η.
    pub fn norm(&self, xi: &CVector) -> f64 {
        self.inner(xi, xi).re.max(0.0).sqrt()
    }

    /// ⟨O⟩ = ⟨ψ, Oψ⟩_η / ⟨ψ, ψ⟩_η.
    pub fn expectation(&self, o: &CMatrix, psi: &CVector) -> Result<Complex64> {
        let denom = self.inner(psi, psi);
        if denom.re <= 0.0 {
            return Err(Error::ZeroState);
        }
        Ok(self.inner(psi, &o.dot(psi)) / denom)
    }
}

/// H♯ = η⁻¹ H† η, the adjoint with respect to the η inner product.
pub fn pseudo_adjoint(h: &CMatrix, metric: &MetricOperator) -> CMatrix {
    metric.eta_inv.dot(&adjoint(h)).dot(&metric.eta)
}

/// Whether H† = η H η⁻¹ within `tol`, together with the residual
/// ‖H† − η H η⁻¹‖_max. The check is scaled by max(1, ‖H‖_max).
pub fn is_pseudo_hermitian(h: &CMatrix, metric: &MetricOperator, tol: f64) -> (bool, f64) {
    let lhs = adjoint(h);
    let rhs = metric.eta.dot(h).dot(&metric.eta_inv);
    let res = max_abs(&(&lhs - &rhs));
    (res <= tol * max_abs(h).max(1.0), res)
}

/// Metric built from the left eigenvectors of a diagonalizable operator with
/// real spectrum: η = Σ_n |l_n⟩⟨l_n|. Unit weights.
pub fn spectral_metric(es: &EigenSystem) -> Result<MetricOperator> {
    spectral_metric_weighted(es, &vec![1.0; es.dim()])
}

/// Weighted spectral metric η = Σ_n w_n |l_n⟩⟨l_n| with w_n > 0.
///
/// Requires a real spectrum: operators with conjugate-pair or genuinely
/// complex eigenvalues admit no positive-definite metric of this form, and the
/// construction refuses rather than silently produce an indefinite result.
pub fn spectral_metric_weighted(es: &EigenSystem, weights: &[f64]) -> Result<MetricOperator> {
    let n = es.dim();
    if weights.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {n} eigenvectors",
            weights.len()
        )));
    }
    if let Some(&w) = weights.iter().find(|&&w| !(w.is_finite() && w > 0.0)) {
        return Err(Error::NotPositiveDefinite { min_eig: w });
    }
    let scale = max_abs_values(&es.values).max(1.0);
    let max_imag = es.values.iter().fold(0.0f64, |a, z| a.max(z.im.abs()));
    if max_imag > tol::HERMITICITY * scale {
        return Err(Error::ComplexSpectrum { max_imag });
    }
    let mut eta: CMatrix = Array2::zeros((n, n));
    for (k, &w) in weights.iter().enumerate() {
        let l = es.left.column(k);
        for i in 0..n {
            for j in 0..n {
                eta[[i, j]] += cr(w) * l[i] * l[j].conj();
            }
        }
    }
    MetricOperator::new(&eta)
}

fn max_abs_values(v: &CVector) -> f64 {
    v.iter().fold(0.0, |a, z| a.max(z.norm()))
}

/// Similarity map to the equivalent Hermitian operator: h = ρ H ρ⁻¹.
///
/// Fails if H is not η-pseudo-Hermitian to `tol::HERMITICITY` (scaled), or if
/// the image fails a final Hermiticity check; the returned matrix is
/// symmetrized to suppress roundoff.
pub fn to_hermitian_rep(h: &CMatrix, metric: &MetricOperator) -> Result<CMatrix> {
    let n = ensure_square(h)?;
    if n != metric.dim() {
        return Err(Error::DimensionMismatch(format!(
            "operator is {n}×{n}, metric is {m}×{m}",
            m = metric.dim()
        )));
    }
    let (ok, residual) = is_pseudo_hermitian(h, metric, tol::HERMITICITY);
    if !ok {
        return Err(Error::NotPseudoHermitian { residual });
    }
    let img = metric.rho.dot(h).dot(&metric.rho_inv);
    let res = hermiticity_residual(&img);
    if res > tol::HERMITICITY * max_abs(&img).max(1.0) {
        return Err(Error::NotHermitianOutput { residual: res });
    }
    Ok((&img + &adjoint(&img)).mapv(|z| z * 0.5))
}
