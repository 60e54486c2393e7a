//! Normal-Inverse-Wishart hierarchy over the layer parameters.
//!
//! Layer parameters are exchangeable draws `phi_w ~ N(mu, Sigma)` with a
//! conjugate prior `Sigma ~ IW(Lambda0, nu0)`, `mu | Sigma ~ N(mu0, Sigma / kappa0)`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Normal-Inverse-Wishart parameters `(mu0, kappa0, Lambda0, nu0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NiwParams {
    pub mu: DVector<f64>,
    pub kappa: f64,
    pub lambda: DMatrix<f64>,
    pub nu: f64,
}

/// Prior on the hierarchical mean and covariance.
pub type NiwPrior = NiwParams;

impl NiwParams {
    /// Library defaults for dimension `r`: `mu0 = 0`, `kappa0 = 1`,
    /// `Lambda0 = I_r`, `nu0 = r + 2`.
    pub fn default_prior(r: usize) -> Self {
        NiwParams {
            mu: DVector::zeros(r),
            kappa: 1.0,
            lambda: DMatrix::identity(r, r),
            nu: r as f64 + 2.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.dim();
        if self.lambda.nrows() != r || self.lambda.ncols() != r {
            return Err(Error::DimensionMismatch {
                expected: r,
                found: self.lambda.nrows(),
            });
        }
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return Err(Error::Config(format!("kappa must be positive, got {}", self.kappa)));
        }
        if !(self.nu > r as f64 - 1.0) || !self.nu.is_finite() {
            return Err(Error::Config(format!("nu must exceed r - 1 = {}, got {}", r as f64 - 1.0, self.nu)));
        }
        if self.mu.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("mu contains non-finite values".into()));
        }
        let sym_err = (&self.lambda - self.lambda.transpose()).abs().max();
        if sym_err > 1e-10 * self.lambda.abs().max().max(1.0) {
            return Err(Error::Config("Lambda is not symmetric".into()));
        }
        if Cholesky::new(self.lambda.clone()).is_none() {
            return Err(Error::Config("Lambda is not positive definite".into()));
        }
        Ok(())
    }
}

/// Current hierarchical mean and covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperState {
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
}

impl HyperState {
    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// Multivariate normal log density `log N(x; mu, Sigma)`.
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        Ok(MvNormal::new(self)?.log_density(x))
    }
}

/// Cached Cholesky factor of a [`HyperState`] for repeated density evaluations.
#[derive(Debug, Clone)]
pub struct MvNormal {
    mean: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    log_norm: f64,
}

impl MvNormal {
    pub fn new(h: &HyperState) -> Result<Self> {
        let r = h.dim();
        let chol = Cholesky::new(h.sigma.clone())
            .ok_or_else(|| Error::Numerical("covariance is not positive definite".into()))?;
        let log_det: f64 = chol.l_dirty().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
        Ok(MvNormal {
            mean: h.mu.clone(),
            chol,
            log_norm: -0.5 * (r as f64 * (2.0 * std::f64::consts::PI).ln() + log_det),
        })
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let diff = DVector::from_column_slice(x) - &self.mean;
        let z = self
            .chol
            .l()
            .solve_lower_triangular(&diff)
            .expect("Cholesky factor has a positive diagonal");
        self.log_norm - 0.5 * z.norm_squared()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let z = standard_normal_vector(self.mean.len(), rng);
        (&self.mean + self.chol.l() * z).iter().copied().collect()
    }
}

fn standard_normal_vector<R: Rng + ?Sized>(r: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(r, |_, _| StandardNormal.sample(rng))
}

/// Conjugate update of the NIW prior given layer parameter vectors.
pub fn niw_full_conditional(prior: &NiwPrior, phis: &[&[f64]]) -> Result<NiwParams> {
    let r = prior.dim();
    if let Some(bad) = phis.iter().find(|p| p.len() != r) {
        return Err(Error::DimensionMismatch {
            expected: r,
            found: bad.len(),
        });
    }
    let w = phis.len();
    if w == 0 {
        return Ok(prior.clone());
    }
    let wf = w as f64;
    let mut mean = DVector::zeros(r);
    for p in phis {
        mean += DVector::from_column_slice(p);
    }
    mean /= wf;
    let mut scatter = DMatrix::zeros(r, r);
    for p in phis {
        let d = DVector::from_column_slice(p) - &mean;
        scatter += &d * d.transpose();
    }
    let kappa = prior.kappa + wf;
    let mu = (&prior.mu * prior.kappa + &mean * wf) / kappa;
    let shift = &mean - &prior.mu;
    let mut lambda = &prior.lambda + scatter + (&shift * shift.transpose()) * (prior.kappa * wf / kappa);
    // Symmetrize away rounding asymmetry.
    lambda = (&lambda + lambda.transpose()) * 0.5;
    Ok(NiwParams {
        mu,
        kappa,
        lambda,
        nu: prior.nu + wf,
    })
}

/// Draws `Sigma ~ IW(Lambda, nu)` then `mu | Sigma ~ N(mu, Sigma / kappa)`.
pub fn sample_hyper<R: Rng + ?Sized>(post: &NiwParams, rng: &mut R) -> Result<HyperState> {
    let r = post.dim();
    let sigma = sample_inverse_wishart(&post.lambda, post.nu, rng)?;
    let scaled = HyperState {
        mu: post.mu.clone(),
        sigma: &sigma / post.kappa,
    };
    let mu = DVector::from_vec(MvNormal::new(&scaled)?.sample(rng));
    debug_assert_eq!(mu.len(), r);
    Ok(HyperState { mu, sigma })
}

/// Inverse-Wishart draw via the Bartlett decomposition. With `Lambda = U U^T`
/// and `A A^T ~ W(I, nu)`, `Sigma = (U A^-T)(U A^-T)^T`; working with the
/// factor of `Lambda` directly avoids inverting it, which matters when the
/// layer parameters are spread over many orders of magnitude.
pub fn sample_inverse_wishart<R: Rng + ?Sized>(lambda: &DMatrix<f64>, nu: f64, rng: &mut R) -> Result<DMatrix<f64>> {
    let r = lambda.nrows();
    if !(nu > r as f64 - 1.0) {
        return Err(Error::Numerical(format!("inverse-Wishart degrees of freedom {nu} <= r - 1")));
    }
    let u = Cholesky::new(lambda.clone())
        .ok_or_else(|| Error::Numerical("Cholesky factorization of Lambda failed".into()))?
        .unpack();
    let mut a = DMatrix::zeros(r, r);
    for i in 0..r {
        let chi = ChiSquared::new(nu - i as f64).map_err(|e| Error::Numerical(e.to_string()))?;
        a[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = StandardNormal.sample(rng);
        }
    }
    // B^T = A^-1 U^T, so B = U A^-T.
    let bt = a
        .solve_lower_triangular(&u.transpose())
        .ok_or_else(|| Error::Numerical("singular Bartlett factor".into()))?;
    let sigma = bt.transpose() * &bt;
    Ok((&sigma + sigma.transpose()) * 0.5)
}
