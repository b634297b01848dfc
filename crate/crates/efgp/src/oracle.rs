//! Dense reference implementations: exact function-space GP regression,
//! dense weight-space solves, condition-number and stability diagnostics.
//! Everything here is straight dense linear algebra (LAPACK-backed) used to
//! verify the fast path; sizes are guarded accordingly.

use crate::data::Dataset;
use crate::error::{EfgpError, Result};
use crate::grid::{kernel_error_empirical, ErrorNorm, FourierGrid, ProbeSet};
use crate::kernel::Kernel;
use crate::nufft::direct_type1;
use ndarray::{Array1, Array2, OwnedRepr};
use ndarray_linalg::cholesky::{CholeskyFactorized, FactorizeC, SolveC, UPLO};
use ndarray_linalg::eigh::EigValsh;
use ndarray_linalg::types::c64;
use num_complex::Complex64;
use rayon::prelude::*;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Dense exact GP regression state: covariance matrix factor and
/// function-space weights.
pub struct DenseGP {
    d: usize,
    points: Vec<f64>,
    kernel: Kernel,
    sigma: f64,
    factor: CholeskyFactorized<OwnedRepr<f64>>,
    alpha: Array1<f64>,
    /// Set if a one-time diagonal jitter was needed to factor `K + sigma^2 I`.
    pub jitter: Option<f64>,
}

/// Dense `N x N` covariance matrix of the kernel at the given points.
pub fn dense_covariance(points: &[f64], d: usize, kernel: &Kernel) -> Array2<f64> {
    let n = points.len() / d;
    let mut data = vec![0.0f64; n * n];
    data.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let xi = &points[i * d..(i + 1) * d];
        for (j, slot) in row.iter_mut().enumerate() {
            let xj = &points[j * d..(j + 1) * d];
            *slot = kernel.eval(distance(xi, xj));
        }
    });
    Array2::from_shape_vec((n, n), data).expect("shape")
}

/// Exact function-space fit: `alpha = (K + sigma^2 I)^{-1} y` by Cholesky.
/// Guarded at `N <= 2e4`.
pub fn exact_fit(data: &Dataset, kernel: &Kernel, sigma: f64) -> Result<DenseGP> {
    let n = data.len();
    if n > 20_000 {
        return Err(EfgpError::SizeGuard(format!(
            "dense solve guard: N = {n} > 2e4"
        )));
    }
    if !(sigma > 0.0) {
        return Err(EfgpError::Parameter("sigma must be positive".into()));
    }
    let mut k = dense_covariance(data.points(), data.dim(), kernel);
    let sigma2 = sigma * sigma;
    for i in 0..n {
        k[(i, i)] += sigma2;
    }
    let (factor, jitter) = match k.factorizec(UPLO::Lower) {
        Ok(f) => (f, None),
        Err(_) => {
            let eps_jitter = 1e-12 * n as f64;
            for i in 0..n {
                k[(i, i)] += eps_jitter;
            }
            (
                k.factorizec(UPLO::Lower).map_err(|e| {
                    EfgpError::Precondition(format!("covariance factorization failed: {e}"))
                })?,
                Some(eps_jitter),
            )
        }
    };
    let y = Array1::from_vec(data.y().to_vec());
    let alpha = factor
        .solvec(&y)
        .map_err(|e| EfgpError::Precondition(format!("solve failed: {e}")))?;
    Ok(DenseGP {
        d: data.dim(),
        points: data.points().to_vec(),
        kernel: *kernel,
        sigma,
        factor,
        alpha,
        jitter,
    })
}

impl DenseGP {
    pub fn alpha(&self) -> &[f64] {
        self.alpha.as_slice().expect("contiguous")
    }

    /// Posterior mean `mu(x) = Σ_n alpha_n k(x - x_n)` at each target.
    pub fn exact_mean(&self, targets: &[f64]) -> Vec<f64> {
        let d = self.d;
        let alpha = self.alpha.as_slice().expect("contiguous");
        targets
            .par_chunks(d)
            .map(|x| {
                self.points
                    .chunks(d)
                    .zip(alpha)
                    .map(|(p, a)| a * self.kernel.eval(distance(x, p)))
                    .sum()
            })
            .collect()
    }

    /// Posterior variance `s(x) = k(0) - k_x^T (K + sigma^2 I)^{-1} k_x`.
    pub fn exact_variance(&self, target: &[f64]) -> Result<f64> {
        let d = self.d;
        let kx = Array1::from_iter(
            self.points
                .chunks(d)
                .map(|p| self.kernel.eval(distance(target, p))),
        );
        let gamma = self
            .factor
            .solvec(&kx)
            .map_err(|e| EfgpError::Precondition(format!("solve failed: {e}")))?;
        Ok(1.0 - kx.dot(&gamma))
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// Design matrix split into real and imaginary parts:
/// `Phi_{np} = D_p e^{2πi h <j_p, x_n>}`.
pub struct DesignMatrix {
    pub re: Array2<f64>,
    pub im: Array2<f64>,
}

pub fn design_matrix(points: &[f64], d: usize, kernel: &Kernel, grid: &FourierGrid) -> DesignMatrix {
    let n = points.len() / d;
    let m_total = grid.n_modes();
    let weights = grid.spectral_weights(kernel);
    let h = grid.h();
    let mut re = vec![0.0f64; n * m_total];
    let mut im = vec![0.0f64; n * m_total];
    re.par_chunks_mut(m_total)
        .zip(im.par_chunks_mut(m_total))
        .enumerate()
        .for_each(|(nn, (rrow, irow))| {
            let x = &points[nn * d..(nn + 1) * d];
            for p in 0..m_total {
                let j = grid.multi_index(p);
                let phase: f64 = (0..d).map(|l| TWO_PI * h * j[l] as f64 * x[l]).sum();
                rrow[p] = weights[p] * phase.cos();
                irow[p] = weights[p] * phase.sin();
            }
        });
    DesignMatrix {
        re: Array2::from_shape_vec((n, m_total), re).expect("shape"),
        im: Array2::from_shape_vec((n, m_total), im).expect("shape"),
    }
}

impl DesignMatrix {
    /// `Phi beta` for complex `beta`, returned as (re, im).
    pub fn apply(&self, beta: &[Complex64]) -> (Array1<f64>, Array1<f64>) {
        let br = Array1::from_iter(beta.iter().map(|z| z.re));
        let bi = Array1::from_iter(beta.iter().map(|z| z.im));
        let re = self.re.dot(&br) - self.im.dot(&bi);
        let im = self.re.dot(&bi) + self.im.dot(&br);
        (re, im)
    }

    /// `Phi^* a` for real `a`.
    pub fn adjoint_apply_real(&self, a: &Array1<f64>) -> Vec<Complex64> {
        let re = self.re.t().dot(a);
        let im = self.im.t().dot(a);
        re.iter().zip(im.iter()).map(|(&r, &i)| Complex64::new(r, -i)).collect()
    }

    /// The real symmetric rank-M approximate covariance `Ktilde = Phi Phi^*`.
    pub fn k_tilde(&self) -> Array2<f64> {
        self.re.dot(&self.re.t()) + self.im.dot(&self.im.t())
    }
}

/// Dense weight-space reference solve and the equivalence identities tying
/// it to function space.
pub struct DenseWeightSpace {
    pub beta: Vec<Complex64>,
    /// Function-space weights of the approximate kernel,
    /// `(Ktilde + sigma^2 I)^{-1} y`.
    pub alpha_tilde: Vec<f64>,
    /// Posterior mean at the training points, `Phi beta` (real part).
    pub mu_train: Vec<f64>,
    /// Relative residual of `beta = Phi^* alpha_tilde`.
    pub beta_identity_rel: f64,
    /// Relative residual of `alpha_tilde = (y - Phi beta) / sigma^2`.
    pub alpha_identity_rel: f64,
    /// Largest imaginary part seen where a real quantity was expected.
    pub max_imag: f64,
}

/// Builds the dense `M x M` Hermitian Gram matrix `Phi^* Phi + sigma^2 I`
/// from a directly-summed lattice vector (no fast transforms involved).
pub fn dense_weight_space_matrix(
    points: &[f64],
    kernel: &Kernel,
    grid: &FourierGrid,
    sigma: f64,
) -> Result<Array2<c64>> {
    let d = grid.dim();
    let n = points.len() / d;
    let widened = grid.widened();
    if (n as u128) * (widened.n_modes() as u128) > 100_000_000 {
        return Err(EfgpError::SizeGuard(
            "direct lattice sum exceeds the 1e8 budget".into(),
        ));
    }
    let ones = vec![Complex64::new(1.0, 0.0); n];
    let v = direct_type1(points, &ones, &widened)?;
    let weights = grid.spectral_weights(kernel);
    let m_total = grid.n_modes();
    let sigma2 = sigma * sigma;
    let mut gram = Array2::<c64>::zeros((m_total, m_total));
    for p in 0..m_total {
        let jp = grid.multi_index(p);
        for l in 0..m_total {
            let jl = grid.multi_index(l);
            let diff: Vec<i64> = (0..d).map(|a| jp[a] - jl[a]).collect();
            let g = v[widened.flat_index(&diff)].conj() * weights[p] * weights[l];
            gram[(p, l)] = if p == l { g + sigma2 } else { g };
        }
    }
    Ok(gram)
}

/// Dense weight-space solve of `(Phi^* Phi + sigma^2 I) beta = Phi^* y`,
/// plus the function/weight-space equivalence identities.
pub fn dense_weight_space(
    data: &Dataset,
    kernel: &Kernel,
    grid: &FourierGrid,
    sigma: f64,
) -> Result<DenseWeightSpace> {
    let n = data.len();
    let m_total = grid.n_modes();
    if (n as u128) * (m_total as u128) > 100_000_000 {
        return Err(EfgpError::SizeGuard(format!(
            "dense design matrix budget exceeded: N*M = {n}*{m_total}"
        )));
    }
    let gram = dense_weight_space_matrix(data.points(), kernel, grid, sigma)?;
    // rhs = D (F^* y)
    let y_complex: Vec<Complex64> = data.y().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let t = direct_type1(data.points(), &y_complex, grid)?;
    let weights = grid.spectral_weights(kernel);
    let rhs = Array1::from_iter(
        t.iter()
            .zip(&weights)
            .map(|(z, &w)| c64::new(z.re * w, -z.im * w)),
    );
    let beta_arr = gram
        .factorizec(UPLO::Lower)
        .and_then(|f| f.solvec(&rhs))
        .map_err(|e| EfgpError::Precondition(format!("weight-space solve failed: {e}")))?;
    let beta: Vec<Complex64> = beta_arr.iter().map(|&z| Complex64::new(z.re, z.im)).collect();

    // alpha_tilde from its own definition: (Ktilde + sigma^2 I)^{-1} y
    let phi = design_matrix(data.points(), data.dim(), kernel, grid);
    let mut k_tilde = phi.k_tilde();
    let sigma2 = sigma * sigma;
    for i in 0..n {
        k_tilde[(i, i)] += sigma2;
    }
    let y = Array1::from_vec(data.y().to_vec());
    let alpha_tilde = k_tilde
        .factorizec(UPLO::Lower)
        .and_then(|f| f.solvec(&y))
        .map_err(|e| EfgpError::Precondition(format!("Ktilde solve failed: {e}")))?;

    // identity: beta = Phi^* alpha_tilde
    let beta_from_alpha = phi.adjoint_apply_real(&alpha_tilde);
    let beta_norm: f64 = beta.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let beta_identity_rel = (beta
        .iter()
        .zip(&beta_from_alpha)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt())
        / beta_norm.max(f64::MIN_POSITIVE);

    // identity: alpha_tilde = (y - Phi beta) / sigma^2
    let (mu_re, mu_im) = phi.apply(&beta);
    let max_imag = mu_im.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let alpha_from_beta: Vec<f64> = data
        .y()
        .iter()
        .zip(mu_re.iter())
        .map(|(yv, mv)| (yv - mv) / sigma2)
        .collect();
    let at_norm = alpha_tilde.iter().map(|v| v * v).sum::<f64>().sqrt();
    let alpha_identity_rel = alpha_tilde
        .iter()
        .zip(&alpha_from_beta)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
        / at_norm.max(f64::MIN_POSITIVE);

    Ok(DenseWeightSpace {
        beta,
        alpha_tilde: alpha_tilde.to_vec(),
        mu_train: mu_re.to_vec(),
        beta_identity_rel,
        alpha_identity_rel,
        max_imag,
    })
}

/// Condition numbers of the function-space and weight-space system matrices
/// (as eigenvalue ratios from dense symmetric eigensolves) against the
/// `N/sigma^2 + 1` bound.
#[derive(Debug, Clone)]
pub struct ConditionReport {
    pub n_points: usize,
    pub kappa_ws: f64,
    pub kappa_fs: Option<f64>,
    /// `N / sigma^2 + 1`.
    pub bound: f64,
    /// Right-hand side of the weight-space comparison
    /// `(1 + eps N / sigma^2) kappa_fs + eps N / sigma^2`, when both the
    /// function-space condition number and a kernel-error estimate are known.
    pub ws_vs_fs_rhs: Option<f64>,
}

pub fn condition_report(
    points: &[f64],
    d: usize,
    kernel: &Kernel,
    sigma: f64,
    grid: &FourierGrid,
    include_function_space: bool,
    kernel_error_estimate: Option<f64>,
) -> Result<ConditionReport> {
    let n = points.len() / d;
    let m_total = grid.n_modes();
    if m_total > 4_000 {
        return Err(EfgpError::SizeGuard(format!(
            "weight-space eigensolve guard: M = {m_total} > 4000"
        )));
    }
    let a_ws = dense_weight_space_matrix(points, kernel, grid, sigma)?;
    let evals = a_ws
        .eigvalsh(UPLO::Lower)
        .map_err(|e| EfgpError::Precondition(format!("eigensolve failed: {e}")))?;
    let lam_min = evals.iter().cloned().fold(f64::INFINITY, f64::min);
    let lam_max = evals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let kappa_ws = lam_max / lam_min;

    let kappa_fs = if include_function_space {
        if n > 10_000 {
            return Err(EfgpError::SizeGuard(format!(
                "function-space eigensolve guard: N = {n} > 1e4"
            )));
        }
        let mut k = dense_covariance(points, d, kernel);
        let sigma2 = sigma * sigma;
        for i in 0..n {
            k[(i, i)] += sigma2;
        }
        let evals = k
            .eigvalsh(UPLO::Lower)
            .map_err(|e| EfgpError::Precondition(format!("eigensolve failed: {e}")))?;
        let lo = evals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = evals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Some(hi / lo)
    } else {
        None
    };

    let bound = n as f64 / (sigma * sigma) + 1.0;
    let ws_vs_fs_rhs = match (kappa_fs, kernel_error_estimate) {
        (Some(kfs), Some(eps)) => {
            let t = eps * n as f64 / (sigma * sigma);
            Some((1.0 + t) * kfs + t)
        }
        _ => None,
    };
    Ok(ConditionReport {
        n_points: n,
        kappa_ws,
        kappa_fs,
        bound,
        ws_vs_fs_rhs,
    })
}

/// Both sides of the perturbation-stability inequalities on one dense
/// instance.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    /// Spectral and Frobenius norms of `Ktilde - K`.
    pub err_spectral: f64,
    pub err_frobenius: f64,
    /// `||alpha_tilde - alpha|| / ||alpha||` and its bound `||E|| / sigma^2`.
    pub alpha_rel_err: f64,
    pub alpha_bound: f64,
    /// `||mu_tilde - mu|| / ||y||` and its bound `||E|| / sigma^2`.
    pub mu_rel_err: f64,
    pub mu_bound: f64,
    /// Per new target: |mu_tilde - mu| and the bound
    /// `(||k_x|| ||E|| / sigma^4 + ||ktilde_x - k_x|| / sigma^2) ||y||`.
    pub new_target: Vec<(f64, f64)>,
    /// Measured sup kernel error and the Frobenius bound `N * eps_sup`.
    pub eps_sup: f64,
    pub frobenius_bound: f64,
}

pub fn stability_report(
    data: &Dataset,
    kernel: &Kernel,
    grid: &FourierGrid,
    sigma: f64,
    new_targets: &[f64],
) -> Result<StabilityReport> {
    let n = data.len();
    if n > 4_000 {
        return Err(EfgpError::SizeGuard(format!(
            "stability report dense guard: N = {n} > 4000"
        )));
    }
    let d = data.dim();
    let sigma2 = sigma * sigma;
    let k = dense_covariance(data.points(), d, kernel);
    let phi = design_matrix(data.points(), d, kernel, grid);
    let k_tilde = phi.k_tilde();
    let e = &k_tilde - &k;
    let err_frobenius = e.iter().map(|v| v * v).sum::<f64>().sqrt();
    let evals = e
        .eigvalsh(UPLO::Lower)
        .map_err(|er| EfgpError::Precondition(format!("eigensolve failed: {er}")))?;
    let err_spectral = evals.iter().fold(0.0f64, |m, &v| m.max(v.abs()));

    let solve_with = |mat: &Array2<f64>, rhs: &Array1<f64>| -> Result<Array1<f64>> {
        let mut a = mat.clone();
        for i in 0..n {
            a[(i, i)] += sigma2;
        }
        a.factorizec(UPLO::Lower)
            .and_then(|f| f.solvec(rhs))
            .map_err(|er| EfgpError::Precondition(format!("solve failed: {er}")))
    };
    let y = Array1::from_vec(data.y().to_vec());
    let alpha = solve_with(&k, &y)?;
    let alpha_tilde = solve_with(&k_tilde, &y)?;

    let alpha_norm = alpha.dot(&alpha).sqrt();
    let alpha_rel_err = (&alpha_tilde - &alpha).dot(&(&alpha_tilde - &alpha)).sqrt() / alpha_norm;
    let alpha_bound = err_spectral / sigma2;

    let mu = k.dot(&alpha);
    let mu_tilde = k_tilde.dot(&alpha_tilde);
    let y_norm = y.dot(&y).sqrt();
    let mu_rel_err = (&mu_tilde - &mu).dot(&(&mu_tilde - &mu)).sqrt() / y_norm;
    let mu_bound = err_spectral / sigma2;

    let weights = grid.spectral_weights(kernel);
    let h = grid.h();
    let new_target = new_targets
        .chunks(d)
        .map(|x| {
            let kx = Array1::from_iter(
                data.points()
                    .chunks(d)
                    .map(|p| kernel.eval(distance(x, p))),
            );
            // ktilde_x[n] = Re Σ_p phi_p(x) conj(Phi_{np})
            let phix: Vec<Complex64> = (0..grid.n_modes())
                .map(|p| {
                    let j = grid.multi_index(p);
                    let phase: f64 = (0..d).map(|l| TWO_PI * h * j[l] as f64 * x[l]).sum();
                    Complex64::from_polar(weights[p], phase)
                })
                .collect();
            let phix_conj: Vec<Complex64> = phix.iter().map(|z| z.conj()).collect();
            let (t_re, _) = phi.apply(&phix_conj);
            let ktx = t_re;
            let mu_x = kx.dot(&alpha);
            let mu_tilde_x = ktx.dot(&alpha_tilde);
            let kx_norm = kx.dot(&kx).sqrt();
            let dk = (&ktx - &kx).dot(&(&ktx - &kx)).sqrt();
            let bound = (kx_norm * err_spectral / (sigma2 * sigma2) + dk / sigma2) * y_norm;
            ((mu_tilde_x - mu_x).abs(), bound)
        })
        .collect();

    let probe = ProbeSet::standard(d)?;
    let eps_sup = kernel_error_empirical(kernel, grid, &probe, ErrorNorm::Sup)?;
    Ok(StabilityReport {
        err_spectral,
        err_frobenius,
        alpha_rel_err,
        alpha_bound,
        mu_rel_err,
        mu_bound,
        new_target,
        eps_sup,
        frobenius_bound: n as f64 * eps_sup,
    })
}
