//! The EFGP pipeline: grid selection, Toeplitz precompute, conjugate-gradient
//! solve of the weight-space normal equations, and posterior mean/variance
//! prediction through type-2 NUFFTs.

use crate::cg::solve_with_refinement;
use crate::data::Dataset;
use crate::error::{EfgpError, Result};
use crate::grid::{
    choose_params_matern_heuristic, choose_params_se, ErrorBudget, FourierGrid,
};
use crate::kernel::{Kernel, KernelFamily};
use crate::nufft::NufftPlan;
use crate::toeplitz::{build_toeplitz, ToeplitzOperator};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::time::Instant;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Either a kernel-accuracy target (the grid is chosen by the family's
/// selection rule) or an explicit grid override.
#[derive(Debug, Clone, Copy)]
pub enum GridSpec {
    Tolerance(f64),
    Explicit(FourierGrid),
}

/// Solver controls. `tolerance` is the overall accuracy target; the other
/// knobs default from it: CG stops at relative residual `tolerance`, the
/// NUFFTs run at `tolerance/10`, and the iteration cap is the worst-case
/// conjugate-gradient count `ceil(log(1/tol) sqrt(N) / 2 sigma)`.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub tolerance: f64,
    pub cg_rel_residual: Option<f64>,
    pub max_iterations: Option<usize>,
    pub nufft_tol: Option<f64>,
}

impl SolveOptions {
    pub fn new(tolerance: f64) -> Self {
        SolveOptions {
            tolerance,
            cg_rel_residual: None,
            max_iterations: None,
            nufft_tol: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(EfgpError::Parameter(format!(
                "tolerance must lie in (0,1), got {}",
                self.tolerance
            )));
        }
        for (name, v) in [
            ("cg_rel_residual", self.cg_rel_residual),
            ("nufft_tol", self.nufft_tol),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v < 1.0) {
                    return Err(EfgpError::Parameter(format!("{name} must lie in (0,1), got {v}")));
                }
            }
        }
        Ok(())
    }

    pub fn effective_nufft_tol(&self) -> f64 {
        self.nufft_tol
            .unwrap_or(self.tolerance / 10.0)
            .clamp(1e-14, 1e-1)
    }

    pub fn effective_cg_tol(&self) -> f64 {
        self.cg_rel_residual.unwrap_or(self.tolerance)
    }

    /// Worst-case CG iteration count `ceil(log(1/eps) sqrt(N) / (2 sigma))`,
    /// hard-capped at 500000.
    pub fn effective_max_iterations(&self, n_points: usize, sigma: f64) -> usize {
        self.max_iterations.unwrap_or_else(|| {
            let eps = self.effective_cg_tol();
            let bound = ((1.0 / eps).ln() * (n_points as f64).sqrt() / (2.0 * sigma)).ceil();
            (bound.max(1.0) as usize).min(500_000)
        })
    }
}

/// Wall-clock and solver diagnostics from a fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitStats {
    pub n_points: usize,
    pub iterations: usize,
    pub max_iterations_allowed: usize,
    pub relative_residual: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub residual_history: Vec<f64>,
    pub y_norm: f64,
    /// Toeplitz build plus right-hand side, seconds.
    pub t_precompute: f64,
    /// Conjugate-gradient solve, seconds.
    pub t_solve: f64,
    pub t_total: f64,
}

/// A fitted equispaced-Fourier GP regression model.
pub struct EfgpModel {
    kernel: Kernel,
    grid: FourierGrid,
    sigma: f64,
    nufft_tol: f64,
    /// `D_j = sqrt(h^d khat(h j))` over the mode set.
    d_weights: Vec<f64>,
    beta: Vec<Complex64>,
    stats: FitStats,
    toeplitz: ToeplitzOperator,
    predict_plan: NufftPlan,
}

/// Grid-selection policy used when `GridSpec::Tolerance` is given: the
/// rigorous rule for the squared exponential, the fitted heuristic with the
/// L2 tolerance rescale for Matérn.
pub fn choose_grid(kernel: &Kernel, d: usize, eps: f64) -> Result<(FourierGrid, ErrorBudget)> {
    match kernel.family() {
        KernelFamily::SquaredExponential => choose_params_se(kernel.lengthscale(), d, eps),
        KernelFamily::Matern => choose_params_matern_heuristic(
            kernel.smoothness().unwrap(),
            kernel.lengthscale(),
            d,
            eps,
            true,
        ),
    }
}

/// Fits the weight-space system `(D (F*F) D + sigma^2 I) beta = D (F^* y)`
/// by conjugate gradients with FFT-accelerated products.
pub fn fit(
    data: &Dataset,
    kernel: &Kernel,
    sigma: f64,
    grid_spec: GridSpec,
    opts: &SolveOptions,
) -> Result<EfgpModel> {
    opts.validate()?;
    if !(sigma > 0.0) {
        return Err(EfgpError::Parameter(format!(
            "noise standard deviation must be positive, got {sigma}"
        )));
    }
    let grid = match grid_spec {
        GridSpec::Tolerance(eps) => {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(EfgpError::Parameter(format!(
                    "grid tolerance must lie in (0,1), got {eps}"
                )));
            }
            choose_grid(kernel, data.dim(), eps)?.0
        }
        GridSpec::Explicit(g) => {
            if g.dim() != data.dim() {
                return Err(EfgpError::Shape(format!(
                    "grid dimension {} != data dimension {}",
                    g.dim(),
                    data.dim()
                )));
            }
            g
        }
    };
    let nufft_tol = opts.effective_nufft_tol();

    let t_start = Instant::now();
    // the lattice vector is retained so models can be serialized
    let toeplitz = build_toeplitz(data.points(), &grid, nufft_tol, true)?;
    let rhs_plan = NufftPlan::for_grid(&grid, nufft_tol)?;
    let y_complex: Vec<Complex64> = data.y().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    // (F^* y)_j = conj( Σ_n y_n e^{+2πi h <j, x_n>} ) for real y
    let fy = rhs_plan.type1(data.points(), &y_complex, grid.h())?;
    let d_weights = grid.spectral_weights(kernel);
    let rhs: Vec<Complex64> = fy
        .iter()
        .zip(&d_weights)
        .map(|(t, &w)| t.conj() * w)
        .collect();
    let t_precompute = t_start.elapsed().as_secs_f64();

    let sigma2 = sigma * sigma;
    let apply = |v: &[Complex64]| -> Result<Vec<Complex64>> {
        let scaled: Vec<Complex64> = v.iter().zip(&d_weights).map(|(z, &w)| z * w).collect();
        let conv = toeplitz.apply(&scaled)?;
        Ok(conv
            .iter()
            .zip(&d_weights)
            .zip(v)
            .map(|((c, &w), z)| c * w + z * sigma2)
            .collect())
    };
    // real observations and a symmetric mode set make the exact weights
    // conjugate-symmetric: beta_{-j} = conj(beta_j); projecting iterates
    // back onto that subspace strips roundoff the iteration amplifies
    let symmetrize = |v: &mut [Complex64]| {
        for idx in 0..grid.n_modes() {
            let j = grid.multi_index(idx);
            let neg: Vec<i64> = j[..grid.dim()].iter().map(|&c| -c).collect();
            let nidx = grid.flat_index(&neg);
            if nidx > idx {
                let avg = 0.5 * (v[idx] + v[nidx].conj());
                v[idx] = avg;
                v[nidx] = avg.conj();
            } else if nidx == idx {
                v[idx] = Complex64::new(v[idx].re, 0.0);
            }
        }
    };
    let max_iter = opts.effective_max_iterations(data.len(), sigma);
    let t_solve_start = Instant::now();
    let outcome = solve_with_refinement(
        apply,
        &rhs,
        opts.effective_cg_tol(),
        max_iter,
        Some(&symmetrize),
    )?;
    let t_solve = t_solve_start.elapsed().as_secs_f64();

    let y_norm = data.y().iter().map(|v| v * v).sum::<f64>().sqrt();
    let stats = FitStats {
        n_points: data.len(),
        iterations: outcome.iterations,
        max_iterations_allowed: max_iter,
        relative_residual: outcome.relative_residual,
        residual_history: outcome.history,
        y_norm,
        t_precompute,
        t_solve,
        t_total: t_start.elapsed().as_secs_f64(),
    };
    Ok(EfgpModel {
        kernel: *kernel,
        grid,
        sigma,
        nufft_tol,
        d_weights,
        beta: outcome.x,
        stats,
        toeplitz,
        predict_plan: rhs_plan,
    })
}

impl EfgpModel {
    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn grid(&self) -> &FourierGrid {
        &self.grid
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn nufft_tol(&self) -> f64 {
        self.nufft_tol
    }

    pub fn beta(&self) -> &[Complex64] {
        &self.beta
    }

    pub fn spectral_weights(&self) -> &[f64] {
        &self.d_weights
    }

    pub fn stats(&self) -> &FitStats {
        &self.stats
    }

    pub(crate) fn toeplitz(&self) -> &ToeplitzOperator {
        &self.toeplitz
    }

    /// Lattice vector `v` over `J_{2m}` retained from the fit.
    pub fn toeplitz_lattice(&self) -> Option<&[Complex64]> {
        self.toeplitz.lattice_vector()
    }

    /// Rebuilds a model from its serialized parts (see [`crate::model_io`]).
    pub(crate) fn from_parts(
        kernel: Kernel,
        grid: FourierGrid,
        sigma: f64,
        nufft_tol: f64,
        beta: Vec<Complex64>,
        stats: FitStats,
        lattice_v: Vec<Complex64>,
    ) -> Result<Self> {
        if beta.len() != grid.n_modes() {
            return Err(EfgpError::ModelFormat(format!(
                "weight vector length {} != mode count {}",
                beta.len(),
                grid.n_modes()
            )));
        }
        let n_points = stats.n_points;
        let toeplitz =
            ToeplitzOperator::from_lattice_vector(lattice_v, &grid, n_points, true)?;
        let predict_plan = NufftPlan::for_grid(&grid, nufft_tol)?;
        let d_weights = grid.spectral_weights(&kernel);
        Ok(EfgpModel {
            kernel,
            grid,
            sigma,
            nufft_tol,
            d_weights,
            beta,
            stats,
            toeplitz,
            predict_plan,
        })
    }

    fn check_targets(&self, targets: &[f64]) -> Result<usize> {
        let d = self.grid.dim();
        if targets.len() % d != 0 {
            return Err(EfgpError::Shape(format!(
                "targets length {} is not a multiple of d={d}",
                targets.len()
            )));
        }
        for &v in targets {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(EfgpError::InvalidInput(format!(
                    "target coordinate {v} outside [0,1]"
                )));
            }
        }
        Ok(targets.len() / d)
    }

    /// Posterior mean at `q` targets (row-major coordinates in `[0,1]^d`),
    /// evaluated by a single type-2 NUFFT with coefficients `D_j beta_j`.
    pub fn predict_mean(&self, targets: &[f64]) -> Result<Vec<f64>> {
        let q = self.check_targets(targets)?;
        if q == 0 {
            return Ok(Vec::new());
        }
        let coeffs: Vec<Complex64> = self
            .beta
            .iter()
            .zip(&self.d_weights)
            .map(|(b, &w)| b * w)
            .collect();
        let out = self.predict_plan.type2(&coeffs, targets, self.grid.h())?;
        // the exact sum is real (conjugate-symmetric modes, real kernel)
        let imag_norm: f64 = out.iter().map(|z| z.im * z.im).sum::<f64>().sqrt();
        if imag_norm > 1e-10 * self.stats.y_norm.max(f64::MIN_POSITIVE) {
            return Err(EfgpError::Precondition(format!(
                "imaginary residue {imag_norm:.3e} of the posterior-mean sum exceeds 1e-10 * ||y||"
            )));
        }
        Ok(out.iter().map(|z| z.re).collect())
    }

    /// Applies the weight-space system matrix `(D (F*F) D + sigma^2 I)` to a
    /// vector; exposed for verification and eigenvalue probes.
    pub fn apply_system(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.grid.n_modes() {
            return Err(EfgpError::Shape(format!(
                "vector length {} != M = {}",
                v.len(),
                self.grid.n_modes()
            )));
        }
        let sigma2 = self.sigma * self.sigma;
        let scaled: Vec<Complex64> = v.iter().zip(&self.d_weights).map(|(z, &w)| z * w).collect();
        let conv = self.toeplitz.apply(&scaled)?;
        Ok(conv
            .iter()
            .zip(&self.d_weights)
            .zip(v)
            .map(|((c, &w), z)| c * w + z * sigma2)
            .collect())
    }

    /// Posterior variance at a single target. Runs a fresh CG solve per call
    /// (reusing the Toeplitz precompute), so batching many targets is costly.
    pub fn posterior_variance(&self, target: &[f64], opts: &SolveOptions) -> Result<f64> {
        opts.validate()?;
        if target.len() != self.grid.dim() {
            return Err(EfgpError::Shape(format!(
                "target has {} coordinates, expected {}",
                target.len(),
                self.grid.dim()
            )));
        }
        self.check_targets(target)?;
        let m_total = self.grid.n_modes();
        let sigma2 = self.sigma * self.sigma;
        // rhs: sigma^2 conj(phi_j(x)) = sigma^2 D_j e^{-2πi h <j, x>}
        let mut rhs = vec![Complex64::default(); m_total];
        let h = self.grid.h();
        for (idx, slot) in rhs.iter_mut().enumerate() {
            let j = self.grid.multi_index(idx);
            let phase: f64 = (0..self.grid.dim())
                .map(|l| TWO_PI * h * j[l] as f64 * target[l])
                .sum();
            *slot = Complex64::from_polar(sigma2 * self.d_weights[idx], -phase);
        }
        let max_iter = opts.effective_max_iterations(self.stats.n_points, self.sigma);
        let outcome = solve_with_refinement(
            |v| self.apply_system(v),
            &rhs,
            opts.effective_cg_tol(),
            max_iter,
            None,
        )?;
        // s(x) = Re Σ_j eta_j phi_j(x)
        let mut acc = Complex64::default();
        for (idx, eta) in outcome.x.iter().enumerate() {
            let j = self.grid.multi_index(idx);
            let phase: f64 = (0..self.grid.dim())
                .map(|l| TWO_PI * h * j[l] as f64 * target[l])
                .sum();
            acc += eta * Complex64::from_polar(self.d_weights[idx], phase);
        }
        Ok(acc.re)
    }
}

/// Affine map taking raw coordinates into the unit box `[0,1]^d` with a
/// common scale across dimensions (isotropy of the kernel is preserved; the
/// length scale divides by the same factor).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxMap {
    pub offset: Vec<f64>,
    pub scale: f64,
}

impl BoxMap {
    /// Identity map (data already in the unit box).
    pub fn identity(d: usize) -> Self {
        BoxMap {
            offset: vec![0.0; d],
            scale: 1.0,
        }
    }

    /// Fits the map to raw points (row-major, `d` per point): the common
    /// scale is the largest per-dimension extent, and narrower dimensions
    /// are centered.
    pub fn fit(points: &[f64], d: usize) -> Result<Self> {
        if d == 0 || points.is_empty() || points.len() % d != 0 {
            return Err(EfgpError::InvalidInput("bad point array".into()));
        }
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for p in points.chunks(d) {
            for l in 0..d {
                if !p[l].is_finite() {
                    return Err(EfgpError::InvalidInput("non-finite coordinate".into()));
                }
                lo[l] = lo[l].min(p[l]);
                hi[l] = hi[l].max(p[l]);
            }
        }
        let extent: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| b - a).collect();
        let scale = extent.iter().cloned().fold(0.0f64, f64::max);
        let scale = if scale > 0.0 { scale } else { 1.0 };
        let offset = (0..d)
            .map(|l| lo[l] - 0.5 * (scale - extent[l]))
            .collect();
        Ok(BoxMap { offset, scale })
    }

    pub fn forward(&self, raw: &[f64]) -> Vec<f64> {
        let d = self.offset.len();
        raw.chunks(d)
            .flat_map(|p| {
                (0..d).map(move |l| ((p[l] - self.offset[l]) / self.scale).clamp(0.0, 1.0))
            })
            .collect()
    }

    /// Length scale in internal (unit-box) units.
    pub fn rescale_lengthscale(&self, lengthscale: f64) -> f64 {
        lengthscale / self.scale
    }
}
