//! Equispaced frequency grids: selection rules for a target kernel accuracy,
//! rigorous aliasing/truncation error bounds, and direct measurement of the
//! kernel approximation error
//! `ktilde(x) = h^d Σ_{j in J_m} khat(hj) e^{2πi h <j,x>}` vs `k(x)`.

use crate::error::{EfgpError, Result};
use crate::kernel::{Kernel, KernelFamily};
use crate::special::{bessel_k, ln_gamma};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Frequency lattice `J_m = {-m..m}^d` with spacing `h`.
///
/// Multi-indices are enumerated row-major over dimensions with the last
/// coordinate varying fastest; this ordering is fixed and shared by every
/// array indexed over the mode set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierGrid {
    h: f64,
    m: usize,
    d: usize,
}

impl FourierGrid {
    pub fn new(h: f64, m: usize, d: usize) -> Result<Self> {
        if !(h > 0.0 && h < 1.0) {
            return Err(EfgpError::Parameter(format!(
                "grid spacing must satisfy 0 < h < 1, got {h}"
            )));
        }
        if m == 0 {
            return Err(EfgpError::Parameter("grid half-width m must be >= 1".into()));
        }
        if !(1..=3).contains(&d) {
            return Err(EfgpError::Parameter(format!("dimension must be 1..=3, got {d}")));
        }
        let n = 2 * m as u128 + 1;
        if n.pow(d as u32) > usize::MAX as u128 {
            return Err(EfgpError::SizeGuard(format!("mode set (2*{m}+1)^{d} overflows")));
        }
        Ok(FourierGrid { h, m, d })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Modes per dimension, `2m + 1`.
    pub fn modes_per_dim(&self) -> usize {
        2 * self.m + 1
    }

    /// Total number of modes `M = (2m+1)^d`.
    pub fn n_modes(&self) -> usize {
        self.modes_per_dim().pow(self.d as u32)
    }

    /// The doubled lattice `J_{2m}` on the same spacing (wave-vector
    /// differences of `J_m` live here).
    pub fn widened(&self) -> FourierGrid {
        FourierGrid {
            h: self.h,
            m: 2 * self.m,
            d: self.d,
        }
    }

    /// Multi-index (each in `-m..=m`) of flat position `idx`.
    pub fn multi_index(&self, idx: usize) -> [i64; 3] {
        let n = self.modes_per_dim();
        let m = self.m as i64;
        let mut out = [0i64; 3];
        let mut rest = idx;
        for l in (0..self.d).rev() {
            out[l] = (rest % n) as i64 - m;
            rest /= n;
        }
        debug_assert_eq!(rest, 0);
        out
    }

    /// Flat position of a multi-index.
    pub fn flat_index(&self, j: &[i64]) -> usize {
        debug_assert_eq!(j.len(), self.d);
        let n = self.modes_per_dim();
        let m = self.m as i64;
        let mut idx = 0usize;
        for &jl in j {
            debug_assert!(jl.abs() <= m);
            idx = idx * n + (jl + m) as usize;
        }
        idx
    }

    /// Euclidean norm of the frequency `h*j` at flat position `idx`.
    pub fn freq_norm(&self, idx: usize) -> f64 {
        let j = self.multi_index(idx);
        let s: f64 = j[..self.d].iter().map(|&v| (v * v) as f64).sum();
        self.h * s.sqrt()
    }

    /// `D_j = sqrt(h^d khat(h j))` over the mode set, flat order.
    /// All entries are real and nonnegative by Bochner's theorem.
    pub fn spectral_weights(&self, kernel: &Kernel) -> Vec<f64> {
        let hd = self.h.powi(self.d as i32);
        (0..self.n_modes())
            .map(|idx| {
                let v = hd * kernel.spectral_density(self.d, self.freq_norm(idx));
                debug_assert!(v >= 0.0);
                v.sqrt()
            })
            .collect()
    }
}

/// Which selection rule produced a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChooseRule {
    SeRigorous,
    MaternRigorous,
    MaternHeuristic,
}

/// Error accounting attached to a chosen grid. For the rigorous rules the
/// two bounds are the theorem right-hand sides at the chosen `(h, m)` and
/// their sum is at most the tolerance. For the heuristic rule the fields
/// hold the aliasing target and the predicted RMS truncation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub tolerance: f64,
    pub aliasing_bound: f64,
    pub truncation_bound: f64,
    pub rule: ChooseRule,
    /// True when the heuristic was evaluated outside its fitted smoothness
    /// range `1/2 <= nu <= 5/2`.
    pub extrapolated: bool,
}

/// Round positive `x` down at the `sig`-th significant digit so that
/// inequalities proved for the unrounded value still hold.
fn round_down_significant(x: f64, sig: i32) -> f64 {
    debug_assert!(x > 0.0);
    let exp = x.log10().floor() as i32;
    let scale = 10f64.powi(sig - 1 - exp);
    (x * scale).floor() / scale
}

/// Grid selection for the squared-exponential kernel guaranteeing uniform
/// kernel error at most `eps` on `[-1,1]^d`.
pub fn choose_params_se(lengthscale: f64, d: usize, eps: f64) -> Result<(FourierGrid, ErrorBudget)> {
    if !(1..=3).contains(&d) {
        return Err(EfgpError::Parameter(format!("dimension must be 1..=3, got {d}")));
    }
    let lmax = 2.0 / std::f64::consts::PI.sqrt();
    if !(lengthscale > 0.0 && lengthscale <= lmax) {
        return Err(EfgpError::Parameter(format!(
            "SE rule requires 0 < lengthscale <= 2/sqrt(pi) = {lmax:.6}, got {lengthscale}"
        )));
    }
    let pref = 4.0 * d as f64 * 3f64.powi(d as i32);
    if !(eps > 0.0 && eps < pref) {
        return Err(EfgpError::Parameter(format!(
            "tolerance must lie in (0, {pref}) for the SE rule, got {eps}"
        )));
    }
    let h = 1.0 / (1.0 + lengthscale * (2.0 * (pref / eps).ln()).sqrt());
    let h = round_down_significant(h, 12);
    let marg = 4f64.powi(d as i32 + 1) * d as f64 / eps;
    let m = ((0.5 * marg.ln()).sqrt() / (std::f64::consts::PI * lengthscale * h))
        .ceil()
        .max(1.0) as usize;
    let grid = FourierGrid::new(h, m, d)?;
    let kernel = Kernel::squared_exponential(lengthscale)?;
    let budget = ErrorBudget {
        tolerance: eps,
        aliasing_bound: aliasing_bound(&kernel, d, h)?,
        truncation_bound: truncation_bound(&kernel, d, h, m)?,
        rule: ChooseRule::SeRigorous,
        extrapolated: false,
    };
    Ok((grid, budget))
}

/// Grid selection for the Matérn kernel guaranteeing uniform kernel error at
/// most `eps` on `[-1,1]^d`. Deliberately pessimistic: `m` grows like
/// `eps^{-1/2nu}`.
pub fn choose_params_matern_rigorous(
    nu: f64,
    lengthscale: f64,
    d: usize,
    eps: f64,
) -> Result<(FourierGrid, ErrorBudget)> {
    if !(1..=3).contains(&d) {
        return Err(EfgpError::Parameter(format!("dimension must be 1..=3, got {d}")));
    }
    if !(nu >= 0.5) {
        return Err(EfgpError::Parameter(format!("requires nu >= 1/2, got {nu}")));
    }
    let lmax = (nu / (2.0 * d as f64)).sqrt() / std::f64::consts::LN_2;
    if !(lengthscale > 0.0 && lengthscale <= lmax) {
        return Err(EfgpError::Parameter(format!(
            "Matérn rule requires lengthscale <= (log 2)^-1 sqrt(nu/2d) = {lmax:.6}, got {lengthscale}"
        )));
    }
    let pref = d as f64 * 3f64.powi(d as i32);
    if !(eps > 0.0 && eps < pref) {
        return Err(EfgpError::Parameter(format!(
            "tolerance must lie in (0, {pref}) for the Matérn rule, got {eps}"
        )));
    }
    let h = 1.0
        / (1.0 + lengthscale * (2.0 * d as f64 / nu).sqrt() * (pref / eps).ln());
    let h = round_down_significant(h, 12);
    let df = d as f64;
    let m_real = (df * 5f64.powi(d as i32 - 1) / (std::f64::consts::PI.powf(df / 2.0) * eps))
        .powf(1.0 / (2.0 * nu))
        * 1.6
        * nu.sqrt()
        / (std::f64::consts::PI * h * lengthscale);
    let m = m_real.ceil().max(1.0) as usize;
    let grid = FourierGrid::new(h, m, d)?;
    let kernel = Kernel::matern(nu, lengthscale)?;
    let budget = ErrorBudget {
        tolerance: eps,
        aliasing_bound: aliasing_bound(&kernel, d, h)?,
        truncation_bound: truncation_bound(&kernel, d, h, m)?,
        rule: ChooseRule::MaternRigorous,
        extrapolated: false,
    };
    Ok((grid, budget))
}

/// Empirically fitted Matérn grid selection targeting root-mean-square
/// (not sup) kernel error around `eps`. With `rescale_l2` the tolerance is
/// first multiplied by the kernel norm factor so the approximation is
/// relative in an L2 sense (the choice used in the benchmark experiments).
pub fn choose_params_matern_heuristic(
    nu: f64,
    lengthscale: f64,
    d: usize,
    eps: f64,
    rescale_l2: bool,
) -> Result<(FourierGrid, ErrorBudget)> {
    if !(1..=3).contains(&d) {
        return Err(EfgpError::Parameter(format!("dimension must be 1..=3, got {d}")));
    }
    if !(nu >= 0.5) {
        return Err(EfgpError::Parameter(format!("requires nu >= 1/2, got {nu}")));
    }
    let kernel = Kernel::matern(nu, lengthscale)?;
    let eps_eff = if rescale_l2 {
        eps * kernel.matern_tolerance_rescale(d)?
    } else {
        eps
    };
    if !(eps_eff > 0.0 && eps_eff < 1.0) {
        return Err(EfgpError::Parameter(format!(
            "effective tolerance must lie in (0, 1), got {eps_eff}"
        )));
    }
    let extrapolated = !(0.5..=2.5).contains(&nu);
    let h = 1.0 / (1.0 + 0.85 * (lengthscale / nu.sqrt()) * (1.0 / eps_eff).ln());
    let h = round_down_significant(h, 12);
    let df = d as f64;
    let bracket = std::f64::consts::PI.powf(nu + df / 2.0)
        * lengthscale.powf(2.0 * nu)
        * eps_eff
        / 0.15;
    let m = ((1.0 / h) * bracket.powf(-1.0 / (2.0 * nu + df / 2.0)))
        .ceil()
        .max(1.0) as usize;
    let grid = FourierGrid::new(h, m, d)?;
    let budget = ErrorBudget {
        tolerance: eps,
        aliasing_bound: eps_eff,
        truncation_bound: matern_frobenius_heuristic(nu, lengthscale, d, h, m),
        rule: ChooseRule::MaternHeuristic,
        extrapolated,
    };
    Ok((grid, budget))
}

fn check_se_hypotheses(lengthscale: f64, h: f64) -> Result<()> {
    let lmax = 2.0 / std::f64::consts::PI.sqrt();
    if lengthscale > lmax {
        return Err(EfgpError::Precondition(format!(
            "lengthscale <= 2/sqrt(pi) violated: {lengthscale} > {lmax:.6}"
        )));
    }
    if !(h > 0.0 && h < 1.0) {
        return Err(EfgpError::Precondition(format!("h < 1 violated: h = {h}")));
    }
    Ok(())
}

fn check_matern_hypotheses(nu: f64, lengthscale: f64, d: usize, h: f64) -> Result<()> {
    let lmax = (nu / (2.0 * d as f64)).sqrt() / std::f64::consts::LN_2;
    if lengthscale > lmax {
        return Err(EfgpError::Precondition(format!(
            "lengthscale <= (log 2)^-1 sqrt(nu/2d) violated: {lengthscale} > {lmax:.6}"
        )));
    }
    let hmax = 1.0 / (1.0 + (8.0 * nu).sqrt() * lengthscale);
    if !(h > 0.0 && h <= hmax) {
        return Err(EfgpError::Precondition(format!(
            "h <= (1 + sqrt(8 nu) l)^-1 violated: {h} > {hmax:.6}"
        )));
    }
    Ok(())
}

/// Uniform bound on the aliasing (periodic image) part of the kernel
/// approximation error over `[-1,1]^d`.
pub fn aliasing_bound(kernel: &Kernel, d: usize, h: f64) -> Result<f64> {
    let l = kernel.lengthscale();
    match kernel.family() {
        KernelFamily::SquaredExponential => {
            check_se_hypotheses(l, h)?;
            let t = (1.0 / h - 1.0) / l;
            Ok(2.0 * d as f64 * 3f64.powi(d as i32) * (-0.5 * t * t).exp())
        }
        KernelFamily::Matern => {
            let nu = kernel.smoothness().unwrap();
            check_matern_hypotheses(nu, l, d, h)?;
            // (2^{1-nu}/Γ(nu)) (4nu)^nu e^{2nu} K_nu(4nu): bounded by 3/8 for nu >= 1/2
            let mid = ((1.0 - nu) * std::f64::consts::LN_2 + nu * (4.0 * nu).ln() + 2.0 * nu
                - ln_gamma(nu))
            .exp()
                * bessel_k(nu, 4.0 * nu);
            let decay = (-(nu / (2.0 * d as f64)).sqrt() * (1.0 / h - 1.0) / l).exp();
            Ok(4.0 * d as f64 * 3f64.powi(d as i32 - 1) * mid * decay)
        }
    }
}

/// Uniform bound on the truncation (spectral tail) part of the kernel
/// approximation error.
pub fn truncation_bound(kernel: &Kernel, d: usize, h: f64, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(EfgpError::Precondition("m >= 1 required".into()));
    }
    let l = kernel.lengthscale();
    match kernel.family() {
        KernelFamily::SquaredExponential => {
            check_se_hypotheses(l, h)?;
            let t = std::f64::consts::PI * l * h * m as f64;
            Ok(2.0 * d as f64 * 4f64.powi(d as i32) * (-2.0 * t * t).exp())
        }
        KernelFamily::Matern => {
            let nu = kernel.smoothness().unwrap();
            check_matern_hypotheses(nu, l, d, h)?;
            let df = d as f64;
            let pref = nu.powf(nu - 1.0) * df * 5f64.powi(d as i32 - 1)
                / (2f64.powf(nu) * std::f64::consts::PI.powf(df / 2.0 + 2.0 * nu));
            let gratio = (ln_gamma(nu + 0.5) - ln_gamma(nu)).exp();
            Ok(pref * gratio * (h * l * m as f64).powf(-2.0 * nu))
        }
    }
}

/// Predicted root-mean-square Matérn kernel approximation error
/// `eps_tilde = (0.15 / pi^{nu+d/2}) / (l^{2nu} (hm)^{2nu+d/2})`;
/// the Frobenius error of the approximated covariance matrix is
/// approximately `N * eps_tilde` for uniform iid points.
pub fn matern_frobenius_heuristic(nu: f64, lengthscale: f64, d: usize, h: f64, m: usize) -> f64 {
    let df = d as f64;
    0.15 / std::f64::consts::PI.powf(nu + df / 2.0)
        / (lengthscale.powf(2.0 * nu) * (h * m as f64).powf(2.0 * nu + df / 2.0))
}

/// Evaluation points in `[-1,1]^d` for empirical kernel-error measurement,
/// with the triangle weights `Π_l (1 - |z_l|)` used for the RMS norm
/// (the autocorrelation of the uniform density on the unit box).
#[derive(Debug, Clone)]
pub struct ProbeSet {
    d: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl ProbeSet {
    /// Deterministic tensor lattice (`lattice_per_dim^d` points) plus
    /// `n_random` uniform points from a seeded generator.
    pub fn new(d: usize, lattice_per_dim: usize, n_random: usize, seed: u64) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(EfgpError::Parameter(format!("dimension must be 1..=3, got {d}")));
        }
        if lattice_per_dim < 2 && n_random == 0 {
            return Err(EfgpError::Parameter("empty probe set".into()));
        }
        let n_lattice = lattice_per_dim.pow(d as u32);
        let mut points = Vec::with_capacity((n_lattice + n_random) * d);
        for idx in 0..n_lattice {
            let mut rest = idx;
            let mut coord = [0.0f64; 3];
            for l in (0..d).rev() {
                let i = rest % lattice_per_dim;
                rest /= lattice_per_dim;
                coord[l] = -1.0 + 2.0 * i as f64 / (lattice_per_dim - 1) as f64;
            }
            points.extend_from_slice(&coord[..d]);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..n_random {
            for _ in 0..d {
                points.push(rng.random_range(-1.0..1.0));
            }
        }
        let weights = points
            .chunks(d)
            .map(|z| z.iter().map(|&zl| 1.0 - zl.abs()).product())
            .collect();
        Ok(ProbeSet { d, points, weights })
    }

    /// The default probe: a 41-per-dimension lattice plus 1000 random points.
    pub fn standard(d: usize) -> Result<Self> {
        ProbeSet::new(d, 41, 1000, 0x5eed_40b5)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorNorm {
    Sup,
    Rms,
}

/// Measured kernel approximation error over a probe set, by direct
/// summation of the truncated Fourier series (this is the oracle the fast
/// transforms are checked against, so no NUFFT is used here).
///
/// Returns the sup norm of `ktilde - k`, or the triangle-weighted RMS.
pub fn kernel_error_empirical(
    kernel: &Kernel,
    grid: &FourierGrid,
    probe: &ProbeSet,
    norm: ErrorNorm,
) -> Result<f64> {
    if probe.dim() != grid.dim() {
        return Err(EfgpError::Shape(format!(
            "probe dimension {} != grid dimension {}",
            probe.dim(),
            grid.dim()
        )));
    }
    let m_total = grid.n_modes() as u128;
    if m_total > 10_000_000 {
        return Err(EfgpError::SizeGuard(format!(
            "direct summation over {m_total} modes exceeds the 1e7 budget"
        )));
    }
    let work = m_total * probe.len() as u128;
    if work > 4_000_000_000 {
        return Err(EfgpError::SizeGuard(format!(
            "direct summation budget exceeded: {m_total} modes x {} probes",
            probe.len()
        )));
    }

    let d = grid.dim();
    let n = grid.modes_per_dim();
    let m = grid.m();
    let h = grid.h();
    let hd = h.powi(d as i32);
    // khat over the mode set, flat order
    let khat: Vec<f64> = (0..grid.n_modes())
        .map(|idx| hd * kernel.spectral_density(d, grid.freq_norm(idx)))
        .collect();

    let deltas: Vec<(f64, f64)> = probe
        .points
        .par_chunks(d)
        .map(|z| {
            // per-dimension phase tables e^{2πi h j z_l}, j = -m..m
            let mut tables = vec![vec![Complex64::default(); n]; d];
            for l in 0..d {
                let base = 2.0 * std::f64::consts::PI * h * z[l];
                for (jj, slot) in tables[l].iter_mut().enumerate() {
                    let j = jj as f64 - m as f64;
                    *slot = Complex64::from_polar(1.0, base * j);
                }
            }
            let approx = match d {
                1 => {
                    let mut acc = Complex64::default();
                    for (idx, &w) in khat.iter().enumerate() {
                        acc += w * tables[0][idx];
                    }
                    acc
                }
                2 => {
                    let mut acc = Complex64::default();
                    for j1 in 0..n {
                        let mut row = Complex64::default();
                        let base = j1 * n;
                        for j2 in 0..n {
                            row += khat[base + j2] * tables[1][j2];
                        }
                        acc += tables[0][j1] * row;
                    }
                    acc
                }
                _ => {
                    let mut acc = Complex64::default();
                    for j1 in 0..n {
                        let mut plane = Complex64::default();
                        for j2 in 0..n {
                            let mut row = Complex64::default();
                            let base = (j1 * n + j2) * n;
                            for j3 in 0..n {
                                row += khat[base + j3] * tables[2][j3];
                            }
                            plane += tables[1][j2] * row;
                        }
                        acc += tables[0][j1] * plane;
                    }
                    acc
                }
            };
            let r = z.iter().map(|&v| v * v).sum::<f64>().sqrt();
            ((approx.re - kernel.eval(r)), approx.im)
        })
        .collect();

    let max_imag = deltas.iter().map(|(_, im)| im.abs()).fold(0.0, f64::max);
    if max_imag > 1e-12 {
        return Err(EfgpError::Precondition(format!(
            "imaginary residue {max_imag:.3e} of the symmetric mode sum exceeds 1e-12"
        )));
    }

    Ok(match norm {
        ErrorNorm::Sup => deltas.iter().map(|(d, _)| d.abs()).fold(0.0, f64::max),
        ErrorNorm::Rms => {
            let wsum: f64 = probe.weights.iter().sum();
            let ssum: f64 = probe
                .weights
                .iter()
                .zip(&deltas)
                .map(|(w, (d, _))| w * d * d)
                .sum();
            (ssum / wsum).sqrt()
        }
    })
}
