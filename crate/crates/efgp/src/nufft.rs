//! Type-1 (nonuniform points → uniform modes) and type-2 (uniform modes →
//! nonuniform points) nonuniform FFTs in 1–3 dimensions.
//!
//! Conventions: for points `x ∈ [0,1]^d` and frequency spacing `h < 1`,
//!
//! ```text
//! type 1:  out_j = Σ_n c_n e^{+2πi h <j, x_n>}     j in {-p..p}^d
//! type 2:  out_n = Σ_j c_j e^{+2πi h <j, x_n>}
//! ```
//!
//! The fast path spreads onto a 2x-oversampled periodic fine grid with an
//! "exponential of semicircle" window, FFTs, and deconvolves; the relative
//! l2 error against direct summation is at most the plan tolerance.
//! Spreading accumulates in cell-sorted point order, so outputs are
//! bit-identical across runs and thread counts.

use crate::error::{EfgpError, Result};
use crate::fft::{next_5_smooth, FftNd};
use crate::grid::FourierGrid;
use num_complex::Complex64;
use rayon::prelude::*;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Reusable transform plan for a fixed mode set and tolerance.
pub struct NufftPlan {
    d: usize,
    modes: Vec<usize>,
    width: usize,
    beta: f64,
    fine: Vec<usize>,
    fft: FftNd,
    /// Per dimension, window transform `psihat(k)` for `k = 0..=p`
    /// (symmetric in k).
    deconv: Vec<Vec<f64>>,
    tol: f64,
}

/// Window value at normalized offset `z` in (-1, 1).
#[inline]
fn es_window(z: f64, beta: f64) -> f64 {
    let t = 1.0 - z * z;
    if t <= 0.0 {
        0.0
    } else {
        (beta * (t.sqrt() - 1.0)).exp()
    }
}

/// `∫ psi(t) e^{-ikt} dt` over the support, by composite Simpson.
/// The window is even so this is real.
fn window_transform(half_support: f64, beta: f64, k_max: usize) -> Vec<f64> {
    const PANELS: usize = 800;
    let n = 2 * PANELS;
    let du = 2.0 / n as f64;
    // precompute window values and Simpson weights on [-1, 1]
    let mut vals = Vec::with_capacity(n + 1);
    let mut weights = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let u = -1.0 + i as f64 * du;
        vals.push(es_window(u, beta));
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        weights.push(w * du / 3.0 * half_support);
    }
    (0..=k_max)
        .map(|k| {
            let a = k as f64 * half_support;
            (0..=n)
                .map(|i| {
                    let u = -1.0 + i as f64 * du;
                    weights[i] * vals[i] * (a * u).cos()
                })
                .sum()
        })
        .collect()
}

impl NufftPlan {
    /// `modes_per_dim` must be odd (mode sets are symmetric `-p..p`);
    /// `tol` must lie in `[1e-14, 1e-1]`.
    pub fn new(d: usize, modes_per_dim: &[usize], tol: f64) -> Result<Self> {
        if !(1..=3).contains(&d) || modes_per_dim.len() != d {
            return Err(EfgpError::Parameter(format!(
                "dimension must be 1..=3 with one mode count per dimension, got d={d}, {} counts",
                modes_per_dim.len()
            )));
        }
        if !(1e-14..=1e-1).contains(&tol) {
            return Err(EfgpError::Parameter(format!(
                "tolerance must lie in [1e-14, 1e-1], got {tol}"
            )));
        }
        for &n in modes_per_dim {
            if n == 0 || n % 2 == 0 {
                return Err(EfgpError::Parameter(format!(
                    "modes per dimension must be odd and positive, got {n}"
                )));
            }
        }
        let width = ((1.0 / tol).log10().ceil() as usize + 2).max(3);
        let beta = 2.30 * width as f64;
        let fine: Vec<usize> = modes_per_dim
            .iter()
            .map(|&n| next_5_smooth((2 * n).max(2 * width + 4)))
            .collect();
        let total_fine: usize = fine.iter().product();
        if total_fine > 1usize << 33 {
            return Err(EfgpError::SizeGuard(format!(
                "fine grid of {total_fine} points exceeds the memory guard"
            )));
        }
        let deconv = (0..d)
            .map(|l| {
                let delta = TWO_PI / fine[l] as f64;
                let half_support = 0.5 * width as f64 * delta;
                window_transform(half_support, beta, modes_per_dim[l] / 2)
            })
            .collect();
        Ok(NufftPlan {
            d,
            modes: modes_per_dim.to_vec(),
            width,
            beta,
            fine: fine.clone(),
            fft: FftNd::new(&fine),
            deconv,
            tol,
        })
    }

    /// Plan matching a [`FourierGrid`] mode set `J_m`.
    pub fn for_grid(grid: &FourierGrid, tol: f64) -> Result<Self> {
        NufftPlan::new(grid.dim(), &vec![grid.modes_per_dim(); grid.dim()], tol)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn n_modes(&self) -> usize {
        self.modes.iter().product()
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    fn check_points(&self, points: &[f64]) -> Result<usize> {
        if points.is_empty() {
            return Err(EfgpError::InvalidInput("empty point set".into()));
        }
        if points.len() % self.d != 0 {
            return Err(EfgpError::Shape(format!(
                "points length {} is not a multiple of d={}",
                points.len(),
                self.d
            )));
        }
        Ok(points.len() / self.d)
    }

    /// Nonuniform to uniform: `out_j = Σ_n c_n e^{2πi h <j, x_n>}`, output in
    /// the flat row-major mode order (last coordinate fastest).
    pub fn type1(&self, points: &[f64], strengths: &[Complex64], h: f64) -> Result<Vec<Complex64>> {
        let n_pts = self.check_points(points)?;
        if strengths.len() != n_pts {
            return Err(EfgpError::Shape(format!(
                "{} strengths for {} points",
                strengths.len(),
                n_pts
            )));
        }
        let mut fine_grid = match self.d {
            1 => self.spread::<1>(points, strengths, h),
            2 => self.spread::<2>(points, strengths, h),
            _ => self.spread::<3>(points, strengths, h),
        };
        self.fft.backward_unnormalized(&mut fine_grid);

        // deconvolve and extract the symmetric mode cube
        let m_total = self.n_modes();
        let mut out = vec![Complex64::default(); m_total];
        let half: Vec<usize> = self.modes.iter().map(|&n| n / 2).collect();
        for (idx, slot) in out.iter_mut().enumerate() {
            let mut rest = idx;
            let mut fine_idx = 0usize;
            let mut factor = 1.0f64;
            for l in (0..self.d).rev() {
                let j = (rest % self.modes[l]) as i64 - half[l] as i64;
                rest /= self.modes[l];
                let nf = self.fine[l];
                let stride: usize = self.fine[l + 1..].iter().product();
                fine_idx += (j.rem_euclid(nf as i64) as usize) * stride;
                factor *= TWO_PI / (nf as f64 * self.deconv[l][j.unsigned_abs() as usize]);
            }
            *slot = fine_grid[fine_idx] * factor;
        }
        Ok(out)
    }

    /// Uniform to nonuniform: `out_n = Σ_j c_j e^{2πi h <j, x_n>}`.
    pub fn type2(&self, coeffs: &[Complex64], points: &[f64], h: f64) -> Result<Vec<Complex64>> {
        let n_pts = self.check_points(points)?;
        if coeffs.len() != self.n_modes() {
            return Err(EfgpError::Shape(format!(
                "{} coefficients for a mode set of {}",
                coeffs.len(),
                self.n_modes()
            )));
        }
        // deconvolve into the zero-embedded fine grid
        let total_fine: usize = self.fine.iter().product();
        let mut fine_grid = vec![Complex64::default(); total_fine];
        let half: Vec<usize> = self.modes.iter().map(|&n| n / 2).collect();
        for (idx, &c) in coeffs.iter().enumerate() {
            let mut rest = idx;
            let mut fine_idx = 0usize;
            let mut factor = 1.0f64;
            for l in (0..self.d).rev() {
                let j = (rest % self.modes[l]) as i64 - half[l] as i64;
                rest /= self.modes[l];
                let nf = self.fine[l];
                let stride: usize = self.fine[l + 1..].iter().product();
                fine_idx += (j.rem_euclid(nf as i64) as usize) * stride;
                factor *= TWO_PI / (nf as f64 * self.deconv[l][j.unsigned_abs() as usize]);
            }
            fine_grid[fine_idx] = c * factor;
        }
        self.fft.backward_unnormalized(&mut fine_grid);
        Ok(match self.d {
            1 => self.interp::<1>(&fine_grid, points, h),
            2 => self.interp::<2>(&fine_grid, points, h),
            _ => self.interp::<3>(&fine_grid, points, h),
        })
    }

    /// Per-dimension tap start indices and window weights for one point.
    #[inline]
    fn taps<const D: usize>(&self, x: &[f64], h: f64, weights: &mut [[f64; 24]; D]) -> [i64; D] {
        let w = self.width;
        let mut starts = [0i64; D];
        for l in 0..D {
            let theta = (TWO_PI * h * x[l]).rem_euclid(TWO_PI);
            let delta = TWO_PI / self.fine[l] as f64;
            let center = theta / delta;
            let start = (center - 0.5 * w as f64).ceil() as i64;
            starts[l] = start;
            let half_support = 0.5 * w as f64 * delta;
            for t in 0..w {
                let dist = theta - (start + t as i64) as f64 * delta;
                weights[l][t] = es_window(dist / half_support, self.beta);
            }
        }
        starts
    }

    fn spread<const D: usize>(
        &self,
        points: &[f64],
        strengths: &[Complex64],
        h: f64,
    ) -> Vec<Complex64> {
        let n_pts = points.len() / D;
        let w = self.width;
        debug_assert!(w <= 24);
        let fine: [usize; D] = std::array::from_fn(|l| self.fine[l]);
        let total_fine: usize = fine.iter().product();

        // sort points by flattened nearest-cell index so accumulation order
        // is reproducible and cache-friendly
        let mut order: Vec<u32> = (0..n_pts as u32).collect();
        let cell_of = |n: u32| -> u64 {
            let x = &points[n as usize * D..n as usize * D + D];
            let mut c = 0u64;
            for l in 0..D {
                let theta = (TWO_PI * h * x[l]).rem_euclid(TWO_PI);
                let i0 = (theta * fine[l] as f64 / TWO_PI) as u64;
                c = c * fine[l] as u64 + i0.min(fine[l] as u64 - 1);
            }
            c
        };
        order.sort_unstable_by_key(|&n| cell_of(n));

        let mut grid_data = vec![Complex64::default(); total_fine];
        const CHUNK: usize = 65_536;
        let mut tap_buf: Vec<([i64; D], [[f64; 24]; D])> =
            vec![([0; D], [[0.0; 24]; D]); CHUNK.min(n_pts)];
        for chunk in order.chunks(CHUNK) {
            // window evaluation is the expensive part; do it in parallel
            chunk
                .par_iter()
                .map(|&n| {
                    let x = &points[n as usize * D..n as usize * D + D];
                    let mut weights = [[0.0f64; 24]; D];
                    let starts = self.taps::<D>(x, h, &mut weights);
                    (starts, weights)
                })
                .collect_into_vec(&mut tap_buf);
            // scatter sequentially in sorted order
            // (k1/k2 are const-folded safe aliases so dead match arms never
            // index past a short array)
            let k1 = if D > 1 { 1 } else { 0 };
            let k2 = if D > 2 { 2 } else { 0 };
            for (&n, (starts, weights)) in chunk.iter().zip(&tap_buf) {
                let c = strengths[n as usize];
                match D {
                    1 => {
                        let nf = fine[0];
                        for t in 0..w {
                            let idx = (starts[0] + t as i64).rem_euclid(nf as i64) as usize;
                            grid_data[idx] += c * weights[0][t];
                        }
                    }
                    2 => {
                        let (nf0, nf1) = (fine[0], fine[k1]);
                        for t0 in 0..w {
                            let i0 = (starts[0] + t0 as i64).rem_euclid(nf0 as i64) as usize;
                            let row = i0 * nf1;
                            let c0 = c * weights[0][t0];
                            for t1 in 0..w {
                                let i1 = (starts[k1] + t1 as i64).rem_euclid(nf1 as i64) as usize;
                                grid_data[row + i1] += c0 * weights[k1][t1];
                            }
                        }
                    }
                    _ => {
                        let (nf0, nf1, nf2) = (fine[0], fine[k1], fine[k2]);
                        for t0 in 0..w {
                            let i0 = (starts[0] + t0 as i64).rem_euclid(nf0 as i64) as usize;
                            let c0 = c * weights[0][t0];
                            for t1 in 0..w {
                                let i1 = (starts[k1] + t1 as i64).rem_euclid(nf1 as i64) as usize;
                                let plane = (i0 * nf1 + i1) * nf2;
                                let c1 = c0 * weights[k1][t1];
                                for t2 in 0..w {
                                    let i2 =
                                        (starts[k2] + t2 as i64).rem_euclid(nf2 as i64) as usize;
                                    grid_data[plane + i2] += c1 * weights[k2][t2];
                                }
                            }
                        }
                    }
                }
            }
        }
        grid_data
    }

    fn interp<const D: usize>(
        &self,
        grid_data: &[Complex64],
        points: &[f64],
        h: f64,
    ) -> Vec<Complex64> {
        let w = self.width;
        let fine: [usize; D] = std::array::from_fn(|l| self.fine[l]);
        let k1 = if D > 1 { 1 } else { 0 };
        let k2 = if D > 2 { 2 } else { 0 };
        points
            .par_chunks(D)
            .map(|x| {
                let mut weights = [[0.0f64; 24]; D];
                let starts = self.taps::<D>(x, h, &mut weights);
                let mut acc = Complex64::default();
                match D {
                    1 => {
                        let nf = fine[0];
                        for t in 0..w {
                            let idx = (starts[0] + t as i64).rem_euclid(nf as i64) as usize;
                            acc += grid_data[idx] * weights[0][t];
                        }
                    }
                    2 => {
                        let (nf0, nf1) = (fine[0], fine[k1]);
                        for t0 in 0..w {
                            let i0 = (starts[0] + t0 as i64).rem_euclid(nf0 as i64) as usize;
                            let row = i0 * nf1;
                            let mut inner = Complex64::default();
                            for t1 in 0..w {
                                let i1 = (starts[k1] + t1 as i64).rem_euclid(nf1 as i64) as usize;
                                inner += grid_data[row + i1] * weights[k1][t1];
                            }
                            acc += inner * weights[0][t0];
                        }
                    }
                    _ => {
                        let (nf0, nf1, nf2) = (fine[0], fine[k1], fine[k2]);
                        for t0 in 0..w {
                            let i0 = (starts[0] + t0 as i64).rem_euclid(nf0 as i64) as usize;
                            let mut plane_acc = Complex64::default();
                            for t1 in 0..w {
                                let i1 = (starts[k1] + t1 as i64).rem_euclid(nf1 as i64) as usize;
                                let plane = (i0 * nf1 + i1) * nf2;
                                let mut inner = Complex64::default();
                                for t2 in 0..w {
                                    let i2 =
                                        (starts[k2] + t2 as i64).rem_euclid(nf2 as i64) as usize;
                                    inner += grid_data[plane + i2] * weights[k2][t2];
                                }
                                plane_acc += inner * weights[k1][t1];
                            }
                            acc += plane_acc * weights[0][t0];
                        }
                    }
                }
                acc
            })
            .collect()
    }
}

/// Fast type-1 transform over the mode set of `grid`.
pub fn nufft_type1(
    points: &[f64],
    strengths: &[Complex64],
    grid: &FourierGrid,
    tol: f64,
) -> Result<Vec<Complex64>> {
    NufftPlan::for_grid(grid, tol)?.type1(points, strengths, grid.h())
}

/// Fast type-2 transform over the mode set of `grid`.
pub fn nufft_type2(
    coeffs: &[Complex64],
    points: &[f64],
    grid: &FourierGrid,
    tol: f64,
) -> Result<Vec<Complex64>> {
    NufftPlan::for_grid(grid, tol)?.type2(coeffs, points, grid.h())
}

fn direct_guard(n_pts: usize, n_modes: usize) -> Result<()> {
    if (n_pts as u128) * (n_modes as u128) > 100_000_000 {
        return Err(EfgpError::SizeGuard(format!(
            "direct summation budget N*M = {n_pts}*{n_modes} exceeds 1e8"
        )));
    }
    Ok(())
}

/// Exact type-1 reference by direct summation; `N * M <= 1e8`.
pub fn direct_type1(
    points: &[f64],
    strengths: &[Complex64],
    grid: &FourierGrid,
) -> Result<Vec<Complex64>> {
    let d = grid.dim();
    if points.is_empty() || points.len() % d != 0 {
        return Err(EfgpError::InvalidInput("bad point array".into()));
    }
    let n_pts = points.len() / d;
    if strengths.len() != n_pts {
        return Err(EfgpError::Shape("strengths/points length mismatch".into()));
    }
    direct_guard(n_pts, grid.n_modes())?;
    let h = grid.h();
    Ok((0..grid.n_modes())
        .into_par_iter()
        .map(|idx| {
            let j = grid.multi_index(idx);
            let mut acc = Complex64::default();
            for (n, c) in strengths.iter().enumerate() {
                let x = &points[n * d..(n + 1) * d];
                let phase: f64 = (0..d).map(|l| TWO_PI * h * j[l] as f64 * x[l]).sum();
                acc += c * Complex64::from_polar(1.0, phase);
            }
            acc
        })
        .collect())
}

/// Exact type-2 reference by direct summation; `N * M <= 1e8`.
pub fn direct_type2(
    coeffs: &[Complex64],
    points: &[f64],
    grid: &FourierGrid,
) -> Result<Vec<Complex64>> {
    let d = grid.dim();
    if points.is_empty() || points.len() % d != 0 {
        return Err(EfgpError::InvalidInput("bad point array".into()));
    }
    if coeffs.len() != grid.n_modes() {
        return Err(EfgpError::Shape("coefficient length mismatch".into()));
    }
    let n_pts = points.len() / d;
    direct_guard(n_pts, grid.n_modes())?;
    let h = grid.h();
    Ok(points
        .par_chunks(d)
        .map(|x| {
            let mut acc = Complex64::default();
            for (idx, c) in coeffs.iter().enumerate() {
                let j = grid.multi_index(idx);
                let phase: f64 = (0..d).map(|l| TWO_PI * h * j[l] as f64 * x[l]).sum();
                acc += c * Complex64::from_polar(1.0, phase);
            }
            acc
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rel_l2(a: &[Complex64], b: &[Complex64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
        let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
        (num / den).sqrt()
    }

    fn random_instance(
        rng: &mut ChaCha8Rng,
        d: usize,
        n_pts: usize,
    ) -> (Vec<f64>, Vec<Complex64>) {
        let points: Vec<f64> = (0..n_pts * d).map(|_| rng.random::<f64>()).collect();
        let strengths = (0..n_pts)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        (points, strengths)
    }

    #[test]
    fn single_point_at_origin_gives_all_ones() {
        let grid = FourierGrid::new(0.6, 5, 2).unwrap();
        let out = nufft_type1(&[0.0, 0.0], &[Complex64::new(1.0, 0.0)], &grid, 1e-10).unwrap();
        for v in out {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn unit_strengths_give_count_at_zero_mode() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let grid = FourierGrid::new(0.55, 6, 1).unwrap();
        let n = 137;
        let (points, _) = random_instance(&mut rng, 1, n);
        let ones = vec![Complex64::new(1.0, 0.0); n];
        let out = nufft_type1(&points, &ones, &grid, 1e-12).unwrap();
        let center = grid.flat_index(&[0]);
        assert!((out[center].re - n as f64).abs() < 1e-9 * n as f64);
        assert!(out[center].im.abs() < 1e-9 * n as f64);
    }

    #[test]
    fn type1_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let grid = FourierGrid::new(0.42, 8, 2).unwrap();
        let (points, strengths) = random_instance(&mut rng, 2, 200);
        let fast = nufft_type1(&points, &strengths, &grid, 1e-9).unwrap();
        let exact = direct_type1(&points, &strengths, &grid).unwrap();
        assert!(rel_l2(&fast, &exact) <= 1e-9);
    }

    #[test]
    fn type2_indicator_at_zero_mode_gives_ones() {
        let grid = FourierGrid::new(0.3, 4, 3).unwrap();
        let mut coeffs = vec![Complex64::default(); grid.n_modes()];
        coeffs[grid.flat_index(&[0, 0, 0])] = Complex64::new(1.0, 0.0);
        let pts = [0.1, 0.5, 0.9, 0.33, 0.66, 0.05];
        let out = nufft_type2(&coeffs, &pts, &grid, 1e-10).unwrap();
        for v in out {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn type2_conjugate_symmetric_coeffs_give_real_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let grid = FourierGrid::new(0.5, 7, 2).unwrap();
        let m_total = grid.n_modes();
        let mut coeffs = vec![Complex64::default(); m_total];
        for idx in 0..m_total {
            let j = grid.multi_index(idx);
            let neg = [-j[0], -j[1]];
            let neg_idx = grid.flat_index(&neg);
            if idx < neg_idx {
                let v = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
                coeffs[idx] = v;
                coeffs[neg_idx] = v.conj();
            } else if idx == neg_idx {
                coeffs[idx] = Complex64::new(rng.random::<f64>() - 0.5, 0.0);
            }
        }
        let (points, _) = random_instance(&mut rng, 2, 50);
        let out = nufft_type2(&coeffs, &points, &grid, 1e-12).unwrap();
        let norm: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        for v in out {
            assert!(v.im.abs() <= 1e-12 * norm);
        }
    }

    #[test]
    fn type2_matches_direct_3d() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let grid = FourierGrid::new(0.37, 5, 3).unwrap();
        let coeffs: Vec<Complex64> = (0..grid.n_modes())
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let (points, _) = random_instance(&mut rng, 3, 300);
        let fast = nufft_type2(&coeffs, &points, &grid, 1e-8).unwrap();
        let exact = direct_type2(&coeffs, &points, &grid).unwrap();
        assert!(rel_l2(&fast, &exact) <= 1e-8);
    }

    #[test]
    fn adjoint_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let grid = FourierGrid::new(0.61, 4, 2).unwrap();
        let (points, s) = random_instance(&mut rng, 2, 40);
        let coeffs: Vec<Complex64> = (0..grid.n_modes())
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        // <type2(c), s> = <c, conj(type1(conj(s)))>
        let t2 = direct_type2(&coeffs, &points, &grid).unwrap();
        let lhs: Complex64 = t2.iter().zip(&s).map(|(a, b)| a.conj() * b).sum();
        let sc: Vec<Complex64> = s.iter().map(|v| v.conj()).collect();
        let t1 = direct_type1(&points, &sc, &grid).unwrap();
        let rhs: Complex64 = coeffs
            .iter()
            .zip(&t1)
            .map(|(c, t)| c.conj() * t.conj())
            .sum();
        assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1.0));
    }

    #[test]
    fn grid_aligned_points_reduce_to_dft() {
        // x_n chosen so h * x_n = n_idx/(2m+1): type 2 at those points is a
        // plain DFT of the coefficients
        let m = 6usize;
        let n = 2 * m + 1;
        let h = 0.95;
        let grid = FourierGrid::new(h, m, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let coeffs: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let points: Vec<f64> = (0..n).map(|i| i as f64 / (h * n as f64)).collect();
        assert!(points.iter().all(|&x| x < 1.0));
        let out = nufft_type2(&coeffs, &points, &grid, 1e-12).unwrap();
        // reference: out_q = Σ_j c_j e^{2πi j q/n}
        for q in 0..n {
            let mut acc = Complex64::default();
            for (idx, c) in coeffs.iter().enumerate() {
                let j = idx as f64 - m as f64;
                acc += c * Complex64::from_polar(1.0, TWO_PI * j * q as f64 / n as f64);
            }
            assert!((acc - out[q]).norm() <= 1e-11);
        }
    }

    #[test]
    fn linearity() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let grid = FourierGrid::new(0.5, 9, 1).unwrap();
        let (points, s1) = random_instance(&mut rng, 1, 80);
        let (_, s2) = random_instance(&mut rng, 1, 80);
        let a = Complex64::new(1.3, -0.4);
        let b = Complex64::new(-0.2, 2.1);
        let combo: Vec<Complex64> = s1.iter().zip(&s2).map(|(x, y)| a * x + b * y).collect();
        let plan = NufftPlan::for_grid(&grid, 1e-12).unwrap();
        let o1 = plan.type1(&points, &s1, grid.h()).unwrap();
        let o2 = plan.type1(&points, &s2, grid.h()).unwrap();
        let oc = plan.type1(&points, &combo, grid.h()).unwrap();
        let expect: Vec<Complex64> = o1.iter().zip(&o2).map(|(x, y)| a * x + b * y).collect();
        assert!(rel_l2(&oc, &expect) <= 1e-13);
    }

    #[test]
    fn translation_property() {
        // shifting all points by delta multiplies mode j by e^{2πi h j delta}
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let grid = FourierGrid::new(0.45, 6, 1).unwrap();
        let n = 60;
        let points: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 0.5).collect();
        let strengths: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let delta = 0.31;
        let shifted: Vec<f64> = points.iter().map(|&x| x + delta).collect();
        let plan = NufftPlan::for_grid(&grid, 1e-11).unwrap();
        let base = plan.type1(&points, &strengths, grid.h()).unwrap();
        let moved = plan.type1(&shifted, &strengths, grid.h()).unwrap();
        for idx in 0..grid.n_modes() {
            let j = grid.multi_index(idx)[0] as f64;
            let expect = base[idx] * Complex64::from_polar(1.0, TWO_PI * grid.h() * j * delta);
            assert!((moved[idx] - expect).norm() <= 1e-10 * base[idx].norm().max(1.0));
        }
    }

    #[test]
    fn deterministic_across_runs() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let grid = FourierGrid::new(0.52, 10, 2).unwrap();
        let (points, strengths) = random_instance(&mut rng, 2, 500);
        let plan = NufftPlan::for_grid(&grid, 1e-9).unwrap();
        let a = plan.type1(&points, &strengths, grid.h()).unwrap();
        let b = plan.type1(&points, &strengths, grid.h()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_inputs() {
        let grid = FourierGrid::new(0.5, 3, 1).unwrap();
        assert!(nufft_type1(&[], &[], &grid, 1e-9).is_err());
        assert!(nufft_type1(&[0.5], &[Complex64::default()], &grid, 1e-16).is_err());
        assert!(nufft_type1(&[0.5], &[Complex64::default()], &grid, 0.5).is_err());
        assert!(NufftPlan::new(1, &[4], 1e-9).is_err()); // even mode count
        let coeffs = vec![Complex64::default(); 5];
        assert!(nufft_type2(&coeffs, &[0.5], &grid, 1e-9).is_err()); // wrong len
    }
}
