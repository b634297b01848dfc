//! The weight-space Gram operator `F*F` applied as a d-dimensional Toeplitz
//! convolution via padded FFTs.
//!
//! With `F_{nj} = e^{2πi h <j, x_n>}` over the mode set `J_m`, the Gram
//! matrix has entries `(F*F)_{p,l} = conj(v_{j_p - j_l})` where
//! `v_j = Σ_n e^{2πi h <j, x_n>}` on the doubled lattice `J_{2m}`. Applying
//! it to a vector is a non-periodic convolution, realized as a periodic
//! convolution of period exactly `4m+1` per dimension with the output read
//! from the top corner sub-cube.

use crate::error::{EfgpError, Result};
use crate::fft::FftNd;
use crate::grid::FourierGrid;
use crate::nufft::NufftPlan;
use num_complex::Complex64;

pub struct ToeplitzOperator {
    grid: FourierGrid,
    n_points: usize,
    /// Forward FFT of the circulant kernel `conj(v)` on the `(4m+1)^d` box.
    vhat: Vec<Complex64>,
    fft: FftNd,
    /// The lattice vector itself, retained only when requested at build.
    v: Option<Vec<Complex64>>,
}

/// Elements of the padded box per dimension, `4m+1`.
fn padded_per_dim(grid: &FourierGrid) -> usize {
    4 * grid.m() + 1
}

fn padded_total(grid: &FourierGrid) -> Result<usize> {
    let p = padded_per_dim(grid) as u128;
    let total = p.pow(grid.dim() as u32);
    // 2^27 complex doubles is 2 GiB
    if total > (1u128 << 27) {
        return Err(EfgpError::SizeGuard(format!(
            "padded Toeplitz box of {total} elements exceeds the memory guard"
        )));
    }
    Ok(total as usize)
}

/// Builds the operator from data points: fills `v` over `J_{2m}` with a
/// unit-strength type-1 NUFFT at relative tolerance `tol`, then stores its
/// padded-box FFT. `retain_v` keeps the lattice vector for inspection.
pub fn build_toeplitz(
    points: &[f64],
    grid: &FourierGrid,
    tol: f64,
    retain_v: bool,
) -> Result<ToeplitzOperator> {
    let d = grid.dim();
    if points.is_empty() || points.len() % d != 0 {
        return Err(EfgpError::InvalidInput("bad point array".into()));
    }
    padded_total(grid)?;
    let n_points = points.len() / d;
    let widened = grid.widened();
    let plan = NufftPlan::for_grid(&widened, tol)?;
    let ones = vec![Complex64::new(1.0, 0.0); n_points];
    let v = plan.type1(points, &ones, grid.h())?;

    let center = widened.flat_index(&vec![0i64; d]);
    let v0 = v[center];
    if (v0.re - n_points as f64).abs() > tol * n_points as f64 || v0.im.abs() > tol * n_points as f64
    {
        return Err(EfgpError::Precondition(format!(
            "lattice sum at j=0 is {v0}, expected N = {n_points} within {tol:e} relative"
        )));
    }
    ToeplitzOperator::from_lattice_vector(v, grid, n_points, retain_v)
}

impl ToeplitzOperator {
    /// Builds from an already-computed lattice vector `v` over `J_{2m}`
    /// (flat row-major order, length `(4m+1)^d`).
    pub fn from_lattice_vector(
        v: Vec<Complex64>,
        grid: &FourierGrid,
        n_points: usize,
        retain_v: bool,
    ) -> Result<Self> {
        let total = padded_total(grid)?;
        if v.len() != total {
            return Err(EfgpError::Shape(format!(
                "lattice vector length {} != (4m+1)^d = {total}",
                v.len()
            )));
        }
        let shape = vec![padded_per_dim(grid); grid.dim()];
        let fft = FftNd::new(&shape);
        let mut vhat: Vec<Complex64> = v.iter().map(|z| z.conj()).collect();
        fft.forward(&mut vhat);
        Ok(ToeplitzOperator {
            grid: *grid,
            n_points,
            vhat,
            fft,
            v: if retain_v { Some(v) } else { None },
        })
    }

    pub fn grid(&self) -> &FourierGrid {
        &self.grid
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// The lattice vector over `J_{2m}`, if retained at build time.
    pub fn lattice_vector(&self) -> Option<&[Complex64]> {
        self.v.as_deref()
    }

    /// Dense product `(F*F) beta` in `O(M log M)`: zero-pad into the
    /// `(4m+1)^d` box, multiply in Fourier space by the circulant kernel,
    /// transform back, and extract the sub-cube with per-dimension offsets
    /// `2m..=4m`.
    pub fn apply(&self, beta: &[Complex64]) -> Result<Vec<Complex64>> {
        let m_total = self.grid.n_modes();
        if beta.len() != m_total {
            return Err(EfgpError::Shape(format!(
                "vector length {} != M = {m_total}",
                beta.len()
            )));
        }
        let d = self.grid.dim();
        let n_small = self.grid.modes_per_dim();
        let n_pad = padded_per_dim(&self.grid);
        let mut buf = vec![Complex64::default(); self.vhat.len()];
        // embed beta at the low corner of each dimension: decode the flat
        // index (last coordinate fastest), re-encode in the padded box
        for (idx, &b) in beta.iter().enumerate() {
            let mut rest = idx;
            let mut pad_idx = 0usize;
            let mut coords = [0usize; 3];
            for l in (0..d).rev() {
                coords[l] = rest % n_small;
                rest /= n_small;
            }
            for &c in coords[..d].iter() {
                pad_idx = pad_idx * n_pad + c;
            }
            buf[pad_idx] = b;
        }
        self.fft.forward(&mut buf);
        for (b, &vh) in buf.iter_mut().zip(&self.vhat) {
            *b *= vh;
        }
        self.fft.inverse(&mut buf);
        // extract offsets 2m..=4m per dimension
        let mut out = vec![Complex64::default(); m_total];
        let offset = 2 * self.grid.m();
        for (idx, slot) in out.iter_mut().enumerate() {
            let mut rest = idx;
            let mut coords = [0usize; 3];
            for l in (0..d).rev() {
                coords[l] = rest % n_small;
                rest /= n_small;
            }
            let mut pad_idx = 0usize;
            for &c in coords[..d].iter() {
                pad_idx = pad_idx * n_pad + (c + offset);
            }
            *slot = buf[pad_idx];
        }
        Ok(out)
    }
}
