//! Covariance kernel families: squared exponential and Matérn, each with its
//! pointwise form and exact spectral density (Fourier transform).
//!
//! Convention: `khat(xi) = ∫ k(x) e^{-2πi <xi,x>} dx`, so `∫ khat = k(0) = 1`
//! (unit prior variance is baked in; rescale `y` and `sigma` externally for
//! other variances).

use crate::error::{EfgpError, Result};
use crate::special::{bessel_k, gamma};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KernelFamily {
    SquaredExponential,
    Matern,
}

/// A stationary, radially symmetric covariance kernel with `k(0) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    family: KernelFamily,
    lengthscale: f64,
    /// Smoothness; only meaningful for Matérn (1.0 placeholder for SE).
    nu: f64,
}

impl Kernel {
    pub fn squared_exponential(lengthscale: f64) -> Result<Self> {
        if !(lengthscale > 0.0) {
            return Err(EfgpError::Parameter(format!(
                "lengthscale must be positive, got {lengthscale}"
            )));
        }
        Ok(Kernel {
            family: KernelFamily::SquaredExponential,
            lengthscale,
            nu: 1.0,
        })
    }

    pub fn matern(nu: f64, lengthscale: f64) -> Result<Self> {
        if !(lengthscale > 0.0) {
            return Err(EfgpError::Parameter(format!(
                "lengthscale must be positive, got {lengthscale}"
            )));
        }
        if !(nu >= 0.5) {
            return Err(EfgpError::Parameter(format!(
                "Matérn smoothness must satisfy nu >= 1/2, got {nu}"
            )));
        }
        Ok(Kernel {
            family: KernelFamily::Matern,
            lengthscale,
            nu,
        })
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn lengthscale(&self) -> f64 {
        self.lengthscale
    }

    /// Matérn smoothness; `None` for the squared exponential.
    pub fn smoothness(&self) -> Option<f64> {
        match self.family {
            KernelFamily::Matern => Some(self.nu),
            KernelFamily::SquaredExponential => None,
        }
    }

    /// Same kernel with the length scale multiplied by `factor` (used when
    /// data is affinely rescaled into the unit box).
    pub fn with_lengthscale(&self, lengthscale: f64) -> Result<Self> {
        match self.family {
            KernelFamily::SquaredExponential => Kernel::squared_exponential(lengthscale),
            KernelFamily::Matern => Kernel::matern(self.nu, lengthscale),
        }
    }

    /// Pointwise kernel value at distance `r >= 0`.
    pub fn eval(&self, r: f64) -> f64 {
        debug_assert!(r >= 0.0);
        let l = self.lengthscale;
        match self.family {
            KernelFamily::SquaredExponential => (-0.5 * (r / l) * (r / l)).exp(),
            KernelFamily::Matern => {
                let nu = self.nu;
                // removable singularity of z^nu K_nu(z) at z = 0
                if r < 1e-10 * l {
                    return 1.0;
                }
                let z = (2.0 * nu).sqrt() * r / l;
                if nu == 0.5 {
                    (-z).exp()
                } else if nu == 1.5 {
                    (1.0 + z) * (-z).exp()
                } else if nu == 2.5 {
                    (1.0 + z + z * z / 3.0) * (-z).exp()
                } else {
                    let val =
                        (1.0 - nu).exp2() / gamma(nu) * z.powf(nu) * bessel_k(nu, z);
                    // guard roundoff just past the origin
                    val.min(1.0)
                }
            }
        }
    }

    /// Spectral density `khat(xi)` at frequency magnitude `|xi| = xi_norm`,
    /// in dimension `d`. Strictly positive and radially nonincreasing.
    pub fn spectral_density(&self, d: usize, xi_norm: f64) -> f64 {
        debug_assert!((1..=3).contains(&d));
        debug_assert!(xi_norm >= 0.0);
        let l = self.lengthscale;
        match self.family {
            KernelFamily::SquaredExponential => {
                let base = ((2.0 * std::f64::consts::PI).sqrt() * l).powi(d as i32);
                let arg = std::f64::consts::PI * l * xi_norm;
                base * (-2.0 * arg * arg).exp()
            }
            KernelFamily::Matern => {
                let nu = self.nu;
                let df = d as f64;
                let chat = (2.0f64).powi(d as i32)
                    * std::f64::consts::PI.powf(df / 2.0)
                    * (2.0 * nu).powf(nu)
                    * gamma(nu + df / 2.0)
                    / gamma(nu);
                let arg = 2.0 * std::f64::consts::PI * l * xi_norm;
                chat * l.powi(d as i32) * (2.0 * nu + arg * arg).powf(-(nu + df / 2.0))
            }
        }
    }

    /// The tolerance rescale factor applied to Matérn grid selection when the
    /// kernel is to be approximated in a relative L2 sense:
    /// `(nu / pi l^2)^{d/4} sqrt(Γ(d/2 + 2nu) / 2Γ(d + 2nu))`.
    pub fn matern_tolerance_rescale(&self, d: usize) -> Result<f64> {
        match self.family {
            KernelFamily::Matern => {
                let df = d as f64;
                let nu = self.nu;
                let l = self.lengthscale;
                Ok((nu / (std::f64::consts::PI * l * l)).powf(df / 4.0)
                    * (gamma(df / 2.0 + 2.0 * nu) / (2.0 * gamma(df + 2.0 * nu))).sqrt())
            }
            KernelFamily::SquaredExponential => Err(EfgpError::Parameter(
                "tolerance rescale is defined for the Matérn family only".into(),
            )),
        }
    }

    /// Parse a kernel spec string: `se:l=0.1` or `matern:nu=1.5,l=0.1`.
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = |s: &str| EfgpError::Parameter(format!("bad kernel spec '{s}'"));
        let (name, rest) = spec.split_once(':').ok_or_else(|| bad(spec))?;
        let mut l = None;
        let mut nu = None;
        for part in rest.split(',') {
            let (key, val) = part.split_once('=').ok_or_else(|| bad(spec))?;
            let val: f64 = val.trim().parse().map_err(|_| bad(spec))?;
            match key.trim() {
                "l" => l = Some(val),
                "nu" => nu = Some(val),
                _ => return Err(bad(spec)),
            }
        }
        let l = l.ok_or_else(|| bad(spec))?;
        match name.trim() {
            "se" => Kernel::squared_exponential(l),
            "matern" => Kernel::matern(nu.ok_or_else(|| bad(spec))?, l),
            _ => Err(bad(spec)),
        }
    }

    /// Inverse of [`Kernel::parse`].
    pub fn spec_string(&self) -> String {
        match self.family {
            KernelFamily::SquaredExponential => format!("se:l={}", self.lengthscale),
            KernelFamily::Matern => format!("matern:nu={},l={}", self.nu, self.lengthscale),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_value_is_one() {
        let se = Kernel::squared_exponential(0.1).unwrap();
        assert_eq!(se.eval(0.0), 1.0);
        for &nu in &[0.5, 1.5, 2.5, 0.8, 3.3] {
            let k = Kernel::matern(nu, 0.2).unwrap();
            assert_eq!(k.eval(0.0), 1.0);
            // just below the underflow cutoff
            assert_eq!(k.eval(1e-12 * 0.2), 1.0);
        }
    }

    #[test]
    fn se_pointwise_values() {
        let se = Kernel::squared_exponential(0.1).unwrap();
        assert!((se.eval(0.1) - (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn matern_half_equals_exponential() {
        let k = Kernel::matern(0.5, 0.2).unwrap();
        let mut r = 0.0;
        while r <= 3.0 {
            let expected = (-r / 0.2f64).exp();
            assert!(
                (k.eval(r) - expected).abs() <= 1e-12,
                "r={r}: {} vs {expected}",
                k.eval(r)
            );
            r += 0.01;
        }
        assert!((k.eval(0.2) - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn matern_generic_path_matches_closed_forms() {
        for &nu in &[1.5, 2.5] {
            let closed = Kernel::matern(nu, 0.13).unwrap();
            let generic = Kernel::matern(nu + 1e-12, 0.13).unwrap();
            for &r in &[0.01, 0.05, 0.2, 0.7, 1.9] {
                let a = closed.eval(r);
                let b = generic.eval(r);
                assert!((a - b).abs() / a <= 1e-8, "nu={nu} r={r}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn spectral_density_reference_values() {
        let se = Kernel::squared_exponential(0.1).unwrap();
        assert!((se.spectral_density(1, 0.0) - 0.250_662_827_463_1).abs() < 1e-13);
        assert!((se.spectral_density(2, 3.0) - 0.010_632_691_589_399_2).abs() < 1e-15);

        let lor = Kernel::matern(0.5, 1.0).unwrap();
        assert!((lor.spectral_density(1, 0.0) - 2.0).abs() < 1e-14);

        // frozen values from a high-order numerical radial Fourier transform
        // (Hankel quadrature) of the kernel itself
        let m32 = Kernel::matern(1.5, 0.1).unwrap();
        let cases = [
            (0.0, 0.062_831_853_071_795_872),
            (0.37, 0.060_088_876_831_461_539),
            (2.9, 0.009_753_649_189_039_924_9),
            (11.0, 5.333_213_075_117_927_2e-5),
        ];
        for (xi, expected) in cases {
            let got = m32.spectral_density(2, xi);
            assert!(
                (got - expected).abs() / expected <= 1e-8,
                "xi={xi}: {got} vs {expected}"
            );
        }
        let m52 = Kernel::matern(2.5, 0.1).unwrap();
        let got = m52.spectral_density(3, 1.7);
        let expected = 0.007_903_497_592_703_042_9;
        assert!((got - expected).abs() / expected <= 1e-8);
    }

    /// Trapezoid quadrature of khat over a large box reproduces k(0) = 1.
    #[test]
    fn spectral_density_normalization() {
        let kernels = [
            Kernel::squared_exponential(0.1).unwrap(),
            Kernel::matern(0.5, 0.1).unwrap(),
            Kernel::matern(1.5, 0.1).unwrap(),
            Kernel::matern(2.5, 0.15).unwrap(),
        ];
        for k in kernels {
            // d = 1; the nu = 1/2 tail decays like |xi|^-2, so the box must
            // be very wide before the remainder drops below 1e-6
            let (half, n) = match (k.family(), k.smoothness()) {
                (KernelFamily::SquaredExponential, _) => (40.0, 20_000usize),
                (KernelFamily::Matern, Some(nu)) if nu < 1.0 => (2.2e6, 22_000_000usize),
                (KernelFamily::Matern, _) => (60_000.0, 4_000_000usize),
            };
            let dx = 2.0 * half / n as f64;
            let mut total = 0.0;
            for i in 0..=n {
                let xi: f64 = -half + i as f64 * dx;
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                total += w * k.spectral_density(1, xi.abs());
            }
            total *= dx;
            let tol = match k.family() {
                KernelFamily::SquaredExponential => 1e-9,
                KernelFamily::Matern => 1e-6,
            };
            assert!(
                (total - 1.0).abs() <= tol,
                "{} d=1 integral {total}",
                k.spec_string()
            );
        }
        // d = 2, radial quadrature: ∫ khat = 2π ∫_0^∞ khat(r) r dr
        for (k, rmax, n) in [
            (Kernel::squared_exponential(0.1).unwrap(), 40.0, 400_000usize),
            (Kernel::matern(1.5, 0.1).unwrap(), 80_000.0, 16_000_000usize),
        ] {
            let dr = rmax / n as f64;
            let mut total = 0.0;
            for i in 0..=n {
                let r = i as f64 * dr;
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                total += w * k.spectral_density(2, r) * r;
            }
            total *= 2.0 * std::f64::consts::PI * dr;
            assert!(
                (total - 1.0).abs() <= 1e-6,
                "{} d=2 integral {total}",
                k.spec_string()
            );
        }
    }

    #[test]
    fn spectral_density_nonincreasing() {
        let kernels = [
            Kernel::squared_exponential(0.07).unwrap(),
            Kernel::matern(0.5, 0.1).unwrap(),
            Kernel::matern(2.2, 0.3).unwrap(),
        ];
        for k in kernels {
            for d in 1..=3 {
                let mut prev = k.spectral_density(d, 0.0);
                for i in 1..400 {
                    let xi = i as f64 * 0.05;
                    let cur = k.spectral_density(d, xi);
                    assert!(cur > 0.0 && cur <= prev * (1.0 + 1e-12));
                    prev = cur;
                }
            }
        }
    }

    #[test]
    fn parse_round_trip() {
        for spec in ["se:l=0.1", "matern:nu=1.5,l=0.1", "matern:nu=0.5,l=0.02"] {
            let k = Kernel::parse(spec).unwrap();
            assert_eq!(Kernel::parse(&k.spec_string()).unwrap(), k);
        }
        assert!(Kernel::parse("se:l=-1").is_err());
        assert!(Kernel::parse("matern:l=0.1").is_err());
        assert!(Kernel::parse("matern:nu=0.2,l=0.1").is_err());
        assert!(Kernel::parse("rq:l=0.1").is_err());
    }

    #[test]
    fn l2_rescale_reference() {
        let k = Kernel::matern(0.5, 0.1).unwrap();
        assert!((k.matern_tolerance_rescale(1).unwrap() - 1.329_573_974_236_247_1).abs() < 1e-12);
        assert!((k.matern_tolerance_rescale(2).unwrap() - 1.994_711_402_007_163_2).abs() < 1e-12);
        let k32 = Kernel::matern(1.5, 0.1).unwrap();
        assert!((k32.matern_tolerance_rescale(2).unwrap() - 2.443_012_559_514_599_4).abs() < 1e-12);
    }
}
