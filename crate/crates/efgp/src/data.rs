//! Training data container.

use crate::error::{EfgpError, Result};

/// `N` points in `[0,1]^d` (row-major, `d` coordinates per point) with one
/// observation per point.
#[derive(Debug, Clone)]
pub struct Dataset {
    d: usize,
    points: Vec<f64>,
    y: Vec<f64>,
}

impl Dataset {
    /// Validates dimensions, finiteness, and the unit-box domain.
    /// Callers with data outside `[0,1]^d` rescale first (see
    /// [`crate::model::BoxMap`]).
    pub fn new(d: usize, points: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(EfgpError::Parameter(format!("dimension must be 1..=3, got {d}")));
        }
        if y.is_empty() {
            return Err(EfgpError::InvalidInput("empty dataset".into()));
        }
        if points.len() != y.len() * d {
            return Err(EfgpError::Shape(format!(
                "points length {} != N*d = {}*{}",
                points.len(),
                y.len(),
                d
            )));
        }
        for (i, &v) in points.iter().enumerate() {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(EfgpError::InvalidInput(format!(
                    "point coordinate {} of observation {} is {v}, outside [0,1]",
                    i % d,
                    i / d
                )));
            }
        }
        if let Some(n) = y.iter().position(|v| !v.is_finite()) {
            return Err(EfgpError::InvalidInput(format!(
                "observation {n} is not finite"
            )));
        }
        Ok(Dataset { d, points, y })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn point(&self, n: usize) -> &[f64] {
        &self.points[n * self.d..(n + 1) * self.d]
    }
}
