//! Discretizations of space: a periodic Cartesian box or the radial half-line in three dimensions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode")]
pub enum GridSpec {
    /// `N^d` points `x_i = −L + i·2L/N` on the torus `[−L, L)^d`.
    #[serde(rename = "cartesian-periodic")]
    Cartesian {
        d: usize,
        #[serde(rename = "L")]
        l: f64,
        #[serde(rename = "N")]
        n: usize,
    },
    /// Spherically symmetric fields in `ℝ³`, sampled at `r_j = (j + ½)·R_max/N`.
    #[serde(rename = "radial3d")]
    Radial {
        #[serde(rename = "Rmax")]
        r_max: f64,
        #[serde(rename = "Nr")]
        n: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub radius: f64,
    pub center: Vec<f64>,
}

impl Ball {
    pub fn new(radius: f64, center: Vec<f64>) -> Self {
        Self { radius, center }
    }

    pub fn centered(radius: f64, d: usize) -> Self {
        Self { radius, center: vec![0.0; d] }
    }

    pub fn unit(d: usize) -> Self {
        Self::centered(1.0, d)
    }
}

impl GridSpec {
    pub fn cartesian(d: usize, l: f64, n: usize) -> Result<Self> {
        let g = GridSpec::Cartesian { d, l, n };
        g.validate()?;
        Ok(g)
    }

    pub fn radial(r_max: f64, n: usize) -> Result<Self> {
        let g = GridSpec::Radial { r_max, n };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let (n, l) = match *self {
            GridSpec::Cartesian { d, l, n } => {
                if !(2..=3).contains(&d) {
                    return Err(Error::Config(format!("cartesian grids need d in {{2, 3}}, got {d}")));
                }
                (n, l)
            }
            GridSpec::Radial { r_max, n } => (n, r_max),
        };
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::Config(format!("N must be a power of two >= 16, got {n}")));
        }
        if !(l > 1.0) || !l.is_finite() {
            return Err(Error::Config(format!("extent must exceed 1, got {l}")));
        }
        Ok(())
    }

    pub fn is_radial(&self) -> bool {
        matches!(self, GridSpec::Radial { .. })
    }

    /// Spatial dimension of the underlying space.
    pub fn dim(&self) -> usize {
        match *self {
            GridSpec::Cartesian { d, .. } => d,
            GridSpec::Radial { .. } => 3,
        }
    }

    /// Scaling dimension `(d − 1)/2`.
    pub fn scaling_dim(&self) -> f64 {
        (self.dim() as f64 - 1.0) / 2.0
    }

    pub fn n(&self) -> usize {
        match *self {
            GridSpec::Cartesian { n, .. } | GridSpec::Radial { n, .. } => n,
        }
    }

    /// Box half-length or radial truncation.
    pub fn extent(&self) -> f64 {
        match *self {
            GridSpec::Cartesian { l, .. } => l,
            GridSpec::Radial { r_max, .. } => r_max,
        }
    }

    pub fn spacing(&self) -> f64 {
        match *self {
            GridSpec::Cartesian { l, n, .. } => 2.0 * l / n as f64,
            GridSpec::Radial { r_max, n } => r_max / n as f64,
        }
    }

    pub fn len(&self) -> usize {
        match *self {
            GridSpec::Cartesian { d, n, .. } => n.pow(d as u32),
            GridSpec::Radial { n, .. } => n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinates of point `i` (row-major, last axis fastest); radial grids return `[r]`.
    pub fn point(&self, i: usize) -> Vec<f64> {
        match *self {
            GridSpec::Cartesian { d, l, n } => {
                let h = 2.0 * l / n as f64;
                let mut x = vec![0.0; d];
                let mut rem = i;
                for a in (0..d).rev() {
                    x[a] = -l + h * (rem % n) as f64;
                    rem /= n;
                }
                x
            }
            GridSpec::Radial { .. } => vec![self.radius(i)],
        }
    }

    pub fn radius(&self, i: usize) -> f64 {
        match *self {
            GridSpec::Cartesian { .. } => self.point(i).iter().map(|x| x * x).sum::<f64>().sqrt(),
            GridSpec::Radial { r_max, n } => (i as f64 + 0.5) * r_max / n as f64,
        }
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.radius(i)).collect()
    }

    /// Distances of all points to `center`.
    pub fn distances(&self, center: &[f64]) -> Vec<f64> {
        match self {
            GridSpec::Radial { .. } => self.radii(),
            GridSpec::Cartesian { .. } => (0..self.len())
                .map(|i| {
                    self.point(i)
                        .iter()
                        .zip(center)
                        .map(|(x, c)| (x - c) * (x - c))
                        .sum::<f64>()
                        .sqrt()
                })
                .collect(),
        }
    }

    /// Quadrature weights for `∫ F dx`: `h^d` on the box, `4πr²h` on the half-line.
    pub fn weights(&self) -> Vec<f64> {
        match *self {
            GridSpec::Cartesian { d, .. } => vec![self.spacing().powi(d as i32); self.len()],
            GridSpec::Radial { .. } => {
                let h = self.spacing();
                self.radii()
                    .iter()
                    .map(|r| 4.0 * std::f64::consts::PI * r * r * h)
                    .collect()
            }
        }
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights().iter().zip(values).map(|(w, v)| w * v).sum()
    }

    pub fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            GridSpec::Cartesian { .. } => self.spacing().powi(self.dim() as i32) * dot(a, b),
            GridSpec::Radial { .. } => {
                let h = self.spacing();
                let c = 4.0 * std::f64::consts::PI * h;
                (0..a.len())
                    .map(|i| {
                        let r = self.radius(i);
                        c * r * r * a[i] * b[i]
                    })
                    .sum()
            }
        }
    }

    /// Rejects balls that do not fit strictly inside the grid.
    pub fn check_ball(&self, ball: &Ball) -> Result<()> {
        let bad = || Error::BallOutsideGrid { radius: ball.radius, center: ball.center.clone() };
        if !(ball.radius > 0.0) || ball.center.len() != self.dim() {
            return Err(bad());
        }
        match *self {
            GridSpec::Cartesian { l, .. } => {
                if ball.center.iter().any(|c| c.abs() + ball.radius >= l) {
                    return Err(bad());
                }
            }
            GridSpec::Radial { r_max, .. } => {
                if ball.center.iter().any(|c| *c != 0.0) {
                    return Err(Error::UnsupportedMode("radial grids only support balls centred at the origin".into()));
                }
                if ball.radius > r_max {
                    return Err(bad());
                }
            }
        }
        Ok(())
    }

    /// Largest distance from `center` at which `f` exceeds `tol · max|f|`.
    pub fn support_radius(&self, f: &[f64], center: &[f64], tol: f64) -> f64 {
        let peak = f.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        if peak == 0.0 {
            return 0.0;
        }
        self.distances(center)
            .iter()
            .zip(f)
            .filter(|(_, v)| v.abs() > tol * peak)
            .fold(0.0f64, |a, (r, _)| a.max(*r))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
