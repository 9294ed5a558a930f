//! Integrals restricted to a ball and the Green convolution of ball-cut data.
//!
//! Radial grids use composite Gauss–Legendre rules on `[0, R]` with fields evaluated
//! from their sine series, so the ball edge is resolved exactly. Cartesian grids use
//! cell weights equal to the covered volume fraction of each cell.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Ball, GridSpec};
use crate::quadrature::{gauss_legendre, Composite};
use crate::spectral::{cartesian_multiplier, fftn, gradient, radial_series, wave_index, SineSeries};

const ORDER: usize = 8;
const SUPERSAMPLE: usize = 8;

#[derive(Debug, Clone)]
pub struct BallQuadrature {
    pub grid: GridSpec,
    pub ball: Ball,
    kind: Kind,
}

#[derive(Debug, Clone)]
enum Kind {
    Radial { rule: Composite },
    Cartesian { weights: Vec<f64>, dist: Vec<f64> },
}

/// `sinh(m r)/m`, continuous at `m = 0`.
pub fn sinhc(m: f64, r: f64) -> f64 {
    let x = m * r;
    if x.abs() < 1e-4 {
        r * (1.0 + x * x / 6.0 + x.powi(4) / 120.0)
    } else {
        x.sinh() / m
    }
}

impl BallQuadrature {
    pub fn new(grid: &GridSpec, ball: &Ball) -> Result<Self> {
        grid.check_ball(ball)?;
        let kind = match *grid {
            GridSpec::Radial { .. } => {
                let panels = (ball.radius / (4.0 * grid.spacing())).ceil().max(1.0) as usize;
                Kind::Radial { rule: Composite::new(0.0, ball.radius, panels, ORDER) }
            }
            GridSpec::Cartesian { d, .. } => {
                let h = grid.spacing();
                let dist = grid.distances(&ball.center);
                let cell = h.powi(d as i32);
                let half_diag = 0.5 * h * (d as f64).sqrt();
                let weights = (0..grid.len())
                    .map(|i| {
                        if dist[i] <= ball.radius - half_diag {
                            cell
                        } else if dist[i] >= ball.radius + half_diag {
                            0.0
                        } else {
                            cell * cell_fraction(&grid.point(i), h, ball)
                        }
                    })
                    .collect();
                Kind::Cartesian { weights, dist }
            }
        };
        Ok(Self { grid: grid.clone(), ball: ball.clone(), kind })
    }

    pub fn len(&self) -> usize {
        match &self.kind {
            Kind::Radial { rule } => rule.nodes.len(),
            Kind::Cartesian { weights, .. } => weights.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Distance of each node to the ball centre.
    pub fn dist(&self) -> Vec<f64> {
        match &self.kind {
            Kind::Radial { rule } => rule.nodes.clone(),
            Kind::Cartesian { dist, .. } => dist.clone(),
        }
    }

    pub fn values(&self, f: &[f64]) -> Vec<f64> {
        match &self.kind {
            Kind::Radial { rule } => {
                let s = radial_series(&self.grid, f);
                rule.nodes.iter().map(|&r| s.eval_field(r).0).collect()
            }
            Kind::Cartesian { .. } => f.to_vec(),
        }
    }

    /// Values and gradient components at the nodes.
    pub fn values_grad(&self, f: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        match &self.kind {
            Kind::Radial { rule } => {
                let s = radial_series(&self.grid, f);
                let (v, dv): (Vec<f64>, Vec<f64>) = rule.nodes.iter().map(|&r| s.eval_field(r)).unzip();
                (v, vec![dv])
            }
            Kind::Cartesian { .. } => (f.to_vec(), gradient(&self.grid, f)),
        }
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        match &self.kind {
            Kind::Radial { rule } => rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .zip(values)
                .map(|((r, w), v)| 4.0 * std::f64::consts::PI * r * r * w * v)
                .sum(),
            Kind::Cartesian { weights, .. } => weights.iter().zip(values).map(|(w, v)| w * v).sum(),
        }
    }

    /// `∬_{B×B} G_m(x − y) f₁(x) f₂(y) dx dy`.
    pub fn yukawa(&self, f1: &[f64], f2: &[f64], m: f64) -> Result<f64> {
        match &self.kind {
            Kind::Radial { rule } => {
                let s1 = radial_series(&self.grid, f1);
                let s2 = radial_series(&self.grid, f2);
                let c1 = cumulative(rule, &s1, |r| sinhc(m, r), &rule.nodes);
                let c2 = cumulative(rule, &s2, |r| sinhc(m, r), &rule.nodes);
                let mut acc = 0.0;
                for (k, (&r, &w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
                    let e = (-m * r).exp();
                    acc += w * e * (s1.eval(r).0 * c2[k] + s2.eval(r).0 * c1[k]);
                }
                Ok(4.0 * std::f64::consts::PI * acc)
            }
            Kind::Cartesian { weights, .. } => {
                let h = self.grid.spacing();
                let cell = h.powi(self.grid.dim() as i32);
                let rho: Vec<f64> = f2.iter().zip(weights).map(|(v, w)| v * w / cell).collect();
                let conv = padded_green(&self.grid, &rho, m)?;
                Ok(weights.iter().zip(f1).zip(&conv).map(|((w, a), c)| w * a * c).sum())
            }
        }
    }

    /// `G_m ∗ (χ_B f)` sampled on the grid.
    pub fn green_convolution(&self, f: &[f64], m: f64) -> Result<Vec<f64>> {
        match &self.kind {
            Kind::Radial { rule } => {
                let s = radial_series(&self.grid, f);
                let big_r = self.ball.radius;
                let radii = self.grid.radii();
                let targets: Vec<f64> = radii.iter().map(|r| r.min(big_r)).collect();
                let inner = cumulative(rule, &s, |r| sinhc(m, r), &targets);
                let outer_w = |r: f64| (-m * r).exp();
                let upto = cumulative(rule, &s, outer_w, &targets);
                let total = cumulative(rule, &s, outer_w, &[big_r])[0];
                Ok(radii
                    .iter()
                    .enumerate()
                    .map(|(j, &r)| {
                        let tail = if r < big_r { total - upto[j] } else { 0.0 };
                        ((-m * r).exp() * inner[j] + sinhc(m, r) * tail) / r
                    })
                    .collect())
            }
            Kind::Cartesian { weights, .. } => {
                let cell = self.grid.spacing().powi(self.grid.dim() as i32);
                let rho: Vec<f64> = f.iter().zip(weights).map(|(v, w)| v * w / cell).collect();
                padded_green(&self.grid, &rho, m)
            }
        }
    }

    /// Indicator weights on the grid (volume fraction for Cartesian cells, sharp for radial).
    pub fn indicator(&self) -> Vec<f64> {
        match &self.kind {
            Kind::Radial { .. } => self
                .grid
                .radii()
                .iter()
                .map(|&r| if r < self.ball.radius { 1.0 } else { 0.0 })
                .collect(),
            Kind::Cartesian { weights, .. } => {
                let cell = self.grid.spacing().powi(self.grid.dim() as i32);
                weights.iter().map(|w| w / cell).collect()
            }
        }
    }
}

fn cell_fraction(x: &[f64], h: f64, ball: &Ball) -> f64 {
    let d = x.len();
    let total = SUPERSAMPLE.pow(d as u32);
    let mut inside = 0usize;
    for idx in 0..total {
        let mut rem = idx;
        let mut r2 = 0.0;
        for a in 0..d {
            let s = rem % SUPERSAMPLE;
            rem /= SUPERSAMPLE;
            let y = x[a] + h * ((s as f64 + 0.5) / SUPERSAMPLE as f64 - 0.5) - ball.center[a];
            r2 += y * y;
        }
        if r2 < ball.radius * ball.radius {
            inside += 1;
        }
    }
    inside as f64 / total as f64
}

/// `∫₀^t w(r) u(r) dr` for each target `t ≤ R`, with `u` given by its sine series.
fn cumulative(rule: &Composite, s: &SineSeries, w: impl Fn(f64) -> f64, targets: &[f64]) -> Vec<f64> {
    let order = rule.order;
    let panels = rule.breaks.len() - 1;
    let mut cum = vec![0.0; panels + 1];
    for p in 0..panels {
        let mut acc = 0.0;
        for k in p * order..(p + 1) * order {
            let r = rule.nodes[k];
            acc += rule.weights[k] * w(r) * s.eval(r).0;
        }
        cum[p + 1] = cum[p] + acc;
    }
    let (gx, gw) = gauss_legendre(order);
    let width = rule.breaks[1] - rule.breaks[0];
    targets
        .iter()
        .map(|&t| {
            let p = ((t / width).floor() as usize).min(panels);
            let a = rule.breaks[p.min(panels)];
            if p == panels || t <= a {
                return cum[p];
            }
            let (mid, half) = (0.5 * (a + t), 0.5 * (t - a));
            let part: f64 = gx
                .iter()
                .zip(&gw)
                .map(|(x, wt)| {
                    let r = mid + half * x;
                    half * wt * w(r) * s.eval(r).0
                })
                .sum();
            cum[p] + part
        })
        .collect()
}

/// `G_m ∗ ρ` on a Cartesian grid via a zero-padded box of twice the size.
fn padded_green(grid: &GridSpec, rho: &[f64], m: f64) -> Result<Vec<f64>> {
    let (d, l, n) = match *grid {
        GridSpec::Cartesian { d, l, n } => (d, l, n),
        GridSpec::Radial { .. } => unreachable!(),
    };
    if !(m > 0.0) {
        return Err(Error::DomainError("Cartesian Green convolution needs m > 0".into()));
    }
    let big = 2 * n;
    let off = n / 2;
    let mut z = vec![Complex64::new(0.0, 0.0); big.pow(d as u32)];
    let idx_big = |idx: &[usize]| idx.iter().fold(0usize, |acc, &k| acc * big + k + off);
    let mut idx = vec![0usize; d];
    for (i, v) in rho.iter().enumerate() {
        let mut rem = i;
        for a in (0..d).rev() {
            idx[a] = rem % n;
            rem /= n;
        }
        z[idx_big(&idx)] = Complex64::new(*v, 0.0);
    }
    fftn(&mut z, big, d, false);
    let dp = std::f64::consts::PI / (2.0 * l);
    for (i, v) in z.iter_mut().enumerate() {
        let mut rem = i;
        let mut p2 = 0.0;
        for _ in 0..d {
            let k = wave_index(rem % big, big) as f64 * dp;
            rem /= big;
            p2 += k * k;
        }
        *v /= p2 + m * m;
    }
    fftn(&mut z, big, d, true);
    let scale = 1.0 / z.len() as f64;
    Ok((0..rho.len())
        .map(|i| {
            let mut rem = i;
            for a in (0..d).rev() {
                idx[a] = rem % n;
                rem /= n;
            }
            z[idx_big(&idx)].re * scale
        })
        .collect())
}

/// `(−∇² + m²)^{-1} f` on the periodic grid without padding.
pub fn periodic_green(grid: &GridSpec, f: &[f64], m: f64) -> Vec<f64> {
    cartesian_multiplier(grid, f, false, |p| {
        Complex64::new(1.0 / (p.iter().map(|x| x * x).sum::<f64>() + m * m), 0.0)
    })
}
