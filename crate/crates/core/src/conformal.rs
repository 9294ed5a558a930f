//! The massless ball flow, its cocycle, the generator `K₀` and its quadratic form.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::CauchyData;
use crate::grid::{Ball, GridSpec};
use crate::spectral::{grad_dot, gradient, laplacian, radial_series, x_dot_grad};
use crate::tolerances::Tolerances;

const POLE: f64 = 1e-14;

/// Scaling dimension `(d − 1)/2`.
pub fn scaling_dimension(d: usize) -> f64 {
    (d as f64 - 1.0) / 2.0
}

fn f_fn(z: f64, s: f64) -> f64 {
    0.5 * ((1.0 + z) + (-s).exp() * (1.0 - z))
}

fn g_fn(z: f64, s: f64) -> f64 {
    0.5 * ((1.0 + z) - (-s).exp() * (1.0 - z))
}

/// `Z(z, s) = g(z, s)/f(z, s)`.
pub fn flow_map_z(z: f64, s: f64) -> Result<f64> {
    let f = f_fn(z, s);
    if f.abs() < POLE {
        return Err(Error::PoleHit { value: f });
    }
    Ok(g_fn(z, s) / f)
}

/// `γ(u, v; s) = F(u, s) F(−v, −s)` with `F = f^{−D}`.
pub fn flow_cocycle(u: f64, v: f64, s: f64, d_scaling: f64) -> Result<f64> {
    let a = f_fn(u, s);
    let b = f_fn(-v, -s);
    for x in [a, b] {
        if x.abs() < POLE {
            return Err(Error::PoleHit { value: x });
        }
        if x < 0.0 {
            return Err(Error::DomainError(format!("cocycle base {x} is negative")));
        }
    }
    Ok(a.powf(-d_scaling) * b.powf(-d_scaling))
}

/// `M_B = (R² − |x − x̄|²)/(2R)` on the grid.
pub fn ball_weight(grid: &GridSpec, ball: &Ball) -> Vec<f64> {
    let r = ball.radius;
    grid.distances(&ball.center)
        .iter()
        .map(|&d| (r * r - d * d) / (2.0 * r))
        .collect()
}

/// Legendre operator `M_B ∇² f − ((x − x̄)·∇f + D f)/R`.
pub fn legendre(grid: &GridSpec, f: &[f64], ball: &Ball) -> Vec<f64> {
    let w = ball_weight(grid, ball);
    let lap = laplacian(grid, f);
    let xd = x_dot_grad(grid, f, &ball.center);
    let dd = grid.scaling_dim();
    (0..f.len())
        .map(|i| w[i] * lap[i] - (xd[i] + dd * f[i]) / ball.radius)
        .collect()
}

/// `K₀⟨f, g⟩ = ⟨½(1 − r²) g, ½(1 − r²)∇²f − r∂_r f − D f⟩` for the unit ball.
pub fn apply_k0(phi: &CauchyData) -> Result<CauchyData> {
    if phi.m != 0.0 {
        return Err(Error::Config(format!("K0 needs m = 0, got {}", phi.m)));
    }
    let ball = Ball::unit(phi.grid.dim());
    let w = ball_weight(&phi.grid, &ball);
    Ok(CauchyData {
        f: phi.g.iter().zip(&w).map(|(g, w)| w * g).collect(),
        g: legendre(&phi.grid, &phi.f, &ball),
        ..phi.clone()
    })
}

/// `½∫(1 − r²)⟨T₀₀⟩ + (D/2)∫Φ²` over the whole grid.
pub fn quadratic_form_massless(phi: &CauchyData) -> Result<f64> {
    if phi.m != 0.0 {
        return Err(Error::Config(format!("massless form needs m = 0, got {}", phi.m)));
    }
    Ok(polarized_massless(phi, phi))
}

/// Polarization `½∫(1 − r²)⟨T₀₀⟩_{Φ,Ψ} + (D/2)∫ΦΨ`.
pub fn polarized_massless(phi: &CauchyData, psi: &CauchyData) -> f64 {
    let grid = &phi.grid;
    let w = ball_weight(grid, &Ball::unit(grid.dim()));
    let ga = gradient(grid, &phi.f);
    let gb = gradient(grid, &psi.f);
    let dens: Vec<f64> = (0..phi.f.len())
        .map(|i| {
            let gg: f64 = ga.iter().zip(&gb).map(|(a, b)| a[i] * b[i]).sum();
            w[i] * 0.5 * (phi.g[i] * psi.g[i] + gg) + 0.5 * grid.scaling_dim() * phi.f[i] * psi.f[i]
        })
        .collect();
    grid.integrate(&dens)
}

/// The three integrals of the weighted integration-by-parts identity and its two halves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WeightedGradientIdentity {
    /// `∫½(1 − r²)|∇f|²`.
    pub gradient_term: f64,
    /// `−∫½(1 − r²) f∇²f`.
    pub laplacian_term: f64,
    /// `∫ r f ∂_r f`.
    pub radial_term: f64,
    /// `(d/2)∫f²`.
    pub mass_term: f64,
    /// `|gradient − (laplacian + radial)|` relative to the largest term.
    pub residual: f64,
    pub residual_first: f64,
    pub residual_second: f64,
}

/// Evaluates `∫½(1 − r²)|∇f|² = −∫½(1 − r²)f∇²f + ∫ r f ∂_r f` with spectral derivatives.
pub fn weighted_gradient_identity(grid: &GridSpec, f: &[f64]) -> WeightedGradientIdentity {
    let origin = vec![0.0; grid.dim()];
    let half: Vec<f64> = grid.distances(&origin).iter().map(|&r| 0.5 * (1.0 - r * r)).collect();
    let gg = grad_dot(grid, f, f);
    let lap = laplacian(grid, f);
    let xd = x_dot_grad(grid, f, &origin);
    let n = f.len();
    let gradient_term = grid.integrate(&(0..n).map(|i| half[i] * gg[i]).collect::<Vec<_>>());
    let laplacian_term = -grid.integrate(&(0..n).map(|i| half[i] * f[i] * lap[i]).collect::<Vec<_>>());
    let radial_term = grid.integrate(&(0..n).map(|i| f[i] * xd[i]).collect::<Vec<_>>());
    let mass_term = 0.5 * grid.dim() as f64 * grid.integrate(&f.iter().map(|v| v * v).collect::<Vec<_>>());
    let scale = [gradient_term, laplacian_term, radial_term, mass_term]
        .iter()
        .fold(f64::MIN_POSITIVE, |a, v| a.max(v.abs()));
    WeightedGradientIdentity {
        gradient_term,
        laplacian_term,
        radial_term,
        mass_term,
        residual: (gradient_term - laplacian_term - radial_term).abs() / scale,
        residual_first: (laplacian_term - gradient_term - mass_term).abs() / scale,
        residual_second: (radial_term + mass_term).abs() / scale,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FlowResult {
    pub s: f64,
    pub data: CauchyData,
    /// Relative `L²` mass of the flowed data outside the unit ball.
    pub leakage: f64,
}

/// Relative `L²` mass of both components at distance `≥ 1` from the origin.
pub fn outside_fraction(phi: &CauchyData, radius: f64) -> f64 {
    let grid = &phi.grid;
    let w = grid.weights();
    let dist = grid.distances(&vec![0.0; grid.dim()]);
    let (mut out, mut tot) = (0.0, 0.0);
    for i in 0..phi.f.len() {
        let e = w[i] * (phi.f[i] * phi.f[i] + phi.g[i] * phi.g[i]);
        tot += e;
        if dist[i] >= radius {
            out += e;
        }
    }
    if tot == 0.0 {
        0.0
    } else {
        (out / tot).sqrt()
    }
}

pub const FLOW_TIME_STEP: f64 = 1e-3;

/// Time-zero Cauchy data of `V(s)Φ` for massless radial data supported in the unit ball.
pub fn flow_geometric(phi: &CauchyData, s: f64) -> Result<FlowResult> {
    flow_geometric_tol(phi, s, &Tolerances::default())
}

pub fn flow_geometric_tol(phi: &CauchyData, s: f64, tol: &Tolerances) -> Result<FlowResult> {
    let r_max = match phi.grid {
        GridSpec::Radial { r_max, .. } => r_max,
        GridSpec::Cartesian { .. } => {
            return Err(Error::UnsupportedMode("flow_geometric needs a radial3d grid".into()))
        }
    };
    if phi.m != 0.0 {
        return Err(Error::Config(format!("the geometric flow needs m = 0, got {}", phi.m)));
    }
    let leak_in = outside_fraction(phi, 1.0);
    if leak_in > tol.support_leak {
        return Err(Error::SupportViolation { leak: leak_in });
    }
    if s == 0.0 {
        return Ok(FlowResult { s, data: phi.clone(), leakage: 0.0 });
    }
    let sf = radial_series(&phi.grid, &phi.f);
    let sg = radial_series(&phi.grid, &phi.g);
    let dd = phi.grid.scaling_dim();
    let solution = |t: f64, r: f64| -> f64 {
        if !(r < r_max) {
            return 0.0;
        }
        let small = r < 1e-9;
        let mut acc = 0.0;
        for k in 0..sf.coeffs.len() {
            let p = sf.wavenumber(k);
            let amp = sf.coeffs[k] * (p * t).cos() + sg.coeffs[k] * (p * t).sin() / p;
            acc += if small { amp * p } else { amp * (p * r).sin() };
        }
        if small {
            acc
        } else {
            acc / r
        }
    };
    let flowed = |t: f64, r: f64| -> f64 {
        let (u, v) = (t + r, t - r);
        let (Ok(zu), Ok(zv), Ok(gamma)) = (flow_map_z(u, s), flow_map_z(v, s), flow_cocycle(u, v, s, dd)) else {
            return 0.0;
        };
        if f_fn(u, s) <= 0.0 || f_fn(-v, -s) <= 0.0 {
            return 0.0;
        }
        let (tp, rp) = (0.5 * (zu + zv), 0.5 * (zu - zv));
        gamma * solution(tp, rp)
    };
    let h = FLOW_TIME_STEP;
    let radii = phi.grid.radii();
    let (f, g): (Vec<f64>, Vec<f64>) = radii
        .par_iter()
        .map(|&r| {
            let f0 = flowed(0.0, r);
            let d1 = flowed(h, r) - flowed(-h, r);
            let d2 = flowed(2.0 * h, r) - flowed(-2.0 * h, r);
            let g0 = (8.0 * d1 - d2) / (12.0 * h);
            (f0, g0)
        })
        .unzip();
    let data = CauchyData { f, g, ..phi.clone() };
    let leakage = outside_fraction(&data, 1.0);
    Ok(FlowResult { s, data, leakage })
}
