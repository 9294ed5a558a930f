//! Entropy of a wave packet in a ball, its asymptotics and the cutting-form route.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ball::BallQuadrature;
use crate::conformal::legendre;
use crate::error::Result;
use crate::field::{kg_evolve, CauchyData};
use crate::grid::Ball;
use crate::io::{csv_table, format_float};
use crate::massive::{apply_m, ball_bilinear_terms, ball_energy};
use crate::spectral::point_eval;

use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EntropyReport {
    #[serde(rename = "R")]
    pub radius: f64,
    pub t: f64,
    pub center: Vec<f64>,
    pub m: f64,
    pub term_stress: f64,
    pub term_norm: f64,
    pub term_yukawa: f64,
    pub total: f64,
    pub total_energy_in_ball: f64,
    /// `S/(πER)`.
    pub ratio_large_r: f64,
    /// `S/((π/d)(⟨T₀₀⟩ + DΦ²)(x̄)·A_{d−1}(R))`.
    pub small_r_density_ratio: f64,
    #[serde(rename = "bekensteinOK")]
    pub bekenstein_ok: bool,
}

/// Area of the sphere of radius `r` in `ℝ^d`.
pub fn sphere_area(d: usize, r: f64) -> f64 {
    match d {
        2 => 2.0 * PI * r,
        3 => 4.0 * PI * r * r,
        _ => {
            let h = d as f64 / 2.0;
            2.0 * PI.powf(h) / gamma_half_integer(d) * r.powi(d as i32 - 1)
        }
    }
}

fn gamma_half_integer(d: usize) -> f64 {
    if d % 2 == 0 {
        (1..d / 2).map(|k| k as f64).product()
    } else {
        let mut g = PI.sqrt();
        let mut x = 0.5;
        while x < d as f64 / 2.0 - 0.25 {
            g *= x;
            x += 1.0;
        }
        g
    }
}

/// `(⟨T₀₀⟩(x̄), Φ(x̄))` from the spectral interpolant.
pub fn point_density(phi: &CauchyData, center: &[f64]) -> (f64, f64) {
    let x: Vec<f64> = if phi.grid.is_radial() { vec![0.0] } else { center.to_vec() };
    let (f, grad) = point_eval(&phi.grid, &phi.f, &x);
    let (g, _) = point_eval(&phi.grid, &phi.g, &x);
    let g2: f64 = grad.iter().map(|v| v * v).sum();
    (0.5 * (g * g + g2 + phi.m * phi.m * f * f), f)
}

fn report_at(phi: &CauchyData, ball: &Ball, t: f64) -> Result<EntropyReport> {
    let terms = ball_bilinear_terms(phi, phi, ball)?.scaled(2.0 * PI);
    let energy = ball_energy(phi, ball)?;
    let r = ball.radius;
    let d = phi.grid.dim();
    let (t00, f0) = point_density(phi, &ball.center);
    let areal = PI / d as f64 * (t00 + phi.grid.scaling_dim() * f0 * f0) * sphere_area(d, r);
    let bound = PI * energy * r;
    Ok(EntropyReport {
        radius: r,
        t,
        center: ball.center.clone(),
        m: phi.m,
        term_stress: terms.stress,
        term_norm: terms.norm,
        term_yukawa: terms.yukawa,
        total: terms.total,
        total_energy_in_ball: energy,
        ratio_large_r: terms.total / bound,
        small_r_density_ratio: terms.total / areal,
        bekenstein_ok: terms.total <= bound * (1.0 + 1e-12),
    })
}

/// `S_Φ(R, t, x̄)`: evolves `Φ` to time `t` and integrates the three terms over the ball.
pub fn entropy_ball(phi: &CauchyData, ball: &Ball, t: f64) -> Result<EntropyReport> {
    phi.grid.check_ball(ball)?;
    let evolved = kg_evolve(phi, t);
    report_at(&evolved, ball, t)
}

/// `π∫_B(Ψ∂₀Φ − Φ∂₀Ψ)` with `Ψ = K_mΦ` and the Green term acting on `χ_B f`.
pub fn entropy_cutting_form(phi: &CauchyData, ball: &Ball) -> Result<f64> {
    let grid = &phi.grid;
    grid.check_ball(ball)?;
    let q = BallQuadrature::new(grid, ball)?;
    let psi_f = apply_m(grid, &phi.g, ball);
    let mut psi_g = legendre(grid, &phi.f, ball);
    if phi.m > 0.0 {
        let m2 = phi.m * phi.m;
        let mf = apply_m(grid, &phi.f, ball);
        let conv = q.green_convolution(&phi.f, phi.m)?;
        let c = m2 / (2.0 * ball.radius);
        for i in 0..psi_g.len() {
            psi_g[i] -= m2 * mf[i] + c * conv[i];
        }
    }
    let integrand: Vec<f64> = (0..psi_f.len())
        .map(|i| psi_f[i] * phi.g[i] - phi.f[i] * psi_g[i])
        .collect();
    Ok(PI * q.integrate(&q.values(&integrand)))
}

/// Reports for each radius, evaluated in parallel on the data evolved once to time `t`.
pub fn radius_scan(phi: &CauchyData, center: &[f64], t: f64, radii: &[f64]) -> Result<Vec<EntropyReport>> {
    let balls: Vec<Ball> = radii.iter().map(|&r| Ball::new(r, center.to_vec())).collect();
    for b in &balls {
        phi.grid.check_ball(b)?;
    }
    let evolved = kg_evolve(phi, t);
    balls.par_iter().map(|b| report_at(&evolved, b, t)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SmallRFit {
    pub radii: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Richardson limit of the areal-density ratio assuming an expansion in `R²`.
    pub extrapolated: f64,
    /// Limit from the leading small-ball expansion, `DΦ²/(⟨T₀₀⟩ + DΦ²)` at `x̄`.
    pub leading_order_limit: f64,
}

/// Areal-density ratios at `R ∈ {0.2, 0.1, 0.05}·scale`, extrapolated to `R → 0`.
pub fn small_r_fit(phi: &CauchyData, center: &[f64], t: f64, scale: f64) -> Result<SmallRFit> {
    let radii: Vec<f64> = [0.2, 0.1, 0.05].iter().map(|s| s * scale).collect();
    let reports = radius_scan(phi, center, t, &radii)?;
    let ratios: Vec<f64> = reports.iter().map(|r| r.small_r_density_ratio).collect();
    let r1: Vec<f64> = (0..2).map(|i| (4.0 * ratios[i + 1] - ratios[i]) / 3.0).collect();
    let extrapolated = (16.0 * r1[1] - r1[0]) / 15.0;
    let evolved = kg_evolve(phi, t);
    let (t00, f0) = point_density(&evolved, center);
    let dphi2 = phi.grid.scaling_dim() * f0 * f0;
    Ok(SmallRFit { radii, ratios, extrapolated, leading_order_limit: dphi2 / (t00 + dphi2) })
}

/// Vacuum relative entropy of the coherent state of `Φ` on the double cone over `B_R(0)`.
pub fn relative_entropy_coherent(phi: &CauchyData, radius: f64) -> Result<f64> {
    Ok(entropy_ball(phi, &Ball::centered(radius, phi.grid.dim()), 0.0)?.total)
}

pub const SCAN_CSV_HEADER: [&str; 9] =
    ["R", "t", "termStress", "termNorm", "termYukawa", "total", "energy", "ratioLargeR", "bekensteinOK"];

pub fn scan_csv(reports: &[EntropyReport]) -> String {
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                format_float(r.radius),
                format_float(r.t),
                format_float(r.term_stress),
                format_float(r.term_norm),
                format_float(r.term_yukawa),
                format_float(r.total),
                format_float(r.total_energy_in_ball),
                format_float(r.ratio_large_r),
                r.bekenstein_ok.to_string(),
            ]
        })
        .collect();
    csv_table(&SCAN_CSV_HEADER, &rows)
}
