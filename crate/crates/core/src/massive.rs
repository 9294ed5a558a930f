//! Massive generator on a ball: `M`, `L_m`, the Green kernel, `K̃_m`, `K_m^B` and the
//! quadratic form of `−logΔ/2π`.

use serde::{Deserialize, Serialize};

use crate::ball::BallQuadrature;
use crate::conformal::{ball_weight, legendre};
use crate::error::{Error, Result};
use crate::field::CauchyData;
use crate::grid::{Ball, GridSpec};
use crate::special::bessel_k0;
use crate::spectral::apply_multiplier;
use crate::tolerances::Tolerances;

use std::f64::consts::PI;

/// `G_m(r)`: `e^{−mr}/(4πr)` for `d = 3`, `K₀(mr)/(2π)` for `d = 2`.
pub fn green_kernel_eval(d: usize, m: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::DomainError(format!("Green kernel needs r > 0, got {r}")));
    }
    if !(m > 0.0) {
        return Err(Error::DomainError(format!("Green kernel needs m > 0, got {m}")));
    }
    match d {
        3 => Ok((-m * r).exp() / (4.0 * PI * r)),
        2 => Ok(bessel_k0(m * r)? / (2.0 * PI)),
        _ => Err(Error::Config(format!("Green kernel implemented for d = 2, 3, got {d}"))),
    }
}

/// Spherical mean of `G_m` over two spheres of radii `r` and `r′` in `d = 3`.
pub fn green_spherical_mean(m: f64, r: f64, rp: f64) -> f64 {
    let e = (-m * (r - rp).abs()).exp() - (-m * (r + rp)).exp();
    if m == 0.0 {
        return 1.0 / (4.0 * PI * r.max(rp));
    }
    e / (8.0 * PI * m * r * rp)
}

/// `M_B g = (R² − |x − x̄|²)/(2R) · g`.
pub fn apply_m(grid: &GridSpec, g: &[f64], ball: &Ball) -> Vec<f64> {
    ball_weight(grid, ball).iter().zip(g).map(|(w, v)| w * v).collect()
}

/// `(∇² − m²)^{-1} f` as a Fourier multiplier.
pub fn inverse_helmholtz(grid: &GridSpec, f: &[f64], m: f64) -> Result<Vec<f64>> {
    if !(m > 0.0) {
        return Err(Error::DomainError("(∇² − m²)^{-1} needs m > 0".into()));
    }
    let m2 = m * m;
    Ok(apply_multiplier(grid, f, |p| -1.0 / (p * p + m2)))
}

/// `L_m f = M_B(∇² − m²)f − ((x − x̄)·∇f + D f)/R + (m²/2R)(∇² − m²)^{-1} f`.
pub fn apply_lm(grid: &GridSpec, f: &[f64], m: f64, ball: &Ball) -> Result<Vec<f64>> {
    let mut out = legendre(grid, f, ball);
    if m == 0.0 {
        return Ok(out);
    }
    let w = ball_weight(grid, ball);
    let inv = inverse_helmholtz(grid, f, m)?;
    let c = m * m / (2.0 * ball.radius);
    for i in 0..out.len() {
        out[i] += -m * m * w[i] * f[i] + c * inv[i];
    }
    Ok(out)
}

/// `K̃_m⟨f, g⟩ = ⟨M g, L_m f⟩` with the spectral inverse.
pub fn apply_k_tilde(phi: &CauchyData, ball: &Ball) -> Result<CauchyData> {
    phi.grid.check_ball(ball)?;
    Ok(CauchyData {
        f: apply_m(&phi.grid, &phi.g, ball),
        g: apply_lm(&phi.grid, &phi.f, phi.m, ball)?,
        ..phi.clone()
    })
}

/// Relative `L²` mass of `Φ` at distance `≥ R` from the ball centre.
pub fn support_leak(phi: &CauchyData, ball: &Ball) -> f64 {
    let w = phi.grid.weights();
    let dist = phi.grid.distances(&ball.center);
    let (mut out, mut tot) = (0.0, 0.0);
    for i in 0..phi.f.len() {
        let e = w[i] * (phi.f[i] * phi.f[i] + phi.g[i] * phi.g[i]);
        tot += e;
        if dist[i] >= ball.radius {
            out += e;
        }
    }
    if tot == 0.0 {
        0.0
    } else {
        (out / tot).sqrt()
    }
}

pub fn require_supported(phi: &CauchyData, ball: &Ball, tol: &Tolerances) -> Result<()> {
    let leak = support_leak(phi, ball);
    if leak > tol.support_leak {
        return Err(Error::SupportViolation { leak });
    }
    Ok(())
}

/// `P_m⟨f, g⟩ = ⟨0, m² M_B f⟩`.
pub fn apply_pm(phi: &CauchyData, ball: &Ball) -> CauchyData {
    let m2 = phi.m * phi.m;
    CauchyData {
        f: vec![0.0; phi.f.len()],
        g: apply_m(&phi.grid, &phi.f, ball).iter().map(|v| m2 * v).collect(),
        ..phi.clone()
    }
}

/// `V_m^B⟨f, g⟩ = ⟨0, (m²/2R) G_m ∗ (χ_B f)⟩`.
pub fn apply_vm(phi: &CauchyData, ball: &Ball) -> Result<CauchyData> {
    let zero = vec![0.0; phi.f.len()];
    if phi.m == 0.0 {
        return Ok(CauchyData { f: zero.clone(), g: zero, ..phi.clone() });
    }
    let q = BallQuadrature::new(&phi.grid, ball)?;
    let c = phi.m * phi.m / (2.0 * ball.radius);
    let conv = q.green_convolution(&phi.f, phi.m)?;
    Ok(CauchyData { f: zero, g: conv.iter().map(|v| c * v).collect(), ..phi.clone() })
}

/// `K_m^B = K₀^B − P_m − V_m^B` on data supported in the ball.
pub fn apply_kmb(phi: &CauchyData, ball: &Ball) -> Result<CauchyData> {
    apply_kmb_tol(phi, ball, &Tolerances::default())
}

pub fn apply_kmb_tol(phi: &CauchyData, ball: &Ball, tol: &Tolerances) -> Result<CauchyData> {
    phi.grid.check_ball(ball)?;
    require_supported(phi, ball, tol)?;
    let k0 = CauchyData {
        f: apply_m(&phi.grid, &phi.g, ball),
        g: legendre(&phi.grid, &phi.f, ball),
        ..phi.clone()
    };
    if phi.m == 0.0 {
        return Ok(k0);
    }
    k0.sub(&apply_pm(phi, ball))?.sub(&apply_vm(phi, ball)?)
}

/// Three-term breakdown of the ball quadratic form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FormTerms {
    pub stress: f64,
    pub norm: f64,
    pub yukawa: f64,
    pub total: f64,
}

impl FormTerms {
    pub fn new(stress: f64, norm: f64, yukawa: f64) -> Self {
        Self { stress, norm, yukawa, total: stress + norm + yukawa }
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self::new(a * self.stress, a * self.norm, a * self.yukawa)
    }
}

/// `∫_B M⟨T₀₀⟩_{Φ,Ψ} + (D/2R)∫_B ΦΨ + (m²/4R)∬_{B×B} G_m Φ Ψ`, integrating over the ball only.
pub fn ball_bilinear_terms(phi: &CauchyData, psi: &CauchyData, ball: &Ball) -> Result<FormTerms> {
    if phi.grid != psi.grid || phi.m != psi.m {
        return Err(Error::GridMismatch);
    }
    let q = BallQuadrature::new(&phi.grid, ball)?;
    let (fa, ga) = q.values_grad(&phi.f);
    let (fb, gb) = q.values_grad(&psi.f);
    let (ta, tb) = (q.values(&phi.g), q.values(&psi.g));
    let big_r = ball.radius;
    let m2 = phi.m * phi.m;
    let dist = q.dist();
    let stress_dens: Vec<f64> = (0..q.len())
        .map(|i| {
            let grad: f64 = ga.iter().zip(&gb).map(|(a, b)| a[i] * b[i]).sum();
            let t00 = 0.5 * (ta[i] * tb[i] + grad + m2 * fa[i] * fb[i]);
            (big_r * big_r - dist[i] * dist[i]) / (2.0 * big_r) * t00
        })
        .collect();
    let prod: Vec<f64> = fa.iter().zip(&fb).map(|(a, b)| a * b).collect();
    let stress = q.integrate(&stress_dens);
    let norm = phi.grid.scaling_dim() / (2.0 * big_r) * q.integrate(&prod);
    let yukawa = if phi.m == 0.0 {
        0.0
    } else {
        m2 / (4.0 * big_r) * q.yukawa(&phi.f, &psi.f, phi.m)?
    };
    Ok(FormTerms::new(stress, norm, yukawa))
}

/// `∫_B ⟨T₀₀⟩` with the same quadrature as the stress term.
pub fn ball_energy(phi: &CauchyData, ball: &Ball) -> Result<f64> {
    let q = BallQuadrature::new(&phi.grid, ball)?;
    let (f, grad) = q.values_grad(&phi.f);
    let g = q.values(&phi.g);
    let m2 = phi.m * phi.m;
    let dens: Vec<f64> = (0..q.len())
        .map(|i| {
            let g2: f64 = grad.iter().map(|c| c[i] * c[i]).sum();
            0.5 * (g[i] * g[i] + g2 + m2 * f[i] * f[i])
        })
        .collect();
    Ok(q.integrate(&dens))
}

/// `β(Φ, K̃_mΦ)` as the three-term sum, for `Φ` supported in the ball.
pub fn quadratic_form_massive(phi: &CauchyData, ball: &Ball) -> Result<FormTerms> {
    quadratic_form_massive_tol(phi, ball, &Tolerances::default())
}

pub fn quadratic_form_massive_tol(phi: &CauchyData, ball: &Ball, tol: &Tolerances) -> Result<FormTerms> {
    require_supported(phi, ball, tol)?;
    ball_bilinear_terms(phi, phi, ball)
}

/// `−ℜ(Φ, logΔ_{B,m} Ψ)` for `Φ, Ψ` supported in the ball.
pub fn matrix_element_log_delta(phi: &CauchyData, psi: &CauchyData, ball: &Ball) -> Result<f64> {
    matrix_element_log_delta_tol(phi, psi, ball, &Tolerances::default())
}

pub fn matrix_element_log_delta_tol(
    phi: &CauchyData,
    psi: &CauchyData,
    ball: &Ball,
    tol: &Tolerances,
) -> Result<f64> {
    require_supported(phi, ball, tol)?;
    require_supported(psi, ball, tol)?;
    Ok(2.0 * PI * ball_bilinear_terms(phi, psi, ball)?.total)
}
