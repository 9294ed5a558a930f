//! Klein–Gordon Cauchy data, the one-particle structure and the symplectic form.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{dot, Ball, GridSpec};
use crate::spectral::{apply_multiplier, cartesian_multiplier, gradient, radial_series};
use crate::tolerances::Tolerances;

/// A wave at fixed time: `Φ = w_m(f, g)` with `f = Φ|_{t}` and `g = ∂₀Φ|_{t}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyData {
    pub grid: GridSpec,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub m: f64,
}

impl CauchyData {
    pub fn new(grid: GridSpec, f: Vec<f64>, g: Vec<f64>, m: f64) -> Result<Self> {
        grid.validate()?;
        if f.len() != grid.len() || g.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if !(m >= 0.0) || !m.is_finite() {
            return Err(Error::Config(format!("mass must be finite and >= 0, got {m}")));
        }
        if f.iter().chain(&g).any(|v| !v.is_finite()) {
            return Err(Error::Config("field samples must be finite".into()));
        }
        Ok(Self { grid, f, g, m })
    }

    pub fn zero(grid: &GridSpec, m: f64) -> Self {
        Self { grid: grid.clone(), f: vec![0.0; grid.len()], g: vec![0.0; grid.len()], m }
    }

    pub fn with_mass(&self, m: f64) -> Self {
        Self { m, ..self.clone() }
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            f: self.f.iter().map(|v| a * v).collect(),
            g: self.g.iter().map(|v| a * v).collect(),
            ..self.clone()
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_same(self, other)?;
        Ok(Self {
            f: self.f.iter().zip(&other.f).map(|(a, b)| a + b).collect(),
            g: self.g.iter().zip(&other.g).map(|(a, b)| a + b).collect(),
            ..self.clone()
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scaled(-1.0))
    }

    /// Combined sup norm of both components.
    pub fn max_abs(&self) -> f64 {
        self.f.iter().chain(&self.g).fold(0.0f64, |a, b| a.max(b.abs()))
    }

    /// `L²` norm of both components, for relative comparisons.
    pub fn l2(&self) -> f64 {
        (self.grid.dot(&self.f, &self.f) + self.grid.dot(&self.g, &self.g)).sqrt()
    }
}

pub(crate) fn check_same(a: &CauchyData, b: &CauchyData) -> Result<()> {
    if a.grid != b.grid || a.f.len() != b.f.len() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

pub(crate) fn check_same_mass(a: &CauchyData, b: &CauchyData) -> Result<()> {
    check_same(a, b)?;
    if a.m != b.m {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// `sin(ωt)/ω`, continuous at `ω = 0`.
fn sin_over(w: f64, t: f64) -> f64 {
    if (w * t).abs() < 1e-8 {
        t
    } else {
        (w * t).sin() / w
    }
}

/// Spectral Klein–Gordon evolution by time `t`.
pub fn kg_evolve(phi: &CauchyData, t: f64) -> CauchyData {
    if t == 0.0 {
        return phi.clone();
    }
    let m2 = phi.m * phi.m;
    match &phi.grid {
        GridSpec::Radial { .. } => {
            let grid = &phi.grid;
            let sf = radial_series(grid, &phi.f);
            let sg = radial_series(grid, &phi.g);
            let mut cf = sf.clone();
            let mut cg = sg.clone();
            for k in 0..sf.coeffs.len() {
                let p = sf.wavenumber(k);
                let w = (p * p + m2).sqrt();
                let (c, s) = ((w * t).cos(), (w * t).sin());
                cf.coeffs[k] = c * sf.coeffs[k] + sin_over(w, t) * sg.coeffs[k];
                cg.coeffs[k] = -w * s * sf.coeffs[k] + c * sg.coeffs[k];
            }
            let f = crate::spectral::from_radial_series(grid, &cf);
            let g = crate::spectral::from_radial_series(grid, &cg);
            CauchyData { f, g, ..phi.clone() }
        }
        GridSpec::Cartesian { .. } => {
            let grid = &phi.grid;
            let omega = |p: &[f64]| (p.iter().map(|x| x * x).sum::<f64>() + m2).sqrt();
            let re = |v: f64| Complex64::new(v, 0.0);
            let ff = cartesian_multiplier(grid, &phi.f, false, |p| re((omega(p) * t).cos()));
            let fg = cartesian_multiplier(grid, &phi.g, false, |p| re(sin_over(omega(p), t)));
            let gf = cartesian_multiplier(grid, &phi.f, false, |p| {
                let w = omega(p);
                re(-w * (w * t).sin())
            });
            let gg = cartesian_multiplier(grid, &phi.g, false, |p| re((omega(p) * t).cos()));
            CauchyData {
                f: ff.iter().zip(&fg).map(|(a, b)| a + b).collect(),
                g: gf.iter().zip(&gg).map(|(a, b)| a + b).collect(),
                ..phi.clone()
            }
        }
    }
}

/// Fraction of `‖f‖²` carried by the zero mode of a Cartesian grid.
pub fn infrared_ratio(grid: &GridSpec, f: &[f64]) -> f64 {
    match grid {
        GridSpec::Radial { .. } => 0.0,
        GridSpec::Cartesian { .. } => {
            let s: f64 = f.iter().sum();
            let e = dot(f, f);
            if e == 0.0 {
                0.0
            } else {
                s * s / (f.len() as f64 * e)
            }
        }
    }
}

/// `μ_m^{power} f` with `μ_m = (−∇² + m²)^{1/2}`.
pub fn mu_apply(grid: &GridSpec, f: &[f64], m: f64, power: f64) -> Result<Vec<f64>> {
    mu_apply_tol(grid, f, m, power, &Tolerances::default())
}

pub fn mu_apply_tol(grid: &GridSpec, f: &[f64], m: f64, power: f64, tol: &Tolerances) -> Result<Vec<f64>> {
    if power == 0.0 {
        return Ok(f.to_vec());
    }
    let m2 = m * m;
    if m == 0.0 && power < 0.0 {
        let ratio = infrared_ratio(grid, f);
        if ratio > tol.infrared {
            return Err(Error::MasslessInfrared { ratio });
        }
    }
    Ok(apply_multiplier(grid, f, |p| {
        let w2 = p * p + m2;
        if w2 == 0.0 {
            0.0
        } else {
            w2.powf(0.5 * power)
        }
    }))
}

/// `‖f‖²_{s;m} = ∫ (|p|² + m²)^s |f̂(p)|² dp`.
pub fn sobolev_norm(grid: &GridSpec, f: &[f64], s: f64, m: f64) -> Result<f64> {
    let w = mu_apply(grid, f, m, 2.0 * s)?;
    Ok(grid.dot(f, &w).max(0.0))
}

/// `ı_m⟨f, g⟩ = ⟨μ_m^{-1} g, −μ_m f⟩`.
pub fn complex_structure(phi: &CauchyData) -> Result<CauchyData> {
    let f = mu_apply(&phi.grid, &phi.g, phi.m, -1.0)?;
    let g: Vec<f64> = mu_apply(&phi.grid, &phi.f, phi.m, 1.0)?.iter().map(|v| -v).collect();
    Ok(CauchyData { f, g, ..phi.clone() })
}

/// `⟨Φ, Ψ⟩ = ½((f₁, μ f₂) + (g₁, μ^{-1} g₂)) + (i/2)((f₂, g₁) − (f₁, g₂))`, antilinear in `Φ`.
pub fn inner_product(phi: &CauchyData, psi: &CauchyData) -> Result<Complex64> {
    check_same_mass(phi, psi)?;
    let grid = &phi.grid;
    let mf = mu_apply(grid, &psi.f, psi.m, 1.0)?;
    let mg = mu_apply(grid, &psi.g, psi.m, -1.0)?;
    let re = 0.5 * (grid.dot(&phi.f, &mf) + grid.dot(&phi.g, &mg));
    Ok(Complex64::new(re, symplectic_form(phi, psi)?))
}

/// `β(Φ, Ψ) = ½∫(f₂ g₁ − f₁ g₂)`.
pub fn symplectic_form(phi: &CauchyData, psi: &CauchyData) -> Result<f64> {
    check_same(phi, psi)?;
    let grid = &phi.grid;
    Ok(0.5 * (grid.dot(&psi.f, &phi.g) - grid.dot(&phi.f, &psi.g)))
}

/// Multiplies both components by the sampled indicator of the ball.
pub fn cut_to_ball(phi: &CauchyData, ball: &Ball) -> Result<CauchyData> {
    phi.grid.check_ball(ball)?;
    let chi: Vec<f64> = phi
        .grid
        .distances(&ball.center)
        .iter()
        .map(|&r| if r < ball.radius { 1.0 } else { 0.0 })
        .collect();
    Ok(CauchyData {
        f: phi.f.iter().zip(&chi).map(|(a, c)| a * c).collect(),
        g: phi.g.iter().zip(&chi).map(|(a, c)| a * c).collect(),
        ..phi.clone()
    })
}

/// `δ_λ : w_m(f, g) ↦ w_{λm}(λ^D f(λ·), λ^{D+1} g(λ·))`.
pub fn dilate(phi: &CauchyData, lambda: f64) -> Result<CauchyData> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::DomainError(format!("dilation factor must be positive, got {lambda}")));
    }
    if lambda == 1.0 {
        return Ok(phi.clone());
    }
    let grid = &phi.grid;
    let d = grid.dim();
    let center = vec![0.0; d];
    let support = grid
        .support_radius(&phi.f, &center, 1e-12)
        .max(grid.support_radius(&phi.g, &center, 1e-12));
    let limit = 0.75 * grid.extent();
    if support / lambda > limit {
        return Err(Error::SupportOverflow { support: support / lambda, limit });
    }
    let dd = grid.scaling_dim();
    let (f, g) = (resample(grid, &phi.f, lambda), resample(grid, &phi.g, lambda));
    Ok(CauchyData {
        grid: grid.clone(),
        f: f.iter().map(|v| lambda.powf(dd) * v).collect(),
        g: g.iter().map(|v| lambda.powf(dd + 1.0) * v).collect(),
        m: lambda * phi.m,
    })
}

/// Samples `x ↦ f(λx)` by spectral interpolation.
fn resample(grid: &GridSpec, f: &[f64], lambda: f64) -> Vec<f64> {
    match *grid {
        GridSpec::Radial { r_max, .. } => {
            let s = radial_series(grid, f);
            grid.radii()
                .iter()
                .map(|&r| if lambda * r < r_max { s.eval_field(lambda * r).0 } else { 0.0 })
                .collect()
        }
        GridSpec::Cartesian { d, l, n } => {
            let h = 2.0 * l / n as f64;
            let mat = interpolation_matrix(n, l, lambda);
            let mut cur = f.to_vec();
            for axis in 0..d {
                let stride = n.pow((d - 1 - axis) as u32);
                let block = stride * n;
                let mut next = vec![0.0; cur.len()];
                for base in (0..cur.len()).step_by(block) {
                    for inner in 0..stride {
                        for i in 0..n {
                            let row = &mat[i * n..(i + 1) * n];
                            next[base + i * stride + inner] =
                                (0..n).map(|j| row[j] * cur[base + j * stride + inner]).sum();
                        }
                    }
                }
                cur = next;
            }
            let _ = h;
            cur
        }
    }
}

/// Rows: trigonometric interpolant (Nyquist dropped) evaluated at `λ x_i`, zero outside the box.
fn interpolation_matrix(n: usize, l: f64, lambda: f64) -> Vec<f64> {
    let h = 2.0 * l / n as f64;
    let mut mat = vec![0.0; n * n];
    for i in 0..n {
        let x = lambda * (-l + h * i as f64);
        if x < -l || x >= l {
            continue;
        }
        for j in 0..n {
            let dx = x - (-l + h * j as f64);
            let mut s = 1.0;
            for k in 1..n / 2 {
                s += 2.0 * (std::f64::consts::PI * k as f64 * dx / l).cos();
            }
            mat[i * n + j] = s / n as f64;
        }
    }
    mat
}

/// Pointwise energy density `½(g² + |∇f|² + m² f²)`.
pub fn energy_density(phi: &CauchyData) -> Vec<f64> {
    let gr = gradient(&phi.grid, &phi.f);
    let m2 = phi.m * phi.m;
    (0..phi.f.len())
        .map(|i| {
            let grad2: f64 = gr.iter().map(|c| c[i] * c[i]).sum();
            0.5 * (phi.g[i] * phi.g[i] + grad2 + m2 * phi.f[i] * phi.f[i])
        })
        .collect()
}

/// Total energy `½(g, g) + ½(f, μ_m² f)`, evaluated spectrally so that it is exactly conserved.
pub fn energy(phi: &CauchyData) -> f64 {
    let grid = &phi.grid;
    let m2 = phi.m * phi.m;
    let w = apply_multiplier(grid, &phi.f, |p| p * p + m2);
    0.5 * (grid.dot(&phi.g, &phi.g) + grid.dot(&phi.f, &w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::Composite;

    fn bump(r: f64, a: f64) -> f64 {
        let x = r / a;
        if x.abs() < 1.0 {
            (-1.0 / (1.0 - x * x)).exp()
        } else {
            0.0
        }
    }

    fn radial_bump(grid: &GridSpec, a: f64, b: f64, m: f64) -> CauchyData {
        let f = grid.radii().iter().map(|&r| bump(r, a)).collect();
        let g = grid.radii().iter().map(|&r| (1.0 - 0.5 * r * r) * bump(r, b)).collect();
        CauchyData::new(grid.clone(), f, g, m).unwrap()
    }

    fn cart_bump(grid: &GridSpec, c: f64, a: f64, m: f64) -> CauchyData {
        let f = (0..grid.len())
            .map(|i| {
                let x = grid.point(i);
                let r = ((x[0] - c).powi(2) + x[1..].iter().map(|y| y * y).sum::<f64>()).sqrt();
                bump(r, a)
            })
            .collect();
        let g = (0..grid.len())
            .map(|i| {
                let x = grid.point(i);
                let r = ((x[0] - 0.1).powi(2) + (x[1] - 0.2).powi(2)).sqrt();
                bump(r, 0.7)
            })
            .collect();
        CauchyData::new(grid.clone(), f, g, m).unwrap()
    }

    #[test]
    fn evolution_group_law_and_energy() {
        let grid = GridSpec::radial(16.0, 512).unwrap();
        let phi = radial_bump(&grid, 1.0, 0.8, 1.0);
        assert_eq!(kg_evolve(&phi, 0.0), phi);
        let a = kg_evolve(&kg_evolve(&phi, 0.7), 0.6);
        let b = kg_evolve(&phi, 1.3);
        assert!(a.sub(&b).unwrap().max_abs() < 1e-10 * phi.max_abs());
        let e0 = energy(&phi);
        for t in [0.5, 1.0, 2.0] {
            let e = energy(&kg_evolve(&phi, t));
            assert!(((e - e0) / e0).abs() < 1e-10);
        }
        let cg = GridSpec::cartesian(2, 6.0, 64).unwrap();
        let psi = cart_bump(&cg, 0.3, 1.0, 0.5);
        let e0 = energy(&psi);
        let e = energy(&kg_evolve(&psi, 1.7));
        assert!(((e - e0) / e0).abs() < 1e-10);
    }

    #[test]
    fn massless_radial_evolution_matches_dalembert() {
        let grid = GridSpec::radial(16.0, 2048).unwrap();
        let phi = CauchyData::new(grid.clone(), grid.radii().iter().map(|&r| bump(r, 1.0)).collect(), vec![0.0; 2048], 0.0)
            .unwrap();
        let t = 0.6;
        let out = kg_evolve(&phi, t);
        let big_u = |x: f64| x * bump(x.abs(), 1.0);
        for (i, &r) in grid.radii().iter().enumerate() {
            let exact = 0.5 * (big_u(r + t) + big_u(r - t)) / r;
            assert!((out.f[i] - exact).abs() < 1e-8, "r={r}");
        }
    }

    #[test]
    fn sobolev_norm_equivalence() {
        let grid = GridSpec::radial(16.0, 1024).unwrap();
        let f: Vec<f64> = grid.radii().iter().map(|&r| bump(r, 1.0)).collect();
        assert_eq!(sobolev_norm(&grid, &vec![0.0; 1024], 0.5, 1.0).unwrap(), 0.0);
        for (m, mp) in [(2.0, 1.0), (1.0, 0.25), (4.0, 0.5)] {
            let a = sobolev_norm(&grid, &f, -0.5, m).unwrap().sqrt();
            let b = sobolev_norm(&grid, &f, -0.5, mp).unwrap().sqrt();
            assert!(a <= b && b <= (m / mp as f64).sqrt() * a);
        }
    }

    /// Mollified bump: Gaussian envelope times the standard bump.
    fn moll(r: f64) -> f64 {
        (-r * r / (2.0 * 0.25)).exp() * bump(r, 1.0)
    }

    /// `4π ∫ p² (p² + m²)^s |f̂(p)|² dp` with `f̂(p) = (2π)^{-3/2} (4π/p) ∫ r f(r) sin(pr) dr`.
    fn sobolev_oracle(s: f64, m: f64) -> f64 {
        let rr = Composite::new(0.0, 1.0, 200, 10);
        let pp = Composite::new(0.0, 400.0, 4000, 10);
        let vals: Vec<f64> = pp
            .nodes
            .iter()
            .map(|&p| {
                let inner: Vec<f64> = rr.nodes.iter().map(|&r| r * moll(r) * (p * r).sin()).collect();
                let fh = 4.0 * std::f64::consts::PI / p * rr.integrate(&inner) / (2.0 * std::f64::consts::PI).powf(1.5);
                4.0 * std::f64::consts::PI * p * p * (p * p + m * m).powf(s) * fh * fh
            })
            .collect();
        pp.integrate(&vals)
    }

    #[test]
    fn sobolev_norm_against_momentum_space_quadrature() {
        let grid = GridSpec::radial(16.0, 4096).unwrap();
        let f: Vec<f64> = grid.radii().iter().map(|&r| moll(r)).collect();
        for s in [-0.5, 0.5] {
            let v = sobolev_norm(&grid, &f, s, 1.0).unwrap();
            let o = sobolev_oracle(s, 1.0);
            assert!(((v - o) / o).abs() < 1e-6, "s={s}: {v} vs {o}");
        }
    }

    #[test]
    fn mu_apply_identities() {
        let grid = GridSpec::radial(16.0, 4096).unwrap();
        let f: Vec<f64> = grid.radii().iter().map(|&r| bump(r, 1.0)).collect();
        assert_eq!(mu_apply(&grid, &f, 1.0, 0.0).unwrap(), f);
        let back = mu_apply(&grid, &mu_apply(&grid, &f, 1.0, 1.0).unwrap(), 1.0, -1.0).unwrap();
        assert!(back.iter().zip(&f).all(|(a, b)| (a - b).abs() < 1e-10));
        let ab = mu_apply(&grid, &mu_apply(&grid, &f, 0.7, 0.4).unwrap(), 0.7, -1.3).unwrap();
        let c = mu_apply(&grid, &f, 0.7, -0.9).unwrap();
        assert!(ab.iter().zip(&c).all(|(a, b)| (a - b).abs() < 1e-10));
        let mf = mu_apply(&grid, &f, 1.0, 1.0).unwrap();
        let lhs = sobolev_norm(&grid, &mf, -0.5, 1.0).unwrap();
        let rhs = sobolev_norm(&grid, &f, 0.5, 1.0).unwrap();
        assert!(((lhs - rhs) / rhs).abs() < 1e-10);
        let f: Vec<f64> = grid.radii().iter().map(|&r| bump(r, 2.0)).collect();
        let lap = mu_apply(&grid, &f, 0.0, 2.0).unwrap();
        let h = grid.spacing();
        for i in (40..350).step_by(13) {
            let r = grid.radius(i);
            let d2 = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / (h * h);
            let d1 = (f[i + 1] - f[i - 1]) / (2.0 * h);
            assert!((lap[i] + d2 + 2.0 * d1 / r).abs() < 1e-4, "r={r} {} {}", lap[i], -d2 - 2.0 * d1 / r);
        }
    }

    #[test]
    fn massless_infrared_guard() {
        let grid = GridSpec::cartesian(2, 4.0, 32).unwrap();
        let f: Vec<f64> = (0..grid.len()).map(|i| bump(grid.radius(i), 1.0)).collect();
        assert!(matches!(mu_apply(&grid, &f, 0.0, -1.0), Err(Error::MasslessInfrared { .. })));
        let lap = crate::spectral::laplacian(&grid, &f);
        assert!(mu_apply(&grid, &lap, 0.0, -1.0).is_ok());
    }

    #[test]
    fn complex_structure_and_scalar_product() {
        let grid = GridSpec::radial(16.0, 512).unwrap();
        let phi = radial_bump(&grid, 1.0, 0.8, 1.0);
        let psi = radial_bump(&grid, 0.6, 1.1, 1.0).scaled(0.3).add(&kg_evolve(&phi, 0.4)).unwrap();
        assert_eq!(complex_structure(&CauchyData::zero(&grid, 1.0)).unwrap().max_abs(), 0.0);
        let ii = complex_structure(&complex_structure(&phi).unwrap()).unwrap();
        assert!(ii.add(&phi).unwrap().max_abs() < 1e-10 * phi.max_abs());
        let a = inner_product(&complex_structure(&phi).unwrap(), &psi).unwrap();
        let b = inner_product(&phi, &psi).unwrap() * Complex64::new(0.0, -1.0);
        assert!((a - b).norm() < 1e-10 * b.norm());
        let pp = inner_product(&phi, &phi).unwrap();
        assert!(pp.re > 0.0 && pp.im.abs() < 1e-14 * pp.re);
        let beta = symplectic_form(&phi, &psi).unwrap();
        for m in [0.5, 1.0, 2.0] {
            let ip = inner_product(&phi.with_mass(m), &psi.with_mass(m)).unwrap();
            assert!((ip.im - beta).abs() < 1e-10 * beta.abs());
        }
        let ib = symplectic_form(&complex_structure(&phi).unwrap(), &complex_structure(&psi).unwrap()).unwrap();
        assert!((ib - beta).abs() < 1e-10 * beta.abs().max(1e-3));
        assert!(symplectic_form(&phi, &phi).unwrap().abs() < 1e-16);
    }

    #[test]
    fn symplectic_form_direct_value() {
        let grid = GridSpec::radial(8.0, 4096).unwrap();
        let f1: Vec<f64> = grid.radii().iter().map(|&r| bump(r, 1.0)).collect();
        let g2: Vec<f64> = grid.radii().iter().map(|&r| bump(r, 0.5)).collect();
        let a = CauchyData::new(grid.clone(), f1, vec![0.0; 4096], 0.0).unwrap();
        let b = CauchyData::new(grid.clone(), vec![0.0; 4096], g2, 0.0).unwrap();
        let rule = Composite::new(0.0, 0.5, 100, 10);
        let v: Vec<f64> = rule.nodes.iter().map(|&r| 4.0 * std::f64::consts::PI * r * r * bump(r, 1.0) * bump(r, 0.5)).collect();
        let exact = -0.5 * rule.integrate(&v);
        assert!((symplectic_form(&a, &b).unwrap() - exact).abs() < 1e-12);
    }

    #[test]
    fn cutting() {
        let grid = GridSpec::radial(8.0, 256).unwrap();
        let phi = radial_bump(&grid, 0.9, 0.9, 0.0);
        let ball = Ball::unit(3);
        assert_eq!(cut_to_ball(&phi, &ball).unwrap(), phi);
        let far = CauchyData::new(
            grid.clone(),
            grid.radii().iter().map(|&r| bump(r - 3.0, 1.0)).collect(),
            vec![0.0; 256],
            0.0,
        )
        .unwrap();
        assert_eq!(cut_to_ball(&far, &ball).unwrap().max_abs(), 0.0);
        let wide = radial_bump(&grid, 2.0, 2.0, 0.0);
        let once = cut_to_ball(&wide, &ball).unwrap();
        assert_eq!(cut_to_ball(&once, &ball).unwrap(), once);
        assert!(cut_to_ball(&phi, &Ball::centered(9.0, 3)).is_err());
    }

    #[test]
    fn dilation_radial() {
        let grid = GridSpec::radial(16.0, 4096).unwrap();
        let phi = radial_bump(&grid, 1.0, 0.8, 1.0);
        let psi = radial_bump(&grid, 0.7, 1.2, 1.0);
        assert_eq!(dilate(&phi, 1.0).unwrap(), phi);
        for lambda in [2.0, 0.5] {
            let (a, b) = (dilate(&phi, lambda).unwrap(), dilate(&psi, lambda).unwrap());
            let before = symplectic_form(&phi, &psi).unwrap();
            let after = symplectic_form(&a, &b).unwrap();
            assert!(((after - before) / before).abs() < 1e-8, "{lambda}: {before} {after}");
            let n0 = inner_product(&phi, &phi).unwrap().re;
            let n1 = inner_product(&a, &a).unwrap().re;
            assert!(((n1 - n0) / n0).abs() < 1e-8);
            assert_eq!(a.m, lambda);
        }
        assert!(matches!(dilate(&phi, 0.05), Err(Error::SupportOverflow { .. })));
    }

    #[test]
    fn dilation_cartesian() {
        let grid = GridSpec::cartesian(2, 8.0, 256).unwrap();
        let phi = cart_bump(&grid, 0.2, 1.0, 1.0);
        let psi = cart_bump(&grid, -0.3, 0.8, 1.0);
        let a = dilate(&phi, 0.5).unwrap();
        let b = dilate(&psi, 0.5).unwrap();
        let before = symplectic_form(&phi, &psi).unwrap();
        let after = symplectic_form(&a, &b).unwrap();
        assert!(((after - before) / before).abs() < 1e-6, "{before} {after}");
    }
}
