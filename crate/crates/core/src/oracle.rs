//! Galerkin truncation of the ball subspace and comparison of its modular
//! Hamiltonian with the closed-form massive generator.
//!
//! The truncated subspace is spanned by `(φ_a, 0)` and `(0, φ_a)` for smooth radial
//! functions `φ_a` supported in a ball of radius `ρ = R − 2h` slightly inside `B`.
//! Its ambient complex space is `H + ı_m H`, written in a `ℜ`-orthonormal basis of `H`
//! together with the images of that basis under `ı_m`. The real metric on that space
//! is fixed by `ℜ⟨h, ı_m h′⟩ = −β(h, h′)`.
//!
//! Agreement between the two sides is a consistency check, not a convergence proof.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::entropy_ball;
use crate::error::{Error, Result};
use crate::field::{inner_product, mu_apply_tol, CauchyData};
use crate::grid::{Ball, GridSpec};
use crate::massive::{apply_kmb_tol, quadratic_form_massive_tol};
use crate::modular::{
    modular_data_tol, projection_p, vector_entropy, ModularData, StandardSubspace, SymplecticReduction,
};
use crate::tolerances::Tolerances;
use crate::wavespec::bump;

use std::f64::consts::PI;

/// Largest accepted basis size per Cauchy component.
pub const MAX_BASIS: usize = 100;
/// Grid cells between the basis support and the ball boundary.
pub const MARGIN_CELLS: f64 = 2.0;
/// Softness `ε` of the envelope `exp(−ε/(1 − x²))`.
pub const ENVELOPE_SOFTNESS: f64 = 0.1;
/// Cap on the symplectic singular values; modes beyond double precision saturate here.
pub const NU_CEILING: f64 = 1.0 - 1e-13;
pub const REPORT_NOTE: &str = "consistency check, not a convergence proof";

/// `T_i(2x² − 1)·exp(−ε/(1 − x²))` with `x = r/ρ`, `i = 0..n`.
pub fn shell_basis(radii: &[f64], rho: f64, n: usize) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::with_capacity(radii.len()); n];
    for &r in radii {
        let x = r / rho;
        let env = if x < 1.0 { (-ENVELOPE_SOFTNESS / (1.0 - x * x)).exp() } else { 0.0 };
        let y = 2.0 * x * x - 1.0;
        let (mut t0, mut t1) = (1.0, y);
        for (i, col) in out.iter_mut().enumerate() {
            let t = match i {
                0 => t0,
                1 => t1,
                _ => {
                    let t2 = 2.0 * y * t1 - t0;
                    t0 = t1;
                    t1 = t2;
                    t2
                }
            };
            col.push(t * env);
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct DiscretizedSubspace {
    pub grid: GridSpec,
    pub m: f64,
    pub ball_radius: f64,
    /// Radius of the basis support.
    pub support_radius: f64,
    pub basis: Vec<Vec<f64>>,
    /// `ℜ`-Gram matrix of the `2n` spanning vectors.
    pub gram: DMatrix<f64>,
    /// `β` on the spanning vectors.
    pub beta: DMatrix<f64>,
    pub reduction: SymplecticReduction,
    pub subspace: StandardSubspace,
    pub modular: ModularData,
}

pub fn build_discretized(grid: &GridSpec, m: f64, ball_radius: f64, n_basis: usize) -> Result<DiscretizedSubspace> {
    build_discretized_tol(grid, m, ball_radius, n_basis, &Tolerances::default())
}

pub fn build_discretized_tol(
    grid: &GridSpec,
    m: f64,
    ball_radius: f64,
    n_basis: usize,
    tol: &Tolerances,
) -> Result<DiscretizedSubspace> {
    if !grid.is_radial() {
        return Err(Error::UnsupportedMode("the oracle discretizes radial3d grids only".into()));
    }
    if n_basis == 0 || n_basis > MAX_BASIS {
        return Err(Error::Config(format!("nBasis must be in 1..={MAX_BASIS}, got {n_basis}")));
    }
    if !(m >= 0.0) || !m.is_finite() {
        return Err(Error::Config(format!("mass must be finite and non-negative, got {m}")));
    }
    grid.check_ball(&Ball::centered(ball_radius, 3))?;
    let rho = ball_radius - MARGIN_CELLS * grid.spacing();
    if rho <= 0.0 {
        return Err(Error::BallOutsideGrid { radius: ball_radius, center: vec![0.0; 3] });
    }
    let basis = shell_basis(&grid.radii(), rho, n_basis);
    let up: Vec<Vec<f64>> = basis.iter().map(|b| mu_apply_tol(grid, b, m, 1.0, tol)).collect::<Result<_>>()?;
    let down: Vec<Vec<f64>> =
        basis.iter().map(|b| mu_apply_tol(grid, b, m, -1.0, tol)).collect::<Result<_>>()?;

    let n = n_basis;
    let mut gram = DMatrix::zeros(2 * n, 2 * n);
    let mut beta = DMatrix::zeros(2 * n, 2 * n);
    for a in 0..n {
        for b in 0..n {
            gram[(a, b)] = 0.25 * (grid.dot(&basis[a], &up[b]) + grid.dot(&basis[b], &up[a]));
            gram[(n + a, n + b)] = 0.25 * (grid.dot(&basis[a], &down[b]) + grid.dot(&basis[b], &down[a]));
            let overlap = 0.5 * grid.dot(&basis[a], &basis[b]);
            beta[(a, n + b)] = -overlap;
            beta[(n + a, b)] = overlap;
        }
    }
    let reduction = SymplecticReduction::new(&gram, &beta, tol.gram_condition, NU_CEILING);
    let t = &reduction.transform;
    let orth = (t.transpose() * &gram * t - DMatrix::identity(t.ncols(), t.ncols())).norm();
    if reduction.kept() == 0 || orth > 1e-6 {
        return Err(Error::IllConditioned { cond: reduction.condition });
    }
    let subspace = reduction.ambient(tol)?;
    let modular = modular_data_tol(&subspace, tol);
    Ok(DiscretizedSubspace {
        grid: grid.clone(),
        m,
        ball_radius,
        support_radius: rho,
        basis,
        gram,
        beta,
        reduction,
        subspace,
        modular,
    })
}

/// A fixture projected onto the truncated subspace.
#[derive(Debug, Clone)]
pub struct Projection {
    /// Coefficients on the `2n` spanning vectors.
    pub coeffs: DVector<f64>,
    /// The projected vector in the ambient coordinates of [`DiscretizedSubspace::subspace`].
    pub ambient: DVector<f64>,
    pub field: CauchyData,
    /// `‖Φ − Φ_P‖/‖Φ‖` in the real norm.
    pub residual: f64,
}

impl DiscretizedSubspace {
    pub fn n_basis(&self) -> usize {
        self.basis.len()
    }

    pub fn condition(&self) -> f64 {
        self.reduction.condition
    }

    pub fn support_ball(&self) -> Ball {
        Ball::centered(self.support_radius, 3)
    }

    fn synthesize(&self, c: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for (a, b) in c.iter().zip(&self.basis) {
            for (o, v) in out.iter_mut().zip(b) {
                *o += a * v;
            }
        }
        out
    }

    /// `ℜ`-orthogonal projection onto the span, rejecting fixtures it misses by more
    /// than `tol.projection_residual`.
    pub fn project(&self, phi: &CauchyData, tol: &Tolerances) -> Result<Projection> {
        if phi.grid != self.grid || phi.m != self.m {
            return Err(Error::GridMismatch);
        }
        let n = self.n_basis();
        let load = |x: &[f64], power: f64| -> Result<Vec<f64>> {
            let w = mu_apply_tol(&self.grid, x, self.m, power, tol)?;
            Ok(self.basis.iter().map(|b| 0.5 * self.grid.dot(b, &w)).collect())
        };
        let mut rhs = load(&phi.f, 1.0)?;
        rhs.extend(load(&phi.g, -1.0)?);
        let rhs = DVector::from_vec(rhs);
        let red = &self.reduction;
        let z = red.transform.transpose() * &rhs;
        let coeffs = &red.transform * &z;
        let field = CauchyData::new(
            self.grid.clone(),
            self.synthesize(&coeffs.as_slice()[..n]),
            self.synthesize(&coeffs.as_slice()[n..]),
            self.m,
        )?;
        let norm = inner_product(phi, phi)?.re;
        let miss = inner_product(&phi.sub(&field)?, &phi.sub(&field)?)?.re;
        let residual = if norm > 0.0 { (miss.max(0.0) / norm).sqrt() } else { 0.0 };
        if residual > tol.projection_residual {
            return Err(Error::ProjectionResidualTooLarge { residual, limit: tol.projection_residual });
        }
        let ambient = red.embed(&self.subspace, &z);
        Ok(Projection { coeffs, ambient, field, residual })
    }

    /// `−ℜ(x, logΔ x)` in the truncated ambient space.
    pub fn log_delta_form(&self, x: &DVector<f64>) -> f64 {
        let amb = &self.subspace.ambient;
        -amb.re(x, &(self.modular.log_delta() * x))
    }

    /// `max |Pₕx − x|/|x|` over the given ambient vectors, with `Pₕ` the cutting projection.
    pub fn cutting_identity_residual(&self, xs: &[DVector<f64>]) -> Result<f64> {
        let p = projection_p(&self.modular)?;
        Ok(xs
            .iter()
            .filter(|x| x.norm() > 0.0)
            .map(|x| (&p * x - x).norm() / x.norm())
            .fold(0.0, f64::max))
    }
}

impl DiscretizedSubspace {
    /// `‖[Δ^{is}, ı_m K]‖/‖ı_m K‖` with `K` the Galerkin compression of `K_m^B` to the
    /// factorial part of the truncation, extended complex-linearly to the ambient space.
    pub fn generator_commutator(&self, s: f64, xs: &[DVector<f64>], tol: &Tolerances) -> Result<f64> {
        let n = self.n_basis();
        let ball = self.support_ball();
        let zero = vec![0.0; self.grid.len()];
        let mut kspan = DMatrix::zeros(2 * n, 2 * n);
        for j in 0..2 * n {
            let (f, g) = if j < n { (self.basis[j].clone(), zero.clone()) } else { (zero.clone(), self.basis[j - n].clone()) };
            let kv = apply_kmb_tol(&CauchyData::new(self.grid.clone(), f, g, self.m)?, &ball, tol)?;
            let uf = mu_apply_tol(&self.grid, &kv.f, self.m, 1.0, tol)?;
            let dg = mu_apply_tol(&self.grid, &kv.g, self.m, -1.0, tol)?;
            for a in 0..n {
                kspan[(a, j)] = 0.5 * self.grid.dot(&self.basis[a], &uf);
                kspan[(n + a, j)] = 0.5 * self.grid.dot(&self.basis[a], &dg);
            }
        }
        let red = &self.reduction;
        let km = red.modes.transpose() * red.transform.transpose() * kspan * &red.transform * &red.modes;
        let idx: Vec<usize> = red.pairs.iter().flat_map(|&p| [p, p + 1]).collect();
        let dim = idx.len();
        let kh = DMatrix::from_fn(dim, dim, |r, c| km[(idx[r], idx[c])]);
        let amb = &self.subspace.ambient;
        let b = &self.subspace.basis;
        let w = crate::modular::hstack(b, &(&amb.j * b));
        let mut blocks = DMatrix::zeros(2 * dim, 2 * dim);
        blocks.view_mut((0, 0), (dim, dim)).copy_from(&kh);
        blocks.view_mut((dim, dim), (dim, dim)).copy_from(&kh);
        let winv = w.clone().try_inverse().ok_or(Error::IllConditioned { cond: self.subspace.condition })?;
        let a = &amb.j * (&w * blocks * winv);
        let u = self.modular.delta_it(&amb.j, s);
        let c = &u * &a - &a * &u;
        Ok(xs
            .iter()
            .map(|x| (&c * x).norm() / (&a * x).norm().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FixtureDeviation {
    /// Truncated side.
    pub q1: f64,
    /// Closed-form side.
    pub q2: f64,
    pub deviation: f64,
    pub projection_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CrosscheckReport {
    pub m: f64,
    pub n_basis: usize,
    pub kept: usize,
    pub condition: f64,
    pub fixtures: Vec<FixtureDeviation>,
    pub median_deviation: f64,
}

fn relative_deviation(q1: f64, q2: f64) -> f64 {
    if q1 == q2 {
        0.0
    } else {
        (q1 - q2).abs() / q2.abs().max(f64::MIN_POSITIVE)
    }
}

/// Median with the two central values averaged for even counts.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    if v.len() % 2 == 1 {
        v[k]
    } else {
        0.5 * (v[k - 1] + v[k])
    }
}

fn crosscheck(
    ds: &DiscretizedSubspace,
    fixtures: &[CauchyData],
    tol: &Tolerances,
    sides: impl Fn(&Projection) -> Result<(f64, f64)>,
) -> Result<CrosscheckReport> {
    let mut rows = Vec::with_capacity(fixtures.len());
    for phi in fixtures {
        let p = ds.project(phi, tol)?;
        let (q1, q2) = sides(&p)?;
        rows.push(FixtureDeviation { q1, q2, deviation: relative_deviation(q1, q2), projection_residual: p.residual });
    }
    let devs: Vec<f64> = rows.iter().map(|r| r.deviation).collect();
    Ok(CrosscheckReport {
        m: ds.m,
        n_basis: ds.n_basis(),
        kept: ds.reduction.kept(),
        condition: ds.condition(),
        median_deviation: median(&devs),
        fixtures: rows,
    })
}

/// `q₁ = −ℜ(Φ, logΔ_B Φ)` on the truncation against `q₂ = 2π·quadratic_form_massive(Φ)`.
pub fn crosscheck_hamiltonian(ds: &DiscretizedSubspace, fixtures: &[CauchyData]) -> Result<CrosscheckReport> {
    crosscheck_hamiltonian_tol(ds, fixtures, &Tolerances::default())
}

pub fn crosscheck_hamiltonian_tol(
    ds: &DiscretizedSubspace,
    fixtures: &[CauchyData],
    tol: &Tolerances,
) -> Result<CrosscheckReport> {
    let ball = ds.support_ball();
    crosscheck(ds, fixtures, tol, |p| {
        let q1 = ds.log_delta_form(&p.ambient);
        let q2 = 2.0 * PI * quadratic_form_massive_tol(&p.field, &ball, tol)?.total;
        Ok((q1, q2))
    })
}

/// Abstract vector entropy on the truncation against `entropy_ball` at `t = 0`.
pub fn crosscheck_entropy(ds: &DiscretizedSubspace, fixtures: &[CauchyData]) -> Result<CrosscheckReport> {
    crosscheck_entropy_tol(ds, fixtures, &Tolerances::default())
}

pub fn crosscheck_entropy_tol(
    ds: &DiscretizedSubspace,
    fixtures: &[CauchyData],
    tol: &Tolerances,
) -> Result<CrosscheckReport> {
    let ball = ds.support_ball();
    crosscheck(ds, fixtures, tol, |p| {
        let q1 = vector_entropy(&ds.subspace, &ds.modular, &p.ambient)?;
        let q2 = entropy_ball(&p.field, &ball, 0.0)?.total;
        Ok((q1, q2))
    })
}

/// Four radial fixtures supported in the unit ball.
pub fn default_fixtures(grid: &GridSpec, m: f64) -> Result<Vec<CauchyData>> {
    let r = grid.radii();
    let zero = vec![0.0; r.len()];
    let map = |f: &dyn Fn(f64) -> f64| r.iter().map(|&x| f(x)).collect::<Vec<f64>>();
    let pairs = [
        (map(&|x| bump(x / 0.9)), zero.clone()),
        (zero.clone(), map(&|x| bump(x / 0.85) * (1.0 - x * x))),
        (map(&|x| bump(x / 0.9) * (1.0 + x * x)), map(&|x| 0.5 * bump(x / 0.8))),
        (map(&|x| bump(x / 0.95)), zero),
    ];
    pairs.into_iter().map(|(f, g)| CauchyData::new(grid.clone(), f, g, m)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RefinementCell {
    pub m: f64,
    pub n_basis: usize,
    pub kept: usize,
    pub condition: f64,
    pub hamiltonian: CrosscheckReport,
    pub entropy: CrosscheckReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RefinementTrend {
    pub m: f64,
    pub n_basis: Vec<usize>,
    pub median_deviation: Vec<f64>,
    pub strictly_decreasing: bool,
    /// Median at the reference size against the threshold.
    pub within_threshold: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RefinementReport {
    pub note: String,
    pub grid: GridSpec,
    pub ball_radius: f64,
    pub reference_n_basis: usize,
    pub threshold: f64,
    pub cells: Vec<RefinementCell>,
    pub trends: Vec<RefinementTrend>,
}

impl RefinementReport {
    pub fn passes(&self) -> bool {
        self.trends.iter().all(|t| t.strictly_decreasing && t.within_threshold)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RefinementConfig {
    pub grid: GridSpec,
    pub ball_radius: f64,
    pub masses: Vec<f64>,
    pub n_basis: Vec<usize>,
    pub reference_n_basis: usize,
    pub threshold: f64,
}

impl Default for RefinementConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec::Radial { r_max: 8.0, n: 2048 },
            ball_radius: 1.0,
            masses: vec![0.0, 1.0],
            n_basis: vec![12, 24, 48],
            reference_n_basis: 24,
            threshold: 0.05,
        }
    }
}

/// Cross-checks every `(m, nBasis)` cell on [`default_fixtures`], cells in parallel.
pub fn refinement_report(cfg: &RefinementConfig, tol: &Tolerances) -> Result<RefinementReport> {
    let jobs: Vec<(f64, usize)> =
        cfg.masses.iter().flat_map(|&m| cfg.n_basis.iter().map(move |&n| (m, n))).collect();
    let cells: Vec<RefinementCell> = jobs
        .par_iter()
        .map(|&(m, n)| {
            let ds = build_discretized_tol(&cfg.grid, m, cfg.ball_radius, n, tol)?;
            let fixtures = default_fixtures(&cfg.grid, m)?;
            Ok(RefinementCell {
                m,
                n_basis: n,
                kept: ds.reduction.kept(),
                condition: ds.condition(),
                hamiltonian: crosscheck_hamiltonian_tol(&ds, &fixtures, tol)?,
                entropy: crosscheck_entropy_tol(&ds, &fixtures, tol)?,
            })
        })
        .collect::<Result<_>>()?;
    let trends = cfg
        .masses
        .iter()
        .map(|&m| {
            let row: Vec<&RefinementCell> = cells.iter().filter(|c| c.m == m).collect();
            let medians: Vec<f64> = row.iter().map(|c| c.hamiltonian.median_deviation).collect();
            let reference = row
                .iter()
                .find(|c| c.n_basis == cfg.reference_n_basis)
                .map_or(f64::INFINITY, |c| c.hamiltonian.median_deviation);
            RefinementTrend {
                m,
                n_basis: row.iter().map(|c| c.n_basis).collect(),
                strictly_decreasing: medians.windows(2).all(|w| w[1] < w[0]),
                within_threshold: reference <= cfg.threshold,
                median_deviation: medians,
            }
        })
        .collect();
    Ok(RefinementReport {
        note: REPORT_NOTE.into(),
        grid: cfg.grid.clone(),
        ball_radius: cfg.ball_radius,
        reference_n_basis: cfg.reference_n_basis,
        threshold: cfg.threshold,
        cells,
        trends,
    })
}
