//! Fourier and sine-series machinery behind every multiplier and derivative.
//!
//! Radial fields `f(r)` are handled through `u = r·f`, expanded as
//! `u(r) = Σ_k b_k sin(p_k r)` with `p_k = π(k+1)/R_max`. A radial Fourier
//! multiplier `m(|p|)` on `f` is the same multiplier on the sine coefficients of `u`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustdct::{DctPlanner, TransformType2And3};
use rustfft::{Fft, FftPlanner};

use crate::grid::GridSpec;

thread_local! {
    static DCT: RefCell<HashMap<usize, Arc<dyn TransformType2And3<f64>>>> = RefCell::new(HashMap::new());
    static FFT: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn dct_plan(n: usize) -> Arc<dyn TransformType2And3<f64>> {
    DCT.with(|c| {
        c.borrow_mut()
            .entry(n)
            .or_insert_with(|| DctPlanner::new().plan_dst2(n))
            .clone()
    })
}

fn fft_plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    FFT.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// `u(r) = Σ_k b_k sin((k+1)·dp·r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SineSeries {
    pub coeffs: Vec<f64>,
    pub dp: f64,
}

impl SineSeries {
    /// Sine coefficients of samples `u_j = u(r_j)` on a radial grid.
    pub fn analyze(r_max: f64, u: &[f64]) -> Self {
        let n = u.len();
        let mut b = u.to_vec();
        dct_plan(n).process_dst2(&mut b);
        let s = 2.0 / n as f64;
        for v in b.iter_mut() {
            *v *= s;
        }
        b[n - 1] *= 0.5;
        Self { coeffs: b, dp: std::f64::consts::PI / r_max }
    }

    pub fn wavenumber(&self, k: usize) -> f64 {
        (k + 1) as f64 * self.dp
    }

    pub fn synthesize(&self) -> Vec<f64> {
        let n = self.coeffs.len();
        let mut x = self.coeffs.clone();
        x[n - 1] *= 2.0;
        dct_plan(n).process_dst3(&mut x);
        x
    }

    /// `u′` at the grid points.
    pub fn derivative_samples(&self) -> Vec<f64> {
        let n = self.coeffs.len();
        let mut c = vec![0.0; n];
        for k in 0..n - 1 {
            c[k + 1] = self.coeffs[k] * self.wavenumber(k);
        }
        dct_plan(n).process_dct3(&mut c);
        c
    }

    pub fn map(&self, m: impl Fn(f64) -> f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, b)| b * m(self.wavenumber(k)))
            .collect();
        Self { coeffs, dp: self.dp }
    }

    /// `(u(r), u′(r))` at an arbitrary radius.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        let th = self.dp * r;
        let step = Complex64::new(th.cos(), th.sin());
        let mut z = step;
        let (mut u, mut du) = (0.0, 0.0);
        for (k, b) in self.coeffs.iter().enumerate() {
            if k % 64 == 63 {
                let a = (k + 1) as f64 * th;
                z = Complex64::new(a.cos(), a.sin());
            }
            u += b * z.im;
            du += b * self.wavenumber(k) * z.re;
            z *= step;
        }
        (u, du)
    }

    /// Field value `f = u/r` and radial derivative `f′ = (u′ − f)/r`.
    pub fn eval_field(&self, r: f64) -> (f64, f64) {
        let (u, du) = self.eval(r);
        let f = u / r;
        (f, (du - f) / r)
    }
}

/// Sine series of `u = r·f` for a radial field.
pub fn radial_series(grid: &GridSpec, f: &[f64]) -> SineSeries {
    let u: Vec<f64> = f.iter().enumerate().map(|(i, v)| v * grid.radius(i)).collect();
    SineSeries::analyze(grid.extent(), &u)
}

pub fn from_radial_series(grid: &GridSpec, s: &SineSeries) -> Vec<f64> {
    s.synthesize()
        .iter()
        .enumerate()
        .map(|(i, u)| u / grid.radius(i))
        .collect()
}

/// In-place multidimensional FFT over `d` axes of length `n`, unnormalized.
pub fn fftn(data: &mut [Complex64], n: usize, d: usize, inverse: bool) {
    let plan = fft_plan(n, inverse);
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..d {
        let stride = n.pow((d - 1 - axis) as u32);
        let block = stride * n;
        for base in (0..data.len()).step_by(block) {
            for inner in 0..stride {
                for (k, v) in line.iter_mut().enumerate() {
                    *v = data[base + k * stride + inner];
                }
                plan.process(&mut line);
                for (k, v) in line.iter().enumerate() {
                    data[base + k * stride + inner] = *v;
                }
            }
        }
    }
}

/// Signed wavenumber index on an axis of length `n`.
pub fn wave_index(k: usize, n: usize) -> i64 {
    if k < n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Applies a multiplier `m(p)` on a Cartesian grid. With `odd` set, Nyquist modes are zeroed.
pub fn cartesian_multiplier(
    grid: &GridSpec,
    f: &[f64],
    odd: bool,
    m: impl Fn(&[f64]) -> Complex64,
) -> Vec<f64> {
    let (d, l, n) = match *grid {
        GridSpec::Cartesian { d, l, n } => (d, l, n),
        GridSpec::Radial { .. } => unreachable!("cartesian grid required"),
    };
    let mut z: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fftn(&mut z, n, d, false);
    let dp = std::f64::consts::PI / l;
    let mut p = vec![0.0; d];
    for (i, v) in z.iter_mut().enumerate() {
        let mut rem = i;
        let mut nyq = false;
        for a in (0..d).rev() {
            let k = rem % n;
            rem /= n;
            nyq |= k == n / 2;
            p[a] = dp * wave_index(k, n) as f64;
        }
        *v *= if odd && nyq { Complex64::new(0.0, 0.0) } else { m(&p) };
    }
    fftn(&mut z, n, d, true);
    let s = 1.0 / z.len() as f64;
    z.iter().map(|c| c.re * s).collect()
}

/// Multiplier depending only on `|p|`.
pub fn apply_multiplier(grid: &GridSpec, f: &[f64], m: impl Fn(f64) -> f64) -> Vec<f64> {
    match grid {
        GridSpec::Radial { .. } => from_radial_series(grid, &radial_series(grid, f).map(m)),
        GridSpec::Cartesian { .. } => cartesian_multiplier(grid, f, false, |p| {
            Complex64::new(m(p.iter().map(|x| x * x).sum::<f64>().sqrt()), 0.0)
        }),
    }
}

pub fn laplacian(grid: &GridSpec, f: &[f64]) -> Vec<f64> {
    apply_multiplier(grid, f, |p| -p * p)
}

/// Gradient components; radial grids return the single component `∂_r f`.
pub fn gradient(grid: &GridSpec, f: &[f64]) -> Vec<Vec<f64>> {
    match *grid {
        GridSpec::Radial { .. } => {
            let s = radial_series(grid, f);
            let du = s.derivative_samples();
            vec![(0..f.len())
                .map(|i| {
                    let r = grid.radius(i);
                    (du[i] - f[i]) / r
                })
                .collect()]
        }
        GridSpec::Cartesian { d, .. } => (0..d)
            .map(|a| cartesian_multiplier(grid, f, true, |p| Complex64::new(0.0, p[a])))
            .collect(),
    }
}

/// `(x − c)·∇f`; on radial grids `c` must be the origin and this is `r ∂_r f`.
pub fn x_dot_grad(grid: &GridSpec, f: &[f64], center: &[f64]) -> Vec<f64> {
    let gr = gradient(grid, f);
    match grid {
        GridSpec::Radial { .. } => gr[0].iter().enumerate().map(|(i, v)| grid.radius(i) * v).collect(),
        GridSpec::Cartesian { .. } => (0..f.len())
            .map(|i| {
                let x = grid.point(i);
                (0..x.len()).map(|a| (x[a] - center[a]) * gr[a][i]).sum()
            })
            .collect(),
    }
}

/// Pointwise `∇f₁·∇f₂`.
pub fn grad_dot(grid: &GridSpec, f1: &[f64], f2: &[f64]) -> Vec<f64> {
    let a = gradient(grid, f1);
    let b = gradient(grid, f2);
    (0..f1.len()).map(|i| a.iter().zip(&b).map(|(x, y)| x[i] * y[i]).sum()).collect()
}

/// Spectral interpolant of `f` and its gradient at an arbitrary point; radial grids
/// take `x = (r)` and return `(f(r), [∂_r f(r)])`, with the limit value at `r = 0`.
pub fn point_eval(grid: &GridSpec, f: &[f64], x: &[f64]) -> (f64, Vec<f64>) {
    match *grid {
        GridSpec::Radial { .. } => {
            let s = radial_series(grid, f);
            let r = x[0].abs();
            if r < 1e-12 {
                let v = s.coeffs.iter().enumerate().map(|(k, b)| b * s.wavenumber(k)).sum();
                return (v, vec![0.0]);
            }
            let (v, dv) = s.eval_field(r);
            (v, vec![dv])
        }
        GridSpec::Cartesian { d, l, n } => {
            let mut z: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            fftn(&mut z, n, d, false);
            let dp = std::f64::consts::PI / l;
            let scale = 1.0 / z.len() as f64;
            let (mut val, mut grad) = (0.0, vec![0.0; d]);
            let mut p = vec![0.0; d];
            for (i, c) in z.iter().enumerate() {
                let mut rem = i;
                let mut nyq = false;
                for a in (0..d).rev() {
                    let k = rem % n;
                    rem /= n;
                    nyq |= k == n / 2;
                    p[a] = dp * wave_index(k, n) as f64;
                }
                if nyq {
                    continue;
                }
                let phase: f64 = (0..d).map(|a| p[a] * (x[a] + l)).sum();
                let e = c * Complex64::new(phase.cos(), phase.sin()) * scale;
                val += e.re;
                for a in 0..d {
                    grad[a] -= p[a] * e.im;
                }
            }
            (val, grad)
        }
    }
}
