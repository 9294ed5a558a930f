//! Finite-dimensional standard subspaces and their modular data.
//!
//! A complex space of dimension `n` is stored through its real form: a
//! complex structure `J` and the real part `g` of the scalar product, both
//! `2n × 2n`. The scalar product is linear in the second slot,
//! `⟨x, y⟩ = g(x, y) + i β(x, y)` with `β(x, y) = g(Jx, y)`.
//!
//! Operators are real matrices. Complex-linear ones commute with `J`,
//! antilinear ones anticommute with it.

use nalgebra::{DMatrix, DVector, Dyn, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerances::Tolerances;

#[derive(Debug, Clone)]
pub struct ComplexSpace {
    pub n: usize,
    pub j: DMatrix<f64>,
    pub g: DMatrix<f64>,
    g_half: DMatrix<f64>,
    g_half_inv: DMatrix<f64>,
}

/// Symmetric square root and inverse square root of an SPD matrix.
fn spd_sqrt(g: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let eig = sym_eigen(g);
    let max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    if eig.eigenvalues.iter().any(|&l| l <= max * 1e-15) {
        return Err(Error::InvalidAmbient("metric is not positive definite".into()));
    }
    let v = &eig.eigenvectors;
    let s = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let si = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    Ok((v * s * v.transpose(), v * si * v.transpose()))
}

pub(crate) fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Symmetric eigendecomposition with a reconstruction check.
///
/// The QR iteration can stall on spectra made of `±λ` pairs; the retry shifts the
/// spectrum off zero, which breaks the symmetry.
pub(crate) fn sym_eigen(a: &DMatrix<f64>) -> SymmetricEigen<f64, Dyn> {
    let a = sym(a);
    let scale = a.norm().max(f64::MIN_POSITIVE);
    let good = |e: &SymmetricEigen<f64, Dyn>, m: &DMatrix<f64>| {
        (m * &e.eigenvectors - &e.eigenvectors * DMatrix::from_diagonal(&e.eigenvalues)).norm() <= 1e-11 * scale
    };
    let eig = SymmetricEigen::new(a.clone());
    if good(&eig, &a) {
        return eig;
    }
    for c in [0.5377, 1.7312, -0.9133] {
        let shift = c * scale;
        let shifted = &a + DMatrix::identity(a.nrows(), a.nrows()) * shift;
        let mut e = SymmetricEigen::new(shifted.clone());
        if good(&e, &shifted) {
            e.eigenvalues.iter_mut().for_each(|l| *l -= shift);
            return e;
        }
    }
    eig
}

#[cfg(test)]
fn rel_norm(m: &DMatrix<f64>, scale: &DMatrix<f64>) -> f64 {
    m.norm() / scale.norm().max(f64::MIN_POSITIVE)
}


impl ComplexSpace {
    /// `ℂⁿ` with `x = (Re z, Im z)` and the Euclidean metric.
    pub fn standard(n: usize) -> Self {
        let mut j = DMatrix::zeros(2 * n, 2 * n);
        for k in 0..n {
            j[(n + k, k)] = 1.0;
            j[(k, n + k)] = -1.0;
        }
        let id = DMatrix::identity(2 * n, 2 * n);
        Self { n, j, g: id.clone(), g_half: id.clone(), g_half_inv: id }
    }

    pub fn new(j: DMatrix<f64>, g: DMatrix<f64>, tol: &Tolerances) -> Result<Self> {
        let dim = j.nrows();
        if dim % 2 != 0 || j.ncols() != dim || g.nrows() != dim || g.ncols() != dim {
            return Err(Error::InvalidAmbient("J and g must be square of even size".into()));
        }
        let id = DMatrix::<f64>::identity(dim, dim);
        let jj = &j * &j + &id;
        if jj.norm() > tol.complex_structure * dim as f64 {
            return Err(Error::InvalidAmbient(format!("J*J + I has norm {:.3e}", jj.norm())));
        }
        if (&g - g.transpose()).norm() > tol.complex_structure * g.norm() {
            return Err(Error::InvalidAmbient("g is not symmetric".into()));
        }
        let compat = j.transpose() * &g * &j - &g;
        if compat.norm() > tol.complex_structure * g.norm() * dim as f64 {
            return Err(Error::InvalidAmbient(format!("g(Jx,Jy) != g(x,y): {:.3e}", compat.norm())));
        }
        let (g_half, g_half_inv) = spd_sqrt(&g)?;
        Ok(Self { n: dim / 2, j, g, g_half, g_half_inv })
    }

    /// Standard `J` with metric `Pᵀ P` for a random complex-linear `P`.
    pub fn random_metric(n: usize, rng: &mut ChaCha8Rng) -> Self {
        let base = Self::standard(n);
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let mut p = DMatrix::zeros(2 * n, 2 * n);
        for r in 0..n {
            for c in 0..n {
                let (ar, bi) = (a[(r, c)] + if r == c { 2.0 } else { 0.0 }, b[(r, c)]);
                p[(r, c)] = ar;
                p[(r, n + c)] = -bi;
                p[(n + r, c)] = bi;
                p[(n + r, n + c)] = ar;
            }
        }
        let g = sym(&(p.transpose() * &p));
        Self::new(base.j, g, &Tolerances::default()).expect("complex-linear metric")
    }

    pub fn real_dim(&self) -> usize {
        2 * self.n
    }

    pub fn re(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        x.dot(&(&self.g * y))
    }

    pub fn beta(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (&self.j * x).dot(&(&self.g * y))
    }

    pub fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> Complex64 {
        Complex64::new(self.re(x, y), self.beta(x, y))
    }

    /// Real adjoint with respect to `g`.
    pub fn adjoint(&self, t: &DMatrix<f64>) -> DMatrix<f64> {
        let gi = &self.g_half_inv * &self.g_half_inv;
        gi * t.transpose() * &self.g
    }

    pub fn to_white(&self, t: &DMatrix<f64>) -> DMatrix<f64> {
        &self.g_half * t * &self.g_half_inv
    }

    pub fn from_white(&self, t: &DMatrix<f64>) -> DMatrix<f64> {
        &self.g_half_inv * t * &self.g_half
    }

    /// Functional calculus of a `g`-symmetric operator.
    pub fn sym_func(&self, a: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let eig = sym_eigen(&self.to_white(a));
        let v = &eig.eigenvectors;
        let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
        self.from_white(&(v * d * v.transpose()))
    }

    /// `exp(s J A)` for complex-linear selfadjoint `A`.
    pub fn unitary_group(&self, a: &DMatrix<f64>, s: f64) -> DMatrix<f64> {
        let c = self.sym_func(a, |l| (s * l).cos());
        let sn = self.sym_func(a, |l| (s * l).sin());
        c + &self.j * sn
    }

    /// A `⟨·,·⟩`-orthonormal complex basis, each vector given in real form.
    pub fn complex_basis(&self) -> Vec<DVector<f64>> {
        let dim = self.real_dim();
        let mut out: Vec<DVector<f64>> = Vec::with_capacity(self.n);
        for c in 0..dim {
            if out.len() == self.n {
                break;
            }
            let mut v = DVector::zeros(dim);
            v[c] = 1.0;
            for _ in 0..2 {
                for e in &out {
                    let z = self.inner(e, &v);
                    v -= e * z.re + (&self.j * e) * z.im;
                }
            }
            let nv = self.re(&v, &v).sqrt();
            if nv > 1e-8 {
                out.push(v / nv);
            }
        }
        out
    }

    pub fn to_complex(&self, basis: &[DVector<f64>], x: &DVector<f64>) -> Vec<Complex64> {
        basis.iter().map(|e| self.inner(e, x)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct StandardSubspace {
    pub ambient: ComplexSpace,
    pub basis: DMatrix<f64>,
    pub condition: f64,
}

pub fn make_standard_subspace(ambient: ComplexSpace, basis: DMatrix<f64>) -> Result<StandardSubspace> {
    make_standard_subspace_tol(ambient, basis, &Tolerances::default())
}

pub fn make_standard_subspace_tol(
    ambient: ComplexSpace,
    basis: DMatrix<f64>,
    tol: &Tolerances,
) -> Result<StandardSubspace> {
    let dim = ambient.real_dim();
    if basis.nrows() != dim || basis.ncols() != ambient.n {
        return Err(Error::InvalidAmbient(format!(
            "basis must be {}x{}, got {}x{}",
            dim,
            ambient.n,
            basis.nrows(),
            basis.ncols()
        )));
    }
    let w = ambient.g_half.clone() * hstack(&basis, &(&ambient.j * &basis));
    let sv = w.singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let rank = sv.iter().filter(|&&s| s > tol.rank * smax).count();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if rank < dim {
        return Err(Error::RankDeficient { rank, expected: dim, cond });
    }
    Ok(StandardSubspace { ambient, basis, condition: cond })
}

pub(crate) fn hstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    m.columns_mut(0, a.ncols()).copy_from(a);
    m.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    m
}

/// Seeded random standard subspace, retrying on rank deficiency.
pub fn random_subspace(ambient: &ComplexSpace, rng: &mut ChaCha8Rng) -> StandardSubspace {
    loop {
        let b = DMatrix::from_fn(ambient.real_dim(), ambient.n, |_, _| rng.gen_range(-1.0..1.0));
        let q = b.qr().q();
        if let Ok(h) = make_standard_subspace(ambient.clone(), q) {
            return h;
        }
    }
}

impl StandardSubspace {
    /// `g`-orthogonal projector onto `H`.
    pub fn projector(&self) -> DMatrix<f64> {
        let b = &self.basis;
        let gram = b.transpose() * &self.ambient.g * b;
        let inv = gram.try_inverse().expect("basis is independent");
        b * inv * b.transpose() * &self.ambient.g
    }

    /// Random vector of `H`.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> DVector<f64> {
        let c = DVector::from_fn(self.basis.ncols(), |_, _| rng.gen_range(-1.0..1.0));
        &self.basis * c
    }

    /// Random vector of `H′ = (iH)^⊥`.
    pub fn sample_complement(&self, rng: &mut ChaCha8Rng) -> DVector<f64> {
        let x = DVector::from_fn(self.ambient.real_dim(), |_, _| rng.gen_range(-1.0..1.0));
        let ih = StandardSubspace {
            ambient: self.ambient.clone(),
            basis: &self.ambient.j * &self.basis,
            condition: self.condition,
        };
        &x - ih.projector() * &x
    }

    /// Tomita operator `h + ik ↦ h − ik`.
    pub fn tomita(&self) -> DMatrix<f64> {
        let n = self.ambient.n;
        let w = hstack(&self.basis, &(&self.ambient.j * &self.basis));
        let mut d = DMatrix::identity(2 * n, 2 * n);
        for k in n..2 * n {
            d[(k, k)] = -1.0;
        }
        let winv = w.clone().try_inverse().expect("standard subspace");
        w * d * winv
    }
}

#[derive(Debug, Clone)]
pub struct ModularData {
    pub tomita: DMatrix<f64>,
    pub delta: DMatrix<f64>,
    pub jconj: DMatrix<f64>,
    /// Eigenvalues of `Δ`, ascending, each complex eigenvalue repeated twice.
    pub eigenvalues: Vec<f64>,
    /// `g`-orthonormal real eigenvectors of `Δ` (columns).
    pub eigenvectors: DMatrix<f64>,
    pub spectral_gap: f64,
    pub factorial: bool,
    g: DMatrix<f64>,
}

pub fn modular_data(h: &StandardSubspace) -> ModularData {
    modular_data_tol(h, &Tolerances::default())
}

pub fn modular_data_tol(h: &StandardSubspace, tol: &Tolerances) -> ModularData {
    let amb = &h.ambient;
    let s = h.tomita();
    let sw = amb.to_white(&s);
    let dw = sym(&(sw.transpose() * &sw));
    let eig = sym_eigen(&dw);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vw = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    let n = amb.n;
    if eigenvalues[n - 1] < 1.0 && eigenvalues[n] > 1.0 {
        // The lower half of the spectrum is rebuilt from the upper half through
        // `Je = S e/√λ`, which keeps tiny eigenvalues at full relative precision.
        for k in 0..n {
            let hi = 2 * n - 1 - k;
            let l = eigenvalues[hi];
            let partner = &sw * vw.column(hi) / l.sqrt();
            vw.set_column(k, &partner);
            eigenvalues[k] = 1.0 / l;
        }
    }
    let eigenvectors = &amb.g_half_inv * &vw;
    let gap = eigenvalues.iter().map(|l| (l - 1.0).abs()).fold(f64::INFINITY, f64::min);
    let mut md = ModularData {
        tomita: s.clone(),
        delta: DMatrix::zeros(0, 0),
        jconj: DMatrix::zeros(0, 0),
        eigenvalues,
        eigenvectors,
        spectral_gap: gap,
        factorial: gap >= tol.factorial_gap,
        g: amb.g.clone(),
    };
    md.delta = md.func(|l| l);
    md.jconj = &s * md.func(|l| 1.0 / l.sqrt());
    md
}

impl ModularData {
    /// `f(Δ)` by spectral calculus.
    pub fn func(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let e = &self.eigenvectors;
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            self.eigenvalues.len(),
            self.eigenvalues.iter().map(|&l| f(l)),
        ));
        e * d * e.transpose() * &self.g
    }

    pub fn log_delta(&self) -> DMatrix<f64> {
        self.func(f64::ln)
    }

    /// `Δ^{is} = cos(s logΔ) + i sin(s logΔ)` with `i` the ambient structure.
    pub fn delta_it(&self, j: &DMatrix<f64>, s: f64) -> DMatrix<f64> {
        self.func(|l| (s * l.ln()).cos()) + j * self.func(|l| (s * l.ln()).sin())
    }

    pub fn require_factorial(&self) -> Result<()> {
        if self.factorial {
            Ok(())
        } else {
            Err(Error::NotFactorial { gap: self.spectral_gap })
        }
    }

    pub fn require_nondegenerate(&self) -> Result<()> {
        if self.factorial {
            Ok(())
        } else {
            Err(Error::NearDegenerate { gap: self.spectral_gap })
        }
    }
}

pub fn projection_e(md: &ModularData) -> DMatrix<f64> {
    md.func(|l| 1.0 / (1.0 + l)) + &md.jconj * md.func(|l| l.sqrt() / (1.0 + l))
}

pub fn projection_p(md: &ModularData) -> Result<DMatrix<f64>> {
    md.require_factorial()?;
    Ok(md.func(|l| 1.0 / (1.0 - l)) + &md.jconj * md.func(|l| l.sqrt() / (1.0 - l)))
}

pub fn projection_q(md: &ModularData) -> DMatrix<f64> {
    let n = md.tomita.nrows();
    (DMatrix::identity(n, n) + &md.tomita) * 0.5
}

/// Entropy of `k` from the spectral sums.
///
/// Sign convention: `S_k = −β(k, P_H i logΔ k)`, which equals `−(h, logΔ h) ≥ 0`
/// for `h ∈ H` with the scalar product linear in the second slot.
pub fn vector_entropy(h: &StandardSubspace, md: &ModularData, k: &DVector<f64>) -> Result<f64> {
    md.require_factorial()?;
    let g = &h.ambient.g;
    let gk = g * k;
    let jk = (&md.jconj.transpose() * &gk).transpose();
    let mut s = 0.0;
    for (c, &l) in md.eigenvalues.iter().enumerate() {
        let e = md.eigenvectors.column(c);
        let ek = e.dot(&gk);
        let ll = l.ln();
        let a = ll / (1.0 - l);
        let b = l.sqrt() * ll / (1.0 - l);
        s -= a * ek * ek;
        s += b * (jk.dot(&e.transpose())) * ek;
    }
    Ok(s)
}

/// The same quantity by direct matrix evaluation.
pub fn vector_entropy_direct(h: &StandardSubspace, md: &ModularData, k: &DVector<f64>) -> Result<f64> {
    let p = projection_p(md)?;
    let v = p * (&h.ambient.j * (md.log_delta() * k));
    Ok(-h.ambient.beta(k, &v))
}

/// `−(h, logΔ h)` for `h = Σ cᵢ bᵢ ∈ H` from the Gram matrix `gram[i][j] = ℜ(bᵢ, bⱼ)` and
/// the symplectic matrix `beta[i][j] = β(bᵢ, bⱼ)` of a spanning family of `H`.
///
/// In a `ℜ`-orthonormal basis of `H` the form `β` has singular values `ν ∈ [0, 1)` and
/// `−logΔ` acts on `H` through `2ν artanh ν`. This needs no inverse of the Tomita
/// operator and stays accurate when `H` is close to `iH`.
pub fn symplectic_hamiltonian_form(
    gram: &DMatrix<f64>,
    beta: &DMatrix<f64>,
    coeffs: &[DVector<f64>],
    prune: f64,
) -> SymplecticSpectrum {
    let red = SymplecticReduction::new(gram, beta, prune, 1.0 - f64::EPSILON);
    SymplecticSpectrum {
        values: coeffs.iter().map(|c| red.form(&red.coords(gram, c))).collect(),
        nu: red.nu.clone(),
        kept: red.kept(),
        condition: red.condition,
    }
}

#[derive(Debug, Clone)]
pub struct SymplecticSpectrum {
    pub nu: Vec<f64>,
    pub values: Vec<f64>,
    pub kept: usize,
    pub condition: f64,
}

/// A spanning family of `H` reduced to a `ℜ`-orthonormal basis, with `β` brought to
/// symplectic normal form and its values `ν` capped at `ceiling`.
#[derive(Debug, Clone)]
pub struct SymplecticReduction {
    /// Columns: orthonormal vectors of `H` in the coordinates of the family.
    pub transform: DMatrix<f64>,
    /// `β` in the orthonormal basis, normal-form values capped.
    pub beta: DMatrix<f64>,
    /// Normal-form value attached to each column of `modes`.
    pub nu: Vec<f64>,
    /// Orthogonal change to normal-form coordinates `e₁, f₁, e₂, f₂, …` with `β(e_j, f_j) = ν_j`.
    pub modes: DMatrix<f64>,
    /// Index of `e_j` for every pair; remaining columns have `ν = 0`.
    pub pairs: Vec<usize>,
    /// Condition number of the full Gram matrix.
    pub condition: f64,
    pub ceiling: f64,
}

impl SymplecticReduction {
    pub fn new(gram: &DMatrix<f64>, beta: &DMatrix<f64>, prune: f64, ceiling: f64) -> Self {
        let eig = sym_eigen(gram);
        let max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let keep: Vec<usize> = (0..eig.eigenvalues.len())
            .filter(|&k| eig.eigenvalues[k] > max / prune)
            .collect();
        let t = DMatrix::from_fn(gram.nrows(), keep.len(), |r, c| {
            eig.eigenvectors[(r, keep[c])] / eig.eigenvalues[keep[c]].sqrt()
        });
        let a = t.transpose() * beta * &t;
        let a = (&a - a.transpose()) * 0.5;
        let k = a.nrows();
        let (mut q, tt) = if k > 0 { a.clone().schur().unpack() } else { (a.clone(), a.clone()) };
        let mut nu = vec![0.0; k];
        let mut pairs = Vec::new();
        let scale = tt.norm().max(f64::MIN_POSITIVE);
        let mut p = 0;
        while p < k {
            if p + 1 < k && tt[(p + 1, p)].abs() > 1e-14 * scale {
                let b = 0.5 * (tt[(p, p + 1)] - tt[(p + 1, p)]);
                if b < 0.0 {
                    let mut col = q.column_mut(p + 1);
                    col.neg_mut();
                }
                nu[p] = b.abs().min(ceiling);
                nu[p + 1] = nu[p];
                pairs.push(p);
                p += 2;
            } else {
                p += 1;
            }
        }
        let mut normal = DMatrix::zeros(k, k);
        for &p in &pairs {
            normal[(p, p + 1)] = nu[p];
            normal[(p + 1, p)] = -nu[p];
        }
        let beta_capped = &q * normal * q.transpose();
        Self {
            transform: t,
            beta: beta_capped,
            nu,
            modes: q,
            pairs,
            condition: if min > 0.0 { max / min } else { f64::INFINITY },
            ceiling,
        }
    }

    pub fn kept(&self) -> usize {
        self.transform.ncols()
    }

    /// Orthonormal coordinates of `Σ cᵢ bᵢ`.
    pub fn coords(&self, gram: &DMatrix<f64>, c: &DVector<f64>) -> DVector<f64> {
        self.transform.transpose() * gram * c
    }

    /// `−(h, logΔ h)` from orthonormal coordinates.
    pub fn form(&self, z: &DVector<f64>) -> f64 {
        let y = self.modes.transpose() * z;
        y.iter().zip(&self.nu).map(|(yi, &x)| 2.0 * x * x.atanh() * yi * yi).sum()
    }

    /// Columns without a partner; they lie in `H ∩ H′` up to rounding.
    pub fn unpaired(&self) -> usize {
        self.kept() - 2 * self.pairs.len()
    }

    fn pair_block(&self, nu: f64) -> [[f64; 2]; 4] {
        let s = ((1.0 - nu) * (1.0 + nu)).sqrt();
        [[1.0, 0.0], [0.0, s], [0.0, nu], [0.0, 0.0]]
    }

    /// The factorial part of `H` inside `H + iH ≅ ℂ²ᴾ` with the standard metric, `P` the
    /// number of pairs.
    ///
    /// Each pair `(e, f)` spans `ℂ²` with orthonormal basis `e`, `w = (f − iνe)/√(1 − ν²)`,
    /// so `f = iνe + √(1 − ν²)w`. Unpaired columns carry `ν = 0` and are left out.
    pub fn ambient(&self, tol: &Tolerances) -> Result<StandardSubspace> {
        let n = 2 * self.pairs.len();
        let mut basis = DMatrix::zeros(2 * n, n);
        for (j, &p) in self.pairs.iter().enumerate() {
            let blk = self.pair_block(self.nu[p]);
            for c in 0..2 {
                basis[(2 * j, 2 * j + c)] = blk[0][c];
                basis[(2 * j + 1, 2 * j + c)] = blk[1][c];
                basis[(n + 2 * j, 2 * j + c)] = blk[2][c];
                basis[(n + 2 * j + 1, 2 * j + c)] = blk[3][c];
            }
        }
        make_standard_subspace_tol(ComplexSpace::standard(n), basis, tol)
    }

    /// Image in [`ambient`](Self::ambient) of the vector with orthonormal coordinates `z`,
    /// dropping unpaired components.
    pub fn embed(&self, h: &StandardSubspace, z: &DVector<f64>) -> DVector<f64> {
        let y = self.modes.transpose() * z;
        let mut c = DVector::zeros(h.basis.ncols());
        for (j, &p) in self.pairs.iter().enumerate() {
            c[2 * j] = y[p];
            c[2 * j + 1] = y[p + 1];
        }
        &h.basis * c
    }
}

/// `−(h, logΔ h)` for `h ∈ H`, through [`symplectic_hamiltonian_form`].
pub fn hamiltonian_form_in_h(h: &StandardSubspace, x: &DVector<f64>) -> f64 {
    let amb = &h.ambient;
    let b = &h.basis;
    let gram = b.transpose() * &amb.g * b;
    let beta = (&amb.j * b).transpose() * &amb.g * b;
    let c = gram.clone().lu().solve(&(b.transpose() * &amb.g * x)).expect("independent basis");
    symplectic_hamiltonian_form(&gram, &beta, &[c], 1e16).values[0]
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "camelCase")]
pub struct InvarianceReport {
    pub group_invariant: bool,
    pub resolvent_invariant: bool,
    pub skew_on_h: bool,
    pub consistent: bool,
    pub residual_group: f64,
    pub residual_resolvent: f64,
    pub residual_skew: f64,
}

/// Checks (i) `e^{isA}H = H`, (v) `(K ± 1)^{-1}H ⊆ H` and (vi) `K|_H` skew on `(H, ℜ)`
/// with `K = iA`.
pub fn invariance_equivalence_check(h: &StandardSubspace, a: &DMatrix<f64>, tol: f64) -> InvarianceReport {
    let amb = &h.ambient;
    let dim = amb.real_dim();
    let id = DMatrix::<f64>::identity(dim, dim);
    let pi = h.projector();
    let off = &id - &pi;
    let b = &h.basis;
    let bn = b.norm();
    let leak = |m: &DMatrix<f64>| (&off * m * b).norm() / bn;

    let residual_group = [-5.0, -1.0, -0.1, 0.1, 1.0, 5.0]
        .iter()
        .map(|&s| leak(&amb.unitary_group(a, s)))
        .fold(0.0, f64::max);
    let k = &amb.j * a;
    let residual_resolvent = [1.0, -1.0]
        .iter()
        .map(|&sg| {
            let r = (&k + &id * sg).try_inverse().expect("K ± 1 invertible for skew K");
            leak(&r)
        })
        .fold(0.0, f64::max);
    let gram = b.transpose() * &amb.g * b;
    let kh = gram.clone().lu().solve(&(b.transpose() * &amb.g * &k * b)).expect("gram");
    let skew = &gram * &kh + kh.transpose() * &gram;
    let scale = (k.norm() * bn * bn).max(f64::MIN_POSITIVE);
    let residual_skew = ((&off * &k * b).norm() / bn / k.norm().max(1e-300)).max(skew.norm() / scale);
    let gi = residual_group <= tol;
    let ri = residual_resolvent <= tol;
    let sk = residual_skew <= tol;
    InvarianceReport {
        group_invariant: gi,
        resolvent_invariant: ri,
        skew_on_h: sk,
        consistent: gi == ri && ri == sk,
        residual_group,
        residual_resolvent,
        residual_skew,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "camelCase")]
pub struct PassivityReport {
    pub power: usize,
    pub samples: usize,
    pub min: f64,
    pub max: f64,
    pub positive: usize,
    pub negative: usize,
    pub passive: bool,
    pub active: bool,
    pub product_min_eig: f64,
    pub product_max_eig: f64,
    pub sign_condition_holds: bool,
}

/// Sign statistics of `(ξ, A_n ξ)` over random `ξ` in the real span of product
/// monomials of `H^{⊗n}`, with `A_n` the Leibniz extension of `A`.
pub fn passivity_check(
    h: &StandardSubspace,
    md: &ModularData,
    a: &DMatrix<f64>,
    power: usize,
    samples: usize,
    rng: &mut ChaCha8Rng,
    tol: f64,
) -> Result<PassivityReport> {
    if power == 0 || power > 3 {
        return Err(Error::Config(format!("tensor power {power} outside 1..=3")));
    }
    let inv = invariance_equivalence_check(h, a, tol.max(1e-8));
    if !inv.group_invariant {
        return Err(Error::NotInvariant { residual: inv.residual_group });
    }
    let amb = &h.ambient;
    let basis = amb.complex_basis();
    let nc = basis.len();
    let ac: Vec<Vec<Complex64>> = basis
        .iter()
        .map(|e| basis.iter().map(|f| amb.inner(e, &(a * f))).collect())
        .collect();
    let anorm = a.norm().max(f64::MIN_POSITIVE);
    let size = nc.pow(power as u32);
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut positive, mut negative) = (0, 0);
    let mut worst_scale = 0.0f64;
    for _ in 0..samples {
        let mut xi = vec![Complex64::new(0.0, 0.0); size];
        for _ in 0..3 {
            let coef: f64 = rng.gen_range(-1.0..1.0);
            let factors: Vec<Vec<Complex64>> =
                (0..power).map(|_| amb.to_complex(&basis, &h.sample(rng))).collect();
            let mono = kron_all(&factors);
            for (x, m) in xi.iter_mut().zip(mono) {
                *x += m * coef;
            }
        }
        let mut axi = vec![Complex64::new(0.0, 0.0); size];
        for axis in 0..power {
            apply_on_axis(&ac, &xi, &mut axi, nc, power, axis);
        }
        let val: f64 = xi.iter().zip(&axi).map(|(x, y)| (x.conj() * y).re).sum();
        let norm2: f64 = xi.iter().map(|x| x.norm_sqr()).sum();
        worst_scale = worst_scale.max(norm2 * anorm);
        min = min.min(val);
        max = max.max(val);
        if val > tol * norm2 * anorm {
            positive += 1;
        } else if val < -tol * norm2 * anorm {
            negative += 1;
        }
    }
    let passive = max <= tol * worst_scale;
    let active = min >= -tol * worst_scale;
    let prod = amb.to_white(&(a * md.log_delta()));
    let pe = sym_eigen(&prod).eigenvalues;
    let pmin = pe.min();
    let pmax = pe.max();
    let pscale = prod.norm().max(1.0) * tol.max(1e-9);
    let sign_condition_holds = (!passive || pmin >= -pscale) && (!active || pmax <= pscale);
    Ok(PassivityReport {
        power,
        samples,
        min,
        max,
        positive,
        negative,
        passive,
        active,
        product_min_eig: pmin,
        product_max_eig: pmax,
        sign_condition_holds,
    })
}

fn kron_all(factors: &[Vec<Complex64>]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(1.0, 0.0)];
    for f in factors {
        let mut next = Vec::with_capacity(out.len() * f.len());
        for o in &out {
            for x in f {
                next.push(o * x);
            }
        }
        out = next;
    }
    out
}

fn apply_on_axis(
    a: &[Vec<Complex64>],
    x: &[Complex64],
    acc: &mut [Complex64],
    n: usize,
    power: usize,
    axis: usize,
) {
    let stride = n.pow((power - 1 - axis) as u32);
    let block = stride * n;
    for base in (0..x.len()).step_by(block) {
        for inner in 0..stride {
            for r in 0..n {
                let mut s = Complex64::new(0.0, 0.0);
                for c in 0..n {
                    s += a[r][c] * x[base + c * stride + inner];
                }
                acc[base + r * stride + inner] += s;
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "camelCase")]
pub struct SubspaceDocument {
    pub schema_version: u32,
    pub n: usize,
    pub complex_structure: Vec<f64>,
    pub metric: Vec<f64>,
    pub basis_rows: usize,
    pub basis_cols: usize,
    pub basis: Vec<f64>,
    pub condition: f64,
    pub delta_eigenvalues: Vec<f64>,
    pub spectral_gap: f64,
    pub tolerances: Tolerances,
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    (0..m.nrows()).flat_map(|r| (0..m.ncols()).map(move |c| m[(r, c)])).collect()
}

impl SubspaceDocument {
    pub fn new(h: &StandardSubspace, md: &ModularData, tol: &Tolerances) -> Self {
        Self {
            schema_version: 1,
            n: h.ambient.n,
            complex_structure: row_major(&h.ambient.j),
            metric: row_major(&h.ambient.g),
            basis_rows: h.basis.nrows(),
            basis_cols: h.basis.ncols(),
            basis: row_major(&h.basis),
            condition: h.condition,
            delta_eigenvalues: md.eigenvalues.clone(),
            spectral_gap: md.spectral_gap,
            tolerances: tol.clone(),
        }
    }

    pub fn subspace(&self) -> Result<StandardSubspace> {
        let d = 2 * self.n;
        let j = DMatrix::from_row_slice(d, d, &self.complex_structure);
        let g = DMatrix::from_row_slice(d, d, &self.metric);
        let b = DMatrix::from_row_slice(self.basis_rows, self.basis_cols, &self.basis);
        make_standard_subspace_tol(ComplexSpace::new(j, g, &self.tolerances)?, b, &self.tolerances)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn factorial_subspace(n: usize, seed: u64) -> (StandardSubspace, ModularData) {
        let mut r = rng(seed);
        loop {
            let amb = ComplexSpace::random_metric(n, &mut r);
            let h = random_subspace(&amb, &mut r);
            let md = modular_data(&h);
            if md.spectral_gap > 1e-3 {
                return (h, md);
            }
        }
    }

    #[test]
    fn real_axis_is_abelian() {
        let amb = ComplexSpace::standard(1);
        let h = make_standard_subspace(amb, DMatrix::from_column_slice(2, 1, &[1.0, 0.0])).unwrap();
        let md = modular_data(&h);
        assert!((md.delta.clone() - DMatrix::identity(2, 2)).norm() < 1e-12);
        let conj = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!((md.jconj.clone() - conj).norm() < 1e-12);
    }

    #[test]
    fn product_of_real_axes() {
        let amb = ComplexSpace::standard(2);
        let mut b = DMatrix::zeros(4, 2);
        b[(0, 0)] = 1.0;
        b[(1, 1)] = 1.0;
        let h = make_standard_subspace(amb, b).unwrap();
        let md = modular_data(&h);
        assert!((md.delta.clone() - DMatrix::identity(4, 4)).norm() < 1e-12);
    }

    #[test]
    fn whole_plane_is_rank_deficient() {
        let amb = ComplexSpace::standard(1);
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            make_standard_subspace(amb, b),
            Err(Error::RankDeficient { .. }) | Err(Error::InvalidAmbient(_))
        ));
        let amb = ComplexSpace::standard(2);
        let mut b = DMatrix::zeros(4, 2);
        b[(0, 0)] = 1.0;
        b[(2, 1)] = 1.0;
        assert!(matches!(make_standard_subspace(amb, b), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn scalar_product_is_linear_in_second_slot() {
        let amb = ComplexSpace::random_metric(3, &mut rng(1));
        let mut r = rng(2);
        let x = DVector::from_fn(6, |_, _| r.gen_range(-1.0..1.0));
        let y = DVector::from_fn(6, |_, _| r.gen_range(-1.0..1.0));
        let lhs = amb.inner(&x, &(&amb.j * &y));
        let rhs = Complex64::i() * amb.inner(&x, &y);
        assert!((lhs - rhs).norm() < 1e-12);
        assert!((amb.beta(&x, &y) + amb.beta(&y, &x)).abs() < 1e-12);
    }

    #[test]
    fn modular_identities() {
        for seed in 0..10 {
            let (h, md) = factorial_subspace(4, seed);
            let amb = &h.ambient;
            let id = DMatrix::identity(8, 8);
            let s_rebuilt = &md.jconj * md.func(f64::sqrt);
            assert!(rel_norm(&(s_rebuilt - &md.tomita), &md.tomita) < 1e-10);
            assert!(rel_norm(&(&md.jconj * &md.jconj - &id), &id) < 1e-10);
            let dinv = md.func(|l| 1.0 / l);
            assert!(rel_norm(&(&md.jconj * &md.delta * &md.jconj - &dinv), &dinv) < 1e-9);
            assert!((&md.delta * &amb.j - &amb.j * &md.delta).norm() < 1e-9 * md.delta.norm());
            assert!((&md.jconj * &amb.j + &amb.j * &md.jconj).norm() < 1e-9);
            assert!(md.eigenvalues.iter().all(|&l| l > 0.0));
            for s in [-5.0, -1.0, -0.1, 0.1, 1.0, 5.0] {
                let u = md.delta_it(&amb.j, s);
                let leak = (&id - h.projector()) * u * &h.basis;
                assert!(leak.norm() < 1e-8, "seed {seed} s {s}: {}", leak.norm());
            }
        }
    }

    #[test]
    fn regression_two_dim_subspace_of_c2() {
        let amb = ComplexSpace::standard(2);
        let b = DMatrix::from_row_slice(4, 2, &[1.0, 0.3, 0.0, 1.0, 0.2, -0.5, 0.4, 0.1]);
        let h = make_standard_subspace(amb, b).unwrap();
        let md = modular_data(&h);
        let expected = [0.1312059944270274, 0.13120599442702785, 7.621602994337012, 7.621602994337017];
        for (l, e) in md.eigenvalues.iter().zip(expected) {
            assert!((l - e).abs() < 1e-10 * e, "{l} vs {e}");
        }
    }

    #[test]
    fn projections() {
        let mut r = rng(11);
        for seed in 0..5 {
            let (h, md) = factorial_subspace(4, seed);
            let e = projection_e(&md);
            let p = projection_p(&md).unwrap();
            let q = projection_q(&md);
            let hv = h.sample(&mut r);
            let kv = h.sample_complement(&mut r);
            let amb = &h.ambient;
            let perp = {
                let x = DVector::from_fn(8, |_, _| r.gen_range(-1.0..1.0));
                &x - h.projector() * &x
            };
            assert!((&e * &hv - &hv).norm() < 1e-9 * hv.norm());
            assert!((&e * &perp).norm() < 1e-9 * perp.norm());
            assert!((&p * (&hv + &kv) - &hv).norm() < 1e-9 * hv.norm());
            let coth = md.func(|l| (1.0 + l) / (1.0 - l));
            assert!(rel_norm(&(&e * &coth - &p), &p) < 1e-9);
            assert!(rel_norm(&(&q * &q - &q), &q) < 1e-10);
            assert!((&q * &hv - &hv).norm() < 1e-10 * hv.norm());
            let ph = &p * &amb.j * &hv;
            let icoth = &amb.j * &coth * &hv;
            assert!((&ph - &icoth).norm() < 1e-9 * icoth.norm());
        }
    }

    #[test]
    fn entropy_routes_agree() {
        let mut r = rng(5);
        for seed in 0..8 {
            let (h, md) = factorial_subspace(4, 100 + seed);
            let k = DVector::from_fn(8, |_, _| r.gen_range(-1.0..1.0));
            let a = vector_entropy(&h, &md, &k).unwrap();
            let b = vector_entropy_direct(&h, &md, &k).unwrap();
            assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()), "{a} vs {b}");
            let hv = h.sample(&mut r);
            let s = vector_entropy(&h, &md, &hv).unwrap();
            let form = -hv.dot(&(&h.ambient.g * md.log_delta() * &hv));
            assert!(s >= 0.0 && (s - form).abs() < 1e-9 * (1.0 + s));
            let symp = hamiltonian_form_in_h(&h, &hv);
            assert!((symp - form).abs() < 1e-8 * (1.0 + form), "{symp} vs {form}");
        }
    }

    #[test]
    fn reduction_ambient_reproduces_the_form() {
        let mut r = rng(5);
        for ceiling in [1.0 - 1e-6, 1.0 - 1e-13] {
            let k = 6;
            let x = DMatrix::from_fn(k, k, |_, _| r.gen_range(-1.0..1.0));
            let gram = &x * x.transpose() + DMatrix::identity(k, k) * 0.1;
            let ev = SymmetricEigen::new(gram.clone());
            let half = &ev.eigenvectors * DMatrix::from_diagonal(&ev.eigenvalues.map(f64::sqrt)) * ev.eigenvectors.transpose();
            let mut a = DMatrix::zeros(k, k);
            for (p, nu) in [(0usize, 0.3), (2, 0.9), (4, 1.0 - 1e-15)] {
                a[(p, p + 1)] = nu;
                a[(p + 1, p)] = -nu;
            }
            let q = DMatrix::from_fn(k, k, |_, _| r.gen_range(-1.0..1.0)).qr().q();
            let beta = &half * &q * a * q.transpose() * &half;
            let red = SymplecticReduction::new(&gram, &beta, 1e12, ceiling);
            let h = red.ambient(&Tolerances::default()).unwrap();
            let md = modular_data(&h);
            for _ in 0..4 {
                let c = DVector::from_fn(k, |_, _| r.gen_range(-1.0..1.0));
                let z = red.coords(&gram, &c);
                let x = red.embed(&h, &z);
                let s = vector_entropy(&h, &md, &x).unwrap();
                let f = red.form(&z);
                let rel = if ceiling > 1.0 - 1e-10 { 1e-4 } else { 1e-8 };
                assert!(((s - f) / f).abs() < rel, "{ceiling} {s} {f}");
            }
        }
    }

    #[test]
    fn entropy_regression_c4() {
        let amb = ComplexSpace::standard(4);
        let b = DMatrix::from_row_slice(
            8,
            4,
            &[
                1.0, 0.2, -0.3, 0.1, 0.9, 0.4, -0.2, 0.3, 1.1, 0.5, -0.1, 0.2, 0.3, 0.6, -0.4, -0.1, 0.2, 0.7,
                0.5, -0.6, 0.1, -0.3, 0.8, 0.2, -0.5, 0.4, 0.1, 0.9, 0.6, 0.1, -0.7, 0.3,
            ],
        );
        let h = make_standard_subspace(amb, b).unwrap();
        let md = modular_data(&h);
        let spec = [0.08817576291676045, 0.4810841089755244, 2.078638602570995, 11.340984947802614];
        for (c, e) in spec.iter().enumerate() {
            assert!((md.eigenvalues[2 * c] - e).abs() < 1e-10 * e);
            assert!((md.eigenvalues[2 * c + 1] - e).abs() < 1e-10 * e);
        }
        let k = DVector::from_column_slice(&[0.3, -0.7, 0.2, 0.5, 0.1, -0.4, 0.6, -0.2]);
        let s = vector_entropy(&h, &md, &k).unwrap();
        assert!((s - 1.8460703205166986).abs() < 1e-9, "{s}");
    }

    #[test]
    fn invariance_examples() {
        let (h, md) = factorial_subspace(2, 21);
        let amb = &h.ambient;
        let rep = invariance_equivalence_check(&h, &md.log_delta(), 1e-8);
        assert!(rep.group_invariant && rep.resolvent_invariant && rep.skew_on_h && rep.consistent);
        let id = DMatrix::identity(4, 4);
        let rep = invariance_equivalence_check(&h, &id, 1e-8);
        assert!(!rep.group_invariant && !rep.resolvent_invariant && !rep.skew_on_h && rep.consistent);
        let odd = md.func(|l| {
            let x = l.ln();
            x.powi(3) - 0.5 * x.sinh()
        });
        let rep = invariance_equivalence_check(&h, &odd, 1e-8);
        assert!(rep.consistent && rep.group_invariant, "{rep:?}");
        let _ = amb;
    }

    #[test]
    fn passivity_examples() {
        let (h, md) = factorial_subspace(2, 33);
        let mut r = rng(9);
        let l = md.log_delta();
        let rep = passivity_check(&h, &md, &l, 1, 200, &mut r, 1e-10).unwrap();
        assert!(rep.passive && rep.sign_condition_holds && rep.positive == 0, "{rep:?}");
        let rep = passivity_check(&h, &md, &(-&l), 2, 100, &mut r, 1e-10).unwrap();
        assert!(rep.active && !rep.passive && rep.sign_condition_holds, "{rep:?}");
        let rep = passivity_check(&h, &md, &l, 3, 40, &mut r, 1e-10).unwrap();
        assert!(rep.passive);
        let id = DMatrix::identity(4, 4);
        assert!(matches!(
            passivity_check(&h, &md, &id, 1, 10, &mut r, 1e-10),
            Err(Error::NotInvariant { .. })
        ));
    }

    #[test]
    fn abelian_commuting_generator_vanishes_on_h() {
        let n = 3;
        let amb = ComplexSpace::standard(n);
        let mut b = DMatrix::zeros(2 * n, n);
        for k in 0..n {
            b[(k, k)] = 1.0;
        }
        let h = make_standard_subspace(amb.clone(), b).unwrap();
        let md = modular_data(&h);
        let mut kmat = DMatrix::zeros(n, n);
        kmat[(0, 1)] = 0.7;
        kmat[(1, 0)] = -0.7;
        kmat[(1, 2)] = -0.3;
        kmat[(2, 1)] = 0.3;
        let mut kr = DMatrix::zeros(2 * n, 2 * n);
        kr.view_mut((0, 0), (n, n)).copy_from(&kmat);
        kr.view_mut((n, n), (n, n)).copy_from(&kmat);
        let a = -(&amb.j * &kr);
        let mut r = rng(4);
        let rep = passivity_check(&h, &md, &a, 2, 50, &mut r, 1e-10).unwrap();
        assert!(rep.max.abs() < 1e-10 && rep.min.abs() < 1e-10, "{rep:?}");
    }

    #[test]
    fn document_round_trip() {
        let (h, md) = factorial_subspace(2, 3);
        let doc = SubspaceDocument::new(&h, &md, &Tolerances::default());
        let text = serde_json::to_string(&doc).unwrap();
        let back: SubspaceDocument = serde_json::from_str(&text).unwrap();
        let h2 = back.subspace().unwrap();
        assert!((h2.basis - &h.basis).norm() == 0.0);
    }
}
