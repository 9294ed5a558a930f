use modham::conformal::{flow_cocycle, flow_map_z};
use modham::entropy::entropy_ball;
use modham::field::{dilate, energy, kg_evolve, symplectic_form, CauchyData};
use modham::grid::{Ball, GridSpec};
use modham::modular::{
    modular_data, projection_q, random_subspace, vector_entropy, ComplexSpace, ModularData, StandardSubspace,
};
use modham::wavespec::bump;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn factorial(n: usize, seed: u64) -> (StandardSubspace, ModularData, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let amb = ComplexSpace::random_metric(n, &mut rng);
        let h = random_subspace(&amb, &mut rng);
        let md = modular_data(&h);
        if md.factorial && md.spectral_gap >= 0.05 {
            return (h, md, rng);
        }
    }
}

fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

fn wave(grid: &GridSpec, a: f64, b: f64, c: f64, m: f64) -> CauchyData {
    let f = grid.radii().iter().map(|&r| (1.0 + c * r * r) * bump(r / a)).collect();
    let g = grid.radii().iter().map(|&r| (c - r) * bump(r / b)).collect();
    CauchyData::new(grid.clone(), f, g, m).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn tomita_structure(half in 1usize..=4, seed in any::<u64>()) {
        let (h, md, _) = factorial(2 * half, seed);
        let dim = h.ambient.real_dim();
        let id = DMatrix::identity(dim, dim);
        prop_assert!(rel(&(&md.tomita * &md.tomita), &id) < 1e-9);
        prop_assert!(rel(&(&md.jconj * &md.jconj), &id) < 1e-9);
        prop_assert!(rel(&(&md.jconj * &md.delta * &md.jconj), &md.func(|l| 1.0 / l)) < 1e-8);
        prop_assert!(md.eigenvalues.iter().all(|&l| l > 0.0));
        let q = projection_q(&md);
        prop_assert!(rel(&(&q * &q), &q) < 1e-9);
    }

    #[test]
    fn vector_entropy_is_nonnegative_and_even(half in 1usize..=3, seed in any::<u64>()) {
        let (h, md, mut rng) = factorial(2 * half, seed);
        let dim = h.ambient.real_dim();
        let k = DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
        let s = vector_entropy(&h, &md, &k).unwrap();
        let s_neg = vector_entropy(&h, &md, &(-&k)).unwrap();
        let s2 = vector_entropy(&h, &md, &(&k * 2.0)).unwrap();
        prop_assert!(s >= -1e-12);
        prop_assert!((s - s_neg).abs() <= 1e-10 * (1.0 + s));
        prop_assert!((s2 - 4.0 * s).abs() <= 1e-9 * (1.0 + s2));
    }

    #[test]
    fn light_ray_flow_is_a_group(z in -0.99f64..0.99, s in -3.0f64..3.0, t in -3.0f64..3.0) {
        let once = flow_map_z(z, s + t).unwrap();
        let twice = flow_map_z(flow_map_z(z, s).unwrap(), t).unwrap();
        prop_assert!((once - twice).abs() < 1e-12);
        prop_assert!(once.abs() < 1.0);
        prop_assert!((flow_cocycle(z, -z, 0.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn evolution_is_a_group_and_conserves_energy(
        a in 0.5f64..1.2,
        c in -0.5f64..0.5,
        m in 0.0f64..2.0,
        s in -1.5f64..1.5,
        t in -1.5f64..1.5,
    ) {
        let grid = GridSpec::radial(12.0, 512).unwrap();
        let phi = wave(&grid, a, 0.8, c, m);
        let two = kg_evolve(&kg_evolve(&phi, s), t);
        let one = kg_evolve(&phi, s + t);
        prop_assert!(two.sub(&one).unwrap().l2() <= 1e-10 * one.l2());
        let e0 = energy(&phi);
        prop_assert!((energy(&one) - e0).abs() <= 1e-10 * e0);
    }

    #[test]
    fn beta_is_antisymmetric_and_evolution_invariant(
        a in 0.5f64..1.2,
        b in 0.5f64..1.2,
        m in 0.0f64..2.0,
        t in -1.0f64..1.0,
    ) {
        let grid = GridSpec::radial(12.0, 512).unwrap();
        let phi = wave(&grid, a, b, 0.2, m);
        let psi = wave(&grid, b, a, -0.3, m);
        let bb = symplectic_form(&phi, &psi).unwrap();
        prop_assert!((bb + symplectic_form(&psi, &phi).unwrap()).abs() <= 1e-12 * bb.abs().max(1e-12));
        let bt = symplectic_form(&kg_evolve(&phi, t), &kg_evolve(&psi, t)).unwrap();
        prop_assert!((bt - bb).abs() <= 1e-9 * bb.abs().max(1e-9));
    }

    #[test]
    fn ball_entropy_terms_are_nonnegative(
        a in 0.4f64..1.5,
        b in 0.4f64..1.5,
        c in -0.8f64..0.8,
        m in 0.0f64..2.0,
        radius in 0.3f64..2.5,
        t in -1.0f64..1.0,
    ) {
        let grid = GridSpec::radial(8.0, 512).unwrap();
        let rep = entropy_ball(&wave(&grid, a, b, c, m), &Ball::centered(radius, 3), t).unwrap();
        prop_assert!(rep.term_stress >= 0.0 && rep.term_norm >= 0.0 && rep.term_yukawa >= 0.0);
        prop_assert_eq!(rep.total, rep.term_stress + rep.term_norm + rep.term_yukawa);
    }

    #[test]
    fn entropy_is_dilation_covariant(lambda in 1.1f64..2.0, m in 0.0f64..1.5, radius in 0.8f64..2.0) {
        let grid = GridSpec::radial(8.0, 1024).unwrap();
        let phi = wave(&grid, 1.2, 1.0, 0.3, m);
        let a = entropy_ball(&phi, &Ball::centered(radius, 3), 0.0).unwrap().total;
        let b = entropy_ball(&dilate(&phi, lambda).unwrap(), &Ball::centered(radius / lambda, 3), 0.0).unwrap().total;
        prop_assert!(((a - b) / a).abs() < 1e-6, "{} {}", a, b);
    }
}
