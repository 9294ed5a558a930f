//! Acceptance criteria 1-8, one PASS/FAIL line each.

use std::f64::consts::PI;
use std::time::Instant;

use modham::conformal::{apply_k0, flow_cocycle, flow_geometric, flow_map_z, weighted_gradient_identity, scaling_dimension};
use modham::entropy::{radius_scan, relative_entropy_coherent, small_r_fit};
use modham::field::{dilate, mu_apply, CauchyData};
use modham::grid::{Ball, GridSpec};
use modham::massive::{apply_lm, apply_m, green_kernel_eval, matrix_element_log_delta};
use modham::modular::{passivity_check, projection_e, projection_p, ComplexSpace, random_subspace, modular_data};
use modham::oracle::{refinement_report, RefinementConfig};
use modham::special::bessel_k;
use modham::spectral::laplacian;
use modham::tolerances::Tolerances;
use modham::verify::triangle_residual;
use modham::wavespec::bump;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Distance of the spectrum of `Δ` from 1; `‖P_H‖` grows like `2/gap`.
const MIN_GAP: f64 = 0.05;

struct Line {
    pass: bool,
    detail: String,
}

fn line(pass: bool, detail: impl Into<String>) -> Line {
    Line { pass, detail: detail.into() }
}

fn criterion_1() -> Line {
    let tol = 1e-9;
    let mut worst = 0.0f64;
    let mut counterexamples = 0usize;
    let mut count = 0;
    for seed in 0..100u64 {
        let n = 2 + 2 * (seed as usize % 6);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (h, md) = loop {
            let amb = ComplexSpace::random_metric(n, &mut rng);
            let h = random_subspace(&amb, &mut rng);
            let md = modular_data(&h);
            if md.factorial && md.spectral_gap >= MIN_GAP {
                break (h, md);
            }
        };
        count += 1;
        let rel = |a: &DMatrix<f64>, b: &DMatrix<f64>| (a - b).norm() / b.norm();
        worst = worst.max(rel(&(&md.jconj * md.func(f64::sqrt)), &md.tomita));
        worst = worst.max(rel(&(&md.jconj * &md.delta * &md.jconj), &md.func(|l| 1.0 / l)));
        let p = projection_p(&md).expect("factorial");
        let e = projection_e(&md);
        worst = worst.max(rel(&(&e * md.func(|l| (1.0 + l) / (1.0 - l))), &p));
        for _ in 0..5 {
            let hv = h.sample(&mut rng);
            let kv = h.sample_complement(&mut rng);
            worst = worst.max((&p * (&hv + &kv) - &hv).norm() / hv.norm());
        }
        let rep = passivity_check(&h, &md, &md.log_delta(), 1, 1000, &mut rng, 1e-10).expect("passivity");
        counterexamples += rep.positive + usize::from(!rep.passive);
    }
    line(
        worst <= tol && counterexamples == 0,
        format!("{count} subspaces, max residual {worst:.2e} (tol {tol:.0e}), passivity counterexamples {counterexamples}"),
    )
}

fn massless(n: usize, a: f64, b: f64) -> CauchyData {
    let grid = GridSpec::radial(4.0, n).unwrap();
    let f = grid.radii().iter().map(|&r| bump(r / a)).collect();
    let g = grid.radii().iter().map(|&r| (1.0 - r * r) * bump(r / b)).collect();
    CauchyData::new(grid, f, g, 0.0).unwrap()
}

fn criterion_2() -> Line {
    let h = 1e-3;
    let (mut err, mut leak) = (0.0f64, 0.0f64);
    for (a, b) in [(0.9, 0.8), (0.7, 0.9), (0.85, 0.75), (0.95, 0.4), (0.8, 0.85)] {
        let phi = massless(512, a, b);
        let fd = flow_geometric(&phi, h)
            .unwrap()
            .data
            .sub(&flow_geometric(&phi, -h).unwrap().data)
            .unwrap()
            .scaled(0.5 / h);
        let k = apply_k0(&phi).unwrap();
        err = err.max(fd.sub(&k).unwrap().l2() / k.l2());
        for s in [-1.0, -0.5, 0.5, 1.0] {
            leak = leak.max(flow_geometric(&phi, s).unwrap().leakage);
        }
    }
    line(err <= 1e-3 && leak <= 1e-6, format!("generator rel err {err:.2e} (tol 1e-3), leakage {leak:.2e} (tol 1e-6)"))
}

fn criterion_3() -> Line {
    let mut worst = 0.0f64;
    for m in [0.0, 1.0] {
        let grid = GridSpec::radial(8.0, 4096).unwrap();
        let bumped: Vec<f64> = grid.radii().iter().map(|&r| (1.0 + 0.3 * r * r) * bump(r)).collect();
        let f = if m == 0.0 { laplacian(&grid, &bumped) } else { bumped };
        let b = Ball::unit(3);
        let mf = mu_apply(&grid, &f, m, 1.0).unwrap();
        let lhs = mu_apply(&grid, &apply_m(&grid, &mf, &b), m, 1.0).unwrap();
        let rhs = apply_lm(&grid, &f, m, &b).unwrap();
        let scale = rhs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let res = grid
            .radii()
            .iter()
            .enumerate()
            .filter(|(_, &r)| r < 2.0)
            .map(|(j, _)| (lhs[j] + rhs[j]).abs() / scale)
            .fold(0.0, f64::max);
        worst = worst.max(res);
    }
    line(worst <= 1e-6, format!("max relative residual over m in {{0, 1}}: {worst:.2e} (tol 1e-6)"))
}

fn fixture(m: f64, a: f64, b: f64) -> CauchyData {
    let grid = GridSpec::radial(16.0, 2048).unwrap();
    let f = grid.radii().iter().map(|&r| (1.0 + 0.3 * r * r) * bump(r / a)).collect();
    let g = grid.radii().iter().map(|&r| (1.0 - 0.5 * r * r) * bump(r / b)).collect();
    CauchyData::new(grid, f, g, m).unwrap()
}

fn criterion_4() -> Line {
    let mut worst = 0.0f64;
    for m in [0.0, 1.0] {
        for (a, b) in [(1.0, 0.9), (0.7, 1.0), (0.5, 0.8)] {
            worst = worst.max(triangle_residual(&fixture(m, a, b), &Ball::unit(3)).unwrap());
        }
    }
    line(worst <= 1e-5, format!("max relative spread {worst:.2e} (tol 1e-5)"))
}

fn criterion_5() -> Line {
    let rep = refinement_report(&RefinementConfig::default(), &Tolerances::default()).unwrap();
    let parts: Vec<String> = rep
        .trends
        .iter()
        .map(|t| {
            let medians: Vec<String> = t.median_deviation.iter().map(|d| format!("{:.2}%", 100.0 * d)).collect();
            format!(
                "m={} medians [{}] decreasing={} within={}",
                t.m,
                medians.join(", "),
                t.strictly_decreasing,
                t.within_threshold
            )
        })
        .collect();
    line(rep.passes(), parts.join("; "))
}

fn criterion_6() -> Line {
    let phi = fixture(0.0, 1.0, 0.9);
    let reports = radius_scan(&phi, &[0.0; 3], 0.0, &[2.0, 4.0, 8.0]).unwrap();
    let ratio = reports.last().unwrap().ratio_large_r;
    let bekenstein = reports.iter().all(|r| r.bekenstein_ok);
    let grid = GridSpec::radial(8.0, 2048).unwrap();
    let f = grid.radii().iter().map(|&r| bump(r)).collect();
    let crit = CauchyData::new(grid.clone(), f, vec![0.0; grid.len()], 0.0).unwrap();
    let fit = small_r_fit(&crit, &[0.0; 3], 0.0, 1.0).unwrap();
    let small = (fit.extrapolated - 1.0).abs();
    line(
        (0.95..=1.05).contains(&ratio) && bekenstein && small <= 0.05,
        format!("large-R ratio {ratio:.4} at R=8, Bekenstein {bekenstein}, small-R extrapolated {:.4}", fit.extrapolated),
    )
}

fn criterion_7() -> Line {
    let lam = 1.6;
    let grid = GridSpec::radial(8.0, 2048).unwrap();
    let mut worst = 0.0f64;
    for (a, b, m) in [(1.5, 1.2, 0.8), (1.0, 0.9, 0.0), (1.3, 0.7, 1.5)] {
        let f = grid.radii().iter().map(|&r| (1.0 + 0.3 * r * r) * bump(r / a)).collect();
        let g = grid.radii().iter().map(|&r| bump(r / b)).collect();
        let phi = CauchyData::new(grid.clone(), f, g, m).unwrap();
        let scaled = dilate(&phi, lam).unwrap();
        for radius in [1.2, 2.0] {
            let s0 = relative_entropy_coherent(&phi, radius).unwrap();
            let s1 = relative_entropy_coherent(&scaled, radius / lam).unwrap();
            worst = worst.max(((s0 - s1) / s0).abs());
            if radius < 2.0 {
                continue;
            }
            let (b0, b1) = (Ball::centered(radius, 3), Ball::centered(radius / lam, 3));
            let psi = phi.scaled(0.5).add(&CauchyData { f: phi.g.clone(), g: phi.f.clone(), ..phi.clone() }).unwrap();
            let psi_s = dilate(&psi, lam).unwrap();
            let e0 = matrix_element_log_delta(&phi, &psi, &b0).unwrap();
            let e1 = matrix_element_log_delta(&scaled, &psi_s, &b1).unwrap();
            worst = worst.max(((e0 - e1) / e0).abs());
        }
    }
    line(worst <= 1e-6, format!("max relative change {worst:.2e} over 3 fixtures (tol 1e-6)"))
}

fn criterion_8() -> Line {
    let grid = GridSpec::radial(4.0, 1024).unwrap();
    let f: Vec<f64> = grid.radii().iter().map(|&r| bump(r / 0.9)).collect();
    let id = weighted_gradient_identity(&grid, &f);
    let gradient_err = id.residual.max(id.residual_first).max(id.residual_second);
    let mut cocycle_err = 0.0f64;
    let h = 1e-5;
    for d in [2usize, 3] {
        let dd = scaling_dimension(d);
        for (u, v) in [(0.3, -0.2), (0.5, 0.5), (-0.7, 0.1)] {
            let fd = (flow_cocycle(u, v, h, dd).unwrap() - flow_cocycle(u, v, -h, dd).unwrap()) / (2.0 * h);
            cocycle_err = cocycle_err.max((fd + dd * (u + v) / 2.0).abs());
            let zfd = (flow_map_z(u, h).unwrap() - flow_map_z(u, -h).unwrap()) / (2.0 * h);
            cocycle_err = cocycle_err.max((zfd - (1.0 - u * u) / 2.0).abs());
        }
    }
    let mut yuk = 0.0f64;
    for m in [0.3f64, 1.0, 2.5] {
        for r in [0.05f64, 0.4, 1.0, 3.0, 7.0] {
            let closed = (-m * r).exp() / (4.0 * PI * r);
            let bessel = (2.0 * PI).powf(-1.5) * (m / r).sqrt() * bessel_k(0.5, m * r).unwrap();
            let eval = green_kernel_eval(3, m, r).unwrap();
            yuk = yuk.max(((closed - bessel) / closed).abs()).max(((eval - closed) / closed).abs());
        }
    }
    line(
        gradient_err <= 1e-6 && cocycle_err <= 1e-8 && yuk <= 1e-12,
        format!("weighted gradient {gradient_err:.2e} (1e-6), cocycle {cocycle_err:.2e} (1e-8), Yukawa {yuk:.2e} (1e-12)"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Line); 8] = [
        ("modular-core exact identities", criterion_1),
        ("generator consistency", criterion_2),
        ("spectral identity mu M mu = -L", criterion_3),
        ("quadratic-form triangle", criterion_4),
        ("oracle equivalence", criterion_5),
        ("entropy asymptotics", criterion_6),
        ("scaling covariance", criterion_7),
        ("integral and cocycle identities", criterion_8),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let status = if out.pass { "PASS" } else { "FAIL" };
        println!("{status} criterion {} ({name}): {} [{:.1}s]", k + 1, out.detail, start.elapsed().as_secs_f64());
        failed += usize::from(!out.pass);
    }
    if failed > 0 {
        println!("{failed} criterion(s) failing");
        std::process::exit(1);
    }
}
