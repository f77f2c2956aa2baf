//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

mod common;

use common::*;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spectral_schwarz::harness::generators::{generate, random_sparse_spd, ProblemSpec};
use spectral_schwarz::harness::theory::check_bound;
use spectral_schwarz::krylov::{gmres_right, pcg};
use spectral_schwarz::partition::{color_subdomains, extend_overlap, partition_graph};
use spectral_schwarz::precond::{CoarseKind, Combine, OneLevel, Preconditioner, SchwarzConfig, SchwarzPreconditioner};
use spectral_schwarz::sparse::symmetrized_graph;
use spectral_schwarz::spectral::select_pou_modes;
use spectral_schwarz::subdomain::{build_harmonic, local_matrix, spsd_local};
use spectral_schwarz::SparseMat;
use std::time::Instant;

fn frob_rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// `[[A_II, A_IΓ, 0], [A_ΓI, A_ΓΓ, A_Γδ], [0, A_δΓ, A_δΓ S^{-1} A_Γδ]]` with `S`
/// the Schur complement of `A_II` onto the inner rings.
fn explicit_splitting(a: &DMatrix<f64>, n_int: usize, n_inner: usize) -> DMatrix<f64> {
    let n = a.nrows();
    let ng = n_inner - n_int;
    let aii = a.view((0, 0), (n_int, n_int)).into_owned();
    let aig = a.view((0, n_int), (n_int, ng)).into_owned();
    let agg = a.view((n_int, n_int), (ng, ng)).into_owned();
    let s = &agg - aig.transpose() * aii.lu().solve(&aig).unwrap();
    let agd = a.view((n_int, n_inner), (ng, n - n_inner)).into_owned();
    let corner = agd.transpose() * s.lu().solve(&agd).unwrap();
    let mut t = a.clone();
    t.view_mut((n_inner, n_inner), (n - n_inner, n - n_inner)).copy_from(&corner);
    t
}

#[test]
fn ac1_projection_and_splitting() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = [0.0f64; 5];
    let mut failures = Vec::new();
    for case in 0..20 {
        let n = rng.gen_range(60..=200);
        let a = random_sparse_spd(n, rng.gen_range(0.3..2.0), 1000 + case);
        let ad = a.to_dense().unwrap();
        let anorm = spectral_norm(&ad);
        let g = symmetrized_graph(&a).unwrap();
        let k = rng.gen_range(2..=6);
        let delta = 1 + (case as usize % 3);
        let p = random_partition(&g, k, &mut rng);
        for s in extend_overlap(&g, &p, delta).unwrap() {
            let b = local_matrix(&a, &s).unwrap();
            let f = build_harmonic(&b).unwrap();
            let pi = f.matrix();
            let aii = b.matrix();
            let id = DMatrix::<f64>::identity(b.len(), b.len());
            let proj = (&pi * &pi - &pi).norm() / (1.0 + pi.norm());
            let orth = ((&id - &pi).transpose() * aii * &pi).norm() / aii.norm();
            let at = spsd_local(&b, &f).unwrap();
            let oracle = (&id - &pi).transpose() * aii * (&id - &pi);
            let ident = frob_rel(&at, &oracle);
            let explicit = if delta >= 2 && !s.boundary().is_empty() {
                frob_rel(&at, &explicit_splitting(aii, b.n_interior(), b.n_inner()))
            } else {
                0.0
            };
            let lifted = lift(n, s.indices(), &at);
            let psd = (-min_eig(&lifted)).max(-min_eig(&(&ad - &lifted))) / anorm;
            for (w, v) in worst.iter_mut().zip([proj, orth, ident, explicit, psd]) {
                *w = w.max(v);
            }
            if proj > 1e-12 || orth > 1e-10 || ident > 1e-10 || explicit > 1e-10 || psd > 1e-9 {
                failures.push(format!("case {case} n={n} delta={delta}"));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = failures.is_empty() && secs < 60.0;
    verdict(
        "AC1",
        pass,
        &format!(
            "20 random SPD; max |Pi^2-Pi|={:.1e} orth={:.1e} identity={:.1e} explicit={:.1e} psd={:.1e}; {secs:.1}s {:?}",
            worst[0], worst[1], worst[2], worst[3], worst[4], failures
        ),
    );
    assert!(pass);
}

#[test]
fn ac2_multiplicity() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut failures = Vec::new();
    let mut checked = 0;
    for case in 0..10u64 {
        let n = rng.gen_range(50..=150);
        let a = random_sparse_spd(n, rng.gen_range(0.3..1.5), 2000 + case);
        let g = symmetrized_graph(&a).unwrap();
        let delta = 1 + (case as usize % 3);
        let p = random_partition(&g, rng.gen_range(2..=5), &mut rng);
        for (i, s) in extend_overlap(&g, &p, delta).unwrap().iter().enumerate() {
            let b = local_matrix(&a, s).unwrap();
            let spec = select_pou_modes(&b, f64::INFINITY).unwrap().spectrum;
            let ni = b.n_interior();
            let coupling = b.matrix().view((ni, 0), (b.len() - ni, ni)).into_owned();
            let sv = coupling.singular_values();
            let smax = sv.iter().copied().fold(0.0, f64::max);
            let rank = sv.iter().filter(|&&x| x > 1e-10 * smax.max(1.0)).count();
            let zeros = spec.iter().filter(|l| l.abs() < 1e-8).count();
            let ones = spec.iter().filter(|l| (*l - 1.0).abs() < 1e-8).count();
            let rest_ok = spec.iter().all(|&l| l.abs() < 1e-8 || l >= 1.0 - 1e-8);
            checked += 1;
            if zeros != b.len() - ni || ones != ni - rank || !rest_ok {
                failures.push(format!(
                    "case {case} subdomain {i}: zeros {zeros}/{} ones {ones}/{}",
                    b.len() - ni,
                    ni - rank
                ));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = failures.is_empty() && secs < 30.0;
    verdict("AC2", pass, &format!("{checked} subdomains on 10 random SPD; {secs:.1}s {failures:?}"));
    assert!(pass);
}

#[test]
fn ac3_color_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut fixtures: Vec<(String, SparseMat, usize, usize)> = (0..5)
        .map(|k| {
            let n = 100 + 20 * k as usize;
            (format!("random{n}"), random_sparse_spd(n, 1.0, 3000 + k), 3 + k as usize, 1 + k as usize % 3)
        })
        .collect();
    fixtures.push(("poisson2d-12".into(), generate(&ProblemSpec::Poisson2d { m: 12 }).unwrap().0, 4, 2));
    fixtures.push((
        "hetero2d-12".into(),
        generate(&ProblemSpec::Hetero2d { m: 12, contrast: 1e4, seed: 1 }).unwrap().0,
        9,
        2,
    ));
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for (name, a, parts, delta) in &fixtures {
        let n = a.nrows();
        let g = symmetrized_graph(a).unwrap();
        let maps = extend_overlap(&g, &partition_graph(&g, *parts).unwrap(), *delta).unwrap();
        let k_c = color_subdomains(&maps).k_c as f64;
        let mut sum = DMatrix::zeros(n, n);
        for s in &maps {
            let b = local_matrix(a, s).unwrap();
            let f = build_harmonic(&b).unwrap();
            sum += lift(n, s.indices(), &spsd_local(&b, &f).unwrap());
        }
        let ad = a.to_dense().unwrap();
        for _ in 0..100 {
            let v = dv(&random_vec(n, &mut rng));
            let lhs = v.dot(&(&sum * &v));
            let rhs = k_c * v.dot(&(&ad * &v));
            worst = worst.max(lhs / rhs);
            if lhs < -1e-10 * rhs || lhs > rhs * (1.0 + 1e-10) {
                failures.push(format!("{name}: {lhs:.6e} vs {rhs:.6e}"));
            }
        }
    }
    let pass = failures.is_empty();
    verdict(
        "AC3",
        pass,
        &format!("{} fixtures x 100 vectors; max v'SumA~v / (k_c v'Av) = {worst:.4} {failures:?}", fixtures.len()),
    );
    assert!(pass);
}

fn bound_case(name: &str, spec: ProblemSpec, cfg: &SchwarzConfig) -> (bool, String) {
    let (a, _) = generate(&spec).unwrap();
    let pre = SchwarzPreconditioner::setup(&a, cfg).unwrap();
    let c = check_bound(&a, &pre, cfg.nu).unwrap();
    let ok = c.kappa < c.bound;
    (
        ok,
        format!(
            "{name} N={} nu_cfg={:?}: kappa={:.3} bound={:.3} (k_c={} nu={:.3} tau={:.4} lambda*={:.3} n_C={})",
            cfg.n_subdomains,
            cfg.nu,
            c.kappa,
            c.bound,
            c.inputs.k_c,
            c.inputs.nu,
            c.inputs.tau,
            c.inputs.lambda_star,
            pre.report().n_c
        ),
    )
}

#[test]
fn ac4_shrunk_bound() {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut pass = true;
    let problems = [
        ("poisson2d m=12", ProblemSpec::Poisson2d { m: 12 }),
        ("poisson2d m=20", ProblemSpec::Poisson2d { m: 20 }),
        ("hetero2d m=20", ProblemSpec::Hetero2d { m: 20, contrast: 1e4, seed: 1 }),
    ];
    for (name, spec) in &problems {
        for n_sub in [4, 16] {
            let cfg = SchwarzConfig { n_subdomains: n_sub, delta: 2, coarse: CoarseKind::Gevp, ..Default::default() };
            let (ok, line) = bound_case(name, spec.clone(), &cfg);
            pass &= ok;
            lines.push(line);
        }
    }
    // the partition-of-unity modes switched on
    let cfg = SchwarzConfig { n_subdomains: 4, delta: 2, nu: Some(2.0), coarse: CoarseKind::Gevp, ..Default::default() };
    let (ok, line) = bound_case("poisson2d m=12", ProblemSpec::Poisson2d { m: 12 }, &cfg);
    pass &= ok;
    lines.push(line);
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 300.0;
    verdict("AC4", pass, &format!("{secs:.1}s\n    {}", lines.join("\n    ")));
    assert!(pass);
}

#[test]
fn ac5_full_bound() {
    let cfg = SchwarzConfig { n_subdomains: 4, delta: 2, coarse: CoarseKind::Full, ..Default::default() };
    let (pass, line) = bound_case("poisson2d m=12", ProblemSpec::Poisson2d { m: 12 }, &cfg);
    verdict("AC5", pass, &line);
    assert!(pass);
}

fn cg_iterations(a: &SparseMat, b: &[f64], cfg: &SchwarzConfig, tol: f64) -> usize {
    let pre = SchwarzPreconditioner::setup(a, cfg).unwrap();
    let (_, rep) = pcg(a, &pre, b, tol, 5000).unwrap();
    rep.iterations
}

#[test]
fn ac6_weak_scaling() {
    let mut two = Vec::new();
    let mut one = Vec::new();
    for (m, n_sub) in [(30, 4), (60, 16), (120, 64)] {
        let (a, b) = generate(&ProblemSpec::Poisson2d { m }).unwrap();
        let base = SchwarzConfig { n_subdomains: n_sub, delta: 2, tau: 0.1, ..Default::default() };
        two.push(cg_iterations(&a, &b, &SchwarzConfig { coarse: CoarseKind::Gevp, ..base.clone() }, 1e-10));
        one.push(cg_iterations(&a, &b, &SchwarzConfig { coarse: CoarseKind::None, ..base }, 1e-10));
    }
    let lo = *two.iter().min().unwrap() as f64;
    let hi = *two.iter().max().unwrap() as f64;
    let grows = one.windows(2).all(|w| w[1] > w[0]);
    let pass = hi <= 2.0 * lo && grows;
    verdict("AC6", pass, &format!("N=4/16/64: two-level {two:?}, one-level {one:?}"));
    assert!(pass);
}

#[test]
fn ac7_decay_with_overlap() {
    let (a, _) = generate(&ProblemSpec::Poisson2d { m: 30 }).unwrap();
    let counts = |delta| {
        let cfg = SchwarzConfig { n_subdomains: 16, delta, tau: 0.1, coarse: CoarseKind::Gevp, ..Default::default() };
        let pre = SchwarzPreconditioner::setup(&a, &cfg).unwrap();
        pre.report().subdomains.iter().map(|s| s.harmonic_modes).collect::<Vec<_>>()
    };
    let c1 = counts(1);
    let c3 = counts(3);
    let ok = c1.iter().zip(&c3).filter(|(x, y)| y <= x).count();
    let frac = ok as f64 / c1.len() as f64;
    let pass = frac >= 0.9;
    verdict("AC7", pass, &format!("delta=1 {c1:?}; delta=3 {c3:?}; {:.0}% non-increasing", 100.0 * frac));
    assert!(pass);
}

#[test]
fn ac8_nonsymmetric() {
    let (a, b) = generate(&ProblemSpec::Advection2d { m: 30, eps: 1e-2, velocity: (1.0, 0.0) }).unwrap();
    let base = SchwarzConfig {
        n_subdomains: 16,
        delta: 2,
        tau: 0.1,
        one_level: OneLevel::Ras,
        combine: Combine::Deflated,
        ..Default::default()
    };
    let run = |coarse| {
        let pre = SchwarzPreconditioner::setup(&a, &SchwarzConfig { coarse, ..base.clone() }).unwrap();
        let res = gmres_right(&a, &pre, &b, 1e-8, 500);
        (res.map(|(_, r)| r.iterations), pre.report().n_c)
    };
    let (two, n_c) = run(CoarseKind::Svd);
    let (one, _) = run(CoarseKind::None);
    let pass = matches!((&two, &one), (Ok(t), Ok(o)) if t < o);
    verdict("AC8", pass, &format!("advection m=30: two-level SVD {two:?} (n_C={n_c}), one-level RAS {one:?}"));
    assert!(pass);
}

#[test]
fn ac9_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let fixtures: Vec<(&str, SparseMat)> = vec![
        ("poisson2d-12", generate(&ProblemSpec::Poisson2d { m: 12 }).unwrap().0),
        ("poisson3d-5", generate(&ProblemSpec::Poisson3d { m: 5 }).unwrap().0),
        ("hetero2d-12", generate(&ProblemSpec::Hetero2d { m: 12, contrast: 1e4, seed: 3 }).unwrap().0),
        ("advection2d-12", generate(&ProblemSpec::Advection2d { m: 12, eps: 1e-2, velocity: (1.0, 0.0) }).unwrap().0),
        ("random-200", random_sparse_spd(200, 1.0, 9)),
    ];
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    let mut variants = 0;
    for (name, a) in &fixtures {
        for one_level in [OneLevel::Asm, OneLevel::Ras] {
            for coarse in [CoarseKind::None, CoarseKind::Full, CoarseKind::Gevp, CoarseKind::Svd] {
                for combine in [Combine::Additive, Combine::Deflated] {
                    for nu in [None, Some(2.0)] {
                        if (coarse == CoarseKind::None && (combine == Combine::Deflated || nu.is_some()))
                            || (!a.is_symmetric() && nu.is_some())
                        {
                            continue;
                        }
                        let cfg = SchwarzConfig { n_subdomains: 4, delta: 2, nu, coarse, one_level, combine, ..Default::default() };
                        let pre = SchwarzPreconditioner::setup(a, &cfg).unwrap();
                        let m = dense_preconditioner(a, &pre);
                        variants += 1;
                        for _ in 0..3 {
                            let r = random_vec(a.nrows(), &mut rng);
                            let mut z = vec![0.0; r.len()];
                            pre.apply(&r, &mut z);
                            let expect = &m * dv(&r);
                            let d = rel_diff(&z, expect.as_slice());
                            worst = worst.max(d);
                            if d > 1e-12 {
                                failures.push(format!(
                                    "{name} {}/{}/{}/{nu:?}: {d:.2e}",
                                    one_level.name(),
                                    coarse.name(),
                                    combine.name()
                                ));
                            }
                        }
                    }
                }
            }
        }
    }
    let pass = failures.is_empty();
    verdict("AC9", pass, &format!("{variants} variants on {} fixtures; max rel diff {worst:.2e} {failures:?}", fixtures.len()));
    assert!(pass);
}

#[test]
fn ac10_manufactured_solutions() {
    let specs = [
        ProblemSpec::Poisson2d { m: 20 },
        ProblemSpec::Poisson3d { m: 8 },
        ProblemSpec::Hetero2d { m: 20, contrast: 1e4, seed: 1 },
        ProblemSpec::Advection2d { m: 20, eps: 1e-2, velocity: (1.0, 0.0) },
    ];
    let mut lines = Vec::new();
    let mut pass = true;
    for spec in &specs {
        let (a, b) = generate(spec).unwrap();
        let err = |x: &[f64]| x.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        let mut solvers = Vec::new();
        if a.is_symmetric() {
            let pre = SchwarzPreconditioner::setup(&a, &SchwarzConfig::default()).unwrap();
            let e = pcg(&a, &pre, &b, 1e-10, 1000).map(|(x, r)| (err(&x), r.iterations));
            solvers.push(("cg", e));
        }
        let cfg = SchwarzConfig { one_level: OneLevel::Ras, combine: Combine::Deflated, ..Default::default() };
        let pre = SchwarzPreconditioner::setup(&a, &cfg).unwrap();
        let e = gmres_right(&a, &pre, &b, 1e-10, 1000).map(|(x, r)| (err(&x), r.iterations));
        solvers.push(("gmres", e));
        for (s, e) in solvers {
            let ok = matches!(e, Ok((v, _)) if v <= 1e-6);
            pass &= ok;
            lines.push(format!("{spec:?} {s}: {e:?}"));
        }
    }
    verdict("AC10", pass, &format!("\n    {}", lines.join("\n    ")));
    assert!(pass);
}
