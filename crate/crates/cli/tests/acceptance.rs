//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use soliton_cli::commands::{compare_with_oracle, examples};
use soliton_cli::config::OracleSampling;
use soliton_cli::Globals;
use soliton_core::profiles::{ratio_to_f64, Exponential, LogQuadratic, PowerSum};
use soliton_core::systems::pde_ode_consistency;
use soliton_core::{
    certify_cylinder, classify_schouten, integrate_lemma, lemma_ode_residual, make_power_profile, paper_examples,
    schouten_residuals, verify_solution, FiberChart, Interval, LogGrid, PointBase, PotentialSpec, RadialFn,
    RadialProfile, Rational64, Signature, SolitonParams, SolutionDescriptor,
};

struct Verdict {
    pass: bool,
    detail: String,
}

fn q(a: i64, b: i64) -> Rational64 {
    Rational64::new(a, b)
}

fn globals() -> Globals {
    Globals {
        seed: Some(0),
        tol_closed: None,
        tol_oracle: None,
        grid: None,
    }
}

fn c1_example_constants() -> Verdict {
    let out = examples(4, &globals()).expect("examples run");
    let rows = out.report["examples"].as_array().expect("rows").clone();
    let lt: Vec<String> = rows
        .iter()
        .map(|r| r["lambda_tilde"].as_str().unwrap().to_string())
        .collect();
    let lf: Vec<String> = rows
        .iter()
        .map(|r| r["lambda_f"].as_str().unwrap().to_string())
        .collect();
    let exact = paper_examples(4).expect("examples");
    let exact_ok = exact.iter().map(|e| e.lambda_tilde).collect::<Vec<_>>() == [q(-1, 2), q(0, 1), q(1, 3)]
        && exact.iter().map(|e| e.lambda_f).collect::<Vec<_>>() == [q(1, 1), q(2, 1), q(2, 1)];
    // λ_F of the steady example is n − 2 for every n
    let parametric = (3..9).all(|n| {
        let e = &paper_examples(n).unwrap()[1];
        e.lambda_f == q(n as i64 - 2, 1) && e.lambda_tilde == q(0, 1)
    });
    Verdict {
        pass: out.exit_code == 0 && exact_ok && parametric && lt == ["-1/2", "0", "1/3"] && lf == ["1", "2", "2"],
        detail: format!("lambda~ = {lt:?}, lambda_F = {lf:?}, exit {}", out.exit_code),
    }
}

fn c2_exact_residuals() -> Verdict {
    let grid = LogGrid::new(1e-2, 1e2, 1000).unwrap();
    let mut worst = (0.0f64, String::new());
    let mut runs = 0;
    for n in 3..=5usize {
        for m in 2..=4usize {
            for k2 in [q(1, 2), q(1, 1), q(2, 1)] {
                let forced = k2 * k2 * (n as i64 - 2);
                let mut descs = classify_schouten(n, m, Some(forced), k2).unwrap();
                descs.extend(classify_schouten(n, m, Some(q(3, 1)), k2).unwrap().into_iter().take(1));
                for d in descs {
                    let rep = verify_solution(&d, &grid, 1e-10).unwrap();
                    runs += 1;
                    if rep.max_abs() >= worst.0 {
                        worst = (rep.max_abs(), format!("family {} n={n} m={m} k2={k2}", d.family));
                    }
                }
            }
        }
    }
    Verdict {
        pass: worst.0 < 1e-10,
        detail: format!("{runs} solutions x 1000 r, max residual {:.2e} ({})", worst.0, worst.1),
    }
}

fn c3_oracle_agreement() -> Verdict {
    let sampling = OracleSampling::default();
    let (mut worst, mut cases) = (0.0f64, 0);
    let mut all = true;
    for n in [3usize, 4] {
        for m in [2usize, 3] {
            let fiber_a = FiberChart::round_sphere(m, 1.0).unwrap();
            let lf_a = Rational64::from_integer(m as i64 - 1);
            let a = classify_schouten(n, m, Some(lf_a), q(1, 1)).unwrap().remove(0);
            let b = classify_schouten(n, m, None, q(1, 1)).unwrap().remove(0);
            let fiber_b = FiberChart::sphere_with_lambda(m, ratio_to_f64(b.lambda_f_exact.unwrap())).unwrap();
            for (d, fiber) in [(a, fiber_a), (b, fiber_b)] {
                let cmp = compare_with_oracle(&d, &fiber, &sampling, 0, 1e-5).unwrap();
                cases += 1;
                all &= cmp.pass;
                worst = worst.max(cmp.ricci_max).max(cmp.hessian_max).max(cmp.scalar_max);
            }
        }
    }
    Verdict {
        pass: all && worst < 1e-5,
        detail: format!(
            "{cases} charts x {} points, max |closed - oracle| {worst:.2e}",
            sampling.points
        ),
    }
}

fn c4_cylinder() -> Verdict {
    match certify_cylinder(3, 1.0, 1e-4, 0) {
        Ok(c) => Verdict {
            pass: c.spherical_max_dev <= 1e-4
                && c.radial_max_dev <= 1e-4
                && c.scalar_max_dev <= 1e-4
                && c.spherical_expected == 1.0
                && c.scalar_expected == 2.0
                && c.bonnet_myers_hypothesis,
            detail: format!(
                "spherical 1 +- {:.1e}, radial 0 +- {:.1e}, scalar 2 +- {:.1e} over {} planes",
                c.spherical_max_dev,
                c.radial_max_dev,
                c.scalar_max_dev,
                c.spherical_planes + c.radial_planes
            ),
        },
        Err(e) => Verdict {
            pass: false,
            detail: e.to_string(),
        },
    }
}

fn c5_lemma_closure() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut closure, mut drift) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let r0 = rng.gen_range(0.1..5.0);
        let psi0 = rng.gen_range(0.1..10.0);
        let s = rng.gen_range(-2.0..2.0);
        let t = integrate_lemma(r0, psi0, s * psi0 / r0, 10.0 * r0, None).unwrap();
        closure = closure.max(t.closure_error());
        drift = drift.max(t.exponent_drift());
    }
    Verdict {
        pass: closure < 1e-6 && drift < 1e-7,
        detail: format!("20 initial conditions, closure {closure:.2e}, exponent drift {drift:.2e}"),
    }
}

fn c6_exponent_dichotomy() -> Verdict {
    let (n, m) = (4usize, 3usize);
    let grid = LogGrid::new(0.1, 10.0, 200).unwrap();
    let sig = Signature::riemannian(n).unwrap();
    let family = classify_schouten(n, m, Some(q(2, 1)), q(1, 1)).unwrap();
    let b = family.iter().find(|d| d.family == soliton_core::Family::B).unwrap();
    let h = b.profile.h_fn().clone();
    let params = b.params;
    let rhs =
        params.lambda_f * (m as f64 - 2.0 * n as f64 + 2.0) / (4.0 * (n as f64 - 1.0)) + params.lambda_tilde / 2.0;

    let (mut false_pass, mut scaling_gap, mut scanned) = (Vec::new(), 0.0f64, 0);
    for i in 1..40 {
        if i == 10 || i == 20 {
            continue;
        }
        let s = 0.05 * i as f64;
        let profile = make_power_profile(1.0, s, PotentialSpec::Explicit(h.clone())).unwrap();
        let d = SolutionDescriptor::custom(profile.clone(), sig.clone(), params).unwrap();
        let rep = verify_solution(&d, &grid, 1e-10).unwrap();
        scanned += 1;
        if rep.pass {
            false_pass.push(s);
        }
        let expected = s * (s - 1.0) * (n as f64 - 2.0);
        for r in grid.points() {
            let [_, _, r20] = schouten_residuals(&profile, &params, r).unwrap();
            let c = (r20 + rhs) / r.powf(2.0 * s - 1.0);
            scaling_gap = scaling_gap.max((c - expected).abs() / expected.abs());
        }
    }
    let survivors = family.iter().all(|d| verify_solution(d, &grid, 1e-10).unwrap().pass);
    Verdict {
        pass: false_pass.is_empty() && scaling_gap < 1e-9 && survivors,
        detail: format!(
            "{scanned} exponents all fail (false passes {false_pass:?}), R20 + RHS vs s(s-1)(n-2) r^(2s-1) rel gap {scaling_gap:.1e}, s = 1/2 and 1 pass: {survivors}"
        ),
    }
}

fn c7_necessity() -> Verdict {
    let grid = LogGrid::new(1e-2, 1e2, 1000).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut premise_points, mut excluded, mut violations, mut worst) = (0usize, 0usize, 0usize, 0.0f64);
    let mut candidates: Vec<(RadialProfile, SolitonParams)> = Vec::new();
    for n in 3..=5usize {
        for m in 2..=4usize {
            for k2 in [q(1, 2), q(1, 1), q(2, 1)] {
                for lf in [q(1, 1), k2 * k2 * (n as i64 - 2)] {
                    for d in classify_schouten(n, m, Some(lf), k2).unwrap() {
                        candidates.push((d.profile.clone(), d.params));
                    }
                }
                let (_, p) =
                    soliton_core::make_family_b(n, m, k2, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)).unwrap();
                let params = classify_schouten(n, m, None, k2).unwrap()[0].params;
                candidates.push((p, params));
            }
        }
    }
    // off-family candidates should never meet the premise
    for _ in 0..50 {
        let n = rng.gen_range(3..=5usize);
        let psi = PowerSum::monomial(rng.gen_range(0.5..2.0), rng.gen_range(-1.0..2.0))
            .with_constant(rng.gen_range(0.1..1.0));
        let h = LogQuadratic {
            a: rng.gen_range(-1.0..1.0),
            b: rng.gen_range(-1.0..1.0),
            c: 0.0,
        };
        let params = SolitonParams::schouten(n, 2, rng.gen_range(0.0..3.0), rng.gen_range(-1.0..1.0)).unwrap();
        candidates.push((
            RadialProfile::new(Arc::new(psi), Arc::new(h), Interval::POSITIVE),
            params,
        ));
    }
    for (profile, params) in &candidates {
        for r in grid.points() {
            let [r18, r19, _] = schouten_residuals(profile, params, r).unwrap();
            if !(r18.abs() < 1e-10 && r19.abs() < 1e-10) {
                continue;
            }
            if profile.h(r).d1.abs() <= 1e-8 {
                excluded += 1;
                continue;
            }
            premise_points += 1;
            let lem = lemma_ode_residual(profile, r).unwrap().abs();
            worst = worst.max(lem);
            if lem >= 1e-9 {
                violations += 1;
            }
        }
    }
    Verdict {
        pass: violations == 0 && premise_points > 0,
        detail: format!(
            "{} candidates, {premise_points} points with R18 = R19 = 0, {excluded} excluded (|h'| <= 1e-8), max |lemma residual| {worst:.2e}",
            candidates.len()
        ),
    }
}

fn random_fn(rng: &mut ChaCha8Rng, positive: bool) -> Arc<dyn RadialFn> {
    match rng.gen_range(0..3) {
        0 => {
            let mut p = PowerSum::default().with_constant(if positive {
                rng.gen_range(0.5..2.0)
            } else {
                rng.gen_range(-1.0..1.0)
            });
            for _ in 0..rng.gen_range(1..4) {
                let c = if positive {
                    rng.gen_range(0.1..1.0)
                } else {
                    rng.gen_range(-1.0..1.0)
                };
                p = p.plus(c, rng.gen_range(-1.5..2.5));
            }
            Arc::new(p)
        }
        1 => Arc::new(Exponential {
            a: if positive {
                rng.gen_range(0.5..2.0)
            } else {
                rng.gen_range(-2.0..2.0)
            },
            b: rng.gen_range(-0.5..0.5),
        }),
        _ => {
            if positive {
                Arc::new(PowerSum::monomial(rng.gen_range(0.5..2.0), rng.gen_range(-1.0..1.0)))
            } else {
                Arc::new(LogQuadratic {
                    a: rng.gen_range(-1.0..1.0),
                    b: rng.gen_range(-1.0..1.0),
                    c: rng.gen_range(-1.0..1.0),
                })
            }
        }
    }
}

fn c8_pde_ode_consistency() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut worst, mut checked) = (0.0f64, 0usize);
    for _ in 0..100 {
        let n = rng.gen_range(3..=5usize);
        let mut eps: Vec<i8> = (0..n).map(|_| if rng.gen_bool(0.7) { 1 } else { -1 }).collect();
        eps[0] = 1;
        let sig = Signature::new(eps).unwrap();
        let profile = RadialProfile::new(
            random_fn(&mut rng, true),
            random_fn(&mut rng, false),
            Interval::POSITIVE,
        );
        let params = SolitonParams::new(
            n,
            rng.gen_range(1..5),
            rng.gen_range(0.05..0.6),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
        )
        .unwrap();
        let mut done = 0;
        while done < 20 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let r = sig.radial(&x);
            if !(0.1..=8.0).contains(&r) || profile.psi(r).value <= 0.0 {
                continue;
            }
            let rep = pde_ode_consistency(&profile, &sig, &params, &PointBase::new(x)).unwrap();
            worst = worst.max(rep.offdiag_mismatch);
            done += 1;
            checked += 1;
        }
    }
    Verdict {
        pass: worst <= 1e-12,
        detail: format!("{checked} points, max |Pde1 - 4 e_i e_j x_i x_j R15| / max(1, |terms|) = {worst:.2e}"),
    }
}

type Criterion = (&'static str, fn() -> Verdict, Option<Duration>);

fn main() {
    let criteria: [Criterion; 8] = [
        (
            "C1 worked-example constants",
            c1_example_constants,
            Some(Duration::from_secs(1)),
        ),
        (
            "C2 exact-solution residuals",
            c2_exact_residuals,
            Some(Duration::from_secs(5)),
        ),
        (
            "C3 oracle agreement",
            c3_oracle_agreement,
            Some(Duration::from_secs(30)),
        ),
        ("C4 cylinder curvature certificate", c4_cylinder, None),
        ("C5 psi ODE closure", c5_lemma_closure, None),
        ("C6 exponent dichotomy", c6_exponent_dichotomy, None),
        ("C7 necessity of the psi ODE", c7_necessity, None),
        ("C8 PDE/ODE consistency", c8_pde_ode_consistency, None),
    ];
    let mut failed = 0;
    for (name, check, budget) in criteria {
        let start = Instant::now();
        let v = check();
        let elapsed = start.elapsed();
        let in_time = budget.is_none_or(|b| elapsed < b);
        let pass = v.pass && in_time;
        if !pass {
            failed += 1;
        }
        let budget = budget.map(|b| format!(" / {} s", b.as_secs())).unwrap_or_default();
        println!(
            "[{}] {name}: {} ({:.2} s{budget})",
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} of 8 criteria passed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
