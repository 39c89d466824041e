//! Acceptance suite. Prints one line per criterion and exits non-zero if any
//! criterion fails.

use std::time::{Duration, Instant};

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rebo_core::fixtures;
use rebo_core::juggle::{
    self, calibrate_losses, default_bracket, find_fixed_point, flight, hit, iterate_apex, preload_energy,
    power_for_duration, BallSpec, HitMethod, HitOutcome, JugglerSpec, LossParameter, Stability,
};
use rebo_core::kinematics::{cartesian_to_lengths, lengths_to_cartesian, lengths_to_spherical, spherical_to_cartesian};
use rebo_core::origami::FoldGeometry;
use rebo_core::stiffness::{fit_affine, predict_stiffness, relative_deviation, stack_stiffness};
use rebo_core::hull::ConvexHull;
use rebo_core::workspace::{boundary_surface, calibrate_d, volume_hull, volume_jacobian, DEFAULT_GRID, DEFAULT_HULL_SAMPLES};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn sig4(x: f64) -> f64 {
    let mag = 10f64.powi(3 - x.abs().log10().floor() as i32);
    (x * mag).round() / mag
}

fn c1_fold_geometry() -> Outcome {
    // hand evaluation: theta = 2 pi cos45 / 6, alpha = (pi - theta) / 2, h = 10 / sin45
    let theta = 0.740_480_489_693_061;
    let alpha = 1.200_556_081_948_366;
    let h = 14.142_135_623_730_951;
    let g = FoldGeometry::from_cone_angle(45.0, 6, 10.0, 8).unwrap();
    let errs = [
        (g.theta - theta).abs(),
        (g.alpha - alpha).abs(),
        (g.h_mm - h).abs(),
        (g.rest_length_mm - 80.0).abs(),
    ];
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    check(
        worst < 1e-9,
        format!(
            "theta {:.4} deg, alpha {:.4} deg, h {:.6} mm, rest {} mm; max err {worst:.1e}",
            g.theta.to_degrees(),
            g.alpha.to_degrees(),
            g.h_mm,
            g.rest_length_mm
        ),
    )
}

fn c2_stiffness_law() -> Outcome {
    let model = fixtures::reference_stiffness_model();
    let k15 = predict_stiffness(15.0, &model).unwrap();
    let k45 = predict_stiffness(45.0, &model).unwrap();
    let points: Vec<(f64, f64)> = fixtures::stiffness_means().iter().map(|m| (m.beta_deg, m.k_npm)).collect();
    let fit = fit_affine(&points).unwrap();
    check(
        sig4(k15) == 197.1 && sig4(k45) == 678.9 && fit.r_squared >= 0.9,
        format!(
            "K(15) = {k15:.4}, K(45) = {k45:.4} N/m; fixture fit R^2 = {:.4} (slope {:.3}, intercept {:.3})",
            fit.r_squared, fit.slope, fit.intercept
        ),
    )
}

fn c3_double_layer() -> Outcome {
    let rows = fixtures::double_layer_rows();
    let mut devs = Vec::new();
    for r in &rows {
        let k = stack_stiffness(&[r.inner_k_npm, r.outer_k_npm]).unwrap();
        devs.push(relative_deviation(k, r.measured_k_npm).abs());
    }
    check(
        devs[0] <= 0.032 && devs[1] <= 0.032,
        format!(
            "rows 1-2 deviation {:.2} %, {:.2} %; row 3 (recorded only) {:.2} %",
            100.0 * devs[0],
            100.0 * devs[1],
            100.0 * devs[2]
        ),
    )
}

fn c4_round_trip() -> Outcome {
    let rig = fixtures::default_rig();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let q = [
            rng.gen_range(rig.l_min_mm..=rig.l_max_mm),
            rng.gen_range(rig.l_min_mm..=rig.l_max_mm),
            rng.gen_range(rig.l_min_mm..=rig.l_max_mm),
        ];
        let p = lengths_to_cartesian(q, &rig).unwrap();
        let back = lengths_to_cartesian(cartesian_to_lengths(&p, &rig).unwrap(), &rig).unwrap();
        worst = worst.max((back - p).norm());
    }
    let sym = spherical_to_cartesian(&lengths_to_spherical([77.0; 3], &rig).unwrap()).unwrap();
    let exact = sym == Vector3::new(0.0, 0.0, 77.0);
    check(
        worst < 1e-9 && exact,
        format!("10^4 poses, max |fwd(inv(p)) - p| = {worst:.2e} mm; (77,77,77) -> {sym:?} exact: {exact}"),
    )
}

fn c5_workspace() -> Outcome {
    let rig = fixtures::default_rig();
    let start = Instant::now();
    let cal = calibrate_d(4980.95, &rig, DEFAULT_GRID).unwrap();
    let cfg = rig.with_d(cal.d_mm);
    let jac = volume_jacobian(&cfg, DEFAULT_GRID).unwrap().volume_mm3;
    let hull = volume_hull(&cfg, DEFAULT_HULL_SAMPLES, 0).unwrap();
    let elapsed = start.elapsed();
    let rel = (hull.volume_mm3 - jac) / jac;
    let mesh = ConvexHull::new(&boundary_surface(&cfg, 64).unwrap()).unwrap().volume();
    check(
        (jac - 4980.95).abs() < 0.1 && rel.abs() <= 0.10 && elapsed < Duration::from_secs(30),
        format!(
            "d = {:.6} mm, jacobian {jac:.3} mm^3; hull {:.1} mm^3 ({:+.2} %, limit 10 %); face-mesh hull {mesh:.1} mm^3 ({:+.2} %); {:.2} s",
            cal.d_mm,
            hull.volume_mm3,
            100.0 * rel,
            100.0 * (mesh - jac) / jac,
            elapsed.as_secs_f64()
        ),
    )
}

fn c6_hit_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut dv, mut dt) = (0.0f64, 0.0f64);
    let (mut lifts, mut deaths, mut mismatched) = (0, 0, 0);
    for _ in 0..1000 {
        let ball = BallSpec::new(rng.gen_range(0.1..2.0), rng.gen_range(0.2..=1.0), "draw");
        let spec = JugglerSpec {
            k_es: rng.gen_range(500.0..6000.0),
            b_s: if rng.gen_bool(0.25) { 0.0 } else { rng.gen_range(0.0..30.0) },
            p_com: rng.gen_range(0.0..0.02),
            z_rest: 0.088,
        };
        let v_in = flight(rng.gen_range(0.0..0.3), &spec).unwrap().v_touchdown;
        let a = hit(v_in, &ball, &spec, HitMethod::Analytic).unwrap();
        let b = hit(v_in, &ball, &spec, HitMethod::Rk4).unwrap();
        match (a, b) {
            (HitOutcome::Liftoff(x), HitOutcome::Liftoff(y)) => {
                lifts += 1;
                dv = dv.max((x.v_out - y.v_out).abs());
                dt = dt.max((x.t_hit - y.t_hit).abs());
            }
            (HitOutcome::Death { .. }, HitOutcome::Death { .. }) => deaths += 1,
            _ => mismatched += 1,
        }
    }
    let elapsed = start.elapsed();
    check(
        dv < 1e-6 && dt < 1e-6 && mismatched == 0 && elapsed < Duration::from_secs(30),
        format!(
            "{lifts} liftoffs, {deaths} deaths, {mismatched} mismatched; max |dv| = {dv:.2e} m/s, max |dt| = {dt:.2e} s; {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn calibrated_shot() -> (BallSpec, JugglerSpec) {
    let (ball, spec) = fixtures::shot_operating_point();
    calibrate_losses(0.040, &ball, &spec, LossParameter::Restitution, HitMethod::Analytic).unwrap()
}

fn c7_preload_power() -> Outcome {
    let ops = fixtures::juggle_operating_points();
    let preload = JugglerSpec {
        k_es: ops.k_es_npm,
        b_s: 0.0,
        p_com: ops.preload_precompression_mm * 1e-3,
        z_rest: 0.088,
    };
    let e = preload_energy(&preload);
    let p = power_for_duration(e, ops.typical_hit_duration_s);
    let (ball, spec) = calibrated_shot();
    let report = juggle::mean_power(&ball, &spec, HitMethod::Analytic).unwrap();
    let in_window = (0.015..=0.035).contains(&report.t_hit);
    check(
        sig4(e) == 0.4593 && (p - 22.97).abs() < 0.01 && in_window,
        format!(
            "E = {e:.4} J, E/0.02 s = {p:.4} W; simulated t_hit = {:.4} s (window [0.015, 0.035]); release stroke {:.4} s",
            report.t_hit, report.t_release
        ),
    )
}

fn c8_fixed_point() -> Outcome {
    let (ball, spec) = calibrated_shot();
    let fp = find_fixed_point(&ball, &spec, default_bracket(&spec), HitMethod::Analytic).unwrap();
    let mut worst: f64 = 0.0;
    let mut all_converge = true;
    for h0_mm in fixtures::juggle_operating_points().transient_initial_apex_mm {
        let seq = iterate_apex(h0_mm * 1e-3, 10, &ball, &spec, HitMethod::Analytic).unwrap();
        let last = *seq.last().unwrap();
        let rel = (last - fp.h_star).abs() / fp.h_star;
        worst = worst.max(rel);
        all_converge &= seq.len() == 11 && rel < 0.05;
    }
    check(
        (fp.h_star - 0.040).abs() <= 1e-4
            && (fp.multiplier - 0.529).abs() <= 1e-3
            && fp.stability == Stability::AsymptoticallyStable
            && all_converge,
        format!(
            "e = {:.6}, h* = {:.4} mm, multiplier {:.5} ({:?}); worst 10-bounce error {:.3} %",
            ball.restitution,
            fp.h_star * 1e3,
            fp.multiplier,
            fp.stability,
            100.0 * worst
        ),
    )
}

fn c9_monotonicity() -> Outcome {
    let (ball, spec) = calibrated_shot();
    // -inf: the juggle dies from every height; +inf: it grows past the bracket
    let h_star = |b: &BallSpec, s: &JugglerSpec| juggle::steady_apex(b, s, HitMethod::Analytic);
    let increasing = |v: &[f64]| {
        v.windows(2)
            .all(|w| w[1] > w[0] || (w[0] == w[1] && w[0].is_infinite()))
    };
    let mut finite_points = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut ok = true;
    let mut grids = 0;
    for _ in 0..20 {
        let b = BallSpec::new(rng.gen_range(0.3..1.5), rng.gen_range(0.5..0.95), "draw");
        let s = spec.with_damping(rng.gen_range(0.0..5.0));
        let p_grid: Vec<f64> = (0..7).map(|i| 0.005 + 0.0025 * i as f64).collect();
        let hp: Vec<f64> = p_grid.iter().map(|&p| h_star(&b, &s.with_precompression(p))).collect();
        ok &= increasing(&hp);
        let m_grid = [0.225, 0.45, 0.7, 1.0, 1.4];
        let hm: Vec<f64> = m_grid.iter().map(|&m| h_star(&BallSpec::new(m, b.restitution, "m"), &s)).collect();
        let neg: Vec<f64> = hm.iter().map(|h| -h).collect();
        ok &= increasing(&neg);
        finite_points += hp.iter().chain(&hm).filter(|h| h.is_finite()).count();
        grids += 2;
    }
    let hp: Vec<f64> = (0..6).map(|i| h_star(&ball, &spec.with_precompression(0.005 + 0.0025 * i as f64))).collect();
    ok &= hp.iter().all(|h| h.is_finite()) && increasing(&hp);
    check(
        ok,
        format!(
            "{} sweep grids, {finite_points} finite steady states; calibrated shot h*(p = 5..17.5 mm) = [{}] mm",
            grids + 1,
            hp.iter().map(|h| format!("{:.1}", h * 1e3)).collect::<Vec<_>>().join(", ")
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("fold geometry", c1_fold_geometry),
        ("stiffness law", c2_stiffness_law),
        ("double-layer additivity", c3_double_layer),
        ("kinematics round trip", c4_round_trip),
        ("workspace volume", c5_workspace),
        ("hit-phase equivalence", c6_hit_equivalence),
        ("preload energy and power", c7_preload_power),
        ("fixed point and stability", c8_fixed_point),
        ("monotonicity", c9_monotonicity),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        if !out.pass {
            failed += 1;
        }
        println!(
            "acceptance {:>2} {:<26} {} [{:.2} s] {}",
            i + 1,
            name,
            if out.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            out.detail
        );
    }
    println!(
        "acceptance 10 {:<26} DECLARED hardware-only results (tracking rms, cyclic drift, per-ball apexes); covered by 8 and 9",
        "desk-scale limits"
    );
    println!("acceptance summary: {} passed, {failed} failed, 1 declared", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
