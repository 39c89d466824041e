//! Subcommand implementations. Each writes its report to `out` and its files
//! through [`write_output`] so they get a manifest.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use nalgebra::Vector3;
use rebo_core::juggle::{
    self, calibrate_losses, default_bracket, find_fixed_point, iterate_apex, mean_power, sample_trajectory, simulate,
    sweep_precompression, write_sweep_csv, HitMethod, LossParameter, SimOptions,
};
use rebo_core::kinematics::{
    cartesian_to_lengths, cartesian_to_spherical, lengths_to_motor, lengths_to_spherical,
    motor_to_lengths, spherical_to_cartesian,
};
use rebo_core::origami::{
    fold_geometry, generate_pattern_with, inner_layer_params, export_svg, BetaBand, PatternOptions, StyleConfig,
};
use rebo_core::stiffness::{
    estimate_stiffness, fit_affine, hysteresis_loss, predict_stiffness, read_angle_points, read_traces_file,
    stack_stiffness,
};
use rebo_core::workspace::{boundary_trajectories, calibrate_d, volume_hull, volume_jacobian};
use rebo_core::{fixtures, BallSpec, JugglerSpec, ReboParams};

use crate::cli::{
    FreeLoss, Figure, JuggleArgs, JuggleCmd, KinCmd, MethodArg, PatternCmd, PatternGenArgs, ReproArgs, StiffnessCmd,
    VolumeMethodArg, WorkspaceCmd,
};
use crate::config::ToolConfig;
use crate::manifest::{write_output, RunContext};
use crate::plot::{plot_xy, Draw, Series};

pub struct Env<'a> {
    pub cfg: &'a ToolConfig,
    pub ctx: RunContext,
    pub out: &'a mut dyn Write,
}

impl Env<'_> {
    fn write_file(&self, requested: &Path, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.cfg.output_path(requested)?;
        write_output(&path, bytes, &self.ctx)?;
        Ok(path)
    }
}

pub fn pattern(cmd: PatternCmd, env: &mut Env) -> Result<()> {
    let PatternCmd::Gen(args) = cmd;
    pattern_gen(args, env)
}

fn pattern_gen(a: PatternGenArgs, env: &mut Env) -> Result<()> {
    let mut params = ReboParams::new(a.ao, a.bo, a.dz, a.nr, a.nl, a.beta)?;
    if let Some(t) = a.thickness_mm {
        params.material.thickness_mm = t;
        params.validate()?;
    }
    if params.beta_band() == BetaBand::Extrapolated {
        writeln!(env.out, "warning: beta = {} deg is outside the characterized band [15, 45]", a.beta)?;
    }
    let options = PatternOptions {
        invert_mountain_valley: a.invert,
    };
    let style = StyleConfig::default();
    let mut layers = vec![(params.clone(), a.output.clone())];
    if let Some(c) = a.inner_clearance {
        let inner = inner_layer_params(&params, c)?;
        layers.push((inner, with_suffix(&a.output, "-inner")));
    }
    for (p, file) in layers {
        let g = fold_geometry(&p)?;
        let pattern = generate_pattern_with(&p, options)?;
        let path = env.write_file(&file, &export_svg(&pattern, &style)?)?;
        writeln!(env.out, "pattern: {}", path.display())?;
        writeln!(
            env.out,
            "  a_o {} mm, b_o {} mm, beta {} deg, theta {:.6} rad, alpha {:.6} rad, h {:.6} mm, rest length {} mm",
            p.a_o_mm, p.b_o_mm, p.beta_deg, g.theta, g.alpha, g.h_mm, g.rest_length_mm
        )?;
        writeln!(
            env.out,
            "  sheet {:.3} x {:.3} mm, {} creases",
            pattern.sheet_width_mm,
            pattern.sheet_height_mm,
            pattern.creases.len()
        )?;
    }
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    let name = match path.extension() {
        Some(ext) => format!("{stem}{suffix}.{}", ext.to_string_lossy()),
        None => format!("{stem}{suffix}"),
    };
    path.with_file_name(name)
}

pub fn stiffness(cmd: StiffnessCmd, env: &mut Env) -> Result<()> {
    match cmd {
        StiffnessCmd::Predict { beta } => {
            let model = fixtures::reference_stiffness_model();
            let k = predict_stiffness(beta, &model)?;
            if !model.in_band(beta) {
                writeln!(env.out, "warning: beta = {beta} deg is outside the fitted band")?;
            }
            writeln!(env.out, "k_npm: {k:.4}")?;
        }
        StiffnessCmd::Fit { files } => {
            let mut points = Vec::new();
            for f in &files {
                let file = std::fs::File::open(f).with_context(|| format!("opening {}", f.display()))?;
                points.extend(read_angle_points(file)?);
            }
            let m = fit_affine(&points)?;
            writeln!(env.out, "points: {}", points.len())?;
            writeln!(env.out, "slope_npm_per_deg: {:.6}", m.slope)?;
            writeln!(env.out, "intercept_npm: {:.6}", m.intercept)?;
            writeln!(env.out, "r_squared: {:.6}", m.r_squared)?;
            writeln!(env.out, "zero_crossing_deg: {:.6}", m.zero_crossing_deg())?;
        }
        StiffnessCmd::Estimate { file, fraction } => {
            let traces = read_traces_file(&file)?;
            writeln!(env.out, "trial,k_npm,k_stderr_npm,r_squared,fit_lo_mm,fit_hi_mm,samples")?;
            for t in &traces {
                let e = estimate_stiffness(t, fraction)?;
                writeln!(
                    env.out,
                    "{},{:.4},{:.4},{:.6},{:.4},{:.4},{}",
                    t.trial_id, e.k_npm, e.k_stderr_npm, e.r_squared, e.fit_range_mm.0, e.fit_range_mm.1, e.samples_used
                )?;
            }
        }
        StiffnessCmd::Stack { k } => {
            writeln!(env.out, "k_npm: {:.4}", stack_stiffness(&k)?)?;
        }
        StiffnessCmd::Hysteresis { loading, unloading } => {
            let up = single_trace(&loading)?;
            let down = single_trace(&unloading)?;
            let loss = hysteresis_loss(&up, &down)?;
            if loss.negative {
                writeln!(env.out, "warning: negative loss; are the branches swapped?")?;
            }
            writeln!(env.out, "energy_j: {:.8}", loss.energy_j)?;
            writeln!(env.out, "span_mm: {:.4},{:.4}", loss.span_mm.0, loss.span_mm.1)?;
        }
    }
    Ok(())
}

fn single_trace(path: &Path) -> Result<rebo_core::ForceDisplacementTrace> {
    let mut traces = read_traces_file(path)?;
    if traces.len() != 1 {
        bail!("{} holds {} trials; expected one branch", path.display(), traces.len());
    }
    Ok(traces.remove(0))
}

pub fn kin(cmd: KinCmd, env: &mut Env) -> Result<()> {
    let rig = &env.cfg.rig;
    match cmd {
        KinCmd::Fk { l, m } => {
            let lengths = match (l, m) {
                (Some(l), _) => l,
                (None, Some(m)) => {
                    let a = motor_to_lengths(m, rig);
                    if a.clamped {
                        writeln!(env.out, "warning: motor command clamped to the actuator range")?;
                    }
                    a.lengths_mm
                }
                (None, None) => unreachable!("clap requires one input"),
            };
            let s = lengths_to_spherical(lengths, rig)?;
            let p = spherical_to_cartesian(&s)?;
            writeln!(env.out, "q_la_mm: {}", fmt3(lengths))?;
            writeln!(env.out, "q_tt: r_mm={:.9} theta_rad={:.9} phi_rad={:.9}", s.r_mm, s.theta, s.phi)?;
            writeln!(env.out, "p_mm: {}", fmt3([p.x, p.y, p.z]))?;
        }
        KinCmd::Ik { p } => {
            let v = Vector3::new(p[0], p[1], p[2]);
            let lengths = cartesian_to_lengths(&v, rig)?;
            let s = cartesian_to_spherical(&v)?;
            writeln!(env.out, "q_tt: r_mm={:.9} theta_rad={:.9} phi_rad={:.9}", s.r_mm, s.theta, s.phi)?;
            writeln!(env.out, "q_la_mm: {}", fmt3(lengths))?;
            writeln!(env.out, "q_m_rad: {}", fmt3(lengths_to_motor(lengths, rig)))?;
        }
    }
    Ok(())
}

fn fmt3(v: [f64; 3]) -> String {
    format!("{:.9},{:.9},{:.9}", v[0], v[1], v[2])
}

pub fn workspace(cmd: WorkspaceCmd, env: &mut Env) -> Result<()> {
    let rig = env.cfg.rig;
    match cmd {
        WorkspaceCmd::Volume {
            method,
            samples,
            seed,
            grid,
        } => {
            let v = match method {
                VolumeMethodArg::Jacobian => volume_jacobian(&rig, grid)?,
                VolumeMethodArg::Hull => volume_hull(&rig, samples, seed)?,
            };
            writeln!(env.out, "method: {:?}", v.method)?;
            writeln!(env.out, "volume_mm3: {:.4}", v.volume_mm3)?;
            writeln!(env.out, "samples: {}", v.samples)?;
            if let Some(se) = v.stderr_mm3 {
                writeln!(env.out, "stderr_mm3: {se:.4}")?;
            }
        }
        WorkspaceCmd::Boundary { output, density } => {
            let csv = edges_csv(&rig, density)?;
            let path = env.write_file(&output, csv.as_bytes())?;
            writeln!(env.out, "edges: {}", path.display())?;
        }
        WorkspaceCmd::CalibrateD { target, grid } => {
            let c = calibrate_d(target, &rig, grid)?;
            writeln!(env.out, "d_mm: {:.6}", c.d_mm)?;
            writeln!(env.out, "volume_mm3: {:.4}", c.volume_mm3)?;
            writeln!(env.out, "grid: {}", c.grid)?;
        }
    }
    Ok(())
}

fn edges_csv(rig: &rebo_core::RigConfig, density: usize) -> Result<String> {
    let mut csv = String::from("edge_id,x_mm,y_mm,z_mm\n");
    for e in boundary_trajectories(rig, density)? {
        for p in &e.points {
            csv.push_str(&format!("{},{:.6},{:.6},{:.6}\n", e.id, p[0], p[1], p[2]));
        }
    }
    Ok(csv)
}

fn method(m: MethodArg) -> HitMethod {
    match m {
        MethodArg::Analytic => HitMethod::Analytic,
        MethodArg::Rk4 => HitMethod::Rk4,
    }
}

fn juggle_setup(cfg: &ToolConfig, a: &JuggleArgs, precompress_mm: Option<f64>) -> Result<(BallSpec, JugglerSpec)> {
    let mut ball = cfg.ball.clone();
    if let Some(m) = a.mass {
        ball.mass = m;
    }
    if let Some(e) = a.e {
        ball.restitution = e;
    }
    let mut spec = cfg.juggler;
    if let Some(k) = a.kes {
        spec.k_es = k;
    }
    if let Some(b) = a.bs {
        spec.b_s = b;
    }
    if let Some(p) = precompress_mm {
        spec.p_com = p * 1e-3;
    }
    if let Some(z) = a.z_rest_mm {
        spec.z_rest = z * 1e-3;
    }
    ball.validate()?;
    spec.validate()?;
    Ok((ball, spec))
}

pub fn juggle(cmd: JuggleCmd, env: &mut Env) -> Result<()> {
    match cmd {
        JuggleCmd::Sim {
            common,
            precompress_mm,
            h0_mm,
            cycles,
            seed,
            sigma_e,
            output,
        } => {
            let (ball, spec) = juggle_setup(env.cfg, &common, precompress_mm)?;
            let opts = SimOptions {
                h0: h0_mm * 1e-3,
                n_cycles: cycles,
                seed,
                sigma_e,
                method: method(common.method),
            };
            let trace = simulate(&ball, &spec, &opts)?;
            let mut buf = Vec::new();
            trace.write_jsonl(&mut buf)?;
            let path = env.write_file(&output, &buf)?;
            writeln!(env.out, "trace: {}", path.display())?;
            writeln!(env.out, "events: {}", trace.events.len())?;
            writeln!(env.out, "died: {}", trace.died)?;
            if let Some(last) = trace.apex_sequence.last() {
                writeln!(env.out, "final_apex_mm: {:.6}", last * 1e3)?;
            }
        }
        JuggleCmd::FixedPoint {
            common,
            precompress_mm,
            bracket_mm,
        } => {
            let (ball, spec) = juggle_setup(env.cfg, &common, precompress_mm)?;
            let m = method(common.method);
            let bracket = bracket_mm.map_or_else(|| default_bracket(&spec), |(lo, hi)| (lo * 1e-3, hi * 1e-3));
            let fp = find_fixed_point(&ball, &spec, bracket, m)?;
            writeln!(env.out, "h_star_mm: {:.6}", fp.h_star * 1e3)?;
            writeln!(env.out, "multiplier: {:.6}", fp.multiplier)?;
            writeln!(env.out, "stability: {:?}", fp.stability)?;
            if fp.degenerate {
                writeln!(env.out, "degenerate: every height in the bracket is fixed")?;
            } else {
                let p = mean_power(&ball, &spec, m)?;
                writeln!(env.out, "preload_energy_j: {:.6}", p.energy_j)?;
                writeln!(env.out, "t_hit_s: {:.6}", p.t_hit)?;
                writeln!(env.out, "t_release_s: {:.6}", p.t_release)?;
                writeln!(env.out, "power_w: {:.4}", p.power_w)?;
            }
        }
        JuggleCmd::Calibrate {
            common,
            precompress_mm,
            target_apex_mm,
            free,
        } => {
            let (ball, spec) = juggle_setup(env.cfg, &common, precompress_mm)?;
            let free = match free {
                FreeLoss::E => LossParameter::Restitution,
                FreeLoss::B => LossParameter::Damping,
            };
            let (b, s) = calibrate_losses(target_apex_mm * 1e-3, &ball, &spec, free, method(common.method))?;
            writeln!(env.out, "restitution: {:.7}", b.restitution)?;
            writeln!(env.out, "b_s_nspm: {:.7}", s.b_s)?;
        }
        JuggleCmd::Sweep {
            common,
            precompress_mm,
            output,
            plot,
        } => {
            let (ball, spec) = juggle_setup(env.cfg, &common, None)?;
            let p: Vec<f64> = precompress_mm.0.iter().map(|p| p * 1e-3).collect();
            let rows = sweep_precompression(&ball, &spec, &p, method(common.method))?;
            let mut buf = Vec::new();
            write_sweep_csv(&rows, &mut buf)?;
            let path = env.write_file(&output, &buf)?;
            writeln!(env.out, "sweep: {} ({} rows)", path.display(), rows.len())?;
            if let Some(plot) = plot {
                let series = Series::new(
                    format!("{} kg", ball.mass),
                    rows.iter().map(|r| (r.p_com_mm, r.h_star_mm)).collect(),
                    Draw::LineMarkers,
                );
                let style = env.cfg.plot_style.labeled("Steady apex", "pre-compression (mm)", "apex height (mm)");
                let path = env.write_file(&plot, &plot_xy(&[series], &style)?)?;
                writeln!(env.out, "plot: {}", path.display())?;
            }
        }
    }
    Ok(())
}

/// Restitution assumed for the sand-loaded medicine balls.
pub const MEDICINE_BALL_RESTITUTION: f64 = 0.3;

pub fn repro(a: ReproArgs, env: &mut Env) -> Result<()> {
    let output = a.output.clone().unwrap_or_else(|| PathBuf::from(format!("{}.svg", a.figure.name())));
    let style = &env.cfg.plot_style;
    let (series, style, data): (Vec<Series>, _, Option<String>) = match a.figure {
        Figure::Fig2d => {
            let model = fixtures::reference_stiffness_model();
            let means = fixtures::stiffness_means();
            let pts = means.iter().map(|m| (m.beta_deg, m.k_npm)).collect();
            let law = (0..=30)
                .map(|i| {
                    let b = 15.0 + i as f64;
                    Ok((b, predict_stiffness(b, &model)?))
                })
                .collect::<Result<Vec<_>>>()?;
            (
                vec![
                    Series::new("measured", pts, Draw::Markers),
                    Series::new("linear fit", law, Draw::Line),
                ],
                style.labeled("Stiffness vs cone angle", "beta (deg)", "stiffness (N/m)"),
                None,
            )
        }
        Figure::Fig5a => {
            let rig = env.cfg.rig;
            let edges = boundary_trajectories(&rig, 50)?;
            let series = edges
                .iter()
                .map(|e| {
                    Series::new(
                        format!("edge {}", e.id),
                        e.points.iter().map(|p| (p[0], p[2])).collect(),
                        Draw::Line,
                    )
                })
                .collect();
            (
                series,
                style.labeled("Workspace boundary (x-z projection)", "x (mm)", "z (mm)"),
                Some(edges_csv(&rig, 50)?),
            )
        }
        Figure::Fig6c => {
            let ball = env.cfg.ball.clone();
            let mut series = Vec::new();
            for p_mm in [7.5, 10.0, 12.5, 15.0, 17.5] {
                let spec = env.cfg.juggler.with_precompression(p_mm * 1e-3);
                let traj = sample_trajectory(&ball, &spec, 0.04, 6, 1e-3)?;
                series.push(Series::new(
                    format!("p = {p_mm} mm"),
                    traj.iter().map(|&(t, z)| (t, z * 1e3)).collect(),
                    Draw::Line,
                ));
            }
            (
                series,
                style.labeled("Ball trajectory", "time (s)", "height (mm)"),
                None,
            )
        }
        Figure::Fig6d => {
            let ops = fixtures::juggle_operating_points();
            let e = env.cfg.ball.restitution;
            let balls = [
                BallSpec::new(ops.shot_mass_kg, e, "1 kg shot"),
                BallSpec::new(ops.heavy_shot_mass_kg, e, "1.4 kg shot"),
                BallSpec::new(ops.medicine_ball_masses_kg[0], MEDICINE_BALL_RESTITUTION, "225 g medicine ball"),
                BallSpec::new(ops.medicine_ball_masses_kg[1], MEDICINE_BALL_RESTITUTION, "450 g medicine ball"),
            ];
            let grid: Vec<f64> = (0..6).map(|i| 5.0 + 2.5 * i as f64).collect();
            let mut csv = String::from("ball,p_com_mm,h_star_mm\n");
            let mut series = Vec::new();
            for ball in &balls {
                let mut pts = Vec::new();
                for &p in &grid {
                    let spec = env.cfg.juggler.with_precompression(p * 1e-3);
                    let h = juggle::steady_apex(ball, &spec, HitMethod::Analytic);
                    // no steady juggle at this setting
                    if h.is_finite() {
                        pts.push((p, h * 1e3));
                        csv.push_str(&format!("{},{p:.3},{:.6}\n", ball.label, h * 1e3));
                    }
                }
                if !pts.is_empty() {
                    series.push(Series::new(ball.label.clone(), pts, Draw::LineMarkers));
                }
            }
            (
                series,
                style.labeled("Steady apex vs pre-compression", "pre-compression (mm)", "apex height (mm)"),
                Some(csv),
            )
        }
        Figure::Fig6e => {
            let ball = env.cfg.ball.clone();
            let spec = env.cfg.juggler;
            let mut series = Vec::new();
            for &h0 in &a.h0_mm {
                let seq = iterate_apex(h0 * 1e-3, 10, &ball, &spec, HitMethod::Analytic)?;
                series.push(Series::new(
                    format!("h0 = {h0} mm"),
                    seq.iter().enumerate().map(|(i, h)| (i as f64, h * 1e3)).collect(),
                    Draw::LineMarkers,
                ));
            }
            (
                series,
                style.labeled("Apex vs iteration", "iteration", "apex height (mm)"),
                None,
            )
        }
    };
    let path = env.write_file(&output, &plot_xy(&series, &style)?)?;
    writeln!(env.out, "figure: {}", path.display())?;
    if let Some(csv) = data {
        let csv_path = env.write_file(&output.with_extension("csv"), csv.as_bytes())?;
        writeln!(env.out, "data: {}", csv_path.display())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suffix_names() {
        assert_eq!(with_suffix(Path::new("a/p.svg"), "-inner"), PathBuf::from("a/p-inner.svg"));
        assert_eq!(with_suffix(Path::new("p"), "-inner"), PathBuf::from("p-inner"));
    }
}
