//! Command-line grammar.

use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "rebo",
    version,
    about = "Design, analysis and simulation tools for origami bellows springs",
    arg_required_else_help = true
)]
pub struct Cli {
    /// Flat TOML file with unit-suffixed keys (d_mm, tau_c_nm, ...)
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// More log output (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Crease-pattern generation
    #[command(subcommand)]
    Pattern(PatternCmd),
    /// Stiffness prediction, fitting and trace analysis
    #[command(subcommand)]
    Stiffness(StiffnessCmd),
    /// Forward and inverse kinematics of the tendon rig
    #[command(subcommand)]
    Kin(KinCmd),
    /// Workspace volume, boundary and calibration
    #[command(subcommand)]
    Workspace(WorkspaceCmd),
    /// Vertical juggling simulation and return-map analysis
    #[command(subcommand)]
    Juggle(JuggleCmd),
    /// Regenerate a figure as SVG
    Repro(ReproArgs),
}

#[derive(Debug, Subcommand)]
pub enum PatternCmd {
    /// Generate a crease pattern and write it as SVG
    Gen(PatternGenArgs),
}

#[derive(Debug, Args)]
pub struct PatternGenArgs {
    /// Cone angle (deg)
    #[arg(long)]
    pub beta: f64,
    /// Outer side length a_o (mm)
    #[arg(long, default_value_t = 20.0)]
    pub ao: f64,
    /// Inner side length b_o (mm)
    #[arg(long, default_value_t = 6.0)]
    pub bo: f64,
    /// Layer height (mm)
    #[arg(long, default_value_t = 10.0)]
    pub dz: f64,
    /// Sides per layer
    #[arg(long, default_value_t = 6)]
    pub nr: u32,
    /// Number of layers
    #[arg(long, default_value_t = 8)]
    pub nl: u32,
    /// Also emit a nested inner layer with this radial clearance (mm)
    #[arg(long)]
    pub inner_clearance: Option<f64>,
    /// Sheet thickness (mm)
    #[arg(long)]
    pub thickness_mm: Option<f64>,
    /// Swap mountain and valley folds
    #[arg(long)]
    pub invert: bool,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum StiffnessCmd {
    /// Stiffness from the published cone-angle law
    Predict {
        #[arg(long)]
        beta: f64,
    },
    /// Affine fit of beta_deg,k_npm rows
    Fit {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Hookean stiffness of each trial in a displacement_mm,force_n CSV
    Estimate {
        file: PathBuf,
        /// Fraction of the travel treated as linear
        #[arg(long, default_value_t = rebo_core::stiffness::DEFAULT_LINEAR_FRACTION)]
        fraction: f64,
    },
    /// Parallel stacking of layer stiffnesses (N/m)
    Stack {
        #[arg(required = true, num_args = 1.., allow_negative_numbers = true)]
        k: Vec<f64>,
    },
    /// Energy lost around a loading/unloading loop
    Hysteresis { loading: PathBuf, unloading: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum KinCmd {
    /// Plate pose from actuator lengths or motor angles
    #[command(group(ArgGroup::new("input").required(true).args(["l", "m"])))]
    Fk {
        /// Actuator lengths l1,l2,l3 (mm)
        #[arg(long, value_parser = parse_triple, allow_hyphen_values = true)]
        l: Option<[f64; 3]>,
        /// Motor angles m1,m2,m3 (rad)
        #[arg(long, value_parser = parse_triple, allow_hyphen_values = true)]
        m: Option<[f64; 3]>,
    },
    /// Actuator lengths and motor angles for a plate position
    Ik {
        /// Plate centre x,y,z (mm)
        #[arg(long, value_parser = parse_triple, allow_hyphen_values = true)]
        p: [f64; 3],
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VolumeMethodArg {
    Jacobian,
    Hull,
}

#[derive(Debug, Subcommand)]
pub enum WorkspaceCmd {
    /// Workspace volume
    Volume {
        #[arg(long, value_enum, default_value_t = VolumeMethodArg::Jacobian)]
        method: VolumeMethodArg,
        /// Hull samples
        #[arg(long, default_value_t = rebo_core::workspace::DEFAULT_HULL_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Quadrature points per axis
        #[arg(long, default_value_t = rebo_core::workspace::DEFAULT_GRID)]
        grid: usize,
    },
    /// The 12 boundary edges as edge_id,x_mm,y_mm,z_mm
    Boundary {
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = rebo_core::workspace::DEFAULT_EDGE_DENSITY)]
        density: usize,
    },
    /// Plate radius giving a target volume
    CalibrateD {
        /// Target volume (mm^3)
        #[arg(long)]
        target: f64,
        #[arg(long, default_value_t = rebo_core::workspace::DEFAULT_GRID)]
        grid: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Analytic,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FreeLoss {
    /// Restitution e
    E,
    /// Stance damping b_s
    B,
}

/// Ball and juggler overrides shared by the juggle subcommands.
#[derive(Debug, Clone, Args)]
pub struct JuggleArgs {
    /// Ball mass (kg)
    #[arg(long)]
    pub mass: Option<f64>,
    /// Effective stiffness (N/m)
    #[arg(long)]
    pub kes: Option<f64>,
    /// Stance damping (N s/m)
    #[arg(long)]
    pub bs: Option<f64>,
    /// Restitution
    #[arg(long)]
    pub e: Option<f64>,
    /// Paddle rest height (mm)
    #[arg(long)]
    pub z_rest_mm: Option<f64>,
    #[arg(long, value_enum, default_value_t = MethodArg::Analytic)]
    pub method: MethodArg,
}

#[derive(Debug, Subcommand)]
pub enum JuggleCmd {
    /// Simulate the hybrid system and write a JSONL event trace
    Sim {
        #[command(flatten)]
        common: JuggleArgs,
        /// Pre-compression (mm)
        #[arg(long)]
        precompress_mm: Option<f64>,
        /// Initial apex above rest (mm)
        #[arg(long, default_value_t = 100.0, allow_negative_numbers = true)]
        h0_mm: f64,
        #[arg(long, default_value_t = 100)]
        cycles: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Per-touchdown restitution noise (standard deviation)
        #[arg(long, default_value_t = 0.0)]
        sigma_e: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Steady apex, multiplier and delivered power
    FixedPoint {
        #[command(flatten)]
        common: JuggleArgs,
        #[arg(long)]
        precompress_mm: Option<f64>,
        /// Search bracket lo,hi (mm)
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        bracket_mm: Option<(f64, f64)>,
    },
    /// Fit one loss parameter to a target steady apex
    Calibrate {
        #[command(flatten)]
        common: JuggleArgs,
        #[arg(long)]
        precompress_mm: Option<f64>,
        #[arg(long)]
        target_apex_mm: f64,
        #[arg(long, value_enum, default_value_t = FreeLoss::E)]
        free: FreeLoss,
    },
    /// Steady state over a pre-compression grid, as CSV
    Sweep {
        #[command(flatten)]
        common: JuggleArgs,
        /// start:step:end (mm)
        /// start:step:end or a single value (mm)
        #[arg(long, value_parser = parse_range)]
        precompress_mm: Grid,
        #[arg(short, long)]
        output: PathBuf,
        /// Also plot apex against pre-compression
        #[arg(long)]
        plot: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig2d,
    Fig5a,
    Fig6c,
    Fig6d,
    Fig6e,
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig2d => "fig2d",
            Figure::Fig5a => "fig5a",
            Figure::Fig6c => "fig6c",
            Figure::Fig6d => "fig6d",
            Figure::Fig6e => "fig6e",
        }
    }
}

#[derive(Debug, Args)]
pub struct ReproArgs {
    #[arg(value_enum)]
    pub figure: Figure,
    /// Initial apex heights for fig6e (mm)
    #[arg(long, value_parser = parse_number, value_delimiter = ',', default_value = "10,20,60,80,100", allow_negative_numbers = true)]
    pub h0_mm: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output SVG (default <figure>.svg)
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

pub fn parse_number(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("'{s}' is not a number"))?;
    if !v.is_finite() {
        return Err(format!("'{s}' is not finite"));
    }
    Ok(v)
}

pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    let v: Vec<f64> = s.split(',').map(parse_number).collect::<Result<_, _>>()?;
    if v.is_empty() {
        return Err("empty list".into());
    }
    Ok(v)
}

pub fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let v = parse_list(s)?;
    <[f64; 3]>::try_from(v.as_slice()).map_err(|_| format!("expected three comma-separated values, got {}", v.len()))
}

pub fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    match parse_list(s)?.as_slice() {
        &[a, b] => Ok((a, b)),
        v => Err(format!("expected two comma-separated values, got {}", v.len())),
    }
}

/// `start:step:end`, inclusive of `end` up to rounding.
/// Evenly spaced values parsed from `start:step:end`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

pub fn parse_range(s: &str) -> Result<Grid, String> {
    let parts: Vec<f64> = s.split(':').map(parse_number).collect::<Result<_, _>>()?;
    let (start, step, end) = match *parts.as_slice() {
        [single] => return Ok(Grid(vec![single])),
        [a, b, c] => (a, b, c),
        _ => return Err("expected start:step:end".into()),
    };
    if !(step > 0.0) || end < start {
        return Err("range needs step > 0 and end >= start".into());
    }
    let n = ((end - start) / step + 1e-9).floor() as usize + 1;
    if n > 10_000 {
        return Err(format!("range has {n} points; at most 10000"));
    }
    Ok(Grid((0..n).map(|i| start + step * i as f64).collect()))
}
