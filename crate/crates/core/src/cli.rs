//! `tarsim chain|leg|sim|gait`.
//!
//! Exit codes: 0 success, 1 domain error, 2 usage or configuration error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::Vector3;
use rand::{rngs::StdRng, Rng, SeedableRng};

use crate::chain::{solve_bend_from_pull, stiffness_curve, TarsusMode};
use crate::config::Config;
use crate::contact::{run_demo_cycle, EventKind};
use crate::error::{Error, Result};
use crate::gait::report::{render_csv, render_text};
use crate::gait::{
    aggregate, analyze_trial, comparison_report, reference_comparisons, ComparisonPair, GroupStats, Metric,
    TrialMetrics,
};
use crate::io;
use crate::leg::{
    forward_kinematics, inverse_kinematics, retarget_trajectory, tip_position, trajectory_to_joints,
    JointVector, JOINT_COUNT,
};
use crate::manifest::{RunManifest, MANIFEST_FILE};
use crate::plot::{Chart, Series};

pub const DEFAULT_CONFIG: &str = "tarsim.conf";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Svg,
    Both,
}

impl Format {
    fn csv(self) -> bool {
        self != Format::Svg
    }

    fn svg(self) -> bool {
        self != Format::Csv
    }
}

#[derive(Debug, Parser)]
#[command(name = "tarsim", version, about = "Tendon-driven tarsus simulation and gait analysis")]
pub struct Cli {
    /// Configuration file [default: tarsim.conf when present]
    #[arg(long, global = true, env = "TARSIM_CONFIG")]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true, value_enum, default_value = "both")]
    pub format: Format,
    /// Seed for randomized checks
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Chain state for given string pulls
    Chain(ChainArgs),
    /// Leg kinematics
    #[command(subcommand)]
    Leg(LegCommand),
    /// Run a mesh scenario
    Sim(SimArgs),
    /// Gait metrics and group comparisons
    Gait(GaitArgs),
}

#[derive(Debug, Args)]
pub struct ChainArgs {
    /// String pull (mm); repeatable
    #[arg(long, allow_negative_numbers = true)]
    pub pull: Vec<f64>,
    /// Pull sweep `FROM:TO:STEP` (mm)
    #[arg(long)]
    pub sweep: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum LegCommand {
    /// Tip pose for joint angles in degrees `q1,q2,q3,q4`
    Fk {
        #[arg(long, allow_hyphen_values = true)]
        q: String,
    },
    /// Joint angles reaching `x,y,z` (mm)
    Ik {
        #[arg(long, allow_hyphen_values = true)]
        target: String,
        /// Start configuration in degrees
        #[arg(long, allow_hyphen_values = true)]
        start: Option<String>,
    },
    /// Scale a recorded trajectory onto the leg and solve its joint series
    Retarget {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        scale: Option<f64>,
        /// Robot-frame point `x,y,z` (mm) where the scale origin is placed
        #[arg(long, allow_hyphen_values = true)]
        place: Option<String>,
        /// Skip the joint solve; write only the scaled trajectory
        #[arg(long)]
        no_joints: bool,
    },
    /// FK/IK round trips from random joint angles, solved from a zero start
    Roundtrip {
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
}

#[derive(Debug, Args)]
pub struct SimArgs {
    /// Scenario name (`fig10c`, `tubed` or one from the config)
    pub scenario: String,
}

#[derive(Debug, Args)]
pub struct GaitArgs {
    /// Marker file as `CONDITION[:BEETLE]=PATH`; repeatable
    #[arg(long = "trial")]
    pub trials: Vec<String>,
    /// Conditions to compare `A,B` [default: first two seen]
    #[arg(long)]
    pub compare: Option<String>,
    /// Group statistics `LABEL=MEAN,SD,N`; consecutive pairs are compared
    #[arg(long = "summary-stats")]
    pub summary_stats: Vec<String>,
    /// Recompute the built-in reference comparisons
    #[arg(long)]
    pub reference: bool,
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::UnknownScenario(_) | Error::Io(_) => 2,
        _ => 1,
    }
}

fn parse_list<const N: usize>(s: &str, what: &str) -> Result<[f64; N]> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| usage(format!("{what}: {e}")))?;
    v.try_into()
        .map_err(|v: Vec<f64>| usage(format!("{what}: expected {N} values, got {}", v.len())))
}

fn parse_sweep(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|x| x.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| usage(format!("--sweep: {e}")))?;
    let [from, to, step] = parts[..] else {
        return Err(usage("--sweep expects FROM:TO:STEP"));
    };
    if !(step > 0.0) || !(to >= from) {
        return Err(usage("--sweep needs STEP > 0 and TO >= FROM"));
    }
    let n = ((to - from) / step + 1e-9).floor() as usize;
    let mut v: Vec<f64> = (0..=n).map(|i| from + i as f64 * step).collect();
    if (v[n] - to).abs() > 1e-9 * step {
        v.push(to);
    } else {
        v[n] = to;
    }
    Ok(v)
}

fn parse_stats(s: &str) -> Result<(String, GroupStats)> {
    let (label, rest) = s
        .split_once('=')
        .ok_or_else(|| usage(format!("--summary-stats `{s}`: expected LABEL=MEAN,SD,N")))?;
    let parts: Vec<&str> = rest.split(',').map(str::trim).collect();
    let [m, sd, n] = parts[..] else {
        return Err(usage(format!("--summary-stats `{s}`: expected LABEL=MEAN,SD,N")));
    };
    let bad = |e: String| usage(format!("--summary-stats `{s}`: {e}"));
    let g = GroupStats::new(
        m.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
        sd.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
        n.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
    )?;
    Ok((label.to_string(), g))
}

struct Ctx<'a> {
    cli: &'a Cli,
    cfg: Config,
    manifest: RunManifest,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn emit(&mut self, name: &str, contents: &str) -> Result<()> {
        std::fs::create_dir_all(&self.cli.out)?;
        let path = self.cli.out.join(name);
        std::fs::write(&path, contents)?;
        self.manifest.outputs.push(path.display().to_string());
        Ok(())
    }

    fn csv(&mut self, name: &str, contents: &str) -> Result<()> {
        if self.cli.format.csv() {
            self.emit(name, contents)?;
        }
        Ok(())
    }

    fn svg(&mut self, name: &str, chart: &Chart) -> Result<()> {
        if self.cli.format.svg() {
            self.emit(name, &chart.to_svg())?;
        }
        Ok(())
    }

    fn say(&mut self, line: impl AsRef<str>) {
        let _ = writeln!(self.out, "{}", line.as_ref());
    }

    fn warn(&mut self, line: impl AsRef<str>) {
        let _ = writeln!(self.err, "warning: {}", line.as_ref());
    }

    fn finish(&mut self) -> Result<()> {
        let json = self.manifest.to_json();
        std::fs::create_dir_all(&self.cli.out)?;
        std::fs::write(self.cli.out.join(MANIFEST_FILE), json)?;
        Ok(())
    }
}

fn load_config(cli: &Cli) -> Result<(Config, Option<PathBuf>)> {
    match &cli.config {
        Some(p) => Ok((Config::load(p)?, Some(p.clone()))),
        None => {
            let p = Path::new(DEFAULT_CONFIG);
            if p.exists() {
                Ok((Config::load(p)?, Some(p.to_path_buf())))
            } else {
                Ok((Config::default(), None))
            }
        }
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run_with(args: impl IntoIterator<Item = OsString>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let args: Vec<OsString> = args.into_iter().collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return if code == 0 { 0 } else { 2 };
        }
    };
    let (cfg, cfg_path) = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return exit_code(&e);
        }
    };
    let command = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut manifest = RunManifest::new(command, &cfg.to_toml());
    if let Some(p) = &cfg_path {
        let _ = manifest.add_input(p);
    }
    let mut ctx = Ctx {
        cli: &cli,
        cfg,
        manifest,
        out,
        err,
    };
    let result = match &cli.command {
        Command::Chain(a) => cmd_chain(&mut ctx, a),
        Command::Leg(c) => cmd_leg(&mut ctx, c),
        Command::Sim(a) => cmd_sim(&mut ctx, a),
        Command::Gait(a) => cmd_gait(&mut ctx, a),
    };
    let result = result.and_then(|code| ctx.finish().map(|_| code));
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(ctx.err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(args: impl IntoIterator<Item = OsString>) -> i32 {
    run_with(args, &mut std::io::stdout(), &mut std::io::stderr())
}

fn cmd_chain(ctx: &mut Ctx, a: &ChainArgs) -> Result<i32> {
    let chain = ctx.cfg.chain.geometry()?;
    let mut pulls = a.pull.clone();
    if let Some(s) = &a.sweep {
        pulls.extend(parse_sweep(s)?);
    }
    if pulls.is_empty() {
        pulls = parse_sweep(&format!("0:{}:0.1", chain.max_pull()))?;
    }
    let mut rows = Vec::with_capacity(pulls.len());
    for &p in &pulls {
        rows.push(io::ChainRow::from_solution(p, &solve_bend_from_pull(&chain, p)?));
    }
    ctx.say("pull_mm  total_bend_deg  compression_mm  slack_mm  clamped");
    for r in &rows {
        ctx.say(format!(
            "{:7.3}  {:14.4}  {:14.4}  {:8.4}  {}",
            r.pull,
            r.total_bend_deg,
            r.compression.iter().sum::<f64>(),
            r.slack.iter().sum::<f64>(),
            r.clamped
        ));
    }
    ctx.csv("chain_table.csv", &io::write_chain_table(&rows)?)?;

    let mut sorted: Vec<&io::ChainRow> = rows.iter().collect();
    sorted.sort_by(|x, y| x.pull.total_cmp(&y.pull));
    let mut chart = Chart::new("Tarsus bend vs string pull", "string pull (mm)", "angle (deg)")
        .with(Series::new("total bend", sorted.iter().map(|r| (r.pull, r.total_bend_deg)).collect()));
    for i in 0..chain.segments().len() {
        chart = chart.with(
            Series::new(&format!("segment {}", i + 1), sorted.iter().map(|r| (r.pull, r.theta_deg[i])).collect())
                .dashed(),
        );
    }
    ctx.svg("bend_vs_pull.svg", &chart)?;

    let model = ctx.cfg.chain.stiffness(&chain)?;
    let disp: Vec<f64> = (0..=100).map(|i| i as f64 * 0.1).collect();
    let mut chart = Chart::new("Force vs displacement", "displacement (mm)", "force (N)");
    for mode in [TarsusMode::Rigid, TarsusMode::Flexible] {
        let f = stiffness_curve(&model, mode, &disp)?;
        let pts: Vec<(f64, f64)> = disp.iter().copied().zip(f).collect();
        ctx.csv(&format!("stiffness_{mode}.csv"), &io::write_curve(&pts)?)?;
        chart = chart.with(Series::new(&mode.to_string(), pts));
    }
    ctx.svg("force_displacement.svg", &chart)?;
    Ok(0)
}

fn cmd_leg(ctx: &mut Ctx, c: &LegCommand) -> Result<i32> {
    let leg = ctx.cfg.leg.model()?;
    let ik = ctx.cfg.solver.ik()?;
    match c {
        LegCommand::Fk { q } => {
            let q = JointVector::from_degrees(parse_list::<JOINT_COUNT>(q, "--q")?);
            let pose = forward_kinematics(&leg, &q);
            let p = pose.position;
            ctx.say(format!("tip_mm {} {} {}", p.x, p.y, p.z));
            let traj = crate::leg::Trajectory::uniform(1.0, [p])?;
            ctx.csv("fk.csv", &io::write_trajectory(&traj)?)?;
        }
        LegCommand::Ik { target, start } => {
            let t = Vector3::from(parse_list::<3>(target, "--target")?);
            let q0 = match start {
                Some(s) => JointVector::from_degrees(parse_list::<JOINT_COUNT>(s, "--start")?),
                None => JointVector::ZERO,
            };
            let sol = inverse_kinematics(&leg, &t, &q0, &ik)?;
            let deg = sol.q.to_degrees();
            ctx.say(format!("q_deg {} {} {} {}", deg[0], deg[1], deg[2], deg[3]));
            ctx.say(format!("residual_mm {:e}", sol.residual));
            ctx.say(format!("iterations {}", sol.iterations));
            ctx.csv(
                "ik.csv",
                &io::write_joints(&[crate::leg::JointSample { t: 0.0, q: sol.q }])?,
            )?;
        }
        LegCommand::Retarget {
            input,
            scale,
            place,
            no_joints,
        } => {
            let text = std::fs::read_to_string(input)
                .map_err(|e| Error::Io(format!("{}: {e}", input.display())))?;
            ctx.manifest.add_input(input)?;
            let traj = io::read_trajectory(&text)?;
            let mut rt = ctx.cfg.leg.retarget();
            if let Some(s) = scale {
                rt.scale = *s;
            }
            if let Some(p) = place {
                rt.placement = Some(Vector3::from(parse_list::<3>(p, "--place")?));
            }
            let robot = retarget_trajectory(&traj, &rt)?;
            ctx.say(format!("samples {} scale {}", robot.len(), rt.scale));
            ctx.csv("retargeted.csv", &io::write_trajectory(&robot)?)?;
            if !no_joints && !robot.is_empty() {
                let opts = ctx.cfg.solver.tracking()?;
                let joints = trajectory_to_joints(&leg, &robot, &JointVector::ZERO, &opts)?;
                ctx.csv("joints.csv", &io::write_joints(&joints)?)?;
            }
            let pts = |f: fn(&Vector3<f64>) -> f64| {
                robot.samples().iter().map(|s| (s.t, f(&s.p))).collect::<Vec<_>>()
            };
            let chart = Chart::new("Retargeted tip trajectory", "t (ms)", "position (mm)")
                .with(Series::new("x", pts(|p| p.x)))
                .with(Series::new("y", pts(|p| p.y)))
                .with(Series::new("z", pts(|p| p.z)));
            ctx.svg("retargeted.svg", &chart)?;
        }
        LegCommand::Roundtrip { samples } => {
            let mut rng = StdRng::seed_from_u64(ctx.cli.seed);
            let (mut worst_err, mut worst_it, mut fails) = (0.0f64, 0, 0);
            for _ in 0..*samples {
                let q: [f64; JOINT_COUNT] = std::array::from_fn(|j| {
                    let (lo, hi) = leg.limits()[j];
                    rng.gen_range(lo..=hi)
                });
                let target = tip_position(&leg, &JointVector(q));
                // cold start: nothing near the answer is known
                let q0 = JointVector::ZERO;
                match inverse_kinematics(&leg, &target, &q0, &ik) {
                    Ok(s) => {
                        worst_err = worst_err.max((tip_position(&leg, &s.q) - target).norm());
                        worst_it = worst_it.max(s.iterations);
                    }
                    Err(_) => fails += 1,
                }
            }
            ctx.say(format!(
                "samples {samples} seed {} failures {fails} worst_error_mm {worst_err:e} worst_iterations {worst_it}",
                ctx.cli.seed
            ));
            if fails > 0 {
                return Ok(1);
            }
        }
    }
    Ok(0)
}

fn cmd_sim(ctx: &mut Ctx, a: &SimArgs) -> Result<i32> {
    let scenario = match ctx.cfg.scenario(&a.scenario) {
        Ok(s) => s,
        Err(e) => {
            let names = ctx.cfg.scenario_names().join(", ");
            let _ = writeln!(ctx.err, "available scenarios: {names}");
            return Err(e);
        }
    };
    let sim = ctx.cfg.sim()?;
    let mesh = ctx.cfg.mesh.grid()?;
    let run = run_demo_cycle(&sim, mesh, &scenario)?;
    let name = &scenario.name;
    ctx.csv(&format!("{name}.csv"), &io::write_demo(&run)?)?;
    let mut log = String::from("t_ms,event\n");
    for e in &run.events {
        log.push_str(&format!("{},{}\n", e.t, e.kind));
    }
    ctx.csv(&format!("{name}_events.csv"), &log)?;
    let claw: Vec<(f64, f64)> = run.samples.iter().map(|s| (s.t, s.claw_z)).collect();
    let mesh: Vec<(f64, f64)> = run.samples.iter().map(|s| (s.t, s.mesh_z)).collect();
    let chart = Chart::new(&format!("Claw and mesh height: {name}"), "t (ms)", "height (mm)")
        .with(Series::new("claw", claw))
        .with(Series::new("mesh", mesh).dashed());
    ctx.svg(&format!("{name}.svg"), &chart)?;
    for e in &run.events {
        ctx.say(format!("{:8.1} ms  {}", e.t, e.kind));
    }
    ctx.say(format!("samples {}", run.samples.len()));
    let failures = run.count(EventKind::ClawFailure);
    if failures > 0 && !scenario.expect_claw_failure {
        ctx.warn(format!("{failures} unexpected claw failure event(s)"));
        return Ok(1);
    }
    Ok(0)
}

fn parse_trial(s: &str) -> Result<(String, String, PathBuf)> {
    let (tag, path) = s
        .split_once('=')
        .ok_or_else(|| usage(format!("--trial `{s}`: expected CONDITION[:BEETLE]=PATH")))?;
    let (cond, beetle) = match tag.split_once(':') {
        Some((c, b)) => (c.to_string(), b.to_string()),
        None => (tag.to_string(), path.to_string()),
    };
    Ok((cond, beetle, PathBuf::from(path)))
}

fn cmd_gait(ctx: &mut Ctx, a: &GaitArgs) -> Result<i32> {
    let params = ctx.cfg.gait.cycle_params()?;
    let side = ctx.cfg.gait.side;
    let mut trials: Vec<TrialMetrics> = Vec::new();
    let mut conditions: Vec<String> = Vec::new();
    for spec in &a.trials {
        let (cond, beetle, path) = parse_trial(spec)?;
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        ctx.manifest.add_input(&path)?;
        let rec = io::read_markers(&text, ctx.cfg.gait.rate_hz)
            .map_err(|e| Error::Domain(format!("{}: {e}", path.display())))?;
        if !conditions.contains(&cond) {
            conditions.push(cond.clone());
        }
        match analyze_trial(&rec, side, &cond, &beetle, &params) {
            Ok(m) => trials.push(m),
            Err(Error::NoCyclesFound) => ctx.warn(format!("{}: no step cycles found", path.display())),
            Err(e) => return Err(e),
        }
    }
    if !a.trials.is_empty() {
        ctx.csv("metrics.csv", &io::write_metrics(&io::metrics_rows(&trials))?)?;
        for t in &trials {
            ctx.say(format!(
                "{} {}: {} cycles, mean cycle {:.1} ms, mean amplitude {:.2} deg",
                t.condition, t.beetle, t.complete_cycles, t.mean_cycle_time, t.mean_amplitude
            ));
        }
    }

    let mut pairs: Vec<ComparisonPair> = Vec::new();
    let compare = match &a.compare {
        Some(s) => {
            let (x, y) = s
                .split_once(',')
                .ok_or_else(|| usage("--compare expects A,B"))?;
            Some((x.trim().to_string(), y.trim().to_string()))
        }
        None if conditions.len() >= 2 => Some((conditions[0].clone(), conditions[1].clone())),
        None => None,
    };
    if let Some((x, y)) = compare {
        let mode = ctx.cfg.gait.aggregation;
        for (metric, label, unit) in [
            (Metric::BendAmplitude, "angular displacement", "degree"),
            (Metric::CycleTime, "cycle time", "ms"),
        ] {
            match (aggregate(&trials, &x, metric, mode), aggregate(&trials, &y, metric, mode)) {
                (Ok(ga), Ok(gb)) => {
                    let mut p = ComparisonPair::new(&format!("{label}, {x} vs {y}"), &x, ga, &y, gb);
                    p.unit = unit.to_string();
                    pairs.push(p);
                }
                (Err(e), _) | (_, Err(e)) => ctx.warn(format!("{label}: {e}")),
            }
        }
    }
    if a.summary_stats.len() % 2 == 1 {
        return Err(usage("--summary-stats must come in pairs"));
    }
    for chunk in a.summary_stats.chunks(2) {
        let (la, ga) = parse_stats(&chunk[0])?;
        let (lb, gb) = parse_stats(&chunk[1])?;
        pairs.push(ComparisonPair::new(&format!("{la} vs {lb}"), &la, ga, &lb, gb));
    }
    if a.reference {
        pairs.extend(reference_comparisons().iter().map(|t| t.pair()));
    }
    if !pairs.is_empty() {
        let rows = comparison_report(&pairs)?;
        let text = render_text(&rows);
        ctx.say(text.trim_end());
        ctx.csv("report.csv", &render_csv(&rows)?)?;
        if ctx.cli.format.csv() {
            ctx.emit("report.txt", &text)?;
        }
    }
    if !trials.is_empty() {
        let mut chart = Chart::new("Cycle time per trial", "cycle", "cycle time (ms)");
        for t in &trials {
            let pts = t.cycles.iter().enumerate().map(|(i, c)| (i as f64, c.cycle_time)).collect();
            chart = chart.with(Series::new(&format!("{} {}", t.condition, t.beetle), pts));
        }
        ctx.svg("cycle_times.svg", &chart)?;
    }
    Ok(0)
}
