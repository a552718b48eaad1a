mod config;
mod portrait;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use isoreal::conductivity::{
    analyze_separable_torus, check_bou_fg, divergence_order, divergence_residual, probe_saddle_boundedness,
    probe_stable_point, synthesize, BouFgOptions, NearManifoldBand, SaddleProbeOptions, StableProbeOptions,
    SynthesisOptions, TorusOptions,
};
use isoreal::critical::{
    check_laplacian_vanishing, classify_with, find_critical_points, trace_manifolds, Classification, CriticalPoint,
    LaplacianCheck, ManifoldOptions,
};
use isoreal::flow::{hitting_time, integrate, Direction, HittingResult, Termination};
use isoreal::potential::{catalog_list, from_id};
use isoreal::rectify::{rectify, RectifyOptions};
use isoreal::{BoxDomain, GridSpec, Potential};

use config::{parse_box, parse_point, RunConfig};
use portrait::PortraitOptions;

/// Isotropic conductivity synthesis and realizability analyses for gradient fields.
#[derive(Parser, Debug)]
#[command(name = "isoreal", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by every command. Each overrides the matching `--config` entry.
#[derive(Args, Debug)]
struct Global {
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Catalog id, `separable:<spec>` or `grid:<csv>` [default: cos-saddle].
    #[arg(long, global = true)]
    potential: Option<String>,
    /// Analysis box `x0,x1,y0,y1[,z0,z1]` [default: the potential's domain].
    #[arg(long = "box", global = true, value_name = "BOX", allow_hyphen_values = true)]
    domain: Option<String>,
    /// Nodes per axis, at least 8 [default: 64].
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Level c [default: u at the analysed critical point, else 0].
    #[arg(long, global = true, allow_hyphen_values = true)]
    level: Option<f64>,
    /// Directory all outputs are written to [default: isoreal-out].
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Seed for randomized checks [default: 0].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads [default: all cores].
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Relative integration tolerance [default: 1e-12].
    #[arg(long, global = true)]
    rtol: Option<f64>,
    /// Absolute integration tolerance [default: 1e-14].
    #[arg(long, global = true)]
    atol: Option<f64>,
    /// Stop when |grad u| falls below this [default: 1e-9].
    #[arg(long, global = true)]
    grad_floor: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Locate and classify critical points in the box.
    Classify,
    /// Integrate one trajectory; hitting time of the level unless --time is given.
    Flow {
        /// Start point `x,y[,z]`.
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        /// Signed integration time.
        #[arg(long, allow_hyphen_values = true)]
        time: Option<f64>,
    },
    /// Synthesize sigma = e^w on the grid and report the divergence residual.
    Synthesize {
        /// Also synthesize on the refined grid and estimate the residual order.
        #[arg(long)]
        check_div: bool,
        /// Width of the excluded band around saddle manifolds [default: 2h].
        #[arg(long)]
        band_width: Option<f64>,
        /// Saddle whose manifolds are excluded [default: the saddle nearest the box centre].
        #[arg(long, allow_hyphen_values = true)]
        saddle: Option<String>,
    },
    /// Boundedness probes for the Laplacian line integral.
    Probe {
        #[command(subcommand)]
        kind: ProbeCommand,
    },
    /// SVG phase portrait of the flow.
    Portrait {
        #[arg(long, default_value_t = 16)]
        ring_count: usize,
        /// Seed ring radius [default: a quarter of the smallest box width].
        #[arg(long)]
        ring_radius: Option<f64>,
        /// Time each seed is integrated in both directions.
        #[arg(long, default_value_t = 20.0)]
        max_time: f64,
    },
    /// Build the rectifying map (tau, v) on the grid and verify it.
    Rectify,
    /// Print the potential catalog.
    ListPotentials,
}

#[derive(Subcommand, Debug)]
enum ProbeCommand {
    /// sup|w| on shrinking neighbourhoods of a saddle's stable manifold.
    Saddle {
        #[arg(long, allow_hyphen_values = true)]
        saddle: Option<String>,
    },
    /// Growth of the Laplacian integral toward a stable critical point.
    Stable {
        /// The critical point [default: the non-saddle nearest the box centre].
        #[arg(long, allow_hyphen_values = true)]
        point: Option<String>,
    },
    /// Torus realizability for a periodic separable gradient.
    Torus,
    /// One-dimensional criterion for a separable component.
    #[command(name = "bouFG")]
    BouFg {
        #[arg(long, default_value_t = 0)]
        axis: usize,
    },
}

/// 2: usage or input error; 1: the analysis failed or ran degraded.
enum Failure {
    Usage(anyhow::Error),
    Analysis(anyhow::Error),
}

impl From<isoreal::Error> for Failure {
    fn from(e: isoreal::Error) -> Self {
        use isoreal::Error::*;
        match e {
            NoConvergence(_) | NonFinite(_) | Unusable(_) => Failure::Analysis(e.into()),
            _ => Failure::Usage(e.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Analysis(e)
    }
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

type Outcome = Result<Option<String>, Failure>;

struct Ctx {
    cfg: RunConfig,
    potential: Potential,
    domain: BoxDomain,
}

impl Ctx {
    fn new(cfg: RunConfig) -> Result<Self, Failure> {
        if let Some(path) = cfg.potential.strip_prefix("grid:") {
            if !std::path::Path::new(path).is_file() {
                return Err(usage(anyhow!("grid file `{path}` not found")));
            }
        }
        let potential = from_id(&cfg.potential)?;
        let domain = match &cfg.domain {
            Some(b) => {
                if b.dim() != potential.dim() {
                    return Err(usage(anyhow!("box is {}-dimensional, potential is {}", b.dim(), potential.dim())));
                }
                b.clone()
            }
            None if potential.domain().is_bounded() => potential.domain().clone(),
            None => BoxDomain::cube(potential.dim(), -1.0, 1.0),
        };
        Ok(Self { cfg, potential, domain })
    }

    fn write(&self, name: &str, bytes: &[u8]) -> anyhow::Result<()> {
        let dir = &self.cfg.out_dir;
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
        Ok(())
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> anyhow::Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }

    fn grid(&self) -> Result<GridSpec, Failure> {
        Ok(GridSpec::linspace(&self.domain, &vec![self.cfg.grid; self.domain.dim()])?)
    }

    fn critical_points(&self) -> Result<Vec<CriticalPoint>, Failure> {
        Ok(find_critical_points(&self.potential, &self.domain, self.cfg.grid.min(24), &self.cfg.critical())?)
    }

    /// The critical point at `at`, or the one nearest the box centre passing `keep`.
    fn pick(&self, at: Option<&str>, keep: impl Fn(&CriticalPoint) -> bool, what: &str) -> Result<CriticalPoint, Failure> {
        if let Some(s) = at {
            let x = parse_point(s).map_err(usage)?;
            let cp = classify_with(&self.potential, &x, &self.cfg.critical())?;
            if !keep(&cp) {
                return Err(usage(anyhow!("the critical point at {s} is a {:?}, not a {what}", cp.classification)));
            }
            return Ok(cp);
        }
        let c = self.domain.center();
        self.critical_points()?
            .into_iter()
            .filter(|cp| keep(cp))
            .min_by(|a, b| dist(&a.location, &c).total_cmp(&dist(&b.location, &c)))
            .ok_or_else(|| usage(anyhow!("no {what} found in the box; pass its location explicitly")))
    }

    fn level_at(&self, cp: Option<&CriticalPoint>) -> Result<f64, Failure> {
        Ok(match (self.cfg.level, cp) {
            (Some(c), _) => c,
            (None, Some(cp)) => self.potential.value(&cp.location)?,
            (None, None) => 0.0,
        })
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn build_config(g: &Global) -> Result<RunConfig, Failure> {
    let mut cfg = match &g.config {
        Some(path) => RunConfig::load(path).map_err(usage)?,
        None => RunConfig::default(),
    };
    if let Some(p) = &g.potential {
        cfg.potential = p.clone();
    }
    if let Some(b) = &g.domain {
        cfg.domain = Some(parse_box(b).map_err(usage)?);
    }
    macro_rules! set {
        ($($src:ident => $($dst:ident).+),* $(,)?) => {
            $(if let Some(v) = g.$src.clone() { cfg.$($dst).+ = v; })*
        };
    }
    set!(grid => grid, out_dir => out_dir, seed => seed, rtol => tolerances.rtol, atol => tolerances.atol,
         grad_floor => tolerances.grad_floor);
    if g.level.is_some() {
        cfg.level = g.level;
    }
    if g.workers.is_some() {
        cfg.workers = g.workers;
    }
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

fn classify_cmd(ctx: &Ctx) -> Outcome {
    #[derive(Serialize)]
    struct Entry {
        #[serde(flatten)]
        point: CriticalPoint,
        laplacian_check: LaplacianCheck,
    }
    let points = ctx.critical_points()?;
    let mut entries = Vec::new();
    for cp in points {
        let check = check_laplacian_vanishing(&ctx.potential, &cp.location, 1e-8)?;
        println!("{:?} at {:?}, laplacian {:e}", cp.classification, cp.location, cp.laplacian);
        entries.push(Entry { point: cp, laplacian_check: check });
    }
    ctx.write_json(
        "critical.json",
        &serde_json::json!({ "potential": ctx.potential.id(), "domain": ctx.domain, "critical_points": entries }),
    )?;
    Ok(None)
}

fn flow_cmd(ctx: &Ctx, x: &str, time: Option<f64>) -> Outcome {
    let x = parse_point(x).map_err(usage)?;
    if x.len() != ctx.potential.dim() {
        return Err(usage(anyhow!("start point has {} coordinates, potential is {}-dimensional", x.len(), ctx.potential.dim())));
    }
    let flow = ctx.cfg.flow().with_domain(ctx.domain.clone());
    let (run, hit): (_, Option<HittingResult>) = match time {
        Some(t) => {
            let dir = if t < 0.0 { Direction::Backward } else { Direction::Forward };
            (integrate(&ctx.potential, &x, dir, None, &flow.clone().with_max_time(t.abs()))?, None)
        }
        None => {
            let level = ctx.level_at(None)?;
            let hit = hitting_time(&ctx.potential, &x, level, &flow)?;
            let dir = if ctx.potential.value(&x)? > level { Direction::Backward } else { Direction::Forward };
            (integrate(&ctx.potential, &x, dir, Some(level), &flow)?, Some(hit))
        }
    };
    let mut csv = Vec::new();
    run.write_csv(&mut csv)?;
    ctx.write("trajectory.csv", &csv)?;
    ctx.write_json(
        "trajectory.json",
        &serde_json::json!({
            "potential": ctx.potential.id(),
            "start": x,
            "direction": run.direction,
            "termination": run.termination,
            "accepted_steps": run.accepted_steps,
            "rejected_steps": run.rejected_steps,
            "hit": hit,
        }),
    )?;
    let last = run.last();
    println!("t = {:?}, W = {:?}, termination {:?}", last.t, last.w, run.termination);
    Ok(match (&hit, &run.termination) {
        (Some(h), _) if !h.is_hit() => Some(format!("level not reached: {:?}", h.status)),
        (None, Termination::MaxTime) => None,
        (None, t) => Some(format!("stopped before the requested time: {t:?}")),
        _ => None,
    })
}

fn synthesize_cmd(ctx: &Ctx, check_div: bool, band_width: Option<f64>, saddle: Option<&str>) -> Outcome {
    let grid = ctx.grid()?;
    let is_saddle = |c: &CriticalPoint| c.classification == Classification::Saddle;
    let saddle = match saddle {
        Some(_) => Some(ctx.pick(saddle, is_saddle, "saddle")?),
        None if ctx.potential.dim() == 2 => ctx.critical_points()?.into_iter().find(|c| is_saddle(c)),
        None => None,
    };
    let level = ctx.level_at(saddle.as_ref())?;
    let manifolds = match &saddle {
        Some(s) => {
            let mopts = ManifoldOptions {
                domain: Some(ctx.domain.clone()),
                ..ManifoldOptions::default()
            };
            Some(trace_manifolds(&ctx.potential, s, &mopts)?)
        }
        None => None,
    };
    let opts = SynthesisOptions {
        flow: ctx.cfg.flow(),
        band: manifolds.as_ref().map(|m| NearManifoldBand { manifolds: m, width: band_width }),
    };
    let field = synthesize(&ctx.potential, &grid, level, &opts)?;
    let mut csv = Vec::new();
    field.write_csv(&mut csv)?;
    ctx.write("sigma.csv", &csv)?;
    println!("{} of {} nodes synthesized at level {level:?}", field.ok_count(), grid.len());
    let usable = if check_div {
        let fine = synthesize(&ctx.potential, &grid.refined(), level, &opts)?;
        let est = divergence_order(&ctx.potential, &field, &fine)?;
        println!(
            "divergence residual max {:e} -> {:e}, order {:.3} ({} common nodes)",
            est.coarse.max, est.fine.max, est.order, est.common_nodes
        );
        ctx.write_json("divergence.json", &est)?;
        est.usable
    } else {
        let rep = divergence_residual(&ctx.potential, &field)?;
        println!("divergence residual max {:e}, rms {:e}", rep.max, rep.rms);
        ctx.write_json("divergence.json", &rep)?;
        rep.usable
    };
    Ok((!usable).then(|| "divergence report unusable: too few evaluated nodes".to_string()))
}

fn probe_cmd(ctx: &Ctx, kind: &ProbeCommand) -> Outcome {
    let rule = ctx.cfg.rule();
    let s = &ctx.cfg.schedules;
    let report = match kind {
        ProbeCommand::Saddle { saddle } => {
            let cp = ctx.pick(saddle.as_deref(), |c| c.classification == Classification::Saddle, "saddle")?;
            let mopts = ManifoldOptions {
                domain: Some(ctx.domain.clone()),
                ..ManifoldOptions::default()
            };
            let m = trace_manifolds(&ctx.potential, &cp, &mopts)?;
            let opts = SaddleProbeOptions {
                stages: s.saddle,
                q_box: Some(ctx.domain.clone()),
                level: ctx.cfg.level,
                rule,
                ..SaddleProbeOptions::default()
            };
            let r = probe_saddle_boundedness(&ctx.potential, &cp, &m, &opts)?;
            let lap = check_laplacian_vanishing(&ctx.potential, &cp.location, 1e-8)?;
            println!("saddle at {:?}: {:?}", cp.location, r.verdict);
            ctx.write_json("probe-saddle.json", &serde_json::json!({ "saddle": cp, "laplacian_check": lap, "report": r }))?;
            r
        }
        ProbeCommand::Stable { point } => {
            let cp = ctx.pick(point.as_deref(), |c| c.classification != Classification::Saddle, "stable candidate")?;
            let opts = StableProbeOptions {
                stages: s.stable,
                rule,
                ..StableProbeOptions::default()
            };
            let r = probe_stable_point(&ctx.potential, &cp.location, &ctx.domain, &opts)?;
            println!("{:?} at {:?}: {:?}", cp.classification, cp.location, r.verdict);
            ctx.write_json("probe-stable.json", &serde_json::json!({ "point": cp, "report": r }))?;
            r
        }
        ProbeCommand::Torus => {
            let comps = ctx
                .potential
                .components()
                .ok_or_else(|| usage(anyhow!("`{}` is not separable", ctx.potential.id())))?;
            let opts = TorusOptions {
                grid: ctx.cfg.grid,
                stages: s.torus,
                rule,
                ..TorusOptions::default()
            };
            let v = analyze_separable_torus(comps, &opts)?;
            println!(
                "trajectories bounded: {}, realizable: {}",
                v.trajectories_bounded, v.realizable
            );
            if let Some(sigma) = &v.sigma {
                let mut csv = Vec::new();
                sigma.write_csv(&mut csv)?;
                ctx.write("torus-sigma.csv", &csv)?;
            }
            ctx.write_json("probe-torus.json", &v)?;
            let degraded = v.divergence.as_ref().is_some_and(|d| !d.usable);
            return Ok(degraded.then(|| "divergence report unusable".to_string()));
        }
        ProbeCommand::BouFg { axis } => {
            let comps = ctx
                .potential
                .components()
                .ok_or_else(|| usage(anyhow!("`{}` is not separable", ctx.potential.id())))?;
            let comp = comps
                .get(*axis)
                .ok_or_else(|| usage(anyhow!("axis {axis} out of range")))?;
            let opts = BouFgOptions {
                last: s.bou_fg,
                rule,
                ..BouFgOptions::default()
            };
            let r = check_bou_fg(comp, &opts)?;
            println!("axis {axis}: {:?}", r.verdict);
            ctx.write_json("probe-boufg.json", &r)?;
            r
        }
    };
    if let Some(fit) = &report.fit {
        println!("best fit {:?}: coefficient {:.4}, R2 {:.4}", fit.model, fit.coefficient, fit.r2);
    }
    Ok(None)
}

fn portrait_cmd(ctx: &Ctx, ring_count: usize, ring_radius: Option<f64>, max_time: f64) -> Outcome {
    if ctx.potential.dim() != 2 {
        return Err(usage(anyhow!("phase portraits are planar; `{}` is {}-dimensional", ctx.potential.id(), ctx.potential.dim())));
    }
    if ring_count == 0 || ring_radius.is_some_and(|r| !(r > 0.0)) {
        return Err(usage(anyhow!("the seed ring is empty")));
    }
    let cps = ctx.critical_points()?;
    let level = ctx.level_at(cps.iter().find(|c| c.classification == Classification::Saddle))?;
    let opts = PortraitOptions {
        ring_count,
        ring_radius,
        max_time,
        contour_grid: ctx.cfg.grid.max(64),
    };
    let out = portrait::render(&ctx.potential, &ctx.domain, level, &cps, &opts, &ctx.cfg.flow())?;
    ctx.write("portrait.svg", out.svg.as_bytes())?;
    println!("{} trajectories, {} manifold polylines", out.trajectories, out.manifolds);
    for a in &out.annotations {
        println!("{a}");
    }
    Ok(None)
}

fn rectify_cmd(ctx: &Ctx) -> Outcome {
    let grid = ctx.grid()?;
    let opts = RectifyOptions {
        level: ctx.level_at(None)?,
        flow: ctx.cfg.flow(),
        seed: ctx.cfg.seed,
        ..RectifyOptions::default()
    };
    let map = rectify(&ctx.potential, &grid, &opts)?;
    let mut csv = Vec::new();
    map.write_csv(&mut csv)?;
    ctx.write("rectify.csv", &csv)?;
    let flow_error = map.flow_rectification_error(&ctx.potential, 10, ctx.cfg.seed)?;
    let d = &map.diagnostics;
    println!(
        "max |DPhi grad u - e1| {:e}, min |det DPhi| {:.4}, flow rectification error {:e}",
        d.max_dev_e1, d.min_abs_det, flow_error
    );
    ctx.write_json(
        "rectify.json",
        &serde_json::json!({ "potential": ctx.potential.id(), "grid": map.grid, "diagnostics": d, "flow_rectification_error": flow_error }),
    )?;
    Ok(None)
}

fn run(cli: &Cli) -> Outcome {
    if let Command::ListPotentials = cli.command {
        for e in catalog_list() {
            println!("{:<28} {}", e.id, e.description);
        }
        return Ok(None);
    }
    let cfg = build_config(&cli.global)?;
    if let Some(n) = cfg.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Analysis(e.into()))?;
    }
    let ctx = Ctx::new(cfg)?;
    let mut effective = ctx.cfg.to_json();
    effective.push('\n');
    ctx.write("config.json", effective.as_bytes())?;
    match &cli.command {
        Command::Classify => classify_cmd(&ctx),
        Command::Flow { x, time } => flow_cmd(&ctx, x, *time),
        Command::Synthesize { check_div, band_width, saddle } => {
            synthesize_cmd(&ctx, *check_div, *band_width, saddle.as_deref())
        }
        Command::Probe { kind } => probe_cmd(&ctx, kind),
        Command::Portrait { ring_count, ring_radius, max_time } => portrait_cmd(&ctx, *ring_count, *ring_radius, *max_time),
        Command::Rectify => rectify_cmd(&ctx),
        Command::ListPotentials => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(why)) => {
            eprintln!("warning: {why}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Analysis(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

