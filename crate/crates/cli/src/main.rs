use std::fs;
use std::net::SocketAddr;
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use gridnav_core::costmap::{build_static_costmap, InflationParams};
use gridnav_core::global_planner::{plan, simplify, PlannerConfig};
use gridnav_core::metrics::{localization_error, summarize, tracking_error, Summary};
use gridnav_core::scenario::{Outcome, ScenarioConfig, Simulation};
use gridnav_core::world::load_world;
use gridnav_core::Point2;
use gridnav_server::ServerConfig;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "gridnav", version, about = "Differential-drive navigation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario headless and write its log, error series and summary.
    Run {
        scenario: PathBuf,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Print the A* path between two points of a map.
    Plan {
        map: PathBuf,
        /// `x,y` in meters.
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        start: Point2,
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        goal: Point2,
        /// Drop waypoints that a straight clear segment can skip.
        #[arg(long)]
        simplify: bool,
        /// Print JSON instead of one `x y` line per waypoint.
        #[arg(long)]
        json: bool,
    },
    /// Serve a scenario over WebSocket.
    Serve {
        scenario: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Simulated seconds per wall second; 0 runs unpaced.
        #[arg(long, default_value_t = 1.0)]
        time_scale: f64,
        /// Directory with the console bundle, served at `/`.
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
    },
    /// Check a map or scenario file.
    Validate { file: PathBuf },
}

fn parse_point(s: &str) -> Result<Point2, String> {
    let parts: Vec<&str> = s.split(',').collect();
    let [x, y] = parts.as_slice() else {
        return Err(format!("expected x,y, got `{s}`"));
    };
    let x: f64 = x.trim().parse().map_err(|_| format!("invalid x in `{s}`"))?;
    let y: f64 = y.trim().parse().map_err(|_| format!("invalid y in `{s}`"))?;
    Ok(Point2::new(x, y))
}

#[derive(Serialize)]
struct RunSummary {
    seed: u64,
    outcome: Outcome,
    state: String,
    failure: Option<&'static str>,
    ticks: u64,
    sim_time: f64,
    checksum: String,
    final_distance_to_goal: f64,
    replans: usize,
    reference: Vec<[f64; 2]>,
    tracking: Option<Summary>,
    localization: Summary,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("GRIDNAV_LOG")
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .init();

    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<ExitCode> {
    match cmd {
        Cmd::Run { scenario, seed, out } => run(&scenario, seed, &out),
        Cmd::Plan {
            map,
            start,
            goal,
            simplify,
            json,
        } => plan_cmd(&map, start, goal, simplify, json),
        Cmd::Serve {
            scenario,
            port,
            host,
            time_scale,
            static_dir,
        } => serve(&scenario, &host, port, time_scale, static_dir),
        Cmd::Validate { file } => validate(&file),
    }
}

fn load_scenario(path: &FsPath, seed: Option<u64>) -> Result<Simulation> {
    let mut config = ScenarioConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let world = config.load_world()?;
    Ok(Simulation::new(config, world)?)
}

fn run(path: &FsPath, seed: Option<u64>, out: &FsPath) -> Result<ExitCode> {
    let mut sim = load_scenario(path, seed)?;
    let started = Instant::now();
    let outcome = sim.run();
    let wall = started.elapsed();
    let log = sim.log();
    if log.is_empty() {
        bail!("the simulation produced no ticks");
    }

    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let write = |name: &str, text: String| -> Result<()> {
        let p = out.join(name);
        fs::write(&p, text).with_context(|| format!("writing {}", p.display()))
    };
    write("log.csv", log.to_csv())?;
    write("paths.csv", log.paths_csv())?;
    let localization = localization_error(log)?;
    write("localization.csv", localization.to_csv())?;
    let tracking = match log.reference() {
        Some(reference) => {
            let series = tracking_error(log, reference)?;
            write("tracking.csv", series.to_csv())?;
            Some(summarize(&series)?)
        }
        None => None,
    };
    let last = log.records.last().expect("log is non-empty");
    let goal = sim.config().goal_pose()?.position();
    let summary = RunSummary {
        seed: sim.config().seed,
        outcome,
        state: last.state.to_string(),
        failure: sim.failure_reason(),
        ticks: sim.tick_count(),
        sim_time: sim.time(),
        checksum: log.checksum(),
        final_distance_to_goal: last.true_pose.position().distance(&goal),
        replans: log.paths.len().saturating_sub(1),
        reference: log
            .reference()
            .map(|p| p.waypoints.iter().map(|w| [w.x, w.y]).collect())
            .unwrap_or_default(),
        tracking,
        localization: summarize(&localization)?,
    };
    write("summary.json", serde_json::to_string_pretty(&summary)? + "\n")?;

    eprintln!(
        "{:?} after {} ticks ({:.1} s simulated, {:.2} s wall); log checksum {}",
        outcome,
        summary.ticks,
        summary.sim_time,
        wall.as_secs_f64(),
        summary.checksum
    );
    Ok(if outcome == Outcome::Reached {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn plan_cmd(map: &FsPath, start: Point2, goal: Point2, simplify_path: bool, json: bool) -> Result<ExitCode> {
    let text = fs::read_to_string(map).with_context(|| format!("reading {}", map.display()))?;
    let (grid, _) = load_world(&text).with_context(|| format!("parsing {}", map.display()))?;
    let costmap = build_static_costmap(&grid, InflationParams::default())?;
    let mut path = match plan(&costmap, start, goal, &PlannerConfig::default()) {
        Ok(path) => path,
        Err(e) => {
            eprintln!("no plan: {e}");
            return Ok(ExitCode::from(2));
        }
    };
    if simplify_path {
        path = simplify(&path, &costmap);
    }
    if json {
        println!("{}", serde_json::to_string_pretty(&path)?);
    } else {
        println!("# cost {} length {} waypoints {}", path.cost, path.length(), path.len());
        for w in &path.waypoints {
            println!("{} {}", w.x, w.y);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn serve(path: &FsPath, host: &str, port: u16, time_scale: f64, static_dir: Option<PathBuf>) -> Result<ExitCode> {
    if !(time_scale >= 0.0 && time_scale.is_finite()) {
        bail!("--time-scale must be >= 0");
    }
    let sim = load_scenario(path, None)?;
    let addr: SocketAddr = format!("{host}:{port}").parse().context("invalid --host/--port")?;
    let config = ServerConfig {
        addr,
        time_scale,
        keepalive: Duration::from_millis(500),
        static_dir,
    };
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(gridnav_server::serve(sim, config))?;
    Ok(ExitCode::SUCCESS)
}

fn validate(path: &FsPath) -> Result<ExitCode> {
    let is_scenario = matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("scenario") | Some("toml")
    );
    if is_scenario {
        let config = ScenarioConfig::load(path)?;
        let world = config.load_world()?;
        config.validate(&world)?;
        println!("{}: ok", path.display());
    } else {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let (grid, landmarks) = load_world(&text).with_context(|| format!("parsing {}", path.display()))?;
        println!(
            "{}: ok ({}x{} cells at {} m, {} landmarks)",
            path.display(),
            grid.width(),
            grid.height(),
            grid.resolution(),
            landmarks.len()
        );
    }
    Ok(ExitCode::SUCCESS)
}
