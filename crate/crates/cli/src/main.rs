use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use treelab::actions::orbital_ball;
use treelab::confinement::{verify_displacement, DisplacementConfig};
use treelab::export::to_json;
use treelab::registry::{check_group, load_entry};
use treelab::scenario::{self, CutSetSource, Expectation, Outcome, Scenario, Status, Task, UrsTask};
use treelab::{
    Antichain, BoundedTypeHomeo, BratteliDiagram, ClosedSetSpec, Export, Format, OracleSpec, Ray,
    Vertex,
};

#[derive(Parser)]
#[command(name = "treelab", version, about = "Experiments with groups acting on rooted trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Built-in group name or path to a group-spec file.
    #[arg(long, default_value = "grigorchuk")]
    group: String,
    /// Directory for the report and artifacts; stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Format of the main artifact (dot, csv, json).
    #[arg(long)]
    format: Option<String>,
    /// Exit with status 2 when the verdict is a definitive negative.
    #[arg(long)]
    expect_confirmed: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Load a group and run its structural checks.
    Group {
        #[command(subcommand)]
        action: GroupAction,
    },
    /// Action graph on a level of the tree.
    Schreier {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        level: usize,
    },
    /// Ball in the orbital graph of a ray.
    Orbital {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "(1)")]
        ray: Ray,
        #[arg(long)]
        radius: usize,
    },
    /// Germ ball over a ray and its covering of the orbital ball.
    Germ {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "(1)")]
        ray: Ray,
        #[arg(long)]
        radius: usize,
    },
    /// Cayley ball, optionally tested for embedding into an orbital graph.
    Cayley {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        radius: usize,
        #[arg(long)]
        ray: Option<Ray>,
    },
    /// Growth table and degree fit of an orbital ball.
    Growth {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "(1)")]
        ray: Ray,
        #[arg(long)]
        radius: usize,
    },
    /// Bounded cut-set chains on an orbital truncation or a grid.
    Cutset {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "(1)")]
        ray: Ray,
        /// Number of vertices in the orbital truncation.
        #[arg(long, default_value_t = 512)]
        ball: usize,
        /// Use a WxH grid instead of an orbital graph.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long, default_value_t = 3)]
        bound: usize,
        #[arg(long, default_value_t = 20)]
        min_chain: usize,
    },
    /// Confining-set checks.
    Confine {
        #[command(subcommand)]
        action: ConfineAction,
    },
    /// Displacement configurations.
    Displace {
        #[command(subcommand)]
        action: DisplaceAction,
    },
    /// The commutator engine.
    Engine {
        #[command(subcommand)]
        action: EngineAction,
    },
    /// Finite-level fingerprints of closed sets and subgroups.
    Urs {
        #[command(subcommand)]
        action: UrsAction,
    },
    /// Bratteli path spaces.
    Bratteli {
        #[command(subcommand)]
        action: BratteliAction,
    },
    /// Run a scenario file.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        format: Option<String>,
    },
}

#[derive(Subcommand)]
enum GroupAction {
    Check {
        #[command(flatten)]
        common: Common,
        /// Levels checked for transitivity.
        #[arg(long, default_value_t = 8)]
        level: usize,
    },
}

#[derive(Args, Clone)]
struct ConfineArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated words forming the candidate set.
    #[arg(long, value_delimiter = ',')]
    p: Vec<String>,
    /// Subgroup oracle: JSON or `kind:argument`, e.g. `point_stabilizer:(1)`.
    #[arg(long = "oracle", required = true)]
    oracles: Vec<String>,
    /// Radius of the word ball.
    #[arg(long)]
    level: usize,
    #[arg(long, default_value_t = treelab::confinement::DEFAULT_DEPTH_BUDGET)]
    depth: usize,
}

#[derive(Subcommand)]
enum ConfineAction {
    Check(ConfineArgs),
    Refine(ConfineArgs),
}

#[derive(Subcommand)]
enum DisplaceAction {
    Build {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        p: Vec<String>,
        #[arg(long, default_value_t = treelab::confinement::DEFAULT_DEPTH_BUDGET)]
        depth: usize,
    },
    /// Verify a configuration JSON file.
    Verify {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum EngineAction {
    Run(ConfineArgs),
}

#[derive(Args, Clone)]
struct UrsArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "point_stabilizer:(1)")]
    oracle: String,
    #[arg(long)]
    level: usize,
    /// Radius of the word ball.
    #[arg(long)]
    ball: usize,
}

#[derive(Subcommand)]
enum UrsAction {
    Fingerprint {
        #[command(flatten)]
        args: UrsArgs,
        /// Closed set as JSON.
        #[arg(long)]
        closed_set: Option<String>,
    },
    Orbit {
        #[command(flatten)]
        args: UrsArgs,
        /// Comma-separated vertices of the level.
        #[arg(long, value_delimiter = ',')]
        vertices: Vec<Vertex>,
    },
    Sandwich {
        #[command(flatten)]
        args: UrsArgs,
    },
}

#[derive(Subcommand)]
enum BratteliAction {
    Profile {
        #[command(flatten)]
        common: Common,
        /// Word in the generators, profiled as a tree automorphism.
        #[arg(long)]
        element: Option<String>,
        /// Rule-list homeomorphism JSON file.
        #[arg(long)]
        homeo: Option<PathBuf>,
        /// Diagram JSON file (defaults to the stationary tree diagram).
        #[arg(long)]
        diagram: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        depth: usize,
    },
}

fn parse_oracle(s: &str) -> anyhow::Result<OracleSpec> {
    if s.trim_start().starts_with('{') {
        return serde_json::from_str(s).context("oracle JSON");
    }
    let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
    Ok(match kind {
        "point_stabilizer" => OracleSpec::PointStabilizer { ray: arg.parse()? },
        "germ_stabilizer" => OracleSpec::GermStabilizer { ray: arg.parse()? },
        "rigid_stabilizer" => OracleSpec::RigidStabilizer { vertex: arg.parse()? },
        "fixator" => OracleSpec::Fixator {
            complement: Antichain::new(
                arg.split(',')
                    .filter(|x| !x.is_empty())
                    .map(str::parse)
                    .collect::<Result<Vec<Vertex>, _>>()?,
            )?,
        },
        "word_list" => OracleSpec::WordList {
            words: arg.split(',').map(String::from).collect(),
            radius: 8,
            cap: 200_000,
        },
        other => bail!("unknown oracle kind `{other}`"),
    })
}

fn parse_format(f: &Option<String>) -> anyhow::Result<Option<Format>> {
    Ok(f.as_deref().map(str::parse).transpose()?)
}

fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Writes the report and artifacts to `out`, or prints to stdout.
fn emit(outcome: &Outcome, out: Option<&Path>, format: Option<Format>) -> anyhow::Result<()> {
    eprintln!("{}", outcome.verdict);
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            std::fs::write(dir.join("report.json"), &outcome.report)?;
            for a in &outcome.artifacts {
                std::fs::write(dir.join(&a.name), &a.content)?;
            }
        }
        None => match (format, outcome.artifacts.first()) {
            (Some(_), Some(a)) => print!("{}", a.content),
            _ => print!("{}", outcome.report),
        },
    }
    Ok(())
}

fn run_scenario(sc: Scenario, out: Option<PathBuf>, format: Option<Format>) -> anyhow::Result<Status> {
    let out = out.or_else(|| sc.out.clone().map(PathBuf::from));
    let outcome = scenario::run(&sc, format)
        .with_context(|| format!("{} scenario on {}", sc.task.name(), sc.group))?;
    emit(&outcome, out.as_deref(), format)?;
    Ok(outcome.status)
}

fn task(common: Common, task: Task) -> anyhow::Result<Status> {
    let sc = Scenario {
        group: common.group,
        task,
        expect: if common.expect_confirmed {
            Expectation::Confirmed
        } else {
            Expectation::None
        },
        seed: None,
        out: None,
    };
    run_scenario(sc, common.out, parse_format(&common.format)?)
}

fn write_or_print(out: Option<&Path>, name: &str, content: &str) -> anyhow::Result<()> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(name), content)?;
        }
        None => print!("{content}"),
    }
    Ok(())
}

fn confine_task(a: ConfineArgs, refine: bool, engine: bool) -> anyhow::Result<Status> {
    let oracles = a.oracles.iter().map(|s| parse_oracle(s)).collect::<anyhow::Result<Vec<_>>>()?;
    let t = if engine {
        Task::Engine {
            p: a.p,
            oracles,
            level: a.level,
            depth: a.depth,
            options: Default::default(),
        }
    } else {
        Task::Confine {
            p: a.p,
            oracles,
            level: a.level,
            refine,
            depth: a.depth,
        }
    };
    task(a.common, t)
}

fn urs_task(a: UrsArgs, mode: UrsTask) -> anyhow::Result<Status> {
    let oracle = parse_oracle(&a.oracle)?;
    task(
        a.common,
        Task::Urs {
            oracle,
            level: a.level,
            ball: a.ball,
            mode,
        },
    )
}

fn dispatch(cli: Cli) -> anyhow::Result<Status> {
    match cli.command {
        Command::Group {
            action: GroupAction::Check { common, level },
        } => {
            let entry = load_entry(&common.group)?;
            let report = check_group(&entry.group, level)?;
            eprintln!(
                "{}: {} (transitivity checked to level {}, {} hints)",
                report.name,
                if report.passed() { "ok" } else { "failed" },
                report.levels_checked,
                report.hints_checked
            );
            write_or_print(common.out.as_deref(), "group.json", &to_json(&report)?)?;
            Ok(if report.passed() { Status::Completed } else { Status::Refuted })
        }
        Command::Schreier { common, level } => task(common, Task::Schreier { level, cap: 1 << 16 }),
        Command::Orbital { common, ray, radius } => {
            let g = treelab::load_group(&common.group)?;
            let graph = orbital_ball(&g, &ray, radius)?;
            let format = parse_format(&common.format)?.unwrap_or(Format::Dot);
            eprintln!("orbital ball of radius {radius} at {ray}: {} vertices", graph.vertex_count());
            write_or_print(common.out.as_deref(), &format!("orbital.{format}"), &graph.export(format)?)?;
            Ok(Status::Completed)
        }
        Command::Germ { common, ray, radius } => task(common, Task::Germ { ray, radius }),
        Command::Cayley { common, radius, ray } => task(
            common,
            Task::Cayley {
                radius,
                compare_ray: ray,
            },
        ),
        Command::Growth { common, ray, radius } => task(common, Task::Growth { ray, radius }),
        Command::Cutset {
            common,
            ray,
            ball,
            grid,
            bound,
            min_chain,
        } => {
            let source = match grid {
                Some(g) => {
                    let (w, h) = g.split_once('x').context("grid size must look like 32x32")?;
                    CutSetSource::Grid {
                        width: w.parse()?,
                        height: h.parse()?,
                    }
                }
                None => CutSetSource::Orbital { ray, cap: ball },
            };
            task(common, Task::Cutset { source, bound, min_chain })
        }
        Command::Confine { action } => match action {
            ConfineAction::Check(a) => confine_task(a, false, false),
            ConfineAction::Refine(a) => confine_task(a, true, false),
        },
        Command::Engine {
            action: EngineAction::Run(a),
        } => confine_task(a, false, true),
        Command::Displace { action } => match action {
            DisplaceAction::Build { common, p, depth } => task(common, Task::Displace { p, depth }),
            DisplaceAction::Verify { config, out } => {
                let cfg: DisplacementConfig = serde_json::from_str(&read(&config)?).context("configuration JSON")?;
                let check = verify_displacement(&cfg)?;
                eprintln!("{}", check.summary());
                write_or_print(out.as_deref(), "check.json", &to_json(&check)?)?;
                Ok(if check.passed() { Status::Completed } else { Status::Refuted })
            }
        },
        Command::Urs { action } => match action {
            UrsAction::Fingerprint { args, closed_set } => {
                let closed_set = closed_set
                    .map(|s| serde_json::from_str::<ClosedSetSpec>(&s))
                    .transpose()
                    .context("closed set JSON")?;
                urs_task(args, UrsTask::Fingerprint { closed_set })
            }
            UrsAction::Orbit { args, vertices } => urs_task(args, UrsTask::Orbit { vertices }),
            UrsAction::Sandwich { args } => urs_task(args, UrsTask::Sandwich),
        },
        Command::Bratteli {
            action:
                BratteliAction::Profile {
                    common,
                    element,
                    homeo,
                    diagram,
                    depth,
                },
        } => {
            let homeo = homeo
                .map(|p| -> anyhow::Result<BoundedTypeHomeo> { Ok(serde_json::from_str(&read(&p)?)?) })
                .transpose()?;
            let diagram = diagram
                .map(|p| -> anyhow::Result<BratteliDiagram> { Ok(BratteliDiagram::from_json(&read(&p)?)?) })
                .transpose()?;
            task(
                common,
                Task::Bratteli {
                    horizon: depth,
                    element,
                    homeo,
                    diagram,
                },
            )
        }
        Command::Run { scenario, out, format } => {
            let sc = Scenario::from_json(&read(&scenario)?)?;
            run_scenario(sc, out, parse_format(&format)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(Status::Completed) => ExitCode::SUCCESS,
        Ok(Status::Refuted) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

