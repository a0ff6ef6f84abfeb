use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use chimera_qubo::bench::{
    compute_stats, read_instance, run_experiment, serialize_instance, solve_instance, ExperimentSpec,
    InstanceSource, Method,
};
use chimera_qubo::formulations::{build_milp, build_miqp, emit_lp, McCormickMode, Repair};
use chimera_qubo::generators::{generate_on, random_subset, topology_for, Family};
use chimera_qubo::solvers::{Budget, HeuristicParams, DEFAULT_BRUTE_FORCE_CAP, DEFAULT_DP_MAX_K};
use chimera_qubo::{Assignment, Instance, NodeId};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "chimera-qubo", version, about = "QUBO and Ising instances on Chimera graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    UniformPm1,
    UniformIntRange,
    IsingWithFields,
    IsingZeroField,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormArg {
    Qubo,
    Ising,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Milp,
    Miqp,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Full,
    Reduced,
}

#[derive(Clone, Copy, ValueEnum)]
enum RepairArg {
    None,
    DiagDominant,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Brute,
    Dp,
    Heur,
}

#[derive(clap::Args, Clone)]
struct FamilyOpts {
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Lower end of the weight range (uniform-int-range).
    #[arg(long, default_value_t = -100, allow_hyphen_values = true)]
    lo: i64,
    /// Upper end of the weight range (uniform-int-range).
    #[arg(long, default_value_t = 100, allow_hyphen_values = true)]
    hi: i64,
    /// File of node ids (whitespace separated) restricting C_k to a subgraph.
    #[arg(long)]
    subset: Option<PathBuf>,
    /// Restrict C_k to a random subgraph of this many nodes.
    #[arg(long, conflicts_with = "subset")]
    subset_size: Option<usize>,
    #[arg(long, default_value_t = 0)]
    subset_seed: u64,
}

#[derive(clap::Args, Clone)]
struct SolverOpts {
    #[arg(long, value_enum, default_value = "heur")]
    method: MethodArg,
    #[arg(long, default_value_t = 1)]
    restarts: u32,
    /// Wall-clock budget per restart in milliseconds.
    #[arg(long, default_value_t = 250)]
    budget_ms: u64,
    /// Perturbation rounds per restart; makes runs reproducible.
    #[arg(long)]
    rounds: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Perturbation size as a fraction of the node count.
    #[arg(long, default_value = "1/30")]
    pert: String,
    #[arg(long, default_value_t = DEFAULT_BRUTE_FORCE_CAP)]
    cap: usize,
    #[arg(long, default_value_t = DEFAULT_DP_MAX_K)]
    max_k: u32,
}

#[derive(Subcommand)]
enum Command {
    /// Generate seeded instances.
    Gen {
        #[command(flatten)]
        family: FamilyOpts,
        #[arg(long)]
        k: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        count: usize,
        /// Directory for the instance files; stdout when omitted and count is 1.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Convert between Ising and QUBO forms or drop the fields.
    Convert {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        to: Option<FormArg>,
        #[arg(long)]
        strip_fields: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write an LP file for an instance.
    Emit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "milp")]
        form: ModelArg,
        #[arg(long, value_enum, default_value = "full")]
        mode: ModeArg,
        #[arg(long, value_enum, default_value = "none")]
        repair: RepairArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one instance.
    Solve {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        solver: SolverOpts,
    },
    /// Run an experiment grid and print a summary table.
    Bench {
        #[command(flatten)]
        family: FamilyOpts,
        /// Comma-separated grid sizes.
        #[arg(long, value_delimiter = ',')]
        k: Vec<u32>,
        #[arg(long, default_value_t = 50)]
        count: usize,
        #[command(flatten)]
        solver: SolverOpts,
        /// Also solve exactly where possible and report gaps.
        #[arg(long)]
        reference: bool,
        /// Per-instance results file.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Include the wall-clock column in the results file.
        #[arg(long)]
        timings: bool,
    },
    /// Recompute summary statistics from a results file.
    Stats {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "seconds")]
        column: String,
    },
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<chimera_qubo::Error> for Failure {
    fn from(e: chimera_qubo::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn family_of(opts: &FamilyOpts) -> Family {
    match opts.family {
        FamilyArg::UniformPm1 => Family::UniformPm1,
        FamilyArg::UniformIntRange => Family::UniformIntRange { lo: opts.lo, hi: opts.hi },
        FamilyArg::IsingWithFields => Family::IsingWithFields,
        FamilyArg::IsingZeroField => Family::IsingZeroField,
    }
}

fn subset_of(opts: &FamilyOpts, k: u32) -> CliResult<Option<Vec<NodeId>>> {
    if let Some(size) = opts.subset_size {
        return Ok(Some(random_subset(k, size, opts.subset_seed)?));
    }
    let Some(path) = &opts.subset else { return Ok(None) };
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    text.split_whitespace()
        .map(|t| t.parse().map(NodeId).map_err(|_| Failure::Data(format!("invalid node id `{t}`"))))
        .collect::<CliResult<Vec<_>>>()
        .map(Some)
}

fn parse_fraction(s: &str) -> CliResult<(u32, u32)> {
    let bad = || Failure::Usage(format!("--pert expects `num/den`, got `{s}`"));
    let (num, den) = s.split_once('/').ok_or_else(bad)?;
    let (num, den): (u32, u32) = (num.trim().parse().map_err(|_| bad())?, den.trim().parse().map_err(|_| bad())?);
    if num == 0 || den == 0 {
        return Err(bad());
    }
    Ok((num, den))
}

fn method_of(opts: &SolverOpts) -> CliResult<Method> {
    Ok(match opts.method {
        MethodArg::Brute => Method::BruteForce { cap: opts.cap },
        MethodArg::Dp => Method::ChimeraDp { max_k: opts.max_k },
        MethodArg::Heur => {
            if opts.restarts == 0 {
                return Err(Failure::Usage("--restarts must be at least 1".into()));
            }
            let budget = Budget {
                max_rounds: opts.rounds,
                max_time: opts.rounds.is_none().then(|| Duration::from_millis(opts.budget_ms)),
            };
            Method::Heuristic(HeuristicParams {
                restarts: opts.restarts,
                perturbation: parse_fraction(&opts.pert)?,
                budget,
                seed: opts.seed,
                target: None,
            })
        }
    })
}

fn output(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Data(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(path: &Path) -> CliResult<Instance> {
    read_instance(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Gen { family, k, seed, count, out_dir } => {
            if out_dir.is_none() && count != 1 {
                return Err(Failure::Usage("--out-dir is required when --count is not 1".into()));
            }
            let fam = family_of(&family);
            let topo = topology_for(k, subset_of(&family, k)?.as_deref())?;
            if let Some(dir) = &out_dir {
                std::fs::create_dir_all(dir).map_err(|e| Failure::Data(format!("{}: {e}", dir.display())))?;
            }
            for i in 0..count {
                let s = seed.wrapping_add(i as u64);
                let inst = generate_on(fam, topo.clone(), s)?;
                let text = format!("# family={} k={k} seed={s}\n{}", fam.name(), serialize_instance(&inst));
                let path = out_dir.as_ref().map(|d| d.join(format!("{}_c{k}_s{s}.txt", fam.name())));
                output(path.as_deref(), &text)?;
            }
            Ok(())
        }
        Command::Convert { input, to, strip_fields, out } => {
            let mut inst = load(&input)?;
            let mut note = String::new();
            if strip_fields {
                match &inst {
                    Instance::Ising(i) => inst = Instance::Ising(i.strip_fields()),
                    Instance::Qubo(_) => return Err(Failure::Data("--strip-fields needs an ising instance".into())),
                }
            }
            inst = match (inst, to) {
                (Instance::Ising(i), Some(FormArg::Qubo)) => Instance::Qubo(i.to_qubo()?),
                (Instance::Qubo(q), Some(FormArg::Ising)) => {
                    let image = q.to_ising()?;
                    note = format!("# qubo value = (energy + {}) / 4\n", image.offset);
                    Instance::Ising(image.instance)
                }
                (inst, _) => inst,
            };
            output(out.as_deref(), &format!("{note}{}", serialize_instance(&inst)))
        }
        Command::Emit { input, form, mode, repair, out } => {
            let qubo = match load(&input)? {
                Instance::Qubo(q) => q,
                Instance::Ising(i) => i.to_qubo()?,
            };
            let text = match form {
                ModelArg::Milp => {
                    let mode = match mode {
                        ModeArg::Full => McCormickMode::Full,
                        ModeArg::Reduced => McCormickMode::Reduced,
                    };
                    emit_lp(&build_milp(&qubo, mode))
                }
                ModelArg::Miqp => {
                    let repair = match repair {
                        RepairArg::None => Repair::None,
                        RepairArg::DiagDominant => Repair::DiagDominant,
                    };
                    emit_lp(&build_miqp(&qubo, repair))
                }
            };
            output(out.as_deref(), &text)
        }
        Command::Solve { input, solver } => {
            let method = method_of(&solver)?;
            let inst = load(&input)?;
            let solution = solve_instance(&inst, &method)?;
            let assignment: Vec<String> = match &solution.assignment {
                Assignment::Binary(x) => x.values().iter().map(|v| v.to_string()).collect(),
                Assignment::Spin(s) => s.values().iter().map(|v| format!("{v:+}")).collect(),
            };
            let mut text = String::new();
            writeln!(text, "value {}", solution.value).unwrap();
            writeln!(text, "proven_optimal {}", solution.proven_optimal).unwrap();
            writeln!(text, "iterations {}", solution.iterations).unwrap();
            writeln!(text, "seconds {:.6}", solution.elapsed.as_secs_f64()).unwrap();
            writeln!(text, "assignment {}", assignment.join(" ")).unwrap();
            output(None, &text)
        }
        Command::Bench { family, k, count, solver, reference, csv, timings } => {
            let subset = match k.first() {
                Some(&k0) if family.subset.is_some() || family.subset_size.is_some() => {
                    if k.len() > 1 {
                        return Err(Failure::Usage("a subset needs a single --k".into()));
                    }
                    subset_of(&family, k0)?
                }
                _ => None,
            };
            let spec = ExperimentSpec {
                source: InstanceSource::Generate {
                    family: family_of(&family),
                    ks: k,
                    per_cell: count,
                    seed: solver.seed,
                    subset,
                },
                method: method_of(&solver)?,
                reference,
                stop_at_reference: false,
            };
            let report = run_experiment(&spec)?;
            print!("{}", report.to_table());
            if let Some(path) = csv {
                output(Some(&path), &report.to_csv(timings))?;
            }
            Ok(())
        }
        Command::Stats { input, column } => {
            let mut reader = csv::Reader::from_path(&input)
                .map_err(|e| Failure::Data(format!("{}: {e}", input.display())))?;
            let headers = reader.headers().map_err(|e| Failure::Data(e.to_string()))?.clone();
            let idx = headers
                .iter()
                .position(|h| h == column)
                .ok_or_else(|| Failure::Data(format!("no column `{column}` in {}", input.display())))?;
            let mut samples = Vec::new();
            for record in reader.records() {
                let record = record.map_err(|e| Failure::Data(e.to_string()))?;
                let cell = record.get(idx).unwrap_or("");
                if cell.is_empty() {
                    continue;
                }
                samples.push(cell.parse::<f64>().map_err(|_| Failure::Data(format!("not a number: `{cell}`")))?);
            }
            let s = compute_stats(&samples)?;
            println!("count {}", s.count);
            println!("mean {}", s.arithmetic_mean);
            println!("geometric_mean {}", s.geometric_mean);
            println!("min {}", s.min);
            println!("max {}", s.max);
            println!("std_dev {}", s.std_dev);
            Ok(())
        }
    }
}
