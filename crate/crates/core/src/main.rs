//! Command-line front end.
//!
//! Exit codes: 0 when the command succeeds or the checked property holds,
//! 1 when the property is violated (the verdict is still printed as JSON on
//! standard output), 2 for unreadable input or bad usage.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use aerobust::attack::{
    build_attacked_closed_loop, verify_ae_safe_controllability, vulnerable_states, AttackedSystem,
};
use aerobust::automaton::{parallel_compose, Automaton};
use aerobust::dot::{export_dot, resilient_annotations, DotAnnotations};
use aerobust::io::{
    bundle_model, load_bundle, model_to_json, parse_model, serialize_model, Bundle, ModelFile,
    ROLE_SUPERVISOR,
};
use aerobust::recovery::{region_from_names, synthesize_resilient_supervisor, RecoveryVerdict, RobustRegion};
use aerobust::simulation::{AttackerPolicy, Simulator, TraceChecker, DEFAULT_QUIESCENCE};

#[derive(Parser)]
#[command(name = "aerobust", version, about = "Supervisory control under actuator enablement attacks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synchronous composition of two automata.
    Compose {
        left: PathBuf,
        right: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Builds the attacked closed loop of a plant and a supervisor and
    /// writes it as a bundle.
    AttackModel {
        #[arg(long)]
        plant: PathBuf,
        #[arg(long)]
        supervisor: PathBuf,
        /// Vulnerable events, replacing the plant's own vulnerable set.
        #[arg(long, value_delimiter = ',')]
        vulnerable: Option<Vec<String>>,
        /// Robust region to store in the bundle.
        #[arg(long, value_delimiter = ',')]
        region: Option<Vec<String>>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Checks a property of a bundle.
    #[command(subcommand)]
    Verify(Verify),
    /// Synthesizes supervisors.
    #[command(subcommand)]
    Synthesize(Synthesize),
    /// Runs the attacked closed loop and checks the trace.
    Simulate(SimulateArgs),
    /// Exports graphs.
    #[command(subcommand)]
    Export(Export),
}

#[derive(Subcommand)]
enum Verify {
    /// Damage after any attack can be averted by a non-vulnerable
    /// controllable event.
    SafeControllability { bundle: PathBuf },
    /// Every detection state can be steered back into the robust region.
    Recoverable {
        bundle: PathBuf,
        #[command(flatten)]
        region: RegionArg,
    },
}

#[derive(Subcommand)]
enum Synthesize {
    /// Resilient supervisor and recovery strategy table.
    Resilient {
        bundle: PathBuf,
        #[command(flatten)]
        region: RegionArg,
        /// Where to write the resilient supervisor model.
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Subcommand)]
enum Export {
    /// Graphviz DOT.
    Dot {
        model: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Role of the automaton to export (default: the plant).
        #[arg(long)]
        automaton: Option<String>,
        /// Export the resilient supervisor of a bundle.
        #[arg(long)]
        resilient: bool,
        #[command(flatten)]
        region: RegionArg,
    },
}

#[derive(Args)]
struct RegionArg {
    /// Robust region states; defaults to the region stored in the model.
    #[arg(long, value_delimiter = ',')]
    region: Option<Vec<String>>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SupervisorChoice {
    Resilient,
    Nominal,
    /// No supervision beyond the attacked supervisor itself.
    Attacked,
}

#[derive(Args)]
struct SimulateArgs {
    bundle: PathBuf,
    /// none, first, random:P[:SEED] or scripted:I,J,...
    #[arg(long, default_value = "none")]
    attacker: String,
    #[arg(long, default_value_t = 100)]
    steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "resilient")]
    supervisor: SupervisorChoice,
    /// Consecutive post-attack steps in the region that end a run.
    #[arg(long, default_value_t = DEFAULT_QUIESCENCE)]
    quiesce: usize,
    #[command(flatten)]
    region: RegionArg,
    /// Where to write the trace, one JSON record per step.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// Input or usage problem; maps to exit code 2.
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type Outcome = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compose { left, right, output } => compose(&left, &right, &output),
        Command::AttackModel {
            plant,
            supervisor,
            vulnerable,
            region,
            output,
        } => attack_model(&plant, &supervisor, vulnerable, region, &output),
        Command::Verify(Verify::SafeControllability { bundle }) => verify_safe(&bundle),
        Command::Verify(Verify::Recoverable { bundle, region }) => verify_recoverable(&bundle, region),
        Command::Synthesize(Synthesize::Resilient { bundle, region, output }) => {
            synthesize(&bundle, region, &output)
        }
        Command::Simulate(args) => simulate(args),
        Command::Export(Export::Dot {
            model,
            output,
            automaton,
            resilient,
            region,
        }) => dot(&model, &output, automaton.as_deref(), resilient, region),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn read_model(path: &Path) -> Result<ModelFile, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    parse_model(&text).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

/// Writes JSON when the file name ends in `.json`, the text format otherwise.
fn write_model(path: &Path, model: &ModelFile) -> Result<(), Failure> {
    let text = if path.extension().is_some_and(|e| e == "json") {
        model_to_json(model)
    } else {
        serialize_model(model)
    };
    write_file(path, &text)
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn print(value: &Value) {
    let text = serde_json::to_string_pretty(value).expect("json values serialize");
    // a closed pipe (e.g. `| head`) is not an error worth reporting
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn read_bundle(path: &Path) -> Result<Bundle, Failure> {
    load_bundle(&read_model(path)?).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn resolve_region(sys: &AttackedSystem, arg: RegionArg, stored: Option<&Vec<String>>) -> Result<RobustRegion, Failure> {
    let names = arg
        .region
        .or_else(|| stored.cloned())
        .ok_or_else(|| Failure("no robust region given; pass --region or store one in the bundle".into()))?;
    Ok(region_from_names(sys.plant(), &names)?)
}

fn compose(left: &Path, right: &Path, output: &Path) -> Outcome {
    let l = read_model(left)?.plant()?;
    let r = read_model(right)?.plant()?;
    let product = parallel_compose(&l, &r)?;
    write_model(output, &ModelFile::single("composition", product.clone()))?;
    print(&json!({
        "states": product.num_states(),
        "transitions": product.num_transitions(),
    }));
    Ok(true)
}

fn attack_model(
    plant: &Path,
    supervisor: &Path,
    vulnerable: Option<Vec<String>>,
    region: Option<Vec<String>>,
    output: &Path,
) -> Outcome {
    let plant_file = read_model(plant)?;
    let mut g = plant_file.plant()?;
    if let Some(v) = vulnerable {
        let v: Vec<String> = v.into_iter().filter(|s| !s.is_empty()).collect();
        g = g.with_alphabet(g.alphabet().with_vulnerable(&v)?)?;
    }
    let sup_file = read_model(supervisor)?;
    let s = match (sup_file.get(ROLE_SUPERVISOR), sup_file.automata.as_slice()) {
        (Some(s), _) => s.clone(),
        (None, [(_, only)]) => only.clone(),
        _ => return Err(Failure(format!("{}: no supervisor automaton", supervisor.display()))),
    };
    let sys = build_attacked_closed_loop(&g, &s)?;
    let region = region.or_else(|| plant_file.region.clone());
    if let Some(r) = &region {
        region_from_names(&g, r)?;
    }
    write_model(output, &bundle_model(&sys, region))?;

    let gr = sys.gr();
    print(&json!({
        "attack_events": sys.attack_events(),
        "closed_loop": {"states": gr.num_states(), "transitions": gr.num_transitions()},
        "detection_states": sys.detection_states().iter().map(|&d| gr.name(d)).collect::<Vec<_>>(),
        "vulnerable_states": sys.vulnerable_plant_states().iter().map(|&s| g.name(s)).collect::<Vec<_>>(),
        "warnings": sys.warnings(),
    }));
    Ok(true)
}

fn verify_safe(bundle: &Path) -> Outcome {
    let b = read_bundle(bundle)?;
    let verdict = verify_ae_safe_controllability(&b.system);
    let witnesses: Vec<Value> = verdict
        .witnesses
        .iter()
        .map(|w| json!({"detection": w.detection, "path": w.path, "unsafe_state": w.unsafe_state}))
        .collect();
    print(&json!({
        "property": "ae-safe-controllability",
        "holds": verdict.holds,
        "witnesses": witnesses,
    }));
    Ok(verdict.holds)
}

fn verdict_json(sys: &AttackedSystem, verdict: &RecoveryVerdict) -> Value {
    let both = verdict.recoverable && verdict.oracle_recoverable;
    json!({
        "property": "ae-robust-recoverability",
        "verdict": if both { "recoverable" } else { "not recoverable" },
        "recoverable": both,
        "methods": {
            "resilient_supervisor": verdict.recoverable,
            "game_fixpoint": verdict.oracle_recoverable,
            "agree": verdict.method_agreement,
        },
        "detection_states": verdict.per_detection,
        "counterexample": verdict.counterexample(),
        "winning_set": verdict.winning_set.iter().map(|&s| sys.plant().name(s)).collect::<Vec<_>>(),
        "warnings": verdict.warnings,
    })
}

fn verify_recoverable(bundle: &Path, region: RegionArg) -> Outcome {
    let b = read_bundle(bundle)?;
    let region = resolve_region(&b.system, region, b.region.as_ref())?;
    let verdict = synthesize_resilient_supervisor(&b.system, &region);
    print(&verdict_json(&b.system, &verdict));
    Ok(verdict.recoverable && verdict.oracle_recoverable)
}

fn synthesize(bundle: &Path, region: RegionArg, output: &Path) -> Outcome {
    let b = read_bundle(bundle)?;
    let region = resolve_region(&b.system, region, b.region.as_ref())?;
    let verdict = synthesize_resilient_supervisor(&b.system, &region);
    let sr = verdict.resilient_supervisor();
    write_model(output, &ModelFile::single("resilient", sr.clone()))?;
    let strategies: Vec<_> = verdict.strategies().collect();
    print(&json!({
        "recoverable": verdict.recoverable,
        "resilient_supervisor": {"states": sr.num_states(), "transitions": sr.num_transitions()},
        "strategies": strategies,
        "counterexample": verdict.counterexample(),
        "warnings": verdict.warnings,
    }));
    Ok(verdict.recoverable)
}

fn simulate(args: SimulateArgs) -> Outcome {
    let policy: AttackerPolicy = args.attacker.parse()?;
    let b = read_bundle(&args.bundle)?;
    let sys = &b.system;
    let region = resolve_region(sys, args.region, b.region.as_ref())?;
    let supervisor: Automaton = match args.supervisor {
        SupervisorChoice::Resilient => synthesize_resilient_supervisor(sys, &region).resilient.supervisor,
        SupervisorChoice::Nominal => sys.nominal_closed_loop(),
        SupervisorChoice::Attacked => sys.gr().clone(),
    };
    let sim = Simulator::new(sys, &supervisor, &region)?.with_quiescence(args.quiesce);
    let trace = sim.run(&policy, args.steps, args.seed);
    let report = TraceChecker::new(sys, &supervisor, &region)?.check(&trace);
    if let Some(out) = &args.output {
        write_file(out, &trace.to_json_lines(sys.gr()))?;
    }
    print(&json!({
        "seed": trace.seed,
        "steps": trace.steps.len(),
        "termination": trace.termination,
        "attacked": trace.attacked(),
        "final_state": trace.steps.last().map(|s| sys.gr().name(s.after)),
        "ok": report.ok(),
        "violations": report.violations,
    }));
    Ok(report.ok())
}

fn dot(model: &Path, output: &Path, role: Option<&str>, resilient: bool, region: RegionArg) -> Outcome {
    let file = read_model(model)?;
    let text = if resilient {
        let b = load_bundle(&file)?;
        let region = resolve_region(&b.system, region, b.region.as_ref())?;
        let verdict = synthesize_resilient_supervisor(&b.system, &region);
        let ann = resilient_annotations(&b.system, &region, &verdict);
        export_dot(verdict.resilient_supervisor(), "resilient", &ann)
    } else {
        let a = file.select(role)?;
        let mut ann = DotAnnotations {
            vulnerable: vulnerable_states(&a),
            ..DotAnnotations::default()
        };
        // a region names plant states, so it only applies to the plant
        if role.is_none() {
            if let Some(names) = region.region.or_else(|| file.region.clone()) {
                ann.region = region_from_names(&a, &names)?.states().clone();
            }
        }
        export_dot(&a, role.unwrap_or("plant"), &ann)
    };
    write_file(output, &text)?;
    Ok(true)
}
