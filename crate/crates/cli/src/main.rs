//! `softcsp` — corpus generation, loss/gradient inspection, refinement,
//! decoding, and benchmarking from the command line.
//!
//! Exit codes: 0 success; 1 failed check (gradient tolerance exceeded,
//! decode dead end, write failure); 2 malformed input or bad flags.
//! Probabilities and losses print at 17 significant digits so reported
//! values round-trip to the exact 64-bit float. Parallel sections honor
//! `RAYON_NUM_THREADS`.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use softcsp::{
    clamp_evidence, greedy_decode, refine, residual_loss, restore_clues,
    simulate_perception_with, BoardRecord, ClampSource, ConstraintProgram, DecodeStatus,
    DiscreteBoard, Instance, NoiseConfig, PipelineConfig, RefineConfig, SoftAssignment,
    SuiteConfig,
};

mod gradcheck;

#[derive(Parser)]
#[command(name = "softcsp", version, about = "Differentiable constraint reasoning toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded board corpus (manifest, program, boards).
    Generate(GenerateArgs),
    /// Print the fixed-point residual loss of a stored board.
    Loss(BoardArgs),
    /// Compare the analytic gradient against finite differences.
    Gradcheck(GradcheckArgs),
    /// Run fixed-point refinement on a stored board.
    Refine(RefineArgs),
    /// Greedily decode a stored board to a discrete assignment.
    Decode(BoardArgs),
    /// Run the benchmark pipeline over a suite and report metrics.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 3)]
    box_size: usize,
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 45)]
    clues: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Corpus directory to create.
    #[arg(long)]
    out: PathBuf,
}

/// Board selection shared by loss/refine/decode: a corpus entry or a
/// standalone record file.
#[derive(Args)]
struct BoardArgs {
    /// Corpus directory written by `generate`.
    #[arg(long, conflicts_with = "board", requires = "index")]
    corpus: Option<PathBuf>,
    /// Board index within the corpus.
    #[arg(long)]
    index: Option<usize>,
    /// Standalone board record (JSON).
    #[arg(long)]
    board: Option<PathBuf>,
    /// Program text file; overrides the record's inline program.
    #[arg(long)]
    program: Option<PathBuf>,
    #[command(flatten)]
    noise: NoiseArgs,
}

#[derive(Args)]
struct NoiseArgs {
    /// Simulate perception from the record's labels at this flip rate
    /// instead of using any stored distribution (needs complete labels).
    #[arg(long)]
    noise_flip: Option<f64>,
    /// Softmax temperature for simulated perception.
    #[arg(long, default_value_t = 0.2, requires = "noise_flip")]
    noise_temp: f64,
    #[arg(long, default_value_t = 0, requires = "noise_flip")]
    noise_seed: u64,
    /// Never flip evidence cells during simulation.
    #[arg(long, requires = "noise_flip")]
    no_evidence_flips: bool,
}

#[derive(Args)]
struct GradcheckArgs {
    /// Check against the Latin program of this box size...
    #[arg(long, default_value_t = 3)]
    box_size: usize,
    /// ...or against an explicit program file.
    #[arg(long, conflicts_with = "box_size")]
    program: Option<PathBuf>,
    /// Number of random assignments to probe.
    #[arg(long, default_value_t = 20)]
    count: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Central-difference step.
    #[arg(long, default_value_t = 1e-6)]
    fd_step: f64,
    /// Maximum allowed relative error (floored at 1e-3 magnitude).
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Args)]
struct RefineArgs {
    #[command(flatten)]
    board: BoardArgs,
    #[arg(long, default_value_t = 10)]
    iterations: usize,
    /// Write the refined record here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Take suite parameters from this corpus directory's manifest...
    #[arg(long, conflicts_with_all = ["box_size", "count", "seed"])]
    corpus: Option<PathBuf>,
    /// ...or spell them out.
    #[arg(long, default_value_t = 3)]
    box_size: usize,
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 45)]
    clues: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Peak-flip probability of the simulated perception.
    #[arg(long, default_value_t = 0.0)]
    noise_flip: f64,
    /// Softmax temperature of the simulated perception.
    #[arg(long, default_value_t = 0.2)]
    noise_temp: f64,
    #[arg(long, default_value_t = 0)]
    noise_seed: u64,
    /// Refinement iterations (0 disables refinement).
    #[arg(long, default_value_t = 10)]
    iterations: usize,
    /// Greedy decode instead of plain argmax readout.
    #[arg(long)]
    decode: bool,
    /// Never flip evidence cells (reliable clue reads).
    #[arg(long)]
    no_evidence_flips: bool,
    /// Write the full JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure carrying its exit code: 1 = failed check, 2 = malformed input.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn check(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }

    fn input(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

fn main() -> ExitCode {
    // Die quietly on a closed pipe like any other Unix filter instead of
    // panicking when stdout goes away mid-print (e.g. `softcsp ... | head`).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Loss(args) => cmd_loss(args),
        Command::Gradcheck(args) => gradcheck::run(args),
        Command::Refine(args) => cmd_refine(args),
        Command::Decode(args) => cmd_decode(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<(), Failure> {
    if args.box_size < 2 {
        return Err(Failure::input("--box-size must be at least 2"));
    }
    let n = args.box_size * args.box_size * args.box_size * args.box_size;
    if args.clues > n {
        return Err(Failure::input(format!(
            "--clues {} exceeds the board's {n} cells",
            args.clues
        )));
    }
    let suite = SuiteConfig {
        box_size: args.box_size,
        count: args.count,
        clue_count: args.clues,
        seed: args.seed,
    };
    let corpus = softcsp::build_corpus(&suite);
    softcsp::save_corpus(&args.out, &corpus)
        .map_err(|e| Failure::check(format!("write failed: {e}")))?;
    println!("wrote {} boards to {}", corpus.boards.len(), args.out.display());
    Ok(())
}

/// A fully loaded board: program, distribution, mask, labels.
struct Loaded {
    program: Arc<ConstraintProgram>,
    dist: SoftAssignment,
    mask: Vec<bool>,
    labels: Vec<i32>,
}

fn load_selection(args: &BoardArgs) -> Result<Loaded, Failure> {
    let (record, program_text): (BoardRecord, Option<String>) = match (&args.corpus, &args.board) {
        (Some(dir), None) => {
            let corpus = softcsp::load_corpus(dir)
                .map_err(|e| Failure::input(format!("corpus {}: {e}", dir.display())))?;
            let index = args.index.expect("clap enforces --index with --corpus");
            let record = corpus.boards.get(index).cloned().ok_or_else(|| {
                Failure::input(format!(
                    "index {index} out of range: corpus has {} boards",
                    corpus.boards.len()
                ))
            })?;
            (record, Some(softcsp::serialize_program(&corpus.program)))
        }
        (None, Some(path)) => {
            let record = softcsp::load_board(path)
                .map_err(|e| Failure::input(format!("board {}: {e}", path.display())))?;
            (record, None)
        }
        _ => return Err(Failure::input("select a board with --corpus/--index or --board")),
    };
    let text = if let Some(path) = &args.program {
        std::fs::read_to_string(path)
            .map_err(|e| Failure::input(format!("program {}: {e}", path.display())))?
    } else if let Some(text) = program_text.or_else(|| record.program.clone()) {
        text
    } else {
        return Err(Failure::input("record has no inline program; pass --program"));
    };
    let program: ConstraintProgram = text
        .parse()
        .map_err(|e| Failure::input(format!("program: {e}")))?;
    if program.positions() != record.n || program.symbols() != record.k {
        return Err(Failure::input(format!(
            "program is {}x{}, record is {}x{}",
            program.positions(),
            program.symbols(),
            record.n,
            record.k
        )));
    }
    if record.mask.len() != record.n || record.labels.len() != record.n {
        return Err(Failure::input(format!(
            "record declares {} positions but mask has {} and labels {}",
            record.n,
            record.mask.len(),
            record.labels.len()
        )));
    }
    let (dist, renormalized) = record
        .to_assignment(args.index.unwrap_or(0))
        .map_err(|e| Failure::input(e.to_string()))?;
    if renormalized {
        eprintln!("warning: some distribution rows were renormalized on load");
    }
    Ok(Loaded {
        program: Arc::new(program),
        dist,
        mask: record.mask.iter().map(|&m| m != 0).collect(),
        labels: record.labels,
    })
}

/// The loaded distribution as an [`Instance`], or a fresh simulated
/// perception of the labels when `--noise-flip` is set.
fn instance_from(loaded: Loaded, noise: &NoiseArgs) -> Result<Instance, Failure> {
    let Some(flip) = noise.noise_flip else {
        return Ok(Instance::new(loaded.program, loaded.dist, loaded.mask, loaded.labels));
    };
    if !(0.0..=1.0).contains(&flip) {
        return Err(Failure::input("--noise-flip must lie in [0, 1]"));
    }
    if noise.noise_temp <= 0.0 {
        return Err(Failure::input("--noise-temp must be positive"));
    }
    if loaded.labels.iter().any(|&l| l < 0) {
        return Err(Failure::input("--noise-flip needs complete labels in the record"));
    }
    let board = DiscreteBoard::new(
        loaded.program.positions(),
        loaded.program.symbols(),
        loaded.labels,
    );
    let cfg = NoiseConfig::new(flip, noise.noise_temp, noise.noise_seed);
    Ok(simulate_perception_with(
        &board,
        &loaded.mask,
        &cfg,
        &loaded.program,
        !noise.no_evidence_flips,
    ))
}

fn cmd_loss(args: BoardArgs) -> Result<(), Failure> {
    let loaded = load_selection(&args)?;
    let inst = instance_from(loaded, &args.noise)?;
    let report = residual_loss(&inst.dist, &inst.program)
        .map_err(|e| Failure::input(e.to_string()))?;
    println!("total {:.16e}", report.total);
    for (name, value) in &report.per_group {
        println!("group {name} {value:.16e}");
    }
    Ok(())
}

fn cmd_refine(args: RefineArgs) -> Result<(), Failure> {
    let loaded = load_selection(&args.board)?;
    let mut inst = instance_from(loaded, &args.board.noise)?;
    let raw = inst.dist.clone();
    let before = residual_loss(&inst.dist, &inst.program)
        .map_err(|e| Failure::input(e.to_string()))?
        .total;
    clamp_evidence(&mut inst, ClampSource::Argmax).expect("argmax clamping cannot fail");
    let cfg = RefineConfig { iterations: args.iterations, ..RefineConfig::default() };
    refine(&mut inst, &cfg).map_err(|e| Failure::input(e.to_string()))?;
    let mask = inst.mask.clone();
    restore_clues(&mut inst.dist, &raw, &mask);
    let after = residual_loss(&inst.dist, &inst.program)
        .map_err(|e| Failure::input(e.to_string()))?
        .total;
    println!("iterations {}", args.iterations);
    println!("loss-before {before:.16e}");
    println!("loss-after {after:.16e}");
    if let Some(acc) = softcsp::sym_accuracy(&inst) {
        println!("sym-acc {acc:.4}");
    }
    if let Some(path) = &args.out {
        let record = BoardRecord {
            n: inst.dist.positions(),
            k: inst.dist.symbols(),
            mask: inst.mask.iter().map(|&m| m as u8).collect(),
            labels: inst.labels.clone(),
            dist: Some(
                (0..inst.dist.positions())
                    .map(|pos| inst.dist.row(pos).to_vec())
                    .collect(),
            ),
            program: Some(softcsp::serialize_program(&inst.program)),
        };
        softcsp::save_board(path, &record)
            .map_err(|e| Failure::check(format!("write failed: {e}")))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_decode(args: BoardArgs) -> Result<(), Failure> {
    let loaded = load_selection(&args)?;
    let mut inst = instance_from(loaded, &args.noise)?;
    clamp_evidence(&mut inst, ClampSource::Argmax).expect("argmax clamping cannot fail");
    let result = greedy_decode(&mut inst);
    let rendered: Vec<String> = result.assignment.iter().map(|c| c.to_string()).collect();
    println!("assignment {}", rendered.join(" "));
    println!("commits {}", result.trace.len());
    match result.status {
        DecodeStatus::Complete => {
            println!("status complete");
            Ok(())
        }
        DecodeStatus::DeadEnd => {
            let dead: Vec<String> =
                result.dead_positions.iter().map(|p| p.to_string()).collect();
            println!("status dead-end at {}", dead.join(" "));
            Err(Failure::check("decoding hit a dead end"))
        }
    }
}

fn cmd_bench(args: BenchArgs) -> Result<(), Failure> {
    let suite = if let Some(dir) = &args.corpus {
        let corpus = softcsp::load_corpus(dir)
            .map_err(|e| Failure::input(format!("corpus {}: {e}", dir.display())))?;
        corpus.manifest
    } else {
        SuiteConfig {
            box_size: args.box_size,
            count: args.count,
            clue_count: args.clues,
            seed: args.seed,
        }
    };
    if args.noise_flip < 0.0 || args.noise_flip > 1.0 {
        return Err(Failure::input("--noise-flip must lie in [0, 1]"));
    }
    if args.noise_temp <= 0.0 {
        return Err(Failure::input("--noise-temp must be positive"));
    }
    let noise = NoiseConfig::new(args.noise_flip, args.noise_temp, args.noise_seed);
    let pipeline = PipelineConfig {
        refine_iterations: args.iterations,
        decode: args.decode,
        flip_evidence: !args.no_evidence_flips,
    };
    let report = softcsp::run_benchmark(&suite, &pipeline, &noise);
    println!("suite {}", report.suite_id);
    println!(
        "noise flip {:.16e} temp {:.16e} seed {}",
        noise.flip_rate, noise.temperature, noise.seed
    );
    println!(
        "pipeline refine {} decode {} evidence-flips {}",
        pipeline.refine_iterations,
        if pipeline.decode { "on" } else { "off" },
        if pipeline.flip_evidence { "on" } else { "off" }
    );
    let m = &report.metrics;
    println!("boards {} dead-ends {}", m.boards, m.dead_ends);
    println!("sym-acc {:.4} board-acc {:.4}", m.sym_acc, m.board_acc);
    println!("csr/vcsr {:.4} {:.4}", m.csr, m.vcsr);
    if let Some(path) = &args.out {
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        std::fs::write(path, json + "\n")
            .map_err(|e| Failure::check(format!("write failed: {e}")))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
