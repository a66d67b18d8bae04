mod config;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use maskfault_core::campaign::{run_campaign, Relation};
use maskfault_core::fault::{
    inject, kyber_failure_ranges, lemma_predicate, saber_failure_ranges, FaultKind, FaultSpec,
};
use maskfault_core::io::{
    read_inequalities_csv, read_json, write_inequalities_csv, write_json, write_sweep_csv,
    KeyDump, RecoveredKey, SweepPoint,
};
use maskfault_core::kem::keygen;
use maskfault_core::masking::{a2b, ArithShares};
use maskfault_core::params::Scheme;
use maskfault_core::rng::DetRng;
use maskfault_core::solver::{solve, verify_key};
use maskfault_core::Error as CoreError;

use config::RunConfig;
use report::{RunReport, SolverReport};

const EXIT_CONFIG: u8 = 2;
const EXIT_VERIFICATION: u8 = 3;

#[derive(Parser)]
#[command(
    name = "maskfault",
    version,
    about = "Carry-chain fault campaigns against masked KEM decoding, and the inequality solver that recovers the key"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Override the seed from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run a fault-injection campaign and dump the inequality system.
    Campaign {
        #[arg(long)]
        config: PathBuf,
    },
    /// Solve an inequality CSV; optionally sweep prefixes for the
    /// success curve.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Inequality CSV produced by `campaign`.
        #[arg(long)]
        inequalities: PathBuf,
        /// Ground-truth key JSON; enables success fractions and sweeps.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Compare a recovered key against ground truth.
    Verify {
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
    /// Exhaustively check the carry-propagation predicates against the
    /// masked adder.
    LemmaCheck,
    /// Print the fault-induced decryption-failure ranges.
    Ranges {
        #[arg(long, default_value = "kyber512")]
        scheme: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: failed to configure {threads} threads: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err.downcast_ref::<CoreError>() {
                Some(CoreError::Config(_) | CoreError::Parse { .. }) => {
                    ExitCode::from(EXIT_CONFIG)
                }
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Campaign { config } => cmd_campaign(&config, cli.seed, &cli.out),
        Command::Solve { config, inequalities, truth } => {
            cmd_solve(&config, &inequalities, truth.as_deref(), cli.seed, &cli.out)
        }
        Command::Verify { key, truth } => cmd_verify(&key, &truth),
        Command::LemmaCheck => cmd_lemma_check(),
        Command::Ranges { scheme } => cmd_ranges(&scheme),
    }
}

fn load_config(path: &Path, seed_override: Option<u64>) -> anyhow::Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CoreError::config(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = RunConfig::parse(&text)?;
    if let Some(seed) = seed_override {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn cmd_campaign(config: &Path, seed: Option<u64>, out: &Path) -> anyhow::Result<ExitCode> {
    let cfg = load_config(config, seed)?;
    let params = cfg.params()?;
    let campaign_cfg = cfg.campaign_config(&params)?;
    std::fs::create_dir_all(out)?;

    let mut report = RunReport::new("campaign", serde_json::to_value(&cfg)?);

    let t = Instant::now();
    let kp = keygen(&params, cfg.seed);
    report.stage("keygen", t.elapsed().as_secs_f64());

    let t = Instant::now();
    let output = run_campaign(&kp, &campaign_cfg)?;
    report.stage("campaign", t.elapsed().as_secs_f64());

    let t = Instant::now();
    write_inequalities_csv(&out.join("inequalities.csv"), &output.inequalities)?;
    write_json(&out.join("ground_truth.json"), &KeyDump::from_keypair(&kp, Vec::new()))?;
    report.counters = Some(output.counters);
    report.inequalities_written = Some(output.inequalities.len() as u64);
    report.stage("write", t.elapsed().as_secs_f64());
    write_json(&out.join("metadata.json"), &report)?;

    let c = &output.counters;
    let lt = output
        .inequalities
        .iter()
        .filter(|i| i.relation == Relation::Lt)
        .count();
    println!(
        "campaign: {} ciphertexts, {} injections ({:.3} mean repetitions), {} failures / {} successes",
        c.ciphertexts, c.injections, c.mean_repetitions, c.failures, c.successes
    );
    println!(
        "kept {} inequalities ({} failure-derived, {} success-derived) -> {}",
        output.inequalities.len(),
        output.inequalities.len() - lt,
        lt,
        out.join("inequalities.csv").display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_solve(
    config: &Path,
    inequalities: &Path,
    truth: Option<&Path>,
    seed: Option<u64>,
    out: &Path,
) -> anyhow::Result<ExitCode> {
    let cfg = load_config(config, seed)?;
    let params = cfg.params()?;
    let solver_cfg = cfg.solver_config()?;
    std::fs::create_dir_all(out)?;

    let system = read_inequalities_csv(inequalities)?;
    if system.is_empty() {
        return Err(CoreError::config("no inequalities in input").into());
    }
    if system[0].coeffs.len() != params.unknowns() {
        return Err(CoreError::config(format!(
            "inequalities carry {} unknowns but {} expects {}",
            system[0].coeffs.len(),
            params.name.name(),
            params.unknowns()
        ))
        .into());
    }

    let truth_vec = truth
        .map(|path| -> anyhow::Result<Vec<i8>> {
            let dump: KeyDump = read_json(path)?;
            if dump.scheme != params.name {
                return Err(CoreError::config("truth file scheme mismatch").into());
            }
            Ok(dump.truth_vector())
        })
        .transpose()?;
    if !cfg.solver.sweep.is_empty() && truth_vec.is_none() {
        return Err(CoreError::config(
            "sweep requires --truth to score success fractions",
        )
        .into());
    }

    let mut report = RunReport::new("solve", serde_json::to_value(&cfg)?);

    let t = Instant::now();
    let result = solve(&system, params.eta1, params.unknowns(), &solver_cfg)?;
    report.stage("solve", t.elapsed().as_secs_f64());

    let success = truth_vec
        .as_ref()
        .map(|tv| verify_key(&result.key_guess, tv))
        .transpose()?;
    let recovered = RecoveredKey::from_solution(params.name, &result)?;
    write_json(&out.join("recovered_key.json"), &recovered)?;
    report.solver = Some(SolverReport {
        inequalities: system.len() as u64,
        iterations: result.iterations,
        converged: result.converged,
        success_fraction: success,
    });

    println!(
        "solve: {} inequalities, {} iterations, converged={}{}",
        system.len(),
        result.iterations,
        result.converged,
        success
            .map(|s| format!(", success fraction {s:.4}"))
            .unwrap_or_default()
    );

    if !cfg.solver.sweep.is_empty() {
        let truth_vec = truth_vec.as_ref().expect("checked above");
        let t = Instant::now();
        let mut points = Vec::new();
        for &count in &cfg.solver.sweep {
            let count = count.min(system.len() as u64) as usize;
            let result = solve(&system[..count], params.eta1, params.unknowns(), &solver_cfg)?;
            let fraction = verify_key(&result.key_guess, truth_vec)?;
            println!("sweep {count}: success fraction {fraction:.4} in {} iterations", result.iterations);
            points.push(SweepPoint {
                inequalities: count as u64,
                success_fraction: fraction,
                iterations: result.iterations,
                seed: cfg.seed,
            });
        }
        write_sweep_csv(&out.join("sweep.csv"), &points)?;
        report.stage("sweep", t.elapsed().as_secs_f64());
    }

    write_json(&out.join("metadata_solve.json"), &report)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(key: &Path, truth: &Path) -> anyhow::Result<ExitCode> {
    let recovered: RecoveredKey = read_json(key)?;
    let dump: KeyDump = read_json(truth)?;
    if recovered.scheme != dump.scheme {
        return Err(CoreError::config(format!(
            "scheme mismatch: key is {}, truth is {}",
            recovered.scheme.name(),
            dump.scheme.name()
        ))
        .into());
    }
    let params = dump.scheme.params();
    let guess = recovered.guess_vector();
    let truth_vec = dump.truth_vector();
    let fraction = verify_key(&guess, &truth_vec)?;

    println!("success fraction: {fraction:.6}");
    let names: Vec<String> = (0..params.l)
        .map(|b| format!("e[{b}]"))
        .chain((0..params.l).map(|b| format!("s[{b}]")))
        .collect();
    for (idx, name) in names.iter().enumerate() {
        let start = idx * params.n;
        let part = verify_key(
            &guess[start..start + params.n],
            &truth_vec[start..start + params.n],
        )?;
        println!("  {name}: {part:.6}");
    }
    if (fraction - 1.0).abs() < f64::EPSILON {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(EXIT_VERIFICATION))
    }
}

/// Exhaustive check of the stuck-at propagation predicates against the
/// real masked adder, for register widths k+1 with k in {2, 3, 4}.
fn cmd_lemma_check() -> anyhow::Result<ExitCode> {
    let mut rng = DetRng::new(0x1e44a);
    let mut all_ok = true;
    for k in 2u8..=4 {
        let modulus = 1u32 << (k + 1);
        for kind in [FaultKind::StuckAt0, FaultKind::StuckAt1] {
            let spec = FaultSpec::single_bit(kind, 0, 0, k - 1)?;
            let mut mismatches = 0u64;
            for x in 0..modulus as u16 {
                let (x_star, active) = inject(x, &spec, k + 1)?;
                for y in 0..modulus as u16 {
                    let z = ((x as u32 + y as u32) % modulus) as u16;
                    let verdict = lemma_predicate(z, x, k, kind);
                    let clean = a2b(
                        &ArithShares { shares: vec![x, y], modulus },
                        &mut rng,
                    )?
                    .unshare();
                    let faulted = a2b(
                        &ArithShares { shares: vec![x_star, y], modulus },
                        &mut rng,
                    )?
                    .unshare();
                    let msb = |w: u16| (w >> k) & 1;
                    let propagated = msb(faulted) != msb(clean);
                    if verdict.active != active
                        || verdict.propagated_to_msb != propagated
                        || verdict.z_after != faulted
                        || verdict.z_before != clean
                    {
                        mismatches += 1;
                    }
                }
            }
            let total = (modulus as u64) * (modulus as u64);
            let status = if mismatches == 0 { "ok" } else { "MISMATCH" };
            println!("k={k} {kind:?}: {total} share pairs, {mismatches} mismatches [{status}]");
            all_ok &= mismatches == 0;
        }
    }
    Ok(if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERIFICATION)
    })
}

fn cmd_ranges(scheme: &str) -> anyhow::Result<ExitCode> {
    let scheme = Scheme::from_name(scheme)?;
    let params = scheme.params();
    let print = |label: &str, ranges: Vec<(u32, u32)>| {
        let body = ranges
            .iter()
            .map(|(lo, hi)| format!("[{lo}, {hi}]"))
            .collect::<Vec<_>>()
            .join(" u ");
        println!("{label}: {body}");
    };
    if params.is_kyber() {
        println!(
            "{}: decryption failure for active single-bit faults at bit {} (A2B input g, width {})",
            scheme.name(),
            params.fault_bit(),
            params.a2b_width()
        );
        print("  stuck-at-1", kyber_failure_ranges(&params, FaultKind::StuckAt1));
        print("  stuck-at-0", kyber_failure_ranges(&params, FaultKind::StuckAt0));
    } else {
        println!(
            "{}: decryption failure for active single-bit faults at bit {} (decode input m', mod {})",
            scheme.name(),
            params.fault_bit(),
            params.p
        );
        print("  stuck-at-1", saber_failure_ranges(&params, FaultKind::StuckAt1));
        print("  stuck-at-0", saber_failure_ranges(&params, FaultKind::StuckAt0));
    }
    Ok(ExitCode::SUCCESS)
}
