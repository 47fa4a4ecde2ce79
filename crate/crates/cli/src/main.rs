use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use qmv::circuit::{iterated_lightcones, parse_circuit, parse_observable, Circuit, ProductObservable};
use qmv::interp::{build_overlap_graph, estimate_mean_interp, InterpConfig, DEFAULT_P_CAP};
use qmv::mpsmc::{mc_estimate, McConfig};
use qmv::numerics::{identity, pauli_z};
use qmv::oracle::{mean_value_exact_with_cap, DEFAULT_CAP};
use qmv::orpoly::{estimate_abs_mean_with_budget, DEFAULT_TERM_BUDGET};
use qmv::zerofree::{analyze_zero_freeness, ghz_circuit, random_haar_experiment, HAAR_MAX_QUBITS};
use qmv::{Error, MeanEstimate};

const EXIT_OTHER: u8 = 1;
const EXIT_PRECONDITION: u8 = 2;
const EXIT_PARSE: u8 = 3;
const EXIT_RESOURCE: u8 = 4;

/// Mean values of tensor-product observables at the output of shallow circuits.
///
/// Reports are written to stdout as JSON; everything else goes to stderr.
#[derive(Parser)]
#[command(name = "qmv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact mean value by statevector simulation.
    Exact {
        #[command(flatten)]
        input: Inputs,
        /// Largest qubit count the simulator accepts.
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
    },
    /// Relative-error estimate for observables close to the identity.
    Interp {
        #[command(flatten)]
        input: Inputs,
        #[arg(long, default_value_t = 1e-2)]
        delta: f64,
        #[arg(long, default_value_t = 2.0)]
        beta: f64,
        /// Largest truncation order allowed.
        #[arg(long, default_value_t = DEFAULT_P_CAP)]
        p_cap: usize,
    },
    /// Additive-error estimate of |mean| through an output probability.
    Orpoly {
        #[command(flatten)]
        input: Inputs,
        #[arg(long, default_value_t = 5e-2)]
        delta: f64,
        /// Largest number of subset terms enumerated.
        #[arg(long, default_value_t = DEFAULT_TERM_BUDGET)]
        budget: u128,
    },
    /// Monte Carlo estimate for circuits on a 2D grid.
    Mpsmc {
        #[command(flatten)]
        input: Inputs,
        #[arg(long, default_value_t = 1e-1)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Use this many samples instead of ceil(3/delta^2).
        #[arg(long)]
        samples_override: Option<usize>,
    },
    /// Roots of f(eps) against the guaranteed zero-free radius.
    Zerofree {
        circuit: Option<PathBuf>,
        observable: Option<PathBuf>,
        /// GHZ circuit of this depth with O_j = I + Z.
        #[arg(long, conflicts_with_all = ["circuit", "random"])]
        ghz: Option<usize>,
        /// Haar-random states on N qubits, TRIALS draws.
        #[arg(long, num_args = 2, value_names = ["N", "TRIALS"], conflicts_with = "circuit")]
        random: Option<Vec<usize>>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
    },
    /// Lightcone sizes and the overlap graph of a circuit.
    Lightcone {
        circuit: PathBuf,
        /// Deepest level of iterated cones reported.
        #[arg(long, default_value_t = 4)]
        c_max: usize,
    },
}

#[derive(Args)]
struct Inputs {
    circuit: PathBuf,
    observable: PathBuf,
}

#[derive(Debug)]
enum CliError {
    Io(PathBuf, std::io::Error),
    Usage(String),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(..) | CliError::Usage(_) => EXIT_PARSE,
            CliError::Core(e) if e.is_parse() => EXIT_PARSE,
            CliError::Core(e) if e.is_precondition() => EXIT_PRECONDITION,
            CliError::Core(e) if e.is_resource() => EXIT_RESOURCE,
            CliError::Core(_) => EXIT_OTHER,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Io(path, e) => write!(f, "cannot read {}: {e}", path.display()),
            CliError::Usage(msg) => f.write_str(msg),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Serialize)]
struct InputDigest {
    role: &'static str,
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Caps {
    oracle_qubits: usize,
    interp_order: usize,
    orpoly_terms: u128,
    haar_qubits: usize,
}

#[derive(Serialize)]
struct RunReport {
    subcommand: &'static str,
    version: &'static str,
    inputs: Vec<InputDigest>,
    seed: u64,
    caps: Caps,
    result: Value,
    metadata: Value,
    wall_time_s: f64,
}

/// Loaded inputs plus their digests.
struct Loaded {
    digests: Vec<InputDigest>,
}

impl Loaded {
    fn new() -> Self {
        Self { digests: Vec::new() }
    }

    fn read(&mut self, role: &'static str, path: &Path) -> Result<String, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
        self.digests.push(InputDigest {
            role,
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        String::from_utf8(bytes).map_err(|_| CliError::Usage(format!("{} is not UTF-8", path.display())))
    }

    fn pair(&mut self, input: &Inputs) -> Result<(Circuit, ProductObservable), CliError> {
        let c = parse_circuit(&self.read("circuit", &input.circuit)?)?;
        let o = parse_observable(&self.read("observable", &input.observable)?)?;
        o.check_len(c.n())?;
        Ok((c, o))
    }
}

fn estimate_json(est: &MeanEstimate) -> Value {
    serde_json::to_value(est).expect("estimate serializes")
}

struct Outcome {
    subcommand: &'static str,
    seed: u64,
    result: Value,
    metadata: Value,
}

fn run(command: Command, loaded: &mut Loaded, caps: &mut Caps) -> Result<Outcome, CliError> {
    let outcome = match command {
        Command::Exact { input, cap } => {
            caps.oracle_qubits = cap;
            let (c, o) = loaded.pair(&input)?;
            let mu = mean_value_exact_with_cap(&c, &o, None, cap)?;
            eprintln!("exact mean value: {:.12} {:+.12}i", mu.re, mu.im);
            Outcome {
                subcommand: "exact",
                seed: 0,
                result: json!({ "value": [mu.re, mu.im] }),
                metadata: json!({ "n": c.n(), "depth": c.depth() }),
            }
        }
        Command::Interp { input, delta, beta, p_cap } => {
            caps.interp_order = p_cap;
            let (c, o) = loaded.pair(&input)?;
            let config = InterpConfig { beta, delta, p_cap };
            let est = estimate_mean_interp(&c, &o, &config)?;
            let d = &est.diagnostics;
            eprintln!(
                "interp estimate {:.12} {:+.12}i (p = {}, {} subsets)",
                est.value.re,
                est.value.im,
                d.p.unwrap_or(0),
                d.subset_count.unwrap_or(0)
            );
            Outcome {
                subcommand: "interp",
                seed: 0,
                metadata: json!({
                    "n": c.n(),
                    "p": d.p,
                    "subset_count": d.subset_count,
                    "gamma_bound": d.gamma_bound,
                }),
                result: estimate_json(&est),
            }
        }
        Command::Orpoly { input, delta, budget } => {
            caps.orpoly_terms = budget;
            let (c, o) = loaded.pair(&input)?;
            let est = estimate_abs_mean_with_budget(&c, &o, delta, budget)?;
            let d = &est.diagnostics;
            eprintln!(
                "orpoly estimate of |mean|: {:.12} (L = {}, {} terms)",
                est.value.re,
                d.degree.unwrap_or(0),
                d.term_count.unwrap_or(0)
            );
            Outcome {
                subcommand: "orpoly",
                seed: 0,
                metadata: json!({
                    "n": c.n(),
                    "L": d.degree,
                    "term_count": d.term_count,
                }),
                result: estimate_json(&est),
            }
        }
        Command::Mpsmc { input, delta, seed, samples_override } => {
            let (c, o) = loaded.pair(&input)?;
            let config = McConfig { delta, seed, samples: samples_override };
            let est = mc_estimate(&c, &o, &config)?;
            let d = &est.diagnostics;
            eprintln!(
                "mpsmc estimate {:.12} {:+.12}i (S = {}, chi = {})",
                est.value.re,
                est.value.im,
                d.sample_count.unwrap_or(0),
                d.max_bond.unwrap_or(0)
            );
            Outcome {
                subcommand: "mpsmc",
                seed,
                metadata: json!({
                    "n": c.n(),
                    "S": d.sample_count,
                    "chi": d.max_bond,
                    "chi_bound": d.bond_bound,
                }),
                result: estimate_json(&est),
            }
        }
        Command::Zerofree { circuit, observable, ghz, random, seed, cap } => {
            caps.oracle_qubits = cap;
            if let Some(nt) = random {
                let (n, trials) = (nt[0], nt[1]);
                let stats = random_haar_experiment(n, trials, seed)?;
                eprintln!(
                    "{} trials on {} qubits: median min |root| {:.6}, low-weight mean {:.3e} (bound {:.3e})",
                    trials, n, stats.median_min_root, stats.low_weight_mean, stats.low_weight_bound
                );
                Outcome {
                    subcommand: "zerofree",
                    seed,
                    metadata: json!({ "mode": "random", "n": n, "trials": trials }),
                    result: serde_json::to_value(&stats).expect("stats serialize"),
                }
            } else {
                let (c, o, mode) = match (ghz, circuit, observable) {
                    (Some(d), _, _) => {
                        if d == 0 || d >= usize::BITS as usize - 1 {
                            return Err(Error::InvalidArgument(format!("GHZ depth {d} out of range")).into());
                        }
                        if 1usize << d > cap {
                            return Err(Error::CapExceeded { n: 1 << d, cap }.into());
                        }
                        let c = ghz_circuit(d);
                        let o = ProductObservable::uniform(identity(2) + pauli_z(), c.n())?;
                        (c, o, "ghz")
                    }
                    (None, Some(circuit), Some(observable)) => {
                        let (c, o) = loaded.pair(&Inputs { circuit, observable })?;
                        (c, o, "file")
                    }
                    _ => {
                        return Err(CliError::Usage(
                            "zerofree needs CIRCUIT and OBSERVABLE, --ghz D, or --random N TRIALS".into(),
                        ))
                    }
                };
                if c.n() > cap {
                    return Err(Error::CapExceeded { n: c.n(), cap }.into());
                }
                let report = analyze_zero_freeness(&c, &o)?;
                match (report.min_root, report.eps0) {
                    (Some(r), Some(e)) => eprintln!("min |root| {r:.9}, guaranteed radius {e:.9}"),
                    (Some(r), None) => eprintln!("min |root| {r:.9}, no finite radius required"),
                    (None, _) => eprintln!("f is constant"),
                }
                eprintln!("{}", if report.pass { "pass" } else { "FAIL" });
                Outcome {
                    subcommand: "zerofree",
                    seed,
                    metadata: json!({ "mode": mode, "n": c.n(), "ghz_depth": ghz }),
                    result: serde_json::to_value(&report).expect("report serializes"),
                }
            }
        }
        Command::Lightcone { circuit, c_max } => {
            if c_max == 0 {
                return Err(Error::InvalidArgument("--c-max must be at least 1".into()).into());
            }
            let c = parse_circuit(&loaded.read("circuit", &circuit)?)?;
            let table = iterated_lightcones(&c, c_max);
            let graph = build_overlap_graph(&c);
            let ell: Vec<usize> = (1..=c_max).map(|k| table.ell(k)).collect();
            let forward: Vec<&[usize]> = (0..c.n()).map(|j| table.forward(j, 1)).collect();
            let backward: Vec<&[usize]> = (0..c.n()).map(|j| table.backward(j, 1)).collect();
            eprintln!("n = {}, depth = {}, ell = {:?}", c.n(), c.depth(), ell);
            Outcome {
                subcommand: "lightcone",
                seed: 0,
                metadata: json!({ "n": c.n(), "depth": c.depth(), "c_max": c_max }),
                result: json!({
                    "ell": ell,
                    "forward": forward,
                    "backward": backward,
                    "overlap_max_degree": graph.max_degree(),
                    "overlap_edges": graph.edge_count(),
                }),
            }
        }
    };
    Ok(outcome)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("QMV_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Usage(format!("QMV_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let start = Instant::now();
    let mut loaded = Loaded::new();
    let mut caps = Caps {
        oracle_qubits: DEFAULT_CAP,
        interp_order: DEFAULT_P_CAP,
        orpoly_terms: DEFAULT_TERM_BUDGET,
        haar_qubits: HAAR_MAX_QUBITS,
    };
    let outcome = configure_threads().and_then(|_| run(cli.command, &mut loaded, &mut caps));
    match outcome {
        Ok(o) => {
            let report = RunReport {
                subcommand: o.subcommand,
                version: env!("CARGO_PKG_VERSION"),
                inputs: loaded.digests,
                seed: o.seed,
                caps,
                result: o.result,
                metadata: o.metadata,
                wall_time_s: start.elapsed().as_secs_f64(),
            };
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("qmv: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
