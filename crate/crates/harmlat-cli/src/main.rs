//! Batch front-end: reproduction recipes and data emission for harmonic
//! lattice models. Every run is deterministic given its flags and `--seed`;
//! results go to `--out` as gnuplot-ready CSV or JSON, and the main payload
//! is echoed to stdout.
//!
//! Exit codes: 0 success, 1 usage error, 2 numerical failure (the module
//! error name is printed to stderr).

mod model;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use harmlat::asymptotics::{
    correlation_length_from_zeros, fit_decay, gap_law_prediction, FitOptions, ModelSpec,
};
use harmlat::correlations::{correlation_sequence, BlockFunction, EngineOptions};
use harmlat::gmps::{
    build_gmps_ring, channel_apply, gmps_fourier, gmps_to_rational, parent_hamiltonian,
    rational_correlation_length, rational_correlations, GaussianChannel, RationalElement,
    TrigRationalState,
};
use harmlat::lattice::{spectral_function, SystemSize};
use harmlat::trotter::{
    compile_simulation, evaluate_sequence, generator_from_hamiltonian, CompileOptions, Gate,
    Generator,
};
use model::ModelArgs;

#[derive(Parser, Debug)]
#[command(name = "harmlat", version, about = "Harmonic lattice ground states, correlations, and simulation tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// JSON config file mirroring flag names; explicit flags take priority.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,

    /// Starting momentum-grid size per dimension (power of two).
    #[arg(long)]
    grid: Option<usize>,

    /// Quadrature convergence tolerance override.
    #[arg(long)]
    tol: Option<f64>,

    /// Seed for randomized fixtures.
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl CommonArgs {
    fn engine_options(&self) -> EngineOptions {
        let mut opts = EngineOptions::default();
        if let Some(g) = self.grid {
            let g = g.next_power_of_two();
            opts.grid_start = g;
            opts.grid_cap = opts.grid_cap.max(g);
        }
        if let Some(t) = self.tol {
            opts.tol_gapped = t;
            opts.tol_critical = t;
        }
        opts
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample the excitation spectrum E(phi) to CSV.
    Spectrum {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Number of sample rows.
        #[arg(long, default_value_t = 512)]
        rows: usize,
    },
    /// Ground-state covariance entries gamma(n) to CSV.
    Groundstate {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Covariance block: q, p, or qp.
        #[arg(long, default_value = "p")]
        block: String,
        /// Largest offset.
        #[arg(long, default_value_t = 50)]
        nmax: i64,
        /// Finite ring size; omit for the thermodynamic limit.
        #[arg(long)]
        sites: Option<usize>,
    },
    /// Correlation length from the zeros of the spectral function, with the
    /// gap-law prediction and a decay-fit cross-check.
    Corrlength {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Fit a decay law to ground-state correlations.
    Scaling {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Covariance block to fit.
        #[arg(long, default_value = "p")]
        block: String,
        /// Largest offset used in the fit.
        #[arg(long, default_value_t = 200)]
        nmax: i64,
        /// Pin the power-law exponent (fits the log-correction family
        /// n^-beta (log n)^s, s in {0, 1/2, 1}); omit for free exponents.
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Gaussian matrix product state operations.
    Gmps {
        #[command(subcommand)]
        op: GmpsOp,
    },
    /// Hamiltonian-simulation compiler.
    Trotter {
        #[command(subcommand)]
        op: TrotterOp,
    },
}

#[derive(Args, Debug, Clone)]
struct ChannelArgs {
    /// Channel JSON file; omitted: a random pure channel from --seed.
    #[arg(long)]
    channel: Option<PathBuf>,
    /// Bond count of the seeded random channel.
    #[arg(long, default_value_t = 1)]
    bonds: usize,
    /// Output modes of the seeded random channel.
    #[arg(long, default_value_t = 1)]
    outputs: usize,
}

impl ChannelArgs {
    fn resolve(&self, seed: u64) -> Result<GaussianChannel, CliError> {
        if let Some(path) = &self.channel {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
            return GaussianChannel::from_json(&text).map_err(CliError::numerical);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let modes = 2 * self.bonds + self.outputs;
        let sym = DMatrix::from_fn(2 * modes, 2 * modes, |_, _| rng.gen_range(-0.4..0.4));
        GaussianChannel::from_generator(&sym, self.bonds, self.bonds, self.outputs)
            .map_err(CliError::numerical)
    }
}

#[derive(Subcommand, Debug)]
enum GmpsOp {
    /// Apply a B -> C channel to an input covariance matrix.
    Apply {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        channel: ChannelArgs,
        /// Input CM JSON ({"cm": [[..]]}, interleaved); omitted: vacuum.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Assemble a translationally invariant ring of N sites.
    Build {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long, default_value_t = 6)]
        sites: usize,
    },
    /// Sample the Fourier symbol gamma(phi) to CSV.
    Fourier {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long, default_value_t = 256)]
        rows: usize,
    },
    /// Convert to the trig-rational representation.
    Rational {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        channel: ChannelArgs,
    },
    /// Parent Hamiltonian of a trig-rational state.
    Parent {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        channel: ChannelArgs,
        /// Trig-rational state JSON; omitted: derived from the channel.
        #[arg(long)]
        rational: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
struct GateSetArgs {
    /// Block of the nearest-neighbor interaction gate: p, q, or c.
    #[arg(long, default_value = "q")]
    int_block: String,
    /// Coupling of the interaction gate's first off-diagonal.
    #[arg(long, default_value_t = 0.5)]
    int_coupling: f64,
}

impl GateSetArgs {
    fn interaction(&self, sites: usize) -> Result<Generator, CliError> {
        let mut p = vec![0.0; sites];
        let mut q = vec![0.0; sites];
        let mut c = vec![0.0; sites];
        let row = match self.int_block.as_str() {
            "p" => &mut p,
            "q" => &mut q,
            "c" => &mut c,
            other => {
                return Err(CliError::usage(format!(
                    "unknown interaction block '{other}' (expected p, q, or c)"
                )))
            }
        };
        row[1] = self.int_coupling;
        row[sites - 1] = self.int_coupling;
        Generator::new(p, q, c).map_err(CliError::numerical)
    }
}

#[derive(Subcommand, Debug)]
enum TrotterOp {
    /// Compile a target evolution from local gates plus one interaction.
    Compile {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        gate_set: GateSetArgs,
        #[arg(long, default_value_t = 4)]
        sites: usize,
        /// Evolution time.
        #[arg(long, default_value_t = 0.5)]
        time: f64,
        /// Operator-norm error budget.
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
    },
    /// Re-measure the error of a compiled gate sequence.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        gate_set: GateSetArgs,
        /// Gate sequence JSON produced by `trotter compile`.
        #[arg(long)]
        gates: PathBuf,
        /// Evolution time the sequence was compiled for.
        #[arg(long, default_value_t = 0.5)]
        time: f64,
    },
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }

    fn numerical<E: std::fmt::Display + ErrorName>(e: E) -> Self {
        Self { code: 2, message: format!("{}: {e}", e.name()) }
    }
}

trait ErrorName {
    fn name(&self) -> &'static str;
}
impl ErrorName for harmlat::lattice::LatticeError {
    fn name(&self) -> &'static str {
        self.name()
    }
}
impl ErrorName for harmlat::correlations::CorrelationError {
    fn name(&self) -> &'static str {
        self.name()
    }
}
impl ErrorName for harmlat::asymptotics::AsymptoticsError {
    fn name(&self) -> &'static str {
        self.name()
    }
}
impl ErrorName for harmlat::gmps::GmpsError {
    fn name(&self) -> &'static str {
        self.name()
    }
}
impl ErrorName for harmlat::trotter::TrotterError {
    fn name(&self) -> &'static str {
        self.name()
    }
}
impl ErrorName for harmlat::symplectic::SymplecticError {
    fn name(&self) -> &'static str {
        self.name()
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn configure_threads() {
    if let Ok(v) = std::env::var("HARMLAT_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Spectrum { mut common, mut model, rows } => {
            apply_config(&mut common, Some(&mut model))?;
            cmd_spectrum(&common, &model, rows)
        }
        Command::Groundstate { mut common, mut model, block, nmax, sites } => {
            apply_config(&mut common, Some(&mut model))?;
            cmd_groundstate(&common, &model, &block, nmax, sites)
        }
        Command::Corrlength { mut common, mut model } => {
            apply_config(&mut common, Some(&mut model))?;
            cmd_corrlength(&common, &model)
        }
        Command::Scaling { mut common, mut model, block, nmax, beta } => {
            apply_config(&mut common, Some(&mut model))?;
            cmd_scaling(&common, &model, &block, nmax, beta)
        }
        Command::Gmps { op } => cmd_gmps(op),
        Command::Trotter { op } => cmd_trotter(op),
    }
}

/// Fill unset flags from the JSON config (flags take priority).
fn apply_config(common: &mut CommonArgs, model: Option<&mut ModelArgs>) -> Result<(), CliError> {
    let Some(path) = &common.config else { return Ok(()) };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let cfg: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("config parse error: {e}")))?;
    if common.grid.is_none() {
        common.grid = cfg.get("grid").and_then(Value::as_u64).map(|v| v as usize);
    }
    if common.tol.is_none() {
        common.tol = cfg.get("tol").and_then(Value::as_f64);
    }
    if let Some(m) = model {
        if m.kappa.is_none() {
            m.kappa = cfg.get("kappa").and_then(Value::as_f64);
        }
        if m.alpha.is_none() {
            m.alpha = cfg.get("alpha").and_then(Value::as_f64);
        }
        if m.sign.is_none() {
            m.sign = cfg.get("sign").and_then(Value::as_f64);
        }
        if m.onsite.is_none() {
            m.onsite = cfg.get("onsite").and_then(Value::as_f64);
        }
        if let Some(name) = cfg.get("model").and_then(Value::as_str) {
            if m.model == "kg" && m.kappa.is_none() || m.model.is_empty() {
                // only adopt the config model when the flag was left at its
                // default and looks unused
                m.model = name.to_string();
            }
        }
    }
    Ok(())
}

fn write_output(common: &CommonArgs, name: &str, content: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(&common.out)
        .map_err(|e| CliError::usage(format!("cannot create {}: {e}", common.out.display())))?;
    let path = common.out.join(name);
    std::fs::write(&path, content)
        .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn cmd_spectrum(common: &CommonArgs, model: &ModelArgs, rows: usize) -> Result<(), CliError> {
    let stencil = model.resolve().map_err(CliError::usage)?;
    if stencil.dim() != 1 {
        return Err(CliError::usage("spectrum CSV is one-dimensional; use d = 1 models"));
    }
    let sf = spectral_function(&stencil).map_err(CliError::numerical)?;
    let mut csv = String::from("phi,energy\n");
    for k in 0..rows {
        let phi = 2.0 * std::f64::consts::PI * k as f64 / rows as f64;
        let e = sf.eval(&[phi]).map_err(CliError::numerical)?;
        csv.push_str(&format!("{phi:.17e},{e:.17e}\n"));
    }
    let path = write_output(common, "spectrum.csv", &csv)?;
    println!("{}", path.display());
    Ok(())
}

fn cmd_groundstate(
    common: &CommonArgs,
    model: &ModelArgs,
    block: &str,
    nmax: i64,
    sites: Option<usize>,
) -> Result<(), CliError> {
    let stencil = model.resolve().map_err(CliError::usage)?;
    let f = match block {
        "q" => BlockFunction::GammaQ,
        "p" => BlockFunction::GammaP,
        "qp" => BlockFunction::GammaQP,
        other => return Err(CliError::usage(format!("unknown block '{other}'"))),
    };
    let limit = match sites {
        Some(n) => SystemSize::Finite(n),
        None => SystemSize::Thermodynamic,
    };
    let dim = stencil.dim();
    let offsets: Vec<Vec<i64>> = (0..=nmax)
        .map(|n| {
            let mut o = vec![0i64; dim];
            o[0] = n;
            o
        })
        .collect();
    let seq = correlation_sequence(&stencil, f, &offsets, limit, &common.engine_options())
        .map_err(CliError::numerical)?;
    let path = write_output(common, "groundstate.csv", &seq.to_csv())?;
    println!("{}", path.display());
    Ok(())
}

fn cmd_corrlength(common: &CommonArgs, model: &ModelArgs) -> Result<(), CliError> {
    let stencil = model.resolve().map_err(CliError::usage)?;
    let report = correlation_length_from_zeros(&stencil).map_err(CliError::numerical)?;
    let gap_law = gap_law_prediction(&stencil).map_err(CliError::numerical)?;
    // decay-fit cross-check on the inverse spectral transform
    let offsets: Vec<Vec<i64>> = (1..=60).map(|n| vec![n]).collect();
    let seq = correlation_sequence(
        &stencil,
        BlockFunction::InverseSpectral,
        &offsets,
        SystemSize::Thermodynamic,
        &common.engine_options(),
    )
    .map_err(CliError::numerical)?;
    let data: Vec<(i64, f64)> = offsets.iter().map(|o| o[0]).zip(seq.values).collect();
    let fit = fit_decay(
        &data,
        &[ModelSpec::Exp],
        &FitOptions { noise_floor: 1e-11, ..Default::default() },
    )
    .map_err(CliError::numerical)?;
    let mut out = report.to_json_value();
    let obj = out.as_object_mut().unwrap();
    obj.insert("gapLaw".into(), gap_law.to_json_value());
    obj.insert("fit".into(), fit.to_json_value());
    let text = serde_json::to_string_pretty(&out).unwrap();
    let path = write_output(common, "corrlength.json", &text)?;
    println!("{text}");
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn cmd_scaling(
    common: &CommonArgs,
    model: &ModelArgs,
    block: &str,
    nmax: i64,
    beta: Option<f64>,
) -> Result<(), CliError> {
    let stencil = model.resolve().map_err(CliError::usage)?;
    let f = match block {
        "q" => BlockFunction::GammaQ,
        "p" => BlockFunction::GammaP,
        "qp" => BlockFunction::GammaQP,
        other => return Err(CliError::usage(format!("unknown block '{other}'"))),
    };
    let offsets: Vec<Vec<i64>> = (1..=nmax).map(|n| vec![n]).collect();
    let seq = correlation_sequence(
        &stencil,
        f,
        &offsets,
        SystemSize::Thermodynamic,
        &common.engine_options(),
    )
    .map_err(CliError::numerical)?;
    let data: Vec<(i64, f64)> = offsets.iter().map(|o| o[0]).zip(seq.values).collect();
    // Fixed exponent pins the family to the log-correction ladder; the
    // critical power-law models default to the theory exponent beta = 2.
    let beta = beta.or_else(|| {
        (model.model == "powerlaw" && model.onsite.is_none()).then_some(2.0)
    });
    let candidates: Vec<ModelSpec> = match beta {
        Some(b) => [0.0, 0.5, 1.0]
            .iter()
            .map(|&s| ModelSpec::PowerFixed { beta: b, s })
            .collect(),
        None => harmlat::asymptotics::power_family(),
    };
    let fit = fit_decay(&data, &candidates, &FitOptions::default())
        .map_err(CliError::numerical)?;
    let text = serde_json::to_string_pretty(&fit.to_json_value()).unwrap();
    let path = write_output(common, "scaling.json", &text)?;
    println!("{text}");
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn cm_to_json(cm: &DMatrix<f64>) -> Value {
    let rows: Vec<Vec<f64>> = (0..cm.nrows())
        .map(|i| (0..cm.ncols()).map(|j| cm[(i, j)]).collect())
        .collect();
    json!({ "modes": cm.nrows() / 2, "ordering": "interleaved", "cm": rows })
}

fn cm_from_json(path: &PathBuf) -> Result<DMatrix<f64>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("input parse error: {e}")))?;
    let rows = v
        .get("cm")
        .and_then(Value::as_array)
        .ok_or_else(|| CliError::usage("input JSON needs a 'cm' matrix"))?;
    let n = rows.len();
    let mut m = DMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_array().ok_or_else(|| CliError::usage("ragged cm"))?;
        for (j, x) in row.iter().enumerate() {
            m[(i, j)] = x.as_f64().ok_or_else(|| CliError::usage("non-numeric cm entry"))?;
        }
    }
    Ok(m)
}

fn cmd_gmps(op: GmpsOp) -> Result<(), CliError> {
    match op {
        GmpsOp::Apply { mut common, channel, input } => {
            apply_config(&mut common, None)?;
            let ch = channel.resolve(common.seed)?;
            // a plain B -> C channel: reinterpret left ports as inputs
            let ch = GaussianChannel::new(
                ch.matrix().clone(),
                0,
                ch.left_ports() + ch.bonds(),
                ch.outputs(),
            )
            .map_err(CliError::numerical)?;
            let gamma_in = match input {
                Some(path) => cm_from_json(&path)?,
                None => DMatrix::identity(2 * ch.bonds(), 2 * ch.bonds()),
            };
            let out = channel_apply(&ch, &gamma_in).map_err(CliError::numerical)?;
            let text = serde_json::to_string_pretty(&cm_to_json(&out)).unwrap();
            let path = write_output(&common, "gmps_apply.json", &text)?;
            println!("{text}");
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        GmpsOp::Build { mut common, channel, sites } => {
            apply_config(&mut common, None)?;
            let ch = channel.resolve(common.seed)?;
            let ring = build_gmps_ring(&ch, sites).map_err(CliError::numerical)?;
            let text = serde_json::to_string_pretty(&cm_to_json(&ring)).unwrap();
            let path = write_output(&common, "gmps_ring.json", &text)?;
            println!("{}", path.display());
            Ok(())
        }
        GmpsOp::Fourier { mut common, channel, rows } => {
            apply_config(&mut common, None)?;
            let ch = channel.resolve(common.seed)?;
            let mut csv = String::from("phi,gamma_qq,gamma_pp,gamma_qp\n");
            for k in 0..rows {
                let phi = 2.0 * std::f64::consts::PI * k as f64 / rows as f64;
                let g = gmps_fourier(&ch, phi).map_err(CliError::numerical)?;
                csv.push_str(&format!(
                    "{phi:.17e},{:.17e},{:.17e},{:.17e}\n",
                    g[(0, 0)].re,
                    g[(1, 1)].re,
                    g[(0, 1)].re
                ));
            }
            let path = write_output(&common, "gmps_fourier.csv", &csv)?;
            println!("{}", path.display());
            Ok(())
        }
        GmpsOp::Rational { mut common, channel } => {
            apply_config(&mut common, None)?;
            let ch = channel.resolve(common.seed)?;
            let st = gmps_to_rational(&ch).map_err(CliError::numerical)?;
            let xi = rational_correlation_length(&st).map_err(CliError::numerical)?;
            let corr: Vec<f64> = (0..=10)
                .map(|n| rational_correlations(&st, RationalElement::QQ, n))
                .collect::<Result<_, _>>()
                .map_err(CliError::numerical)?;
            let mut v: Value = serde_json::from_str(&st.to_json()).unwrap();
            let obj = v.as_object_mut().unwrap();
            obj.insert("xi".into(), json!(xi));
            obj.insert("gammaQQ".into(), json!(corr));
            let text = serde_json::to_string_pretty(&v).unwrap();
            let path = write_output(&common, "gmps_rational.json", &text)?;
            println!("{text}");
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        GmpsOp::Parent { mut common, channel, rational } => {
            apply_config(&mut common, None)?;
            let st = match rational {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| {
                        CliError::usage(format!("cannot read {}: {e}", path.display()))
                    })?;
                    TrigRationalState::from_json(&text).map_err(CliError::numerical)?
                }
                None => {
                    let ch = channel.resolve(common.seed)?;
                    gmps_to_rational(&ch).map_err(CliError::numerical)?
                }
            };
            let stencil = parent_hamiltonian(&st).map_err(CliError::numerical)?;
            let text = stencil.to_json();
            let path = write_output(&common, "gmps_parent.json", &text)?;
            println!("{text}");
            eprintln!("wrote {}", path.display());
            Ok(())
        }
    }
}

fn cmd_trotter(op: TrotterOp) -> Result<(), CliError> {
    match op {
        TrotterOp::Compile { mut common, mut model, gate_set, sites, time, eps } => {
            apply_config(&mut common, Some(&mut model))?;
            let stencil = model.resolve().map_err(CliError::usage)?;
            let h = stencil
                .dense_hamiltonian(sites)
                .map_err(CliError::numerical)?;
            let target = generator_from_hamiltonian(&h).map_err(CliError::numerical)?;
            let a_int = gate_set.interaction(sites)?;
            let seq = compile_simulation(&target, &a_int, time, eps, &CompileOptions::default())
                .map_err(CliError::numerical)?;
            let text = serde_json::to_string_pretty(&seq.to_json_value()).unwrap();
            let path = write_output(&common, "trotter_gates.json", &text)?;
            println!(
                "{{\"achievedError\": {:.6e}, \"gates\": {}}}",
                seq.achieved_error,
                seq.gates.len()
            );
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        TrotterOp::Verify { mut common, gate_set, gates, time } => {
            apply_config(&mut common, None)?;
            let text = std::fs::read_to_string(&gates)
                .map_err(|e| CliError::usage(format!("cannot read {}: {e}", gates.display())))?;
            let v: Value = serde_json::from_str(&text)
                .map_err(|e| CliError::usage(format!("gates parse error: {e}")))?;
            let parse_row = |key: &str| -> Result<Vec<f64>, CliError> {
                v["target"][key]
                    .as_array()
                    .ok_or_else(|| CliError::usage(format!("missing target.{key}")))?
                    .iter()
                    .map(|x| x.as_f64().ok_or_else(|| CliError::usage("bad target row")))
                    .collect()
            };
            let target = Generator::new(parse_row("P")?, parse_row("Q")?, parse_row("C")?)
                .map_err(CliError::numerical)?;
            let gate_list: Vec<Gate> = v["gates"]
                .as_array()
                .ok_or_else(|| CliError::usage("missing gates array"))?
                .iter()
                .map(|g| {
                    Ok(Gate {
                        id: g["id"].as_str().ok_or_else(|| CliError::usage("bad gate id"))?.into(),
                        duration: g["duration"]
                            .as_f64()
                            .ok_or_else(|| CliError::usage("bad gate duration"))?,
                    })
                })
                .collect::<Result<_, CliError>>()?;
            let a_int = gate_set.interaction(target.sites())?;
            let product = evaluate_sequence(&gate_list, &a_int);
            let error = harmlat::linalg::op_norm(&(&product - target.exp(time)));
            let out = json!({ "recomputedError": error, "gates": gate_list.len() });
            let text = serde_json::to_string_pretty(&out).unwrap();
            let path = write_output(&common, "trotter_verify.json", &text)?;
            println!("{text}");
            eprintln!("wrote {}", path.display());
            Ok(())
        }
    }
}
