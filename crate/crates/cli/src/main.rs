//! `sagnac-switch`: gadget synthesis, SWITCH discrimination runs, witness evaluation and
//! gadget tomography from the command line.
//!
//! Exit codes: 0 success, 2 usage, 3 configuration, 4 internal consistency, 1 I/O.

mod unitary;

/// `println!` that ignores a closed stdout.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use sagnac_switch::gadget::{synthesize, verify_gadget, GadgetAngles, SYNTHESIS_TOL};
use sagnac_switch::optics::{is_reciprocal, Direction, ElementSequence, ReciprocityMode};
use sagnac_switch::report::{self, DEFAULT_RUNS};
use sagnac_switch::su2::{phase_distance, unitary_fidelity, Matrix2};
use sagnac_switch::switch::NoiseModel;
use sagnac_switch::tomography::TomographyNoise;
use sagnac_switch::Error;

use unitary::UnitaryArgs;

#[derive(Parser, Debug)]
#[command(name = "sagnac-switch", version, about = "Reciprocal polarization gadgets and a Sagnac quantum SWITCH")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Waveplate angles of the reciprocal gadget for a target unitary.
    Synth(SynthArgs),
    /// Jones matrices of an element train in both directions, or a synthesis round trip.
    Verify(VerifyArgs),
    /// Runs the commute/anti-commute discrimination task.
    Discriminate(DiscriminateArgs),
    /// Evaluates the causal witness on the SWITCH process matrix.
    Witness(WitnessArgs),
    /// Gate-fidelity and reciprocity tomography of gadgets for random unitaries.
    Tomo(TomoArgs),
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[command(flatten)]
    target: UnitaryArgs,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Element train in physical order, e.g. "QWP:45 HWP:22.5 F:+".
    #[arg(long)]
    train: Option<String>,
    #[command(flatten)]
    target: UnitaryArgs,
}

#[derive(Args, Debug)]
struct SeedArgs {
    /// Master seed; falls back to SWITCH_SEED, then to the configuration file.
    #[arg(long, env = "SWITCH_SEED")]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct DiscriminateArgs {
    /// Use the ideal SWITCH instead of the noisy simulator.
    #[arg(long, conflicts_with = "noise")]
    ideal: bool,
    /// Noise model TOML (keys are the NoiseModel field names).
    #[arg(long, required_unless_present = "ideal")]
    noise: Option<PathBuf>,
    /// Independent repetitions of the 52-pair protocol.
    #[arg(long, default_value_t = DEFAULT_RUNS, value_parser = clap::value_parser!(u32).range(1..))]
    runs: u32,
    #[command(flatten)]
    seed: SeedArgs,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct WitnessArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct TomoArgs {
    /// Number of Haar-random unitaries.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    unitaries: u64,
    #[command(flatten)]
    seed: SeedArgs,
    /// Tomography noise TOML with keys waveplate_angle_jitter_sigma (radians) and shots.
    #[arg(long, conflicts_with_all = ["noiseless", "jitter_deg", "shots"])]
    noise: Option<PathBuf>,
    /// No jitter and infinite statistics.
    #[arg(long, conflicts_with_all = ["jitter_deg", "shots"])]
    noiseless: bool,
    /// Waveplate orientation jitter in degrees.
    #[arg(long)]
    jitter_deg: Option<f64>,
    /// Shots per measurement basis (0 for infinite statistics).
    #[arg(long)]
    shots: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

/// Failure carrying its process exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    fn config(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }

    fn consistency(message: impl Into<String>) -> Self {
        Self { code: 4, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidInput(_) | Error::NotUnitary(_) | Error::InvalidState(_) => 2,
            Error::Config(_) => 3,
            Error::Consistency(_) | Error::Construction(_) | Error::Fit(_) => 4,
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => 1,
        };
        Self { code, message: e.to_string() }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn deg(x: f64) -> String {
    format!("{:.6}", x.to_degrees())
}

fn format_matrix(m: &Matrix2) -> String {
    let cell = |r, c| {
        let z = m.get(r, c);
        format!("{:+.6}{:+.6}i", z.re, z.im)
    };
    format!("[[{}, {}], [{}, {}]]", cell(0, 0), cell(0, 1), cell(1, 0), cell(1, 1))
}

fn print_angles(a: &GadgetAngles) {
    out!("full gadget (11 elements, degrees)");
    out!("  theta  {}", deg(a.theta));
    out!("  phi    {}", deg(a.phi));
    out!("  alpha  {}", deg(a.alpha));
    out!("reduced gadget (9 elements, degrees)");
    out!("  theta1 {}", deg(a.theta1));
    out!("  phi1   {}", deg(a.phi1));
    out!("  alpha  {}", deg(a.alpha));
    out!("  phi2   {}", deg(a.phi2));
    out!("  theta2 {}", deg(a.theta2));
    out!("train {}", a.reduced_sequence());
}

fn synth_and_check(target: &Matrix2) -> CliResult<GadgetAngles> {
    let angles = synthesize(target)?;
    let report = verify_gadget(&angles, target)?;
    if report.min() < 1.0 - SYNTHESIS_TOL {
        return Err(Failure::consistency(format!(
            "synthesized gadget misses the target: fidelity {:.12}",
            report.min()
        )));
    }
    Ok(angles)
}

fn cmd_synth(args: &SynthArgs) -> CliResult<()> {
    let target = args.target.resolve()?;
    let angles = synth_and_check(&target)?;
    out!("target {}", format_matrix(&target));
    print_angles(&angles);
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> CliResult<()> {
    let target = if args.target.is_given() {
        Some(args.target.resolve()?)
    } else {
        None
    };
    let train: ElementSequence = match (&args.train, &target) {
        (Some(text), _) => text.parse()?,
        (None, Some(u)) => {
            let angles = synth_and_check(u)?;
            print_angles(&angles);
            angles.reduced_sequence()
        }
        (None, None) => return Err(Failure::usage("give --train, a target unitary, or both")),
    };
    let fw = train.matrix(Direction::Forward)?;
    let bw = train.matrix(Direction::Backward)?;
    out!("fw {}", format_matrix(&fw));
    out!("bw {}", format_matrix(&bw));
    let exact = is_reciprocal(&train, 1e-12, ReciprocityMode::Exact)?;
    let up_to_phase = is_reciprocal(&train, 1e-12, ReciprocityMode::UpToPhase)?;
    out!("reciprocal exact={exact} up_to_phase={up_to_phase}");
    out!("reciprocity_fidelity {:.12}", unitary_fidelity(&fw, &bw));
    if let Some(u) = target {
        let f_fw = unitary_fidelity(&fw, &u);
        let f_bw = unitary_fidelity(&bw, &u);
        out!("fidelity fw={f_fw:.12} bw={f_bw:.12}");
        out!(
            "phase_distance fw={:.3e} bw={:.3e}",
            phase_distance(&fw, &u),
            phase_distance(&bw, &u)
        );
        if f_fw.min(f_bw) < 1.0 - SYNTHESIS_TOL {
            return Err(Failure::consistency("train does not implement the target in both directions"));
        }
    }
    Ok(())
}

fn prepare_out(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| Failure {
        code: 1,
        message: format!("cannot create {}: {e}", dir.display()),
    })
}

fn write_echo<T: Serialize>(dir: &Path, echo: &T) -> CliResult<()> {
    let text = toml::to_string(echo).map_err(|e| Failure::config(e.to_string()))?;
    fs::write(dir.join("config-echo.toml"), text).map_err(|e| Error::Io(e).into())
}

fn read_config(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))
}

#[derive(Serialize)]
struct DiscriminateEcho<'a> {
    command: &'static str,
    source: &'static str,
    runs: u32,
    noise: Option<&'a NoiseModel>,
}

fn cmd_discriminate(args: &DiscriminateArgs) -> CliResult<()> {
    let (result, source, noise) = if args.ideal {
        (report::run_ideal_discrimination(args.runs)?, "ideal", None)
    } else {
        let path = args.noise.as_ref().ok_or_else(|| Failure::usage("--noise is required"))?;
        let mut noise = NoiseModel::from_toml(&read_config(path)?)?;
        if let Some(seed) = args.seed.seed {
            noise.rng_seed = seed;
        }
        (report::run_noisy_discrimination(&noise, args.runs)?, "simulated", Some(noise))
    };
    prepare_out(&args.out)?;
    write_echo(
        &args.out,
        &DiscriminateEcho {
            command: "discriminate",
            source,
            runs: args.runs,
            noise: noise.as_ref(),
        },
    )?;
    report::write_discrimination(&args.out, &result)?;
    let summary = result.summary(source);
    report::write_json(&args.out.join("summary.json"), &summary)?;

    out!("source {source}, runs {}", args.runs);
    if let Some(fit) = result.fit {
        out!("relative port efficiency {:.6}", fit.relative_efficiency);
    }
    if let Some(raw) = result.raw_mean {
        out!("uncorrected mean {raw:.6}");
    }
    out!("min  {:.6} (causal bound {:.3}) {}", summary.min, summary.bound_min, verdict(summary.beats_bound_min));
    out!("mean {:.6} (causal bound {:.3}) {}", summary.mean, summary.bound_mean, verdict(summary.beats_bound_mean));
    Ok(())
}

fn verdict(beats: bool) -> &'static str {
    if beats {
        "exceeds bound"
    } else {
        "within bound"
    }
}

#[derive(Serialize)]
struct WitnessEcho {
    command: &'static str,
    target: &'static str,
    cj_convention: &'static str,
}

fn cmd_witness(args: &WitnessArgs) -> CliResult<()> {
    let w = report::run_witness()?;
    prepare_out(&args.out)?;
    write_echo(
        &args.out,
        &WitnessEcho {
            command: "witness",
            target: "+",
            cj_convention: sagnac_switch::witness::CjConvention::IdentityOnInputConjugateTarget.tag(),
        },
    )?;
    report::write_success_csv(fs::File::create(args.out.join("success.csv")).map_err(Error::Io)?, &w.report)?;
    report::write_json(&args.out.join("summary.json"), &w.summary())?;

    let bound = sagnac_switch::discrimination::BOUND_MEAN;
    out!("tr[S W_switch]      {:.9}  bound {bound:.3}  {}", w.switch_value, verdict(w.switch_value > bound));
    out!("tr[S W_fixed_order] {:.9}  bound {bound:.3}  {}", w.fixed_order_value, verdict(w.fixed_order_value > bound));
    out!("oracle residual     {:.3e}", w.oracle_residual);
    out!("min eigenvalue      {:.3e}", w.min_eigenvalue);
    Ok(())
}

#[derive(Serialize)]
struct TomoEcho {
    command: &'static str,
    unitaries: u64,
    seed: u64,
    noise: TomographyNoise,
}

fn cmd_tomo(args: &TomoArgs) -> CliResult<()> {
    let noise = if let Some(path) = &args.noise {
        let noise: TomographyNoise =
            toml::from_str(&read_config(path)?).map_err(|e| Failure::config(e.to_string()))?;
        noise.validate().map_err(|e| Failure::config(e.to_string()))?;
        noise
    } else if args.noiseless {
        TomographyNoise::noiseless()
    } else {
        let mut noise = TomographyNoise::default_noise();
        if let Some(d) = args.jitter_deg {
            noise.waveplate_angle_jitter_sigma = d.to_radians();
        }
        if let Some(s) = args.shots {
            noise.shots = s;
        }
        noise.validate()?;
        noise
    };
    let seed = args
        .seed
        .seed
        .ok_or_else(|| Failure::usage("tomo needs --seed or SWITCH_SEED"))?;
    let count = args.unitaries as usize;
    let c = report::run_tomography(count, &noise, seed)?;
    let summary = report::tomography_summary(&c, &noise);

    prepare_out(&args.out)?;
    write_echo(
        &args.out,
        &TomoEcho {
            command: "tomo",
            unitaries: args.unitaries,
            seed,
            noise,
        },
    )?;
    report::write_tomography(&args.out, &c)?;
    report::write_json(&args.out.join("summary.json"), &summary)?;

    for (label, s) in [
        ("U_fw", &summary.u_fw),
        ("U_bw", &summary.u_bw),
        ("V_fw", &summary.v_fw),
        ("V_bw", &summary.v_bw),
        ("all", &summary.gate_fidelity),
        ("reciprocity", &summary.reciprocity),
    ] {
        out!("{label:<12} {:.6} +- {:.6}", s.mean, s.std_dev);
    }
    Ok(())
}

fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Discriminate(a) => cmd_discriminate(a),
        Command::Witness(a) => cmd_witness(a),
        Command::Tomo(a) => cmd_tomo(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
