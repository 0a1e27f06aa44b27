use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use givcoh::acoustics::{frame_sensitivity, scattering_cross_section, ChiOptions, CrossSections, FrameSensitivity, MaterialParameters};
use givcoh::dynamics::{extract_decay_time, lindblad_generator, ramsey_experiment, DecayFit, DegeneracyPolicy, TrajectoryStats};
use givcoh::model::{levels, transition_elements, BiasConditions, ClassWeights, DefectParameters, LevelStructure};
use givcoh::rates::coherence_report;
use givcoh::units::angular_to_ghz;
use givcoh::workbench::{
    coherence_values, format_float, load_defect, load_defects_dir, load_material, predict_for_measurements,
    read_json, read_measurements, run_sweep, write_comparison_csv, write_sweep_csv, ChiCache, SweepSpec,
    COHERENCE_COLUMNS,
};
use givcoh::parallel::with_jobs;
use serde::Serialize;

/// Phonon-limited coherence of group-IV color-center spin qubits.
#[derive(Parser)]
#[command(name = "givcoh", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Phonon scattering cross-section χ of a defect in a host
    Chi(ChiArgs),
    /// Labelled levels and transition weights at one bias point
    Levels(LevelArgs),
    /// Closed-form coherence times at one bias point
    Coherence(CoherenceArgs),
    /// Simulated Ramsey signal with the closed-form prediction
    Ramsey(RamseyArgs),
    /// Evaluate a sweep specification into a CSV table
    Sweep(SweepArgs),
    /// Compare measured times against predictions
    Compare(CompareArgs),
}

#[derive(Args)]
struct ChiArgs {
    #[arg(long)]
    defect: PathBuf,
    /// Host material file; diamond when omitted
    #[arg(long)]
    material: Option<PathBuf>,
    /// Fixed quadrature degree instead of the convergence ladder
    #[arg(long)]
    order: Option<usize>,
    /// Also report χ for the defect frame turned about its axis
    #[arg(long)]
    sensitivity: bool,
}

#[derive(Args)]
struct LevelArgs {
    #[arg(long)]
    defect: PathBuf,
    #[arg(long)]
    material: Option<PathBuf>,
    #[arg(long)]
    strain_ghz: f64,
    #[arg(long, default_value_t = 0.0)]
    strain_az_deg: f64,
    #[arg(long)]
    b_tesla: f64,
    #[arg(long)]
    b_theta_deg: f64,
    #[arg(long, default_value_t = 0.0)]
    b_phi_deg: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct CoherenceArgs {
    #[command(flatten)]
    levels: LevelArgs,
    #[arg(long)]
    temp_k: f64,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    Combined,
    Independent,
}

#[derive(Args)]
struct RamseyArgs {
    #[command(flatten)]
    levels: LevelArgs,
    #[arg(long)]
    temp_k: f64,
    #[arg(long)]
    tau_max_ns: f64,
    #[arg(long, default_value_t = 401)]
    points: usize,
    /// CSV of (tau_s, sigma_x_q); the fit goes to the same path with a .json extension
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "combined")]
    policy: Policy,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; 1 runs sequentially
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    measurements: PathBuf,
    /// Directory of defect files; rows name them by file stem
    #[arg(long)]
    defects_dir: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    material: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
}

/// What a command reports back besides its output files.
enum Outcome {
    Done,
    Partial(String),
}

fn material_or_default(path: &Option<PathBuf>) -> Result<MaterialParameters> {
    match path {
        Some(p) => Ok(load_material(p)?),
        None => Ok(MaterialParameters::diamond()),
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

#[derive(Serialize)]
struct ChiOutput {
    defect: Option<String>,
    cross_sections: CrossSections,
    #[serde(skip_serializing_if = "Option::is_none")]
    frame_sensitivity: Option<FrameSensitivity>,
}

fn cmd_chi(a: &ChiArgs) -> Result<Outcome> {
    let defect = load_defect(&a.defect)?;
    let material = material_or_default(&a.material)?;
    let opts = ChiOptions { order: a.order, ..Default::default() };
    let cross_sections = scattering_cross_section(&defect, &material, &opts)?;
    let frame_sensitivity = if a.sensitivity {
        let angles: Vec<f64> = (0..=12).map(|k| 5.0 * k as f64).collect();
        Some(frame_sensitivity(&defect, &material, &angles, &opts)?)
    } else {
        None
    };
    print_json(&ChiOutput { defect: defect.name.clone(), cross_sections, frame_sensitivity })?;
    if !cross_sections.converged {
        return Ok(Outcome::Partial(format!("order {} is not converged (delta {:e})", cross_sections.quadrature_order, cross_sections.delta)));
    }
    Ok(Outcome::Done)
}

struct Loaded {
    defect: DefectParameters,
    material: MaterialParameters,
    bias: BiasConditions,
    levels: LevelStructure,
}

fn load_levels(a: &LevelArgs, temperature: f64) -> Result<Loaded> {
    let defect = load_defect(&a.defect)?;
    let material = material_or_default(&a.material)?;
    let bias =
        BiasConditions::from_angles(temperature, a.b_tesla, a.b_theta_deg, a.b_phi_deg, a.strain_ghz, a.strain_az_deg);
    bias.validate()?;
    let levels = levels(&defect, &bias)?;
    Ok(Loaded { defect, material, bias, levels })
}

#[derive(Serialize)]
struct LevelsOutput {
    omega_q_ghz: f64,
    omega_b_ghz: f64,
    lambda_eff_ghz: f64,
    energies_ghz: [f64; 4],
    /// Eigensolver index of each labelled state.
    eigen_index: [usize; 4],
    /// Weight of each labelled state in the lower zero-field doublet.
    lower_overlap: [f64; 4],
    /// Σ_R |h_Rij|², rows and columns in label order.
    h2: [[f64; 4]; 4],
    class_weights: ClassWeights,
}

fn cmd_levels(a: &LevelArgs) -> Result<Outcome> {
    let l = load_levels(a, 0.0)?.levels;
    let t = transition_elements(&l);
    print_json(&LevelsOutput {
        omega_q_ghz: angular_to_ghz(l.omega_q),
        omega_b_ghz: angular_to_ghz(l.omega_b),
        lambda_eff_ghz: angular_to_ghz(l.lambda_eff),
        energies_ghz: l.energies.map(angular_to_ghz),
        eigen_index: l.eigen_index,
        lower_overlap: l.lower_overlap,
        h2: t.summed,
        class_weights: t.classes,
    })?;
    Ok(Outcome::Done)
}

fn chi_for(defect: &DefectParameters, material: &MaterialParameters) -> Result<f64> {
    Ok(ChiCache::new().get(defect, material, &ChiOptions::default())?)
}

fn cmd_coherence(a: &CoherenceArgs) -> Result<Outcome> {
    let loaded = load_levels(&a.levels, a.temp_k)?;
    let chi = chi_for(&loaded.defect, &loaded.material)?;
    let report = coherence_report(&loaded.levels, chi, loaded.bias.temperature_k)?;
    match a.format {
        Format::Json => print_json(&report)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(io::stdout());
            w.write_record(COHERENCE_COLUMNS)?;
            w.write_record(coherence_values(&report).map(format_float))?;
            w.flush()?;
        }
    }
    Ok(Outcome::Done)
}

#[derive(Serialize)]
struct RamseySidecar {
    tau_max_s: f64,
    points: usize,
    dt_s: f64,
    policy: &'static str,
    /// Decay time fitted to the simulated signal; absent if it did not decay.
    fit: Option<DecayFit>,
    fit_error: Option<String>,
    /// Closed-form exact-envelope prediction.
    t2_eff_s: f64,
    t2_eff_analytic_s: f64,
    t2_q_s: f64,
    t1_q_s: f64,
    t_s_b_s: f64,
    lambda_eff_ghz: f64,
    chi_s2: f64,
    stats: TrajectoryStats,
}

fn cmd_ramsey(a: &RamseyArgs) -> Result<Outcome> {
    if a.tau_max_ns.is_nan() || a.tau_max_ns <= 0.0 || a.points < 2 {
        bail!("need --tau-max-ns > 0 and --points >= 2");
    }
    let loaded = load_levels(&a.levels, a.temp_k)?;
    let chi = chi_for(&loaded.defect, &loaded.material)?;
    let report = coherence_report(&loaded.levels, chi, a.temp_k)?;
    let (policy, policy_name) = match a.policy {
        Policy::Combined => (DegeneracyPolicy::Combined, "combined"),
        Policy::Independent => (DegeneracyPolicy::Independent, "independent"),
    };
    let gen = lindblad_generator(&loaded.levels, chi, a.temp_k, policy);
    let tau_max = a.tau_max_ns * 1e-9;
    let r = ramsey_experiment(&gen, tau_max, a.points)?;

    let mut w = csv::Writer::from_writer(create(&a.out)?);
    w.write_record(["tau_s", "sigma_x_q"])?;
    for (t, s) in r.taus.iter().zip(&r.sigma_x_q) {
        w.write_record([format_float(*t), format_float(*s)])?;
    }
    w.flush()?;

    let (fit, fit_error) = match extract_decay_time(&r.taus, &r.sigma_x_q) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let sidecar = RamseySidecar {
        tau_max_s: tau_max,
        points: a.points,
        dt_s: r.dt,
        policy: policy_name,
        fit,
        fit_error: fit_error.clone(),
        t2_eff_s: report.t2_eff,
        t2_eff_analytic_s: report.t2_eff_analytic,
        t2_q_s: report.t2_q,
        t1_q_s: report.t1_q,
        t_s_b_s: report.t_s_b,
        lambda_eff_ghz: angular_to_ghz(report.lambda_eff),
        chi_s2: chi,
        stats: r.stats,
    };
    let side = a.out.with_extension("json");
    let mut f = create(&side)?;
    serde_json::to_writer_pretty(&mut f, &sidecar)?;
    writeln!(f)?;
    f.flush()?;
    match fit_error {
        Some(e) => Ok(Outcome::Partial(format!("no decay time fitted: {e}; try a longer --tau-max-ns"))),
        None => Ok(Outcome::Done),
    }
}

fn jobs_or_default(jobs: Option<usize>) -> usize {
    jobs.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

fn cmd_sweep(a: &SweepArgs) -> Result<Outcome> {
    let spec: SweepSpec = read_json(&a.spec)?;
    let base = a.spec.parent().unwrap_or(Path::new("."));
    let columns = spec.output_columns()?;
    let cache = ChiCache::new();
    let records = with_jobs(jobs_or_default(a.jobs), |mode| run_sweep(&spec, base, mode, &cache))?;
    let mut out = create(&a.out)?;
    write_sweep_csv(&records, &columns, &mut out)?;
    out.flush()?;
    let failed = records.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        return Ok(Outcome::Partial(format!("{failed} of {} cells failed; see the error column", records.len())));
    }
    Ok(Outcome::Done)
}

fn cmd_compare(a: &CompareArgs) -> Result<Outcome> {
    let rows = read_measurements(&a.measurements)?;
    let defects = load_defects_dir(&a.defects_dir)?;
    let material = material_or_default(&a.material)?;
    let cache = ChiCache::new();
    let table = with_jobs(jobs_or_default(a.jobs), |mode| {
        let opts = ChiOptions { parallelism: mode, ..Default::default() };
        predict_for_measurements(&rows, &defects, &material, &opts, &cache)
    });
    let mut out = create(&a.out)?;
    write_comparison_csv(&table, &mut out)?;
    out.flush()?;
    eprintln!(
        "{} rows, mean |measured/predicted - 1| = {}",
        table.rows.len(),
        format_float(table.mean_abs_relative_deviation)
    );
    if table.failed_rows > 0 {
        return Ok(Outcome::Partial(format!("{} of {} rows failed", table.failed_rows, table.rows.len())));
    }
    Ok(Outcome::Done)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Chi(a) => cmd_chi(a),
        Command::Levels(a) => cmd_levels(a),
        Command::Coherence(a) => cmd_coherence(a),
        Command::Ramsey(a) => cmd_ramsey(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Compare(a) => cmd_compare(a),
    };
    match result {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Partial(msg)) => {
            eprintln!("warning: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
