//! `gaussmin`: forward tails, recovery, round trips and the non-enclosing
//! counterexample from the command line.
//!
//! Exit codes: 0 success, 2 input or validation error (JSON on stderr),
//! 3 recovery failure (the report is still written).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use gaussmin::covariance::{
    kappa, section_triangle, standard_square_root, validate_admissible, AdmissibilityReport,
    CovarianceMatrix3,
};
use gaussmin::geometry::Triangle2D;
use gaussmin::io;
use gaussmin::radon::{counterexample_pair, decompose_atoms, parametric_form, radon_exact, RadonProfile};
use gaussmin::recovery::{recover_sigma, roundtrip_report, RecoveryConfig, RecoveryReport, Route};
use gaussmin::tail::{empirical_tail, sample_xmin, tail_from_sigma, TailGrid};
use gaussmin::Error;

#[derive(Parser, Debug)]
#[command(name = "gaussmin", version, about = "Recover a trivariate Gaussian covariance from the law of its minimum")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tail, section triangle and circular transform of a covariance.
    Forward(Common),
    /// Recover a covariance from a tail CSV (t,m,stderr) or a sample CSV (x_min).
    Recover(Common),
    /// Tail of a covariance, recovery, and the permutation distance to it.
    Roundtrip(Common),
    /// Two non-congruent triangles with the same circular transform.
    Counterexample(Common),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Input file (sigma JSON, tail CSV or sample CSV, depending on the command).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    outdir: PathBuf,
    #[arg(long, default_value_t = -2.0, allow_negative_numbers = true)]
    t_min: f64,
    #[arg(long, default_value_t = 6.0, allow_negative_numbers = true)]
    t_max: f64,
    #[arg(long, default_value_t = 200)]
    grid_points: usize,
    /// Profile points (transform files and the constructive route).
    #[arg(long)]
    rho_points: Option<usize>,
    /// Monte Carlo draws of X_min; zero means analytic tails only.
    #[arg(long, default_value_t = 0)]
    mc_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "fit")]
    route: String,
    /// Distance tolerance of `roundtrip`.
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    #[arg(long, default_value_t = 12)]
    gs_order: usize,
}

/// Failure of a command, mapped to an exit code.
enum Failure {
    Input(Error),
    Recovery(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Quadrature { .. } | Error::InversionUnstable { .. } | Error::NotATriangleTransform { .. } => {
                Failure::Recovery(e.to_string())
            }
            e => Failure::Input(e),
        }
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::NotAdmissible(_) => "not_admissible",
        Error::DegenerateTriangle(_) => "degenerate_triangle",
        Error::InconsistentInput(_) => "inconsistent_input",
        Error::Domain(_) => "domain",
        Error::Resolution { .. } => "resolution",
        Error::NotATriangleTransform { .. } => "not_a_triangle_transform",
        Error::MalformedAtoms(_) => "malformed_atoms",
        Error::InconsistentParametricForm(_) => "inconsistent_parametric_form",
        Error::Data(_) => "data",
        Error::Quadrature { .. } => "quadrature",
        Error::InversionUnstable { .. } => "inversion_unstable",
        Error::EmpiricalTailRejected => "empirical_tail_rejected",
        Error::Io(_) => "io",
        Error::Parse(_) => "parse",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Forward(c) => forward(c),
        Command::Recover(c) => recover(c),
        Command::Roundtrip(c) => roundtrip(c),
        Command::Counterexample(c) => counterexample(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            let msg = serde_json::json!({ "error": error_kind(&e), "message": e.to_string() });
            eprintln!("{msg}");
            ExitCode::from(2)
        }
        Err(Failure::Recovery(m)) => {
            eprintln!("{}", serde_json::json!({ "error": "recovery_failed", "message": m }));
            ExitCode::from(3)
        }
    }
}

impl Common {
    fn input(&self) -> Result<&Path, Error> {
        self.input.as_deref().ok_or_else(|| Error::InconsistentInput("--input is required".into()))
    }

    fn outdir(&self) -> Result<&Path, Error> {
        std::fs::create_dir_all(&self.outdir).map_err(|e| Error::Io(format!("{}: {e}", self.outdir.display())))?;
        Ok(&self.outdir)
    }

    fn config(&self) -> Result<RecoveryConfig, Error> {
        let mut cfg = RecoveryConfig {
            route: self.route.parse::<Route>()?,
            seed: self.seed,
            t_min: self.t_min,
            t_max: self.t_max,
            grid_points: self.grid_points,
            gs_order: self.gs_order,
            ..RecoveryConfig::default()
        };
        if let Some(n) = self.rho_points {
            cfg.rho_points = n;
        }
        if !(self.tol > 0.0) {
            return Err(Error::InconsistentInput("--tol must be positive".into()));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn sigma(&self) -> Result<CovarianceMatrix3<f64>, Error> {
        let s = io::read_sigma_json(self.input()?)?;
        s.admissible_cholesky()?;
        Ok(s)
    }

    /// Analytic tail on the configured grid, or an empirical one when
    /// `--mc-samples` is set.
    fn tail_of(&self, sigma: &CovarianceMatrix3<f64>, cfg: &RecoveryConfig) -> Result<TailGrid, Error> {
        if self.mc_samples > 0 {
            empirical_tail(&sample_xmin(sigma, self.mc_samples, self.seed)?, &cfg.t_grid())
        } else {
            tail_from_sigma(sigma, &cfg.t_grid())
        }
    }
}

#[derive(Serialize)]
struct ForwardSummary {
    sigma: [[f64; 3]; 3],
    admissibility: AdmissibilityReport<f64>,
    kappa: f64,
    case: String,
    parametric: [f64; 6],
    atoms: usize,
    grid_points: usize,
    mc_samples: usize,
    seed: u64,
}

fn forward(c: &Common) -> Result<(), Failure> {
    let cfg = c.config()?;
    let path = c.input()?;
    let sigma = io::read_sigma_json(path)?;
    let admissibility = validate_admissible(&sigma);
    if !admissibility.admissible {
        return Err(Error::NotAdmissible(admissibility.reason.unwrap_or_default()).into());
    }
    let out = c.outdir()?;
    let k = kappa(&sigma)?;
    let tri = section_triangle(&standard_square_root(&sigma)?)?.triangle;
    let atoms = decompose_atoms(&tri)?;
    let pf = parametric_form(&tri)?;
    let tail = tail_from_sigma(&sigma, &cfg.t_grid())?;
    let profile = RadonProfile::from_triangle(&tri, c.rho_points.unwrap_or(cfg.rho_points))?;
    io::write_tail_csv(&out.join("tail.csv"), &tail)?;
    io::write_triangle_json(&out.join("triangle.json"), &tri)?;
    io::write_radon_csv(&out.join("radon.csv"), &profile)?;
    if c.mc_samples > 0 {
        io::write_samples_csv(&out.join("samples.csv"), &sample_xmin(&sigma, c.mc_samples, c.seed)?)?;
    }
    io::write_json(
        &out.join("summary.json"),
        &ForwardSummary {
            sigma: sigma.rows(),
            admissibility,
            kappa: k,
            case: pf.case.label().into(),
            parametric: pf.values,
            atoms: atoms.atoms.len(),
            grid_points: tail.len(),
            mc_samples: c.mc_samples,
            seed: c.seed,
        },
    )?;
    Ok(())
}

/// Tail CSV or sample CSV, told apart by the header.
fn read_tail_input(path: &Path, cfg: &RecoveryConfig) -> Result<TailGrid, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    if text.trim_start().starts_with("x_min") {
        empirical_tail(&io::parse_samples_csv(&text)?, &cfg.t_grid())
    } else {
        io::parse_tail_csv(&text)
    }
}

fn finish(report: &RecoveryReport, out: &Path, name: &str, ok: bool) -> Result<(), Failure> {
    io::write_json(&out.join(name), report)?;
    if ok {
        Ok(())
    } else {
        Err(Failure::Recovery(report.diagnostics.message.clone()))
    }
}

fn recover(c: &Common) -> Result<(), Failure> {
    let cfg = c.config()?;
    let tail = read_tail_input(c.input()?, &cfg)?;
    let out = c.outdir()?;
    let report = recover_sigma(&tail, &cfg)?;
    finish(&report, out, "recovery_report.json", report.success())
}

fn roundtrip(c: &Common) -> Result<(), Failure> {
    let cfg = c.config()?;
    let sigma = c.sigma()?;
    let out = c.outdir()?;
    let report = if c.mc_samples > 0 {
        recover_sigma(&c.tail_of(&sigma, &cfg)?, &cfg)?.with_truth(&sigma)
    } else {
        roundtrip_report(&sigma, &cfg)?
    };
    let ok = report.distance_to_truth.is_some_and(|d| d <= c.tol);
    if !ok && report.success() {
        let mut r = report;
        r.diagnostics.message = format!("distance to truth above --tol {}", c.tol);
        return finish(&r, out, "report.json", false);
    }
    finish(&report, out, "report.json", ok)
}

#[derive(Serialize)]
struct CounterexampleSummary {
    first: [[f64; 2]; 3],
    second: [[f64; 2]; 3],
    points: usize,
    max_abs_diff: f64,
    congruent: bool,
    first_encloses_origin: bool,
    second_encloses_origin: bool,
}

/// Sorted side lengths; triangles are congruent iff these agree.
fn sides(t: &Triangle2D<f64>) -> [f64; 3] {
    let mut s = t.side_lengths();
    s.sort_by(f64::total_cmp);
    s
}

fn counterexample(c: &Common) -> Result<(), Failure> {
    let n = c.rho_points.unwrap_or(1000);
    if n < 8 {
        return Err(Error::InconsistentInput("--rho-points must be at least 8".into()).into());
    }
    let out = c.outdir()?;
    let (a, b) = counterexample_pair();
    let rho = RadonProfile::<f64>::uniform_grid(1.05 * a.max_vertex_distance().max(b.max_vertex_distance()), n);
    let ra: Vec<f64> = rho.iter().map(|&r| radon_exact(&a, r)).collect();
    let rb: Vec<f64> = rho.iter().map(|&r| radon_exact(&b, r)).collect();
    let diff: Vec<f64> = ra.iter().zip(&rb).map(|(x, y)| x - y).collect();
    io::write_radon_csv(&out.join("radon_first.csv"), &RadonProfile::new(rho.clone(), ra.clone())?)?;
    io::write_radon_csv(&out.join("radon_second.csv"), &RadonProfile::new(rho.clone(), rb.clone())?)?;
    io::write_table_csv(&out.join("diff.csv"), &["rho", "first", "second", "diff"], &[&rho, &ra, &rb, &diff])?;
    let (sa, sb) = (sides(&a), sides(&b));
    io::write_json(
        &out.join("counterexample.json"),
        &CounterexampleSummary {
            first: a.to_arrays(),
            second: b.to_arrays(),
            points: n,
            max_abs_diff: diff.iter().fold(0.0, |m, d| m.max(d.abs())),
            congruent: sa.iter().zip(&sb).all(|(x, y)| (x - y).abs() <= 1e-12),
            first_encloses_origin: a.is_enclosing(),
            second_encloses_origin: b.is_enclosing(),
        },
    )?;
    Ok(())
}
