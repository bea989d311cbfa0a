use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use toric_stability::polytope::parse_polytope;
use toric_stability::rational::{parse_q, parse_q_list, to_f64};
use toric_stability::report::{self, ChopSize, FaceSelector, MomentOptions, Report};
use toric_stability::{Error, Q};

#[derive(Parser)]
#[command(name = "toric-stability", version, about = "Relative K-stability of blowups of toric manifolds at fixed points")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct Output {
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Check the Delzant conditions and list vertices and faces.
    Validate { path: PathBuf },
    /// Futaki invariant, inner product and Ehrhart data.
    Invariants {
        path: PathBuf,
        #[arg(long, value_parser = rational, value_delimiter = ',', required = true)]
        u: Vec<Q>,
        #[arg(long, value_parser = rational, value_delimiter = ',')]
        v: Option<Vec<Q>>,
    },
    /// Expansions of the blowup at a vertex in eps.
    Blowup {
        path: PathBuf,
        /// Vertex index, or its coordinates as a comma-separated list.
        #[arg(long)]
        vertex: String,
        #[arg(long, value_parser = rational, value_delimiter = ',', required = true)]
        u: Vec<Q>,
        #[arg(long, value_parser = rational, value_delimiter = ',')]
        w: Option<Vec<Q>>,
        #[command(flatten)]
        size: Size,
    },
    /// Stability verdicts for one point over an eps grid.
    Check {
        path: PathBuf,
        /// `all` for the open orbit, or the facets through the face.
        #[arg(long, default_value = "all")]
        face: String,
        #[arg(long, value_parser = rational, value_delimiter = ',', required = true)]
        grid: Vec<Q>,
    },
    /// Search the faces for a point that is stable on the whole grid.
    FindPoint {
        path: PathBuf,
        #[arg(long, value_parser = rational, value_delimiter = ',', required = true)]
        grid: Vec<Q>,
        /// Also list the fixed points, which pass vacuously.
        #[arg(long)]
        include_fixed_points: bool,
    },
    /// Ehrhart identities against lattice-point counts.
    Oracle {
        path: PathBuf,
        #[arg(long, default_value_t = 8)]
        kmax: usize,
    },
    /// Approximate and exact zeros of a Hamiltonian family.
    SolveMoment {
        path: PathBuf,
        #[arg(long, value_parser = real, value_delimiter = ',', required = true)]
        grid: Vec<f64>,
        #[arg(long, default_value_t = 2)]
        order: usize,
        #[arg(long, default_value_t = toric_stability::moment::DEFAULT_TOL)]
        tol: f64,
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        ball_c: f64,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Size {
    /// Chop size t = eps^2.
    #[arg(long, value_parser = rational)]
    eps2: Option<Q>,
    #[arg(long, value_parser = rational)]
    eps: Option<Q>,
}

fn rational(s: &str) -> Result<Q, String> {
    parse_q(s).ok_or_else(|| format!("`{s}` is not a rational number"))
}

fn real(s: &str) -> Result<f64, String> {
    s.trim().parse::<f64>().ok().or_else(|| parse_q(s).map(|q| to_f64(&q))).ok_or_else(|| format!("`{s}` is not a number"))
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))
}

fn vertex_index(text: &str, vertex: &str) -> Result<usize, Error> {
    if let Ok(i) = vertex.trim().parse::<usize>() {
        return Ok(i);
    }
    let coords = parse_q_list(vertex).ok_or_else(|| Error::InvalidArgument(format!("bad vertex `{vertex}`")))?;
    parse_polytope(text)?
        .vertex_index(&coords)
        .ok_or_else(|| Error::InvalidArgument(format!("({vertex}) is not a vertex")))
}

fn face_selector(face: &str) -> Result<FaceSelector, Error> {
    if face == "all" {
        return Ok(FaceSelector::All);
    }
    face.split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map(FaceSelector::Facets)
        .map_err(|_| Error::InvalidArgument(format!("bad face `{face}`, expected `all` or facet indices")))
}

fn run(command: &Command) -> Result<Report, Error> {
    let (path, report) = match command {
        Command::Validate { path } => (path, report::cmd_validate(&read(path)?)?),
        Command::Invariants { path, u, v } => (path, report::cmd_invariants(&read(path)?, u, v.as_deref())?),
        Command::Blowup { path, vertex, u, w, size } => {
            let text = read(path)?;
            let chop = match (&size.eps2, &size.eps) {
                (Some(t), _) => ChopSize::T(t.clone()),
                (None, Some(e)) => ChopSize::Eps(e.clone()),
                (None, None) => unreachable!("clap requires one of --eps2, --eps"),
            };
            (path, report::cmd_blowup(&text, vertex_index(&text, vertex)?, u, w.as_deref(), &chop)?)
        }
        Command::Check { path, face, grid } => (path, report::cmd_check(&read(path)?, &face_selector(face)?, grid)?),
        Command::FindPoint { path, grid, include_fixed_points } => {
            (path, report::cmd_find_point(&read(path)?, grid, *include_fixed_points)?)
        }
        Command::Oracle { path, kmax } => (path, report::cmd_oracle(&read(path)?, *kmax)?),
        Command::SolveMoment { path, grid, order, tol, kappa, ball_c } => {
            let opts = MomentOptions { order: *order, tol: *tol, kappa: *kappa, ball_c: *ball_c };
            (path, report::cmd_solve_moment(&read(path)?, grid, opts)?)
        }
    };
    let mut report = report;
    if let serde_json::Value::Object(m) = &mut report.inputs {
        m.insert("path".into(), path.display().to_string().into());
    }
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = run(&cli.command).and_then(|r| match cli.output.format {
        Format::Json => Ok(r.to_json() + "\n"),
        Format::Csv => r.to_csv(),
    });
    let text = match outcome {
        Ok(text) => text,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(if e.is_input_error() { 2 } else { 1 });
        }
    };
    match &cli.output.out {
        Some(p) => {
            if let Err(e) = fs::write(p, text) {
                eprintln!("error: cannot write {}: {e}", p.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::SUCCESS
}
