use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ncbiharm::assembly::Form;
use ncbiharm::basis::{BasisSet, BoundaryCondition};
use ncbiharm::harness::{self, Case, Method};
use ncbiharm::operators::{check_complex, Complex};
use ncbiharm::{Error, Pattern, Rect, Result, Triangulation};

#[derive(Parser)]
#[command(name = "ncbiharm", version, about = "Nonconforming cubic elements for the biharmonic equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mesh generation.
    Mesh {
        #[command(subcommand)]
        command: MeshCommand,
    },
    /// Structural checks on a mesh.
    Check {
        #[command(subcommand)]
        command: CheckCommand,
    },
    /// Basis inspection.
    Basis {
        #[command(subcommand)]
        command: BasisCommand,
    },
    /// Solve a builtin manufactured case on a mesh.
    Solve(SolveArgs),
    /// Convergence study on structured meshes of the unit square.
    Study(StudyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PatternArg {
    Diagonal,
    ThreeDirectional,
    /// L-shaped domain `[-1,1]^2` minus the upper right quadrant.
    Lshape,
}

#[derive(Clone, Copy, ValueEnum)]
enum BcArg {
    Dirichlet,
    Navier,
}

impl From<BcArg> for BoundaryCondition {
    fn from(b: BcArg) -> Self {
        match b {
            BcArg::Dirichlet => BoundaryCondition::Dirichlet,
            BcArg::Navier => BoundaryCondition::Navier,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormArg {
    Hessian,
    Laplacian,
}

impl From<FormArg> for Form {
    fn from(f: FormArg) -> Self {
        match f {
            FormArg::Hessian => Form::Hessian,
            FormArg::Laplacian => Form::Laplacian,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ComplexArg {
    A,
    Dirichlet,
    Navier,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Basis,
    Decomposed,
}

#[derive(Subcommand)]
enum MeshCommand {
    /// Generate a structured mesh and write it in the text mesh format.
    Gen {
        #[arg(long, value_enum)]
        pattern: PatternArg,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        xmin: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        xmax: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        ymin: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        ymax: f64,
        /// Random displacement of interior vertices (L-shape only), in units of h.
        #[arg(long, default_value_t = 0.2)]
        jitter: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum CheckCommand {
    /// Certify exactness of a discrete complex.
    Complex {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long, value_enum)]
        which: ComplexArg,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Hessian/Laplacian and grad/div+rot energy identities.
    Identity {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long, default_value_t = 20)]
        pairs: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum BasisCommand {
    /// Write every basis function (as A30 coefficients) and a manifest.
    Dump {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long, value_enum)]
        bc: BcArg,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    mesh: PathBuf,
    /// Defaults to the boundary condition of the case.
    #[arg(long, value_enum)]
    bc: Option<BcArg>,
    #[arg(long, value_enum, default_value = "hessian")]
    form: FormArg,
    #[arg(long)]
    case: String,
    #[arg(long, value_enum, default_value = "basis")]
    method: MethodArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct StudyArgs {
    #[arg(long)]
    case: String,
    #[arg(long, value_enum, default_value = "three-directional")]
    pattern: PatternArg,
    #[arg(long, value_delimiter = ',', default_value = "4,8,16,32")]
    levels: Vec<usize>,
    #[arg(long, value_enum)]
    bc: Option<BcArg>,
    #[arg(long, value_enum, default_value = "hessian")]
    form: FormArg,
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn load_mesh(path: &Path) -> Result<Arc<Triangulation>> {
    let file = fs::File::open(path)?;
    Ok(Arc::new(Triangulation::load(BufReader::new(file))?))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Mesh { command: MeshCommand::Gen { pattern, n, xmin, xmax, ymin, ymax, jitter, seed, out } } => {
            if n == 0 {
                return Err(Error::InvalidArgument("n must be positive".into()));
            }
            if !(xmin < xmax && ymin < ymax) {
                return Err(Error::InvalidArgument("empty rectangle".into()));
            }
            let tri = match pattern {
                PatternArg::Lshape => {
                    if !n.is_multiple_of(2) || !(0.0..0.3).contains(&jitter) {
                        return Err(Error::InvalidArgument("L-shape needs an even n and jitter in [0, 0.3)".into()));
                    }
                    Triangulation::lshape(n, jitter, seed)
                }
                PatternArg::Diagonal => Triangulation::structured(n, Pattern::Diagonal, Rect { xmin, xmax, ymin, ymax }),
                PatternArg::ThreeDirectional => {
                    Triangulation::structured(n, Pattern::ThreeDirectional, Rect { xmin, xmax, ymin, ymax })
                }
            };
            fs::write(&out, tri.to_mesh_string())?;
            println!("{} vertices, {} cells, {} edges -> {}", tri.n_vertices(), tri.n_cells(), tri.n_edges(), out.display());
            Ok(true)
        }
        Command::Check { command: CheckCommand::Complex { mesh, which, csv } } => {
            let tri = load_mesh(&mesh)?;
            let which = match which {
                ComplexArg::A => Complex::A,
                ComplexArg::Dirichlet => Complex::Dirichlet,
                ComplexArg::Navier => Complex::Navier,
            };
            let report = check_complex(&tri, which)?;
            print!("{report}");
            if let Some(path) = csv {
                fs::write(path, report.to_csv())?;
            }
            Ok(report.passed())
        }
        Command::Check { command: CheckCommand::Identity { mesh, pairs, seed } } => {
            let tri = load_mesh(&mesh)?;
            let report = harness::identity_report(&tri, pairs, seed)?;
            print!("{report}");
            Ok(report.passed(1e-10))
        }
        Command::Basis { command: BasisCommand::Dump { mesh, bc, out } } => {
            let tri = load_mesh(&mesh)?;
            let basis = BasisSet::build(&tri, bc.into())?;
            fs::create_dir_all(&out)?;
            let width = basis.len().max(1).to_string().len();
            for j in 0..basis.len() {
                fs::write(out.join(format!("phi_{j:0width$}.txt")), basis.function_a3(j).to_text())?;
            }
            fs::write(out.join("manifest.txt"), basis.manifest())?;
            for (tag, count) in basis.count_by_tag() {
                println!("{tag:<16} {count}");
            }
            println!("{:<16} {}", "total", basis.len());
            Ok(true)
        }
        Command::Solve(a) => {
            let tri = load_mesh(&a.mesh)?;
            let case = Case::builtin(&a.case)?;
            let bc = a.bc.map_or(case.bc, Into::into);
            let method = match a.method {
                MethodArg::Basis => Method::Basis,
                MethodArg::Decomposed => Method::Decomposed,
            };
            let (uh, dofs) = harness::solve_case(&tri, &case, bc, a.form.into(), method)?;
            fs::write(&a.out, uh.to_text())?;
            let e = harness::compute_errors(&uh, &case)?;
            println!("unknowns {dofs}");
            println!("errH2 {:.6e}\nerrH1 {:.6e}\nerrL2 {:.6e}", e.h2, e.h1, e.l2);
            Ok(true)
        }
        Command::Study(a) => {
            let case = Case::builtin(&a.case)?;
            let bc = a.bc.map_or(case.bc, Into::into);
            let pattern = match a.pattern {
                PatternArg::Diagonal => Pattern::Diagonal,
                PatternArg::ThreeDirectional => Pattern::ThreeDirectional,
                PatternArg::Lshape => {
                    return Err(Error::Unsupported("manufactured studies run on the unit square only".into()))
                }
            };
            let (table, err) = match harness::convergence_study(&case, pattern, &a.levels, bc, a.form.into()) {
                Ok(t) => (t, None),
                Err((e, t)) => (t, Some(e)),
            };
            print!("{table}");
            if let Some(path) = a.csv {
                fs::write(path, table.to_csv())?;
            }
            match err {
                Some(e) => Err(e),
                None => Ok(true),
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
