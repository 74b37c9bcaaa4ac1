//! Command-line front end: load an instance file, run verification suites
//! and print reports.
//!
//! Exit codes: 0 all checks pass, 1 at least one violation, 2 input error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};

use opalg::bundle::{kernel_gram, BundleData, BundleElement};
use opalg::dilation::{compatible_pair, dilation_residual, stinespring};
use opalg::geometry::porta_recht;
use opalg::linalg::RANK_TOL;
use opalg::rng;
use opalg_cli::instance::{load_instance, Instance, LoadError};
use opalg_cli::suites::{resolve_suites, run_suite};

#[derive(Parser)]
#[command(
    name = "opalg",
    about = "finite-dimensional operator-algebra verification lab"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Run verification suites against an instance file.
    Verify {
        file: PathBuf,
        #[arg(long, default_value = "all")]
        suite: String,
        /// Override every check threshold with a single tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// Override the instance seed (also see OPALG_SEED).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Print dilation dimensions and residuals for the instance map.
    Dilate {
        file: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the polar factors of a seeded invertible element.
    Polar {
        file: PathBuf,
        /// Index into the seeded sequence of invertible elements.
        #[arg(long, default_value_t = 0)]
        target: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the kernel Gram over sampled coset points.
    Kernel {
        file: PathBuf,
        #[arg(long, default_value_t = 6)]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn effective_seed(instance_seed: u64, flag: Option<u64>) -> u64 {
    if let Some(s) = flag {
        return s;
    }
    if let Ok(env) = std::env::var("OPALG_SEED") {
        if let Ok(s) = env.parse::<u64>() {
            return s;
        }
    }
    instance_seed
}

fn load(path: &Path, seed_flag: Option<u64>) -> Result<Instance, LoadError> {
    let mut inst = load_instance(path)?;
    inst.seed = effective_seed(inst.seed, seed_flag);
    Ok(inst)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match cli.command {
        Command::Verify {
            file,
            suite,
            tol,
            seed,
            format,
        } => {
            let inst = load(&file, seed)?;
            let suites = resolve_suites(&suite)?;
            let tol = tol.or(inst.tolerance);
            let report = run_suite(&inst, &suites, tol);
            match format {
                Format::Json => println!("{}", report.to_json()),
                Format::Text => print!("{}", report.to_text()),
            }
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Dilate { file, seed } => {
            let inst = load(&file, seed)?;
            let alg = opalg::algebra::StarAlgebra::full(inst.dim);
            let phi = inst.cp_map_or_default();
            let dil = stinespring(&alg, &phi, RANK_TOL)?;
            println!("input dimension      : {}", phi.in_dim());
            println!("reference dimension  : {}", phi.out_dim());
            println!("dilation dimension   : {}", dil.space_dim);
            println!(
                "reconstruction       : {:.3e}",
                dilation_residual(&phi, &dil, 20, inst.seed)
            );
            println!(
                "multiplicativity     : {:.3e}",
                dil.multiplicativity_residual()
            );
            println!("star                 : {:.3e}", dil.star_residual());
            println!("isometry             : {:.3e}", dil.isometry_residual());
            if dil.is_ill_conditioned() {
                println!("warning: kept Gram eigenvalues are ill-conditioned");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Polar { file, target, seed } => {
            let inst = load(&file, seed)?;
            let a = opalg::algebra::StarAlgebra::full(inst.dim);
            let b = inst.subalgebra_or_default();
            let e = opalg::algebra::expectation_trace(&a, &b)?;
            let ctx = opalg::geometry::PolarContext::new(a, b, e)?;
            let mut r = rng::check_rng(inst.seed, "cli-polar-targets");
            let mut mat = rng::random_invertible(&mut r, inst.dim, 100.0);
            for _ in 0..target {
                mat = rng::random_invertible(&mut r, inst.dim, 100.0);
            }
            let t = porta_recht(&mat, &ctx)?;
            let rec = (&t.reconstruct() - &mat).fro_norm() / mat.fro_norm();
            println!("target {target} (seed {}):", inst.seed);
            println!("u = {:?}", t.u);
            println!("X = {:?}", t.x);
            println!("b = {:?}", t.b);
            println!(
                "iterations = {} (fallback: {})",
                t.iterations, t.used_fallback
            );
            println!("reconstruction residual = {rec:.3e}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Kernel {
            file,
            samples,
            seed,
        } => {
            let inst = load(&file, seed)?;
            let a = opalg::algebra::StarAlgebra::full(inst.dim);
            let p = opalg::algebra::Idempotent::new(inst.projection_or_default(), 1e-8)?;
            let e = opalg::algebra::expectation_ep(&p, &a)?;
            let b = e.target.clone();
            // Largest projected coordinate column: a unit vector in range(p).
            let mut x = p.matrix.column(0);
            for k in 1..inst.dim {
                let cand = p.matrix.column(k);
                if cand.fro_norm() > x.fro_norm() {
                    x = cand;
                }
            }
            let x = x.scale_re(1.0 / x.fro_norm());
            let phi = opalg::cpmap::CpMap::vector_state(&x);
            let pair = compatible_pair(&a, &b, &e, &phi)?;
            let data = BundleData::from_pair(&pair)?;
            let mut r = rng::check_rng(inst.seed, "cli-kernel-sample");
            let mut points = Vec::new();
            let mut vectors = Vec::new();
            for _ in 0..samples {
                let t = data.coset(rng::random_invertible(&mut r, inst.dim, 10.0))?;
                let f = rng::random_vector(&mut r, data.dim_b());
                vectors.push(BundleElement::new(t.involution()?, f, Arc::clone(&data))?);
                points.push(t);
            }
            let sample = kernel_gram(&points, &vectors, &data)?;
            println!("kernel gram over {samples} seeded coset points:");
            println!("{:?}", sample.gram);
            println!("min eigenvalue       : {:.6e}", sample.min_eigenvalue);
            println!("hermitian residual   : {:.3e}", sample.hermitian_residual);
            println!("ambient-gram residual: {:.3e}", sample.ha_gram_residual);
            Ok(ExitCode::SUCCESS)
        }
    }
}
