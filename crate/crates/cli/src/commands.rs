use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use pnr_core::layer::{run_suite, SuiteOptions};
use pnr_core::metrics::robustness_bench;
use pnr_core::solver::{self, RegressionProblem};
use pnr_core::synth::{gen_regression_instance, gen_toy_dataset, write_dataset, SynthSpec};
use pnr_core::tensor::io::{load_matrix, save_matrix};
use pnr_core::{Error, Norm, PnrConfig};

use crate::{BenchArgs, Failure, GradcheckArgs, SolveArgs, SynthArgs, SynthKind};

/// Prefixes I/O errors with the offending path.
pub fn at_path<T>(path: &Path, r: Result<T, Error>) -> Result<T, Error> {
    r.map_err(|e| match e {
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        other => other,
    })
}

pub fn gradcheck(a: GradcheckArgs) -> Result<(), Failure> {
    let opts = SuiteOptions {
        seed: a.seed,
        trials: a.trials,
        norm: a.p.map(|p| p.norm()),
        corrupt: a.corrupt_backward,
    };
    let lines = run_suite(&opts)?;
    let mut report = String::new();
    for l in &lines {
        let _ = writeln!(report, "{l}");
    }
    let failed = lines.iter().filter(|l| !l.pass).count();
    let _ = writeln!(report, "{} checks, {failed} failed", lines.len());
    print!("{report}");
    if let Some(path) = a.out {
        fs::write(path, &report)?;
    }
    if failed > 0 {
        return Err(Failure::Gradcheck);
    }
    Ok(())
}

fn solve_config(a: &SolveArgs) -> Result<PnrConfig, Error> {
    let cfg = PnrConfig {
        norm: a.p.norm(),
        irls_iters: a.iters,
        irls_eps: a.eps,
        ridge: a.ridge,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn solve(a: SolveArgs) -> Result<(), Failure> {
    let cfg = solve_config(&a)?;
    let h = at_path(&a.h, load_matrix(&a.h))?;
    let p = at_path(&a.p_file, load_matrix(&a.p_file))?;
    let sol = solver::solve(&RegressionProblem::new(h, p)?, &cfg)?;
    save_matrix(&a.out, &sol.f)?;
    println!("objective = {:?}", sol.objective);
    println!("iterations_used = {}", sol.iterations_used);
    Ok(())
}

pub fn bench_robust(a: BenchArgs) -> Result<(), Failure> {
    let spec = SynthSpec {
        n: a.n,
        d: a.d,
        appearance_dim: a.big_d,
        noise_sigma: a.noise,
        outlier_frac: a.frac,
        outlier_scale: a.scale,
        seed: a.seed,
    };
    let lad = PnrConfig {
        norm: Norm::L1,
        irls_iters: a.iters,
        ..PnrConfig::default()
    };
    lad.validate()?;
    let r = robustness_bench(&spec, a.trials, &lad)?;
    let mut csv = String::from("trial,seed,lse_error,lad_error,lad_wins\n");
    println!("{:>5} {:>8} {:>12} {:>12} winner", "trial", "seed", "lse_error", "lad_error");
    for (k, t) in r.trials.iter().enumerate() {
        let winner = if t.lad_wins() { "LAD" } else { "LSE" };
        println!("{k:>5} {:>8} {:>12.6e} {:>12.6e} {winner}", t.seed, t.lse_error, t.lad_error);
        let _ = writeln!(csv, "{k},{},{:?},{:?},{}", t.seed, t.lse_error, t.lad_error, t.lad_wins());
    }
    let (lse, lad_mean) = r.mean_errors();
    println!();
    println!("{:<10} {:>14} {:>6}", "estimator", "mean_error", "wins");
    println!("{:<10} {:>14.6e} {:>6}", "LSE", lse, r.trials.len() - r.lad_wins());
    println!("{:<10} {:>14.6e} {:>6}", "LAD", lad_mean, r.lad_wins());
    println!("lad_win_rate = {:?}", r.win_rate());
    if let Some(path) = a.out {
        fs::write(path, csv)?;
    }
    Ok(())
}

pub fn synth(a: SynthArgs) -> Result<(), Failure> {
    match a.kind {
        SynthKind::Toy => {
            let ds = gen_toy_dataset(a.identities, a.samples_per_id, a.seed)?;
            let files = write_dataset(&a.out, &ds)?;
            println!(
                "wrote {} files: {} train and {} test identities",
                files.len(),
                ds.train.len(),
                ds.test.len()
            );
        }
        SynthKind::Regression => {
            let inst = gen_regression_instance(&SynthSpec {
                n: a.n,
                d: a.d,
                appearance_dim: a.big_d,
                noise_sigma: a.noise,
                outlier_frac: a.frac,
                outlier_scale: a.scale,
                seed: a.seed,
            })?;
            fs::create_dir_all(&a.out)?;
            save_matrix(a.out.join("H.pnrm"), inst.problem.h())?;
            save_matrix(a.out.join("P.pnrm"), inst.problem.p())?;
            save_matrix(a.out.join("F_star.pnrm"), &inst.f_star)?;
            let rows: Vec<String> = inst.outlier_rows.iter().map(|r| r.to_string()).collect();
            fs::write(a.out.join("outliers.txt"), rows.join("\n") + "\n")?;
            println!("wrote H, P, F_star and {} outlier rows", inst.outlier_rows.len());
        }
    }
    Ok(())
}
