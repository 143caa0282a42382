use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use vlorenz::closed_forms::egalitarian_from_marginal;
use vlorenz::ingestion::{load_csv, prepare, rii_average, Duplicates};
use vlorenz::lorenz::{
    alpha_curves, alt_gini, gini, gini_weights, identical_scale, ilf, lorenz_grid, FittedLorenz, IlfConfig, IlfGrid,
    LorenzMap,
};
use vlorenz::ordering::{lorenz_compare, weak_lorenz_compare, OrderingVerdict, Relation, Slack, Witness};
use vlorenz::ot_solver::{SolverConfig, TransportFit};
use vlorenz::synth::{sample, Family, SynthSpec};
use vlorenz::{Execution, Point};

use crate::artifact::{self, FitArtifact, FitRecord};
use crate::error::{CliError, Result};
use crate::manifest::RunManifest;
use crate::{
    Command, CompareArgs, CurvesArgs, FamilyArg, FitArgs, GiniArgs, IlfArgs, LorenzArgs, RerunArgs, Scale, SynthArgs,
};

pub fn run(command: &Command) -> Result<()> {
    let (out, files) = match command {
        Command::Fit(a) => (&a.out, fit(a)?),
        Command::Lorenz(a) => (&a.out, lorenz(a)?),
        Command::Ilf(a) => (&a.out, ilf_cmd(a)?),
        Command::Curves(a) => (&a.out, curves(a)?),
        Command::Gini(a) => (&a.out, gini_cmd(a)?),
        Command::Compare(a) => (&a.out, compare(a)?),
        Command::Synth(a) => (&a.out, synth(a)?),
        Command::Rerun(a) => return rerun(a),
    };
    std::fs::create_dir_all(out).map_err(|source| CliError::Io {
        path: out.clone(),
        source,
    })?;
    let mut outputs = Vec::new();
    for (name, contents) in &files {
        let path = out.join(name);
        write(&path, contents)?;
        outputs.push(path);
    }
    let manifest = RunManifest::new(command, outputs);
    let name = format!("{}.manifest.json", manifest.subcommand);
    write(&out.join(name), &to_json(&manifest))
}

type Files = Vec<(&'static str, String)>;

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

fn check_grid(grid: usize) -> Result<()> {
    if grid < 2 {
        return Err(CliError::Usage(format!("--grid must be at least 2, got {grid}")));
    }
    Ok(())
}

fn ilf_config(grid: usize, mc: usize, seed: u64) -> Result<IlfConfig> {
    check_grid(grid)?;
    if mc == 0 {
        return Err(CliError::Usage("--mc must be positive".into()));
    }
    Ok(IlfConfig {
        resolution: grid,
        samples: mc,
        seed,
        execution: Execution::default(),
    })
}

fn fit(a: &FitArgs) -> Result<Files> {
    if !(a.tol > 0.0) {
        return Err(CliError::Usage("--tol must be positive".into()));
    }
    let duplicates = match a.jitter {
        Some(scale) if scale > 0.0 && scale.is_finite() => Duplicates::Jitter { scale, seed: a.seed },
        Some(scale) => return Err(CliError::Usage(format!("--jitter must be positive, got {scale}"))),
        None => Duplicates::Merge,
    };
    let groups = load_csv(&a.input)?;
    if groups.len() > 1 && !a.rii {
        return Err(CliError::Usage(format!(
            "{} holds {} implicates; pass --rii to fit them all",
            a.input.display(),
            groups.len()
        )));
    }
    let config = SolverConfig {
        tolerance: a.tol,
        max_iterations: a.max_iter,
        ..SolverConfig::default()
    };
    let mut fits = Vec::with_capacity(groups.len());
    for g in &groups {
        let alloc = prepare(g, duplicates)?;
        let f = alloc.fit(&config)?;
        fits.push(FitRecord::new(&f, alloc.implicate(), alloc.means()));
    }
    let artifact = FitArtifact {
        format: artifact::FORMAT.into(),
        version: artifact::VERSION,
        fits,
    };
    Ok(vec![("fit.json", to_json(&artifact))])
}

/// Pointwise mean of the Lorenz maps of several implicates.
struct Averaged<'a>(Vec<FittedLorenz<'a>>);

impl LorenzMap for Averaged<'_> {
    fn eval(&self, r: Point) -> Point {
        let mut s = [0.0, 0.0];
        for m in &self.0 {
            let l = m.eval(r);
            s[0] += l[0];
            s[1] += l[1];
        }
        let k = self.0.len() as f64;
        [s[0] / k, s[1] / k]
    }
}

fn averaged(fits: &[TransportFit]) -> Averaged<'_> {
    Averaged(fits.iter().map(FittedLorenz::new).collect())
}

fn rii_ilf(fits: &[TransportFit], config: &IlfConfig) -> Result<IlfGrid> {
    let grids = fits
        .iter()
        .map(|f| ilf(&FittedLorenz::new(f), config))
        .collect::<vlorenz::Result<Vec<_>>>()?;
    Ok(rii_average(&grids)?)
}

fn lorenz(a: &LorenzArgs) -> Result<Files> {
    check_grid(a.grid)?;
    let fits = artifact::read(&a.fit)?;
    let values = lorenz_grid(&averaged(&fits), a.grid, Execution::default());
    let step = 1.0 / (a.grid - 1) as f64;
    let mut csv = String::from("r1,r2,L1,L2\n");
    for (k, l) in values.iter().enumerate() {
        let (i, j) = (k % a.grid, k / a.grid);
        let r = [node(i, step), node(j, step)];
        writeln!(csv, "{},{},{},{}", r[0], r[1], l[0], l[1]).unwrap();
    }
    Ok(vec![("lorenz.csv", csv)])
}

fn node(k: usize, step: f64) -> f64 {
    (k as f64 * step).min(1.0)
}

fn ilf_cmd(a: &IlfArgs) -> Result<Files> {
    let config = ilf_config(a.grid, a.mc, a.seed)?;
    let fits = artifact::read(&a.fit)?;
    let grid = rii_ilf(&fits, &config)?;
    let m = grid.resolution();
    let mut csv = String::from("z1,z2,l\n");
    for j in 0..m {
        for i in 0..m {
            writeln!(csv, "{},{},{}", grid.node(i), grid.node(j), grid.value(i, j)).unwrap();
        }
    }
    Ok(vec![("ilf.csv", csv)])
}

fn curves(a: &CurvesArgs) -> Result<Files> {
    let config = ilf_config(a.grid, a.mc, a.seed)?;
    if let Some(bad) = a.alpha.iter().find(|x| !(**x > 0.0 && **x < 1.0)) {
        return Err(CliError::Usage(format!("--alpha values must lie in (0, 1), got {bad}")));
    }
    let fits = artifact::read(&a.fit)?;
    let grid = rii_ilf(&fits, &config)?;
    let map = |z: f64| match a.scale {
        Scale::Share => z,
        Scale::Identical => identical_scale(z),
    };
    let mut csv = String::from("alpha,segment_id,z1,z2\n");
    for curve in alpha_curves(&grid, &a.alpha)? {
        for (id, seg) in curve.segments.iter().enumerate() {
            for z in seg {
                writeln!(csv, "{},{},{},{}", curve.alpha, id, map(z[0]), map(z[1])).unwrap();
            }
        }
    }
    Ok(vec![("curves.csv", csv)])
}

#[derive(Serialize)]
struct GiniReport {
    gini: f64,
    alt_gini: f64,
    gini_weights_checksum: f64,
}

fn gini_cmd(a: &GiniArgs) -> Result<Files> {
    let fits = artifact::read(&a.fit)?;
    let g: Vec<f64> = fits.iter().map(gini).collect();
    let alt: Vec<f64> = fits.iter().map(alt_gini).collect();
    let sums: Vec<f64> = fits.iter().map(|f| gini_weights(f).iter().sum()).collect();
    let report = GiniReport {
        gini: rii_average(&g)?,
        alt_gini: rii_average(&alt)?,
        gini_weights_checksum: rii_average(&sums)?,
    };
    Ok(vec![("gini.json", to_json(&report))])
}

#[derive(Serialize)]
struct CompareReport {
    lorenz: Relation,
    weak: Relation,
    slack: SlackReport,
    witness: WitnessReport,
    max_violation: ViolationReport,
}

#[derive(Serialize)]
struct SlackReport {
    lorenz: f64,
    weak_sigmas: f64,
}

#[derive(Serialize)]
struct WitnessReport {
    lorenz: Option<Witness>,
    weak: Option<Witness>,
}

#[derive(Serialize)]
struct ViolationReport {
    lorenz: f64,
    weak: f64,
}

fn compare(a: &CompareArgs) -> Result<Files> {
    let config = ilf_config(a.grid, a.mc, a.seed)?;
    if !(a.slack >= 0.0) || !(a.sigmas >= 0.0) {
        return Err(CliError::Usage("--slack and --sigmas must be nonnegative".into()));
    }
    let fa = artifact::read(&a.a)?;
    let fb = artifact::read(&a.b)?;
    let strong: OrderingVerdict = lorenz_compare(&averaged(&fa), &averaged(&fb), a.grid, a.slack, Execution::default())?;
    // Both ILFs use the same seed, so their pseudo-samples are paired.
    let weak = weak_lorenz_compare(
        &rii_ilf(&fa, &config)?,
        &rii_ilf(&fb, &config)?,
        Slack::MonteCarlo {
            sigmas: a.sigmas,
            floor: 1e-12,
        },
    )?;
    let report = CompareReport {
        lorenz: strong.relation,
        weak: weak.relation,
        slack: SlackReport {
            lorenz: a.slack,
            weak_sigmas: a.sigmas,
        },
        witness: WitnessReport {
            lorenz: strong.witness,
            weak: weak.witness,
        },
        max_violation: ViolationReport {
            lorenz: strong.max_violation,
            weak: weak.max_violation,
        },
    };
    Ok(vec![("compare.json", to_json(&report))])
}

fn synth(a: &SynthArgs) -> Result<Files> {
    let family = match a.family {
        FamilyArg::LognormalPlackett => Family::LognormalPlackett {
            sigma1: a.sigma1,
            sigma2: a.sigma2,
            kappa: a.kappa,
        },
        FamilyArg::TwoPointX => Family::TwoPointX,
        FamilyArg::TwoPointXTilde => Family::TwoPointXTilde,
        FamilyArg::Identical => Family::Identical,
        FamilyArg::ComonotoneUniform => Family::ComonotoneUniform,
        FamilyArg::Egalitarian => {
            // X₂ = (1 + p − X₁)/p stays nonnegative when X₁ ≤ 1 + p.
            if !(a.spread >= 0.0 && a.spread <= 1.0 && a.spread <= a.p) {
                return Err(CliError::Usage(format!(
                    "--spread must lie in [0, min(1, p)], got {} with p = {}",
                    a.spread, a.p
                )));
            }
            let s = a.spread;
            Family::Egalitarian(egalitarian_from_marginal(|q| 1.0 - s + 2.0 * s * q, a.p)?)
        }
    };
    let drawn = sample(&SynthSpec {
        family,
        n: a.n,
        seed: a.seed,
    })?;
    let mut csv = String::from("x1,x2,weight\n");
    for (p, w) in drawn.points.iter().zip(&drawn.weights) {
        writeln!(csv, "{},{},{}", p[0], p[1], w).unwrap();
    }
    Ok(vec![("synth.csv", csv)])
}

fn rerun(a: &RerunArgs) -> Result<()> {
    let manifest = RunManifest::read(&a.manifest)?;
    let mut command = manifest.command;
    if let Some(out) = &a.out {
        set_out(&mut command, out.clone())?;
    }
    if matches!(command, Command::Rerun(_)) {
        return Err(CliError::Data("a manifest cannot record another rerun".into()));
    }
    run(&command)
}

fn set_out(command: &mut Command, out: PathBuf) -> Result<()> {
    let slot = match command {
        Command::Fit(a) => &mut a.out,
        Command::Lorenz(a) => &mut a.out,
        Command::Ilf(a) => &mut a.out,
        Command::Curves(a) => &mut a.out,
        Command::Gini(a) => &mut a.out,
        Command::Compare(a) => &mut a.out,
        Command::Synth(a) => &mut a.out,
        Command::Rerun(_) => return Err(CliError::Data("a manifest cannot record another rerun".into())),
    };
    *slot = out;
    Ok(())
}
