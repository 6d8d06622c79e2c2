//! Implementations of the CLI commands over the corrgen library.

use std::path::Path;
use std::time::Instant;

use corrgen::baselines::{
    eigen_sample, gram_sample, naive_sample, pac_sample, sap_sample, wishart_corr_sample,
    AngleLaw, ColumnLaw, EigenvalueLaw, WishartConfig,
};
use corrgen::block::{
    block_corr, sample_block_corr, sample_mixture, sample_mixture_law, solve_block_diagonal,
    BlockGammaLaw, BlockSpec, MixtureGammaLaw, MixtureSpec, BLOCK_SOLVE_MAX_ITER, BLOCK_SOLVE_TOL,
};
use corrgen::gamma_map::{
    corr_to_gamma, density_corr, gamma_to_corr, jacobian, GammaDensity,
};
use corrgen::linalg::{vecl, SymMatrix};
use corrgen::rng::{self, Stream};
use corrgen::samplers::{sample_equicorrelation, sample_gamma, EquiLaw, GammaLaw};
use corrgen::verify::{audit_theorems, Suite};
use corrgen::{CorrError, CorrelationMatrix, GammaVector, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::formats::{self, Sink};
use crate::{BenchArgs, DensityArgs, GenerateArgs, JacobianArgs, TransformArgs, VerifyArgs};

const VALID_METHODS: &str =
    "gamma-gaussian, gamma-law, equicorrelation, block, mixture, naive, gram, sap, eigen, pac, wishart";

/// A fully resolved generator: every draw consumes one dedicated substream.
enum Generator {
    Gamma { law: GammaLaw, n: usize },
    Equi { law: EquiLaw },
    BlockFixed { corr: CorrelationMatrix },
    BlockLaw { law: BlockGammaLaw },
    MixtureFixed { spec: MixtureSpec },
    MixtureLaw { law: MixtureGammaLaw },
    Naive { n: usize, max_tries: u64 },
    Gram { n: usize },
    Sap { n: usize, law: AngleLaw },
    Eigen { n: usize, law: EigenvalueLaw },
    Pac { n: usize, alpha: f64 },
    Wishart { cfg: WishartConfig },
}

impl Generator {
    /// Deterministic generators may omit --seed.
    fn is_deterministic(&self) -> bool {
        match self {
            Generator::BlockFixed { .. } => true,
            Generator::MixtureFixed { spec } => spec
                .components()
                .iter()
                .all(|c| c.permutation.is_some()),
            _ => false,
        }
    }

    fn draw(&self, stream: &mut Stream) -> Result<(CorrelationMatrix, Option<Vec<f64>>)> {
        match self {
            Generator::Gamma { law, n } => {
                let gamma = sample_gamma(law, *n, stream)?;
                let corr = gamma_to_corr(&gamma)?;
                Ok((corr, Some(gamma.into_values())))
            }
            Generator::Equi { law } => Ok((sample_equicorrelation(law, stream)?, None)),
            Generator::BlockFixed { corr } => Ok((corr.clone(), None)),
            Generator::BlockLaw { law } => Ok((sample_block_corr(law, stream)?, None)),
            Generator::MixtureFixed { spec } => Ok((sample_mixture(spec, stream)?, None)),
            Generator::MixtureLaw { law } => Ok((sample_mixture_law(law, stream)?, None)),
            Generator::Naive { n, max_tries } => {
                Ok((naive_sample(*n, *max_tries, stream)?.corr, None))
            }
            Generator::Gram { n } => Ok((gram_sample(*n, ColumnLaw::UniformSphere, stream)?, None)),
            Generator::Sap { n, law } => Ok((sap_sample(*n, *law, stream)?, None)),
            Generator::Eigen { n, law } => Ok((eigen_sample(*n, law, stream)?, None)),
            Generator::Pac { n, alpha } => Ok((pac_sample(*n, *alpha, stream)?, None)),
            Generator::Wishart { cfg } => Ok((wishart_corr_sample(cfg, stream)?, None)),
        }
    }
}

fn need_dim(dim: Option<usize>) -> Result<usize> {
    dim.ok_or_else(|| CorrError::DomainError("--dim is required for this method".into()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let content = formats::read_to_string(path)?;
    serde_json::from_str(&content).map_err(|e| {
        CorrError::DomainError(format!("{}: invalid JSON: {e}", path.display()))
    })
}

fn build_generator(args: &GenerateArgs, dim: Option<usize>) -> Result<Generator> {
    let method = args
        .method
        .as_deref()
        .ok_or_else(|| CorrError::DomainError("--method is required".into()))?;
    match method {
        "gamma-gaussian" => {
            let n = need_dim(dim)?;
            let law = GammaLaw::GaussianIid {
                mu: args.mu.unwrap_or(0.0),
                omega2: args.omega2.unwrap_or(1.0),
            };
            law.validate(n)?;
            Ok(Generator::Gamma { law, n })
        }
        "gamma-law" => {
            let n = need_dim(dim)?;
            let path = args.law_file.as_deref().ok_or_else(|| {
                CorrError::DomainError("method gamma-law needs --law-file".into())
            })?;
            let law: GammaLaw = read_json(path)?;
            law.validate(n)?;
            Ok(Generator::Gamma { law, n })
        }
        "equicorrelation" => {
            let n = need_dim(dim)?;
            let law = EquiLaw::new(n, args.alpha.unwrap_or(1.0), args.beta.unwrap_or(1.0))?;
            Ok(Generator::Equi { law })
        }
        "block" => {
            if let Some(path) = args.spec_file.as_deref() {
                let spec: BlockSpec = read_json(path)?;
                let sol = solve_block_diagonal(&spec, BLOCK_SOLVE_TOL, BLOCK_SOLVE_MAX_ITER)?;
                Ok(Generator::BlockFixed { corr: block_corr(&spec, &sol)? })
            } else {
                let sizes = args.sizes.as_deref().ok_or_else(|| {
                    CorrError::DomainError("method block needs --spec-file or --sizes".into())
                })?;
                let law = BlockGammaLaw {
                    sizes: formats::parse_usize_list(sizes, "--sizes")?,
                    mu: args.mu.unwrap_or(0.0),
                    omega: args.omega.unwrap_or(1.0),
                };
                Ok(Generator::BlockLaw { law })
            }
        }
        "mixture" => {
            if let Some(path) = args.mixture_file.as_deref() {
                let spec: MixtureSpec = read_json(path)?;
                Ok(Generator::MixtureFixed { spec })
            } else {
                let sizes = args.sizes.as_deref().ok_or_else(|| {
                    CorrError::DomainError("method mixture needs --mixture-file or --sizes".into())
                })?;
                let m = args.m.ok_or_else(|| {
                    CorrError::DomainError("method mixture needs --m components".into())
                })?;
                let law = MixtureGammaLaw {
                    m,
                    base: BlockGammaLaw {
                        sizes: formats::parse_usize_list(sizes, "--sizes")?,
                        mu: args.mu.unwrap_or(0.0),
                        omega: args.omega.unwrap_or(1.0),
                    },
                };
                Ok(Generator::MixtureLaw { law })
            }
        }
        "naive" => Ok(Generator::Naive {
            n: need_dim(dim)?,
            max_tries: args.max_tries.unwrap_or(1_000_000),
        }),
        "gram" => Ok(Generator::Gram { n: need_dim(dim)? }),
        "sap" => {
            let n = need_dim(dim)?;
            let law = match args.angle_law.as_deref() {
                Some("uniform") => AngleLaw::Uniform,
                Some("beta") => AngleLaw::BetaFamily {
                    alpha: args.alpha.unwrap_or(n as f64 / 2.0),
                },
                Some(other) => {
                    return Err(CorrError::DomainError(format!(
                        "unknown angle law '{other}'; expected uniform or beta"
                    )))
                }
                // An explicit alpha implies the beta family.
                None if args.alpha.is_some() => AngleLaw::BetaFamily {
                    alpha: args.alpha.expect("checked"),
                },
                None => AngleLaw::Uniform,
            };
            Ok(Generator::Sap { n, law })
        }
        "eigen" => {
            let n = need_dim(dim)?;
            let law = match args.eigenvalues.as_deref() {
                Some(list) => EigenvalueLaw::Fixed {
                    values: formats::parse_list(list, "--eigenvalues")?,
                },
                None => EigenvalueLaw::DirichletScaled,
            };
            Ok(Generator::Eigen { n, law })
        }
        "pac" => {
            let n = need_dim(dim)?;
            Ok(Generator::Pac {
                n,
                alpha: args.alpha.unwrap_or(n as f64 / 2.0),
            })
        }
        "wishart" => {
            if let Some(path) = args.wishart_file.as_deref() {
                Ok(Generator::Wishart { cfg: read_json(path)? })
            } else {
                let n = need_dim(dim)?;
                let t = args.t.ok_or_else(|| {
                    CorrError::DomainError("method wishart needs --wishart-file or --t".into())
                })?;
                Ok(Generator::Wishart {
                    cfg: WishartConfig::new(SymMatrix::identity(n)?, t)?,
                })
            }
        }
        other => Err(CorrError::DomainError(format!(
            "unknown method '{other}'; valid methods: {VALID_METHODS}"
        ))),
    }
}

#[derive(Serialize)]
struct DrawRecord {
    seed_index: u64,
    n: usize,
    vecl: Vec<f64>,
    lambda_min: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<Vec<f64>>,
}

pub fn generate(args: &GenerateArgs, dim: Option<usize>, count: usize, seed: Option<u64>, format: &str, output: Option<&Path>) -> Result<i32> {
    if count == 0 {
        return Err(CorrError::DomainError("--count must be at least 1".into()));
    }
    let generator = build_generator(args, dim)?;
    let seed = match seed {
        Some(s) => s,
        None if generator.is_deterministic() => 0,
        None => {
            return Err(CorrError::DomainError(
                "--seed is required for stochastic generation".into(),
            ))
        }
    };
    let draws: Vec<(CorrelationMatrix, Option<Vec<f64>>)> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut stream = rng::draw_stream(seed, i as u64);
            generator.draw(&mut stream)
        })
        .collect::<Result<_>>()?;

    let sink = Sink::from_option(output);
    match format {
        "csv" => {
            let mats: Vec<SymMatrix> = draws.iter().map(|(c, _)| c.mat().clone()).collect();
            sink.write_all(&formats::matrices_to_csv(&mats))?;
        }
        "jsonl" => {
            let records: Vec<DrawRecord> = draws
                .into_iter()
                .enumerate()
                .map(|(i, (c, gamma))| DrawRecord {
                    seed_index: i as u64,
                    n: c.dim(),
                    vecl: c.to_vecl(),
                    lambda_min: c.lambda_min(),
                    gamma,
                })
                .collect();
            sink.write_all(&formats::to_jsonl(&records)?)?;
        }
        other => {
            return Err(CorrError::DomainError(format!(
                "unknown format '{other}'; expected csv or jsonl"
            )))
        }
    }
    Ok(0)
}

pub fn transform(args: &TransformArgs) -> Result<i32> {
    if args.to_gamma == args.to_corr {
        return Err(CorrError::DomainError(
            "pass exactly one of --to-gamma or --to-corr".into(),
        ));
    }
    let content = formats::read_to_string(&args.input)?;
    let sink = Sink::from_option(args.output.as_deref());
    if args.to_gamma {
        let gammas: Vec<Vec<f64>> = formats::parse_matrices_csv(&content)?
            .into_iter()
            .map(|m| {
                let corr = CorrelationMatrix::from_sym(m)?;
                Ok(corr_to_gamma(&corr)?.into_values())
            })
            .collect::<Result<_>>()?;
        sink.write_all(&formats::vectors_to_csv(&gammas))?;
    } else {
        let mats: Vec<SymMatrix> = formats::parse_vectors_csv(&content)?
            .into_iter()
            .map(|v| {
                let gamma = GammaVector::from_values(v)?;
                Ok(gamma_to_corr(&gamma)?.mat().clone())
            })
            .collect::<Result<_>>()?;
        sink.write_all(&formats::matrices_to_csv(&mats))?;
    }
    Ok(0)
}

#[derive(Serialize)]
struct JacobianRecord {
    n: usize,
    gamma: Vec<f64>,
    psi: f64,
    j: Vec<Vec<f64>>,
}

fn jacobian_record(values: Vec<f64>) -> Result<JacobianRecord> {
    let gamma = GammaVector::from_values(values)?;
    let corr = gamma_to_corr(&gamma)?;
    let bundle = jacobian(&corr)?;
    let d = gamma.len();
    Ok(JacobianRecord {
        n: gamma.n(),
        gamma: gamma.into_values(),
        psi: bundle.psi,
        j: (0..d)
            .map(|r| (0..d).map(|c| bundle.j.get(r, c)).collect())
            .collect(),
    })
}

pub fn cmd_jacobian(args: &JacobianArgs) -> Result<i32> {
    let inputs: Vec<Vec<f64>> = match (&args.gamma, &args.input) {
        (Some(list), None) => vec![formats::parse_list(list, "--gamma")?],
        (None, Some(path)) => formats::parse_vectors_csv(&formats::read_to_string(path)?)?,
        _ => {
            return Err(CorrError::DomainError(
                "pass exactly one of --gamma or --input".into(),
            ))
        }
    };
    let records: Vec<JacobianRecord> = inputs
        .into_iter()
        .map(jacobian_record)
        .collect::<Result<_>>()?;
    Sink::from_option(args.output.as_deref()).write_all(&formats::to_jsonl(&records)?)?;
    Ok(0)
}

#[derive(Serialize)]
struct DensityRecord {
    index: usize,
    n: usize,
    f_gamma: f64,
    psi: f64,
    density: f64,
}

pub fn density(args: &DensityArgs) -> Result<i32> {
    let law: GammaDensity = read_json(&args.law_file)?;
    let content = formats::read_to_string(&args.input)?;
    let mats = formats::parse_matrices_csv(&content)?;
    let mut records = Vec::with_capacity(mats.len());
    for (index, m) in mats.into_iter().enumerate() {
        let corr = CorrelationMatrix::from_sym(m)?;
        let gamma = corr_to_gamma(&corr)?;
        let f_gamma = law.eval(gamma.as_slice())?;
        let psi = jacobian(&corr)?.psi;
        let density = density_corr(&corr, |g| law.eval(g).unwrap_or(f64::NAN))?;
        records.push(DensityRecord {
            index,
            n: corr.dim(),
            f_gamma,
            psi,
            density,
        });
    }
    Sink::from_option(args.output.as_deref()).write_all(&formats::to_jsonl(&records)?)?;
    Ok(0)
}

pub fn verify(args: &VerifyArgs, dim: Option<usize>, draws: Option<usize>, seed: Option<u64>, output: Option<&Path>) -> Result<i32> {
    let suite_name = args
        .suite
        .as_deref()
        .ok_or_else(|| CorrError::DomainError("--suite is required".into()))?;
    let suite = Suite::from_name(suite_name)?;
    let seed = seed.ok_or_else(|| {
        CorrError::DomainError("--seed is required for verification runs".into())
    })?;
    let n = dim.unwrap_or(3);
    // Bound audits are cheap per draw and target rare events, so they
    // default to a larger sample.
    let draws = draws.unwrap_or(match suite {
        Suite::Bounds => 1_000_000,
        _ => 100_000,
    });
    let reports = audit_theorems(suite, n, draws, seed)?;
    Sink::from_option(output).write_all(&formats::to_jsonl(&reports)?)?;
    let failed = reports.iter().filter(|r| !r.pass).count();
    eprintln!(
        "suite {}: {}/{} checks passed",
        suite.name(),
        reports.len() - failed,
        reports.len()
    );
    Ok(if failed == 0 { 0 } else { 1 })
}

#[derive(Serialize)]
struct BenchRecord {
    n: usize,
    k: usize,
    block_ms: f64,
    iterations: usize,
    residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    dense_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    speedup: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_abs_diff: Option<f64>,
}

pub fn bench(args: &BenchArgs, seed: Option<u64>, dense_max: usize, output: Option<&Path>) -> Result<i32> {
    let spec: BlockSpec = match args.spec_file.as_deref() {
        Some(path) => read_json(path)?,
        None => {
            let n = args.dim.unwrap_or(200);
            let k = args.blocks.unwrap_or(10);
            if k == 0 || k > n {
                return Err(CorrError::DomainError(format!(
                    "need 1 <= blocks <= dim, got blocks={k}, dim={n}"
                )));
            }
            let seed = seed.ok_or_else(|| {
                CorrError::DomainError("--seed is required to draw a benchmark spec".into())
            })?;
            let mut sizes = vec![n / k; k];
            sizes[0] += n % k;
            let law = BlockGammaLaw { sizes, mu: 0.1, omega: 2.0 };
            law.draw_spec(&mut rng::master(seed))?
        }
    };
    let n = spec.dim();
    let k = spec.block_count();

    let start = Instant::now();
    let sol = solve_block_diagonal(&spec, BLOCK_SOLVE_TOL, BLOCK_SOLVE_MAX_ITER)?;
    let block = block_corr(&spec, &sol)?;
    let block_ms = start.elapsed().as_secs_f64() * 1e3;

    let mut record = BenchRecord {
        n,
        k,
        block_ms,
        iterations: sol.iterations,
        residual: sol.residual,
        dense_ms: None,
        speedup: None,
        max_abs_diff: None,
    };
    println!("block path: n={n}, K={k}");
    println!(
        "  solve + reconstruct: {:.3} ms ({} iterations, residual {:.2e})",
        block_ms, sol.iterations, sol.residual
    );
    if n <= dense_max {
        // The dense route solves the same fixed point in full-matrix
        // coordinates: the block pattern off-diagonals become one long
        // gamma vector.
        let gamma = GammaVector::new(n, vecl(&spec.dense_g(&vec![0.0; k])?))?;
        let start = Instant::now();
        let dense = gamma_to_corr(&gamma)?;
        let dense_ms = start.elapsed().as_secs_f64() * 1e3;
        let diff = block.mat().max_abs_diff(dense.mat());
        let speedup = dense_ms / block_ms;
        record.dense_ms = Some(dense_ms);
        record.speedup = Some(speedup);
        record.max_abs_diff = Some(diff);
        println!("dense path: {dense_ms:.3} ms");
        println!("speedup: {speedup:.1}x");
        println!("max |block - dense|: {diff:.2e}");
    } else {
        println!("dense path skipped (n > {dense_max}); raise --dense-max to compare");
    }
    if let Some(path) = output {
        Sink::from_option(Some(path)).write_all(&formats::to_jsonl(&[record])?)?;
    }
    Ok(0)
}
