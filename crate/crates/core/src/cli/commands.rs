use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};

use crate::bounds::{
    analytic_bound_checks, distance_distortion_bound, search_thresholds_with_split,
    volume_distortion_bound, Mode,
};
use crate::distortion::{distortion_report_images, embed, EmbedConfig};
use crate::linalg::{apply_map, PointSet};
use crate::randgen::{gaussian_cloud, RandomSeed};
use crate::stats::{verify_gordon, verify_stability};

use super::io::{format_rows, read_points, to_json, write_output};
use super::{
    BenchArgs, BoundsArgs, Cli, CliError, Command, EmbedArgs, GenArgs, GenMode, GordonArgs,
    ReportArgs, StabilityArgs, VerifyTarget, EXIT_CHECK_FAILED, EXIT_OK,
};

const STABILITY_POINTS_A: u64 = 0xa;
const STABILITY_POINTS_B: u64 = 0xb;
const STABILITY_DRAWS: u64 = 0x5;
const BENCH_POINTS: u64 = 0xbe;

#[derive(Serialize)]
struct Envelope {
    command: &'static str,
    params: Value,
    seed: u64,
    results: Value,
    warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    timestamp: Option<u64>,
}

impl Envelope {
    fn new(
        cli: &Cli,
        command: &'static str,
        params: Value,
        results: Value,
        warnings: Vec<String>,
    ) -> Self {
        let timestamp = (!cli.deterministic).then(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        });
        Self {
            command,
            params,
            seed: cli.seed,
            results,
            warnings,
            timestamp,
        }
    }
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

pub(super) fn dispatch(cli: &Cli) -> Result<i32, CliError> {
    match &cli.command {
        Command::Gen(args) => gen(cli, args),
        Command::Embed(args) => embed_cmd(cli, args),
        Command::Report(args) => report(cli, args),
        Command::Bounds(args) => bounds(cli, args),
        Command::Verify { target } => verify(cli, target),
        Command::Bench(args) => bench(cli, args),
    }
}

fn gen(cli: &Cli, args: &GenArgs) -> Result<i32, CliError> {
    let GenArgs {
        mode,
        n,
        dim,
        scale,
        ..
    } = *args;
    if n < 2 {
        return Err(CliError::Usage(format!("--n must be at least 2, got {n}")));
    }
    if dim < 1 {
        return Err(CliError::Usage("--dim must be at least 1".into()));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(CliError::Usage(format!(
            "--scale must be positive and finite, got {scale}"
        )));
    }
    let seed = RandomSeed::new(cli.seed);
    let points = match mode {
        GenMode::Gaussian => gaussian_cloud(n, dim, seed)?.scaled(scale)?,
        GenMode::Sphere => {
            let cloud = gaussian_cloud(n, dim, seed)?;
            let rows = cloud
                .iter()
                .map(|p| {
                    let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
                    p.iter().map(|x| scale * x / norm).collect()
                })
                .collect();
            PointSet::new(rows)?
        }
        GenMode::Simplex => {
            if n > dim + 1 {
                return Err(CliError::Usage(format!(
                    "a simplex with {n} vertices needs --dim >= {}",
                    n - 1
                )));
            }
            let rows = (0..n)
                .map(|i| {
                    let mut p = vec![0.0; dim];
                    if i > 0 {
                        p[i - 1] = scale;
                    }
                    p
                })
                .collect();
            PointSet::new(rows)?
        }
    };
    let mode_name = match mode {
        GenMode::Gaussian => "gaussian",
        GenMode::Simplex => "simplex",
        GenMode::Sphere => "sphere",
    };
    let header = format!(
        "volembed gen mode={mode_name} n={n} dim={dim} scale={scale} seed={}",
        cli.seed
    );
    write_output(
        args.output.as_deref(),
        format_rows(Some(&header), points.iter()).as_bytes(),
    )?;
    Ok(EXIT_OK)
}

fn embed_cmd(cli: &Cli, args: &EmbedArgs) -> Result<i32, CliError> {
    if args.k == 0 {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    let points = read_points(&args.input)?;
    let config = EmbedConfig {
        target_dim: args.d,
        k: args.k,
        max_trials: args.trials,
        target_distortion: args.target,
        strategy: args.subsets.strategy(),
        seed: RandomSeed::new(cli.seed),
    };
    let embedding = embed(&points, &config)?;
    warn_all(&embedding.warnings);

    let image = apply_map(&embedding.map, &points)?;
    let header = format!("volembed embed d={} k={} seed={}", args.d, args.k, cli.seed);
    write_output(
        Some(&args.output),
        format_rows(Some(&header), image.iter()).as_bytes(),
    )?;
    if let Some(path) = &args.map_out {
        let m = embedding.map.effective_matrix();
        let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
        let header = format!("volembed map {}x{} seed={}", m.nrows(), m.ncols(), cli.seed);
        write_output(
            Some(path),
            format_rows(Some(&header), rows.iter().map(Vec::as_slice)).as_bytes(),
        )?;
    }

    let n = points.len();
    let params = json!({
        "input": args.input,
        "n": n,
        "source_dim": points.dim(),
        "d": args.d,
        "k": args.k,
        "trials": args.trials,
        "target_distortion": args.target,
        "strategy": config.strategy,
    });
    let results = json!({
        "report": embedding.report,
        "scale": embedding.map.scale(),
        "trials_used": embedding.trials_used,
        "theoretical_bound": u32::try_from(args.d).ok().and_then(|d| volume_distortion_bound(n as f64, d, 1.0).ok()),
    });
    let envelope = Envelope::new(cli, "embed", params, results, embedding.warnings);
    write_output(args.report.as_deref(), &to_json(&envelope))?;
    Ok(EXIT_OK)
}

fn report(cli: &Cli, args: &ReportArgs) -> Result<i32, CliError> {
    if args.k == 0 {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    let points = read_points(&args.input)?;
    let image = read_points(&args.embedded)?;
    let strategy = args.subsets.strategy();
    let report =
        distortion_report_images(&points, &image, args.k, strategy, RandomSeed::new(cli.seed))?;
    let params = json!({
        "input": args.input,
        "embedded": args.embedded,
        "n": points.len(),
        "source_dim": points.dim(),
        "target_dim": image.dim(),
        "k": args.k,
        "strategy": strategy,
    });
    let envelope = Envelope::new(
        cli,
        "report",
        params,
        json!({ "report": report }),
        Vec::new(),
    );
    write_output(args.output.as_deref(), &to_json(&envelope))?;
    Ok(EXIT_OK)
}

fn search_json(args: &BoundsArgs, mode: Mode) -> Value {
    let k = if mode == Mode::Distance { 1 } else { args.k };
    match search_thresholds_with_split(args.n, args.d, k, mode, args.split) {
        Ok(found) => json!({
            "feasible": true,
            "k": k,
            "a": found.params.a,
            "b": found.params.b,
            "ratio": found.params.ratio(),
            "failure_bound": found.certificate.failure_bound,
            "contraction_mass": found.certificate.contraction_mass,
            "expansion_mass": found.certificate.expansion_mass,
            "implied_constant": found.implied_constant,
        }),
        Err(e) => json!({ "feasible": false, "k": k, "reason": e.to_string() }),
    }
}

fn bounds(cli: &Cli, args: &BoundsArgs) -> Result<i32, CliError> {
    if args.n < 2 || args.d < 1 || args.k < 1 {
        return Err(CliError::Usage(format!(
            "need n >= 2, d >= 1, k >= 1, got n = {}, d = {}, k = {}",
            args.n, args.d, args.k
        )));
    }
    if !(args.split > 0.0 && args.split < 1.0) {
        return Err(CliError::Usage(format!(
            "--split must lie in (0, 1), got {}",
            args.split
        )));
    }
    let distance = search_json(args, Mode::Distance);
    let volume = search_json(args, Mode::Volume);
    let n = args.n as f64;
    let mut warnings = Vec::new();
    if args.k > args.d / 2 {
        warnings.push(format!(
            "k = {} exceeds floor(d/2) = {}; no volume certificate is issued",
            args.k,
            args.d / 2
        ));
    }
    warn_all(&warnings);
    let results = json!({
        "feasible": distance["feasible"] == true && volume["feasible"] == true,
        "distance": distance,
        "volume": volume,
        "distance_distortion_bound_c1": distance_distortion_bound(n, args.d, 1.0),
        "volume_distortion_bound_c1": volume_distortion_bound(n, args.d, 1.0).ok(),
    });
    let params = json!({ "n": args.n, "d": args.d, "k": args.k, "split": args.split });
    write_output(
        None,
        &to_json(&Envelope::new(cli, "bounds", params, results, warnings)),
    )?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct Check {
    name: String,
    statistic: f64,
    threshold: f64,
    pass: bool,
}

fn verify(cli: &Cli, target: &VerifyTarget) -> Result<i32, CliError> {
    let seed = RandomSeed::new(cli.seed);
    let (name, params, checks, details) = match target {
        VerifyTarget::Gordon(GordonArgs {
            d,
            s,
            reps,
            epsilon,
        }) => {
            let r = verify_gordon(*d, *s, *reps, *epsilon, seed)?;
            let check = Check {
                name: "gordon_sandwich".into(),
                statistic: r.max_violation,
                threshold: *epsilon,
                pass: r.pass,
            };
            (
                "gordon",
                json!({ "d": d, "s": s, "reps": reps, "epsilon": epsilon }),
                vec![check],
                json!(r),
            )
        }
        VerifyTarget::Stability(StabilityArgs {
            d,
            subset_size,
            reps,
            threshold,
        }) => {
            let (points_a, points_b) = stability_point_sets(seed, *subset_size)?;
            let r = verify_stability(
                &points_a,
                &points_b,
                *d,
                *subset_size,
                *reps,
                seed.derive(STABILITY_DRAWS),
            )?;
            let checks = vec![
                Check {
                    name: "ks_between_point_sets".into(),
                    statistic: r.ks_ab,
                    threshold: *threshold,
                    pass: r.ks_ab < *threshold,
                },
                Check {
                    name: "ks_against_chi_square_product".into(),
                    statistic: r.ks_a_product,
                    threshold: *threshold,
                    pass: r.ks_a_product < *threshold,
                },
            ];
            let params = json!({
                "d": d,
                "subset_size": subset_size,
                "reps": reps,
                "threshold": threshold,
                "source_dims": [points_a.dim(), points_b.dim()],
            });
            ("stability", params, checks, json!(r))
        }
        VerifyTarget::GammaBounds => {
            let grids = analytic_bound_checks();
            let checks = grids
                .iter()
                .map(|g| Check {
                    name: g.name.clone(),
                    statistic: g.violations as f64,
                    threshold: 0.0,
                    pass: g.pass(),
                })
                .collect();
            ("gamma-bounds", json!({}), checks, json!(grids))
        }
    };
    let pass = checks.iter().all(|c| c.pass);
    let results = json!({ "target": name, "pass": pass, "checks": checks, "details": details });
    write_output(
        None,
        &to_json(&Envelope::new(cli, "verify", params, results, Vec::new())),
    )?;
    Ok(if pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

/// A Gaussian cloud in `R^10` and a stretched, shifted cloud in `R^40`.
fn stability_point_sets(
    seed: RandomSeed,
    subset_size: usize,
) -> Result<(PointSet, PointSet), CliError> {
    let n = subset_size.max(2) + 2;
    let points_a = gaussian_cloud(n, 10, seed.derive(STABILITY_POINTS_A))?;
    let cloud = gaussian_cloud(n, 40, seed.derive(STABILITY_POINTS_B))?;
    let rows = cloud
        .iter()
        .map(|p| {
            p.iter()
                .enumerate()
                .map(|(j, x)| 3.0 + x * (1.0 + j as f64 / 8.0))
                .collect()
        })
        .collect();
    Ok((points_a, PointSet::new(rows)?))
}

fn bench(cli: &Cli, args: &BenchArgs) -> Result<i32, CliError> {
    if args.dim < 1 || args.trials < 1 {
        return Err(CliError::Usage(
            "--dim and --trials must be at least 1".into(),
        ));
    }
    if let Some(&n) = args.n_values.iter().find(|&&n| n < 2) {
        return Err(CliError::Usage(format!(
            "every n must be at least 2, got {n}"
        )));
    }
    if let Some(&d) = args.d_values.iter().find(|&&d| d < 1) {
        return Err(CliError::Usage(format!(
            "every d must be at least 1, got {d}"
        )));
    }
    let base = RandomSeed::new(cli.seed);
    let mut out = String::from("n,d,k,measured_distortion,theoretical_bound,trials,seed\n");
    for &n in &args.n_values {
        let points = gaussian_cloud(n, args.dim, base.derive(BENCH_POINTS).derive(n as u64))?;
        for &d in &args.d_values {
            let k = args.k.unwrap_or(d / 2).clamp(1, n - 1);
            let config = EmbedConfig {
                target_dim: d,
                k,
                max_trials: args.trials,
                target_distortion: None,
                strategy: args.subsets.strategy(),
                seed: base.derive(n as u64).derive(d as u64),
            };
            let embedding = embed(&points, &config)?;
            warn_all(&embedding.warnings);
            let bound = u32::try_from(d)
                .ok()
                .and_then(|d| volume_distortion_bound(n as f64, d, 1.0).ok())
                .map(|b| b.to_string())
                .unwrap_or_default();
            out.push_str(&format!(
                "{n},{d},{k},{},{bound},{},{}\n",
                embedding.report.distortion, args.trials, cli.seed
            ));
        }
    }
    write_output(Some(&args.output), out.as_bytes())?;
    Ok(EXIT_OK)
}
