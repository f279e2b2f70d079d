use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use identifiability::estimators::{full_report, information_gain, EstimateResult, EstimatorConfig};
use identifiability::math::{stream_id, RandomStream};
use identifiability::mcmc::{adaptive_metropolis, aggregate_prediction, log_posterior};
use identifiability::oracle::{lg_information_gain_exact, lg_pairwise_exact};
use identifiability::sobol::first_order_indices;
use serde_json::json;

use crate::config::Run;
use crate::CliError;

const DATA_TAG: u64 = 0x6461_7461;

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_csv(
    dir: &Path,
    name: &str,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<(), CliError> {
    let path = dir.join(name);
    let io = |e: std::io::Error| CliError::Runtime(format!("{}: {e}", path.display()));
    let mut out = BufWriter::new(File::create(&path).map_err(io)?);
    writeln!(out, "{}", header.join(",")).map_err(io)?;
    for row in rows {
        writeln!(out, "{}", row.join(",")).map_err(io)?;
    }
    out.flush().map_err(io)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> Result<(), CliError> {
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value).map_err(runtime)?;
    std::fs::write(&path, text + "\n")
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn identify(run: &Run, dir: &Path) -> Result<(), CliError> {
    let config = &run.config.estimator;
    let names = run.prior.names();
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    for (i, name) in names.iter().enumerate() {
        let start = Instant::now();
        let est = information_gain(&run.model, &run.prior, i, config)
            .map_err(|e| CliError::Runtime(format!("information gain of '{name}': {e}")))?;
        let seconds = start.elapsed().as_secs_f64();
        println!(
            "{name}: gain {:.6} ± {:.6} nats ({seconds:.2} s)",
            est.value, est.std_error
        );
        rows.push(vec![
            name.clone(),
            num(est.value),
            num(est.std_error),
            est.n_outer_used.to_string(),
            config.n_inner.to_string(),
        ]);
        entries.push(json!({
            "parameter": name,
            "gain": est.value,
            "std_error": est.std_error,
            "n_outer": est.n_outer_used,
            "n_inner": config.n_inner,
            "clamped": est.clamped,
            "seconds": seconds,
        }));
    }
    write_csv(
        dir,
        "gains.csv",
        &["parameter", "gain", "std_error", "n_outer", "n_inner"],
        &rows,
    )?;
    write_json(
        dir,
        "gains.json",
        &json!({ "model": run.config.model.name, "estimator": config, "gains": entries }),
    )
}

pub fn depend(run: &Run, dir: &Path) -> Result<(), CliError> {
    let config = &run.config.estimator;
    let report = full_report(&run.model, &run.prior, config).map_err(runtime)?;
    let names = run.prior.names();
    let m = names.len();
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            let outcome = report.dependence[i][j]
                .as_ref()
                .expect("off-diagonal entry");
            let est = outcome.estimate.as_ref().ok_or_else(|| {
                CliError::Runtime(format!(
                    "dependence of ('{}', '{}'): {}",
                    names[i],
                    names[j],
                    outcome.error.as_deref().unwrap_or("failed")
                ))
            })?;
            println!(
                "({}, {}): {:.6} ± {:.6} nats",
                names[i], names[j], est.value, est.std_error
            );
            rows.push(vec![
                i.to_string(),
                j.to_string(),
                names[i].clone(),
                names[j].clone(),
                num(est.value),
                num(est.std_error),
            ]);
            entries.push(json!({
                "i": i,
                "j": j,
                "parameter_i": names[i],
                "parameter_j": names[j],
                "value": est.value,
                "std_error": est.std_error,
                "n_outer": est.n_outer_used,
                "clamped": est.clamped,
                "seconds": outcome.seconds,
            }));
        }
    }
    write_csv(
        dir,
        "dependence.csv",
        &["i", "j", "parameter_i", "parameter_j", "value", "std_error"],
        &rows,
    )?;
    write_json(
        dir,
        "dependence.json",
        &json!({ "model": run.config.model.name, "estimator": config, "dependence": entries }),
    )
}

pub fn sobol(run: &Run, dir: &Path) -> Result<(), CliError> {
    let est = &run.config.estimator;
    let n = run.config.sobol.n_samples;
    let result = first_order_indices(
        run.model.forward().as_ref(),
        &run.prior,
        n,
        est.seed,
        est.workers,
    )
    .map_err(runtime)?;
    if result.constant_outputs > 0 {
        println!("{} constant output(s) excluded", result.constant_outputs);
    }
    let rows: Vec<Vec<String>> = result
        .parameter_names
        .iter()
        .zip(result.indices.iter().zip(&result.std_errors))
        .map(|(name, (s, se))| {
            println!("{name}: S = {s:.6} ± {se:.6}");
            vec![name.clone(), num(*s), num(*se), n.to_string()]
        })
        .collect();
    write_csv(
        dir,
        "sobol.csv",
        &["parameter", "index", "std_error", "n_samples"],
        &rows,
    )
}

struct SweepPoint {
    n_outer: usize,
    n_inner: usize,
    /// `[parameter][replicate]`
    estimates: Vec<Vec<f64>>,
}

fn sweep_rows(points: &[SweepPoint], names: &[String], exact: &[f64]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for p in points {
        for (i, name) in names.iter().enumerate() {
            let values = &p.estimates[i];
            let r = values.len() as f64;
            let mean = values.iter().sum::<f64>() / r;
            let mae = values.iter().map(|v| (v - exact[i]).abs()).sum::<f64>() / r;
            // A single replicate has no spread; report 0 and flag it.
            let (sd, defined) = if values.len() > 1 {
                let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
                ((ss / (r - 1.0)).sqrt(), true)
            } else {
                (0.0, false)
            };
            rows.push(vec![
                name.clone(),
                p.n_outer.to_string(),
                p.n_inner.to_string(),
                values.len().to_string(),
                num(exact[i]),
                num(mean),
                num(mae),
                num(sd),
                defined.to_string(),
            ]);
        }
    }
    rows
}

const SWEEP_HEADER: [&str; 9] = [
    "parameter",
    "n_outer",
    "n_inner",
    "replicates",
    "oracle",
    "mean_estimate",
    "mean_abs_error",
    "std_dev",
    "std_dev_defined",
];

pub fn convergence(run: &Run, dir: &Path) -> Result<(), CliError> {
    let spec = run.oracle()?;
    let m = run.prior.len();
    let exact = (0..m)
        .map(|i| lg_information_gain_exact(&spec, i))
        .collect::<Result<Vec<_>, _>>()
        .map_err(runtime)?;
    let base = &run.config.estimator;
    let sweep = &run.config.convergence;
    let point = |n_outer: usize, n_inner: usize| -> Result<SweepPoint, CliError> {
        let mut estimates = vec![Vec::with_capacity(sweep.replicates); m];
        for r in 0..sweep.replicates {
            let config = EstimatorConfig {
                n_outer,
                n_inner,
                n_inner_2d: None,
                seed: stream_id(base.seed, &[r as u64]),
                ..base.clone()
            };
            for (i, column) in estimates.iter_mut().enumerate() {
                column.push(
                    information_gain(&run.model, &run.prior, i, &config)
                        .map_err(runtime)?
                        .value,
                );
            }
        }
        println!(
            "n_outer {n_outer}, n_inner {n_inner}: {} replicates done",
            sweep.replicates
        );
        Ok(SweepPoint {
            n_outer,
            n_inner,
            estimates,
        })
    };
    let variance = sweep
        .n_outer_values
        .iter()
        .map(|&n| point(n, sweep.fixed_n_inner))
        .collect::<Result<Vec<_>, _>>()?;
    let bias = sweep
        .n_inner_values
        .iter()
        .map(|&n| point(sweep.fixed_n_outer, n))
        .collect::<Result<Vec<_>, _>>()?;
    let names = run.prior.names();
    write_csv(
        dir,
        "variance_sweep.csv",
        &SWEEP_HEADER,
        &sweep_rows(&variance, names, &exact),
    )?;
    write_csv(
        dir,
        "bias_sweep.csv",
        &SWEEP_HEADER,
        &sweep_rows(&bias, names, &exact),
    )
}

pub fn posterior(run: &Run, dir: &Path) -> Result<(), CliError> {
    let section = run.config.posterior.as_ref().ok_or_else(|| {
        CliError::Config("the posterior command needs a 'posterior' section in the config".into())
    })?;
    let y = match (&section.observations, &section.true_theta) {
        (Some(y), _) => y.clone(),
        (None, Some(theta)) => {
            let mut stream = RandomStream::new(section.chain.seed, stream_id(DATA_TAG, &[]));
            run.model
                .sample_observation(theta, &mut stream)
                .map_err(runtime)?
        }
        (None, None) => unreachable!("validated when the config was built"),
    };
    let init = section
        .initial
        .clone()
        .unwrap_or_else(|| run.prior.means().to_vec());
    let target = log_posterior(&run.model, &run.prior, &y);
    let chain = adaptive_metropolis(target, &init, run.prior.names().to_vec(), &section.chain)
        .map_err(runtime)?;
    println!(
        "{} steps, acceptance rate {:.4}, posterior mean {:?}",
        chain.samples.len(),
        chain.acceptance_rate(),
        chain.mean()
    );
    let path = dir.join("chain.csv");
    let file =
        File::create(&path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    chain
        .write_csv(file)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    println!("wrote {}", path.display());

    let band = aggregate_prediction(
        run.model.forward().as_ref(),
        &chain,
        section.prediction_samples,
        run.config.estimator.workers,
    )
    .map_err(runtime)?;
    let rows: Vec<Vec<String>> = (0..band.mean.len())
        .map(|o| {
            vec![
                o.to_string(),
                num(y[o]),
                num(band.mean[o]),
                num(band.lower[o]),
                num(band.upper[o]),
            ]
        })
        .collect();
    write_csv(
        dir,
        "prediction.csv",
        &["output", "observed", "mean", "lower_2_5", "upper_97_5"],
        &rows,
    )
}

/// Passes when `|estimate − exact| ≤ max(3·SE, 2% of exact)`. The 1e-9
/// floor admits roundoff when the exact value is 0 (orthogonal columns).
fn within(est: &EstimateResult, exact: f64) -> bool {
    (est.value - exact).abs() <= (3.0 * est.std_error).max(0.02 * exact.abs()).max(1e-9)
}

pub fn oracle_check(run: &Run, dir: &Path) -> Result<(), CliError> {
    let spec = run.oracle()?;
    let report = full_report(&run.model, &run.prior, &run.config.estimator).map_err(runtime)?;
    let names = run.prior.names();
    let m = names.len();
    let mut rows = Vec::new();
    let mut passed = 0;
    let mut push =
        |quantity: &str, i: usize, j: Option<usize>, est: &EstimateResult, exact: f64| {
            let ok = within(est, exact);
            passed += usize::from(ok);
            let label = match j {
                Some(j) => format!("({}, {})", names[i], names[j]),
                None => names[i].clone(),
            };
            println!(
                "{quantity} {label}: estimate {:.6} ± {:.6}, exact {exact:.6} [{}]",
                est.value,
                est.std_error,
                if ok { "ok" } else { "outside tolerance" }
            );
            rows.push(vec![
                quantity.to_string(),
                i.to_string(),
                j.map(|j| j.to_string()).unwrap_or_default(),
                num(est.value),
                num(est.std_error),
                num(exact),
                num((est.value - exact).abs()),
                ok.to_string(),
            ]);
        };
    let missing = |what: String| CliError::Runtime(format!("{what} failed"));
    for (i, name) in names.iter().enumerate() {
        let est = report
            .gain(i)
            .ok_or_else(|| missing(format!("gain of '{name}'")))?;
        push(
            "gain",
            i,
            None,
            est,
            lg_information_gain_exact(&spec, i).map_err(runtime)?,
        );
    }
    for i in 0..m {
        for j in i + 1..m {
            let est = report.pair(i, j).ok_or_else(|| {
                missing(format!("dependence of ('{}', '{}')", names[i], names[j]))
            })?;
            push(
                "dependence",
                i,
                Some(j),
                est,
                lg_pairwise_exact(&spec, i, j).map_err(runtime)?,
            );
        }
    }
    let total = rows.len();
    println!("{passed}/{total} within max(3·SE, 2%, 1e-9) of the closed form");
    write_csv(
        dir,
        "oracle_check.csv",
        &[
            "quantity",
            "i",
            "j",
            "estimate",
            "std_error",
            "exact",
            "abs_error",
            "within_tolerance",
        ],
        &rows,
    )
}
