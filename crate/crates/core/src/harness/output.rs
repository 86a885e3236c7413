use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind};
use super::run::{
    estimate_ids, run_correlated_trials, run_multiparticle_trials, run_oracle, run_wegner_trials,
    ExperimentResult, IdsResult, OracleResult, RunOptions, Verdict,
};
use crate::concentration::write_moduli_csv;
use crate::error::{Error, Result};

pub const RESULTS_HEADER: [&str; 15] = [
    "experiment",
    "model_id",
    "L_or_dims",
    "N",
    "E",
    "epsilon",
    "trials",
    "hits",
    "p_hat",
    "ci_low",
    "ci_high",
    "bound_2eps",
    "bound_paper",
    "verdict",
    "seed",
];

/// One line of `results.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub model_id: String,
    #[serde(rename = "L_or_dims")]
    pub l_or_dims: String,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "E")]
    pub e: f64,
    pub epsilon: f64,
    pub trials: usize,
    pub hits: usize,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub bound_2eps: f64,
    pub bound_paper: f64,
    pub verdict: Verdict,
    pub seed: u64,
}

pub fn result_rows(r: &ExperimentResult) -> Vec<ResultRow> {
    r.estimates
        .iter()
        .map(|e| ResultRow {
            experiment: r.experiment.clone(),
            model_id: r.model_id.clone(),
            l_or_dims: r.dims.clone(),
            n: r.particles,
            e: r.energy,
            epsilon: e.epsilon,
            trials: e.trials,
            hits: e.hits,
            p_hat: e.p_hat,
            ci_low: e.ci_low,
            ci_high: e.ci_high,
            bound_2eps: e.bound_2eps,
            bound_paper: e.bound_paper,
            verdict: e.verdict,
            seed: r.seed,
        })
        .collect()
}

pub fn write_results_csv(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if rows.is_empty() {
        w.write_record(RESULTS_HEADER)?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != RESULTS_HEADER {
        return Err(Error::Config(format!(
            "{}: unexpected header {}",
            path.display(),
            header.join(",")
        )));
    }
    Ok(r.deserialize().collect::<std::result::Result<Vec<ResultRow>, _>>()?)
}

/// `L,sites,trials,E,k_hat`, one line per curve and energy.
pub fn write_ids_csv(path: &Path, ids: &IdsResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["L", "sites", "trials", "E", "k_hat"])?;
    for c in &ids.curves {
        for (e, k) in c.energies.iter().zip(&c.values) {
            w.write_record([
                c.l.to_string(),
                c.sites.to_string(),
                c.trials.to_string(),
                e.to_string(),
                k.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Summary<'a> {
    generated_unix: u64,
    kind: &'static str,
    any_violated: bool,
    config: &'a ExperimentConfig,
    rows: Vec<ResultRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    experiment: Option<&'a ExperimentResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ids: Option<&'a IdsResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<&'a OracleResult>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    use std::io::Write;
    writeln!(w)?;
    Ok(())
}

/// What a run produced.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub kind: ExperimentKind,
    pub any_violated: bool,
    pub files: Vec<PathBuf>,
    pub experiment: Option<ExperimentResult>,
    pub ids: Option<IdsResult>,
    pub oracle: Option<OracleResult>,
}

/// Runs the configured experiment and writes its files into `config.output.dir`.
pub fn run_experiment(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutcome> {
    config.validate()?;
    let dir = &config.output.dir;
    fs::create_dir_all(dir)?;
    let kind = config.kind();
    log::info!("running {} experiment, seed {}", kind.as_str(), config.seed);
    let mut files = Vec::new();
    let mut outcome = RunOutcome {
        kind,
        any_violated: false,
        files: Vec::new(),
        experiment: None,
        ids: None,
        oracle: None,
    };
    let mut rows = Vec::new();
    match kind {
        ExperimentKind::Wegner
        | ExperimentKind::Multiparticle
        | ExperimentKind::Gaussian
        | ExperimentKind::Gibbs => {
            let result = match kind {
                ExperimentKind::Wegner => run_wegner_trials(config, opts)?,
                ExperimentKind::Multiparticle => run_multiparticle_trials(config, opts)?,
                _ => run_correlated_trials(config, opts)?,
            };
            rows = result_rows(&result);
            let path = dir.join("results.csv");
            write_results_csv(&path, &rows)?;
            files.push(path);
            if !result.moduli.is_empty() {
                let path = dir.join("moduli.csv");
                write_moduli_csv(File::create(&path)?, &result.model_id, &result.moduli)?;
                files.push(path);
            }
            if !result.field_samples.is_empty() {
                let fdir = dir.join("fields");
                fs::create_dir_all(&fdir)?;
                for (t, s) in &result.field_samples {
                    let path = fdir.join(format!("trial-{t}.csv"));
                    s.write_csv(BufWriter::new(File::create(&path)?))?;
                    files.push(path);
                }
            }
            for e in &result.estimates {
                log::info!(
                    "{} eps={} p_hat={} ci=[{}, {}] bound_2eps={} bound_paper={} verdict={}",
                    result.experiment,
                    e.epsilon,
                    e.p_hat,
                    e.ci_low,
                    e.ci_high,
                    e.bound_2eps,
                    e.bound_paper,
                    e.verdict.as_str()
                );
            }
            outcome.any_violated = result.any_violated();
            outcome.experiment = Some(result);
        }
        ExperimentKind::Ids => {
            let ids = estimate_ids(config, opts)?;
            let path = dir.join("ids.csv");
            write_ids_csv(&path, &ids)?;
            files.push(path);
            outcome.ids = Some(ids);
        }
        ExperimentKind::Oracle => {
            let oracle = run_oracle(config, opts)?;
            let path = dir.join("oracle_reports.json");
            write_json(&path, &oracle)?;
            files.push(path);
            outcome.any_violated = oracle.any_violated();
            outcome.oracle = Some(oracle);
        }
    }
    let generated_unix = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let summary = Summary {
        generated_unix,
        kind: kind.as_str(),
        any_violated: outcome.any_violated,
        config,
        rows,
        experiment: outcome.experiment.as_ref(),
        ids: outcome.ids.as_ref(),
        oracle: outcome.oracle.as_ref(),
    };
    let path = dir.join("summary.json");
    write_json(&path, &summary)?;
    files.push(path);
    outcome.files = files;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::ExperimentSpec;
    use crate::fields::MarginalDistribution;
    use crate::lattice::LatticeBox;

    #[test]
    fn results_round_trip_with_commas() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = ExperimentConfig::default_for(ExperimentKind::Wegner);
        c.trials = 200;
        c.output.dir = dir.path().to_path_buf();
        c.experiment = ExperimentSpec::Wegner {
            lattice: LatticeBox::chain(3).unwrap(),
            marginal: MarginalDistribution::uniform(0.0, 1.0).unwrap(),
            energy: 0.0,
            epsilons: vec![0.01, 0.1],
        };
        let out = run_experiment(&c, &RunOptions { threads: 2 }).unwrap();
        let rows = read_results_csv(&dir.path().join("results.csv")).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].model_id, "iid-uniform[0,1]");
        assert_eq!(rows, result_rows(out.experiment.as_ref().unwrap()));
        let text = fs::read_to_string(dir.path().join("results.csv")).unwrap();
        assert!(text.starts_with(&RESULTS_HEADER.join(",")));
        let summary: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap())
                .unwrap();
        assert_eq!(summary["rows"].as_array().unwrap().len(), 2);
        assert_eq!(summary["config"]["seed"], c.seed);
    }
}
