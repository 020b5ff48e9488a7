//! One handler per subcommand. Each reads its inputs, runs the library,
//! writes CSV/JSON artifacts into the output directory, echoes the
//! resolved configuration to `run_config.json`, and prints a short
//! summary. Nothing here depends on wall-clock time or thread count, so
//! identical invocations write identical bytes.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

use stylodelta::artifacts::{
    read_distance_artifacts, read_frequency_csv, write_bootstrap_artifacts,
    write_contribution_artifacts, write_distance_artifacts, write_frequency_csv,
    write_mfw_stability_artifacts, write_removal_artifacts, write_sweep_artifacts,
};
use stylodelta::corpus::{authors_for, build_frequency_matrix, read_manifest, IngestOptions, ScriptSet};
use stylodelta::decompose::top_k;
use stylodelta::evaluate::{
    adjusted_rand_index, loocv_nearest_neighbor, pam_cluster, sweep, SweepGrid, SweepSettings,
    SweepTask,
};
use stylodelta::metrics::MetricSpec;
use stylodelta::pipeline::{
    author_pair_contributions, author_pair_profiles, distance_matrix, restrict_to_authors,
    PipelineParams,
};
use stylodelta::robustness::{bootstrap_stability, mfw_stability, removal_experiment};
use stylodelta::FrequencyMatrix;

use crate::config::{parse_author_pair, parse_list, parse_ratio, RunConfig};

fn out_path(config: &RunConfig, name: &str) -> PathBuf {
    config.out_dir.join(name)
}

/// Echo the fully resolved configuration beside the artifacts.
fn emit_run_config(config: &RunConfig) -> Result<()> {
    let path = out_path(config, "run_config.json");
    let file = fs::File::create(&path)
        .with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(file, config).context("writing run_config.json")?;
    Ok(())
}

fn load_frequency(config: &RunConfig, freq: Option<&Path>) -> Result<(FrequencyMatrix, PathBuf)> {
    let path = freq
        .map(Path::to_path_buf)
        .unwrap_or_else(|| out_path(config, "frequency_matrix.csv"));
    let matrix = read_frequency_csv(&path)
        .with_context(|| format!("reading frequency matrix {}", path.display()))?;
    Ok((matrix, path))
}

fn manifest_authors(config: &RunConfig, docs: &[String]) -> Result<Vec<String>> {
    let manifest = config
        .manifest
        .as_ref()
        .context("this command needs --manifest (or a manifest entry in the config file)")?;
    let records = read_manifest(manifest)
        .with_context(|| format!("reading manifest {}", manifest.display()))?;
    Ok(authors_for(docs, &records)?)
}

fn distance_inputs(
    config: &RunConfig,
    dist: Option<&Path>,
    sidecar: Option<&Path>,
) -> (PathBuf, PathBuf) {
    let csv = dist
        .map(Path::to_path_buf)
        .unwrap_or_else(|| out_path(config, "distance_matrix.csv"));
    let json = sidecar
        .map(Path::to_path_buf)
        .unwrap_or_else(|| csv.with_extension("json"));
    (csv, json)
}

pub fn ingest(config: &RunConfig, scripts: &str) -> Result<()> {
    let manifest = config
        .manifest
        .as_ref()
        .context("ingest needs --manifest (or a manifest entry in the config file)")?;
    let records = read_manifest(manifest)
        .with_context(|| format!("reading manifest {}", manifest.display()))?;
    let scripts = match scripts {
        "both" => ScriptSet::default(),
        "latin" => ScriptSet {
            latin: true,
            cyrillic: false,
        },
        "cyrillic" => ScriptSet {
            latin: false,
            cyrillic: true,
        },
        other => bail!("unknown --scripts value {other:?}; expected both, latin, or cyrillic"),
    };
    let options = IngestOptions {
        scripts,
        ngram_min: config.ngram_min,
        ngram_max: config.ngram_max,
    };
    let freq = build_frequency_matrix(&records, config.vocab_cap, &options)?;
    let path = out_path(config, "frequency_matrix.csv");
    write_frequency_csv(&freq, &path)?;
    emit_run_config(config)?;
    println!(
        "wrote {} ({} documents, {} token types)",
        path.display(),
        freq.n_docs(),
        freq.n_types()
    );
    Ok(())
}

pub fn distmat(config: &RunConfig, freq: Option<&Path>) -> Result<()> {
    let (freq, _) = load_frequency(config, freq)?;
    let spec = config.metric_spec();
    let params = config.pipeline_params();
    let dist = distance_matrix(&freq, &spec, &params)?;
    let csv_path = out_path(config, "distance_matrix.csv");
    let json_path = out_path(config, "distance_matrix.json");
    write_distance_artifacts(&dist, &params, &csv_path, &json_path)?;
    emit_run_config(config)?;
    println!(
        "wrote {} ({} documents, metric {})",
        csv_path.display(),
        dist.n_docs(),
        spec.kind
    );
    Ok(())
}

#[derive(Serialize)]
struct ClusterManifest<'a> {
    config: &'a RunConfig,
    distance_metric: MetricSpec,
    distance_pipeline: PipelineParams,
    k: usize,
    medoids: &'a [String],
    total_cost: f64,
    adjusted_rand_index: Option<f64>,
}

pub fn cluster(
    config: &RunConfig,
    dist: Option<&Path>,
    sidecar: Option<&Path>,
    k: Option<usize>,
) -> Result<()> {
    let (csv_in, json_in) = distance_inputs(config, dist, sidecar);
    let (dist, dist_params) = read_distance_artifacts(&csv_in, &json_in)?;
    let authors = if config.manifest.is_some() {
        Some(manifest_authors(config, dist.docs())?)
    } else {
        None
    };
    let k = match (k, &authors) {
        (Some(k), _) => k,
        (None, Some(authors)) => authors.iter().collect::<BTreeSet<_>>().len(),
        (None, None) => bail!("cluster needs --k or a manifest to infer the number of authors"),
    };
    let result = pam_cluster(&dist, k)?;
    let ari = authors
        .as_ref()
        .map(|a| adjusted_rand_index(&result.labels, a))
        .transpose()?;

    let csv_path = out_path(config, "clustering.csv");
    let mut writer = csv::Writer::from_path(&csv_path)
        .with_context(|| format!("creating {}", csv_path.display()))?;
    writer.write_record(["doc", "cluster", "medoid"])?;
    for (i, doc) in dist.docs().iter().enumerate() {
        let cluster = result.labels[i];
        writer.write_record([doc, &cluster.to_string(), &result.medoids[cluster]])?;
    }
    writer.flush()?;

    let json_path = out_path(config, "clustering.json");
    let file = fs::File::create(&json_path)
        .with_context(|| format!("creating {}", json_path.display()))?;
    serde_json::to_writer_pretty(
        file,
        &ClusterManifest {
            config,
            distance_metric: *dist.metric(),
            distance_pipeline: dist_params,
            k,
            medoids: &result.medoids,
            total_cost: result.total_cost,
            adjusted_rand_index: ari,
        },
    )?;
    emit_run_config(config)?;
    println!(
        "clustered {} documents into {} groups (total cost {})",
        dist.n_docs(),
        k,
        result.total_cost
    );
    if let Some(ari) = ari {
        println!("adjusted Rand index: {ari}");
    }
    Ok(())
}

#[derive(Serialize)]
struct AttributionManifest<'a> {
    config: &'a RunConfig,
    distance_metric: MetricSpec,
    distance_pipeline: PipelineParams,
    exclude_singletons: bool,
    balanced_accuracy: f64,
}

pub fn attribute(
    config: &RunConfig,
    dist: Option<&Path>,
    sidecar: Option<&Path>,
    exclude_singletons: bool,
) -> Result<()> {
    let (csv_in, json_in) = distance_inputs(config, dist, sidecar);
    let (dist, dist_params) = read_distance_artifacts(&csv_in, &json_in)?;
    let authors = manifest_authors(config, dist.docs())?;
    let result = loocv_nearest_neighbor(&dist, &authors)?;
    let accuracy = result.balanced_accuracy(exclude_singletons)?;

    let csv_path = out_path(config, "attribution.csv");
    let mut writer = csv::Writer::from_path(&csv_path)
        .with_context(|| format!("creating {}", csv_path.display()))?;
    writer.write_record(["doc", "truth", "predicted", "correct"])?;
    for i in 0..result.docs.len() {
        let correct = result.truth[i] == result.predicted[i];
        writer.write_record([
            result.docs[i].as_str(),
            result.truth[i].as_str(),
            result.predicted[i].as_str(),
            if correct { "true" } else { "false" },
        ])?;
    }
    writer.flush()?;

    let json_path = out_path(config, "attribution.json");
    let file = fs::File::create(&json_path)
        .with_context(|| format!("creating {}", json_path.display()))?;
    serde_json::to_writer_pretty(
        file,
        &AttributionManifest {
            config,
            distance_metric: *dist.metric(),
            distance_pipeline: dist_params,
            exclude_singletons,
            balanced_accuracy: accuracy,
        },
    )?;
    emit_run_config(config)?;
    println!("balanced accuracy: {accuracy}");
    Ok(())
}

/// Restrict the corpus to the two compared authors when asked, so the
/// standardization reflects only their documents.
fn maybe_restrict(
    freq: FrequencyMatrix,
    doc_authors: Vec<String>,
    pair: &(String, String),
    restandardize: bool,
) -> Result<(FrequencyMatrix, Vec<String>)> {
    if !restandardize {
        return Ok((freq, doc_authors));
    }
    let kept = restrict_to_authors(
        &freq,
        &doc_authors,
        &[pair.0.clone(), pair.1.clone()],
    )?;
    Ok(kept)
}

pub fn contributions(
    config: &RunConfig,
    freq: Option<&Path>,
    authors: &str,
    top: usize,
    restandardize: bool,
) -> Result<()> {
    let pair = parse_author_pair(authors)?;
    let (freq, _) = load_frequency(config, freq)?;
    let doc_authors = manifest_authors(config, freq.docs())?;
    let (freq, doc_authors) = maybe_restrict(freq, doc_authors, &pair, restandardize)?;
    let table = author_pair_contributions(
        &freq,
        &doc_authors,
        &pair.0,
        &pair.1,
        &config.metric_spec(),
        &config.pipeline_params(),
    )?;
    let ranked = top_k(&table, top);
    let csv_path = out_path(config, "contributions.csv");
    let json_path = out_path(config, "word_shift.json");
    write_contribution_artifacts(&ranked, &csv_path, &json_path)?;
    emit_run_config(config)?;
    println!(
        "wrote {} ({} of {} tokens) and {}",
        csv_path.display(),
        ranked.rows.len(),
        table.rows.len(),
        json_path.display()
    );
    Ok(())
}

pub fn sweep_cmd(
    config: &RunConfig,
    freq: Option<&Path>,
    task: &str,
    mfw_grid: Option<&str>,
    metrics: Option<&str>,
    alpha_grid: Option<&str>,
    exclude_singletons: bool,
) -> Result<()> {
    let task: SweepTask = task
        .parse()
        .map_err(|e| anyhow::anyhow!("invalid --task value: {e}"))?;
    let (freq, _) = load_frequency(config, freq)?;
    let doc_authors = manifest_authors(config, freq.docs())?;
    let grid = SweepGrid {
        mfw: parse_list(mfw_grid.unwrap_or("500,1000,2000"), "--mfw-grid", |s| {
            s.parse::<usize>()
                .with_context(|| format!("invalid mfw value {s:?}"))
        })?,
        metrics: parse_list(
            metrics.unwrap_or("burrows,quadratic,cosine,jsd,rtd"),
            "--metrics",
            |s| {
                s.parse()
                    .map_err(|e| anyhow::anyhow!("invalid metric {s:?}: {e}"))
            },
        )?,
        alphas: parse_list(alpha_grid.unwrap_or("1/12,1/3,1,2,5"), "--alpha-grid", parse_ratio)?,
    };
    let settings = SweepSettings {
        ddof: config.ddof,
        epsilon: config.epsilon,
        pi1: config.pi1,
        normalize_by_n: config.normalize_by_n,
        rtd_normalizer: config.rtd_normalizer,
        zmode: config.zscore,
        exclude_singletons,
    };
    let report = sweep(&freq, &doc_authors, task, &grid, &settings)?;
    let csv_path = out_path(config, "sweep.csv");
    let json_path = out_path(config, "sweep.json");
    write_sweep_artifacts(&report, &csv_path, &json_path)?;
    emit_run_config(config)?;
    let failed = report.cells.iter().filter(|c| c.error.is_some()).count();
    println!(
        "wrote {} ({} cells, {} failed)",
        csv_path.display(),
        report.cells.len(),
        failed
    );
    Ok(())
}

pub fn robustness_mfw(
    config: &RunConfig,
    freq: Option<&Path>,
    authors: &str,
    perturbed: &str,
    top: usize,
    restandardize: bool,
) -> Result<()> {
    let pair = parse_author_pair(authors)?;
    let (freq, _) = load_frequency(config, freq)?;
    let doc_authors = manifest_authors(config, freq.docs())?;
    let (freq, doc_authors) = maybe_restrict(freq, doc_authors, &pair, restandardize)?;
    let perturbed = parse_list(perturbed, "--perturbed", |s| {
        s.parse::<usize>()
            .with_context(|| format!("invalid mfw value {s:?}"))
    })?;
    let report = mfw_stability(
        &freq,
        &doc_authors,
        &pair.0,
        &pair.1,
        &config.metric_spec(),
        &config.pipeline_params(),
        &perturbed,
        top,
    )?;
    let csv_path = out_path(config, "mfw_stability.csv");
    write_mfw_stability_artifacts(&report, &csv_path, &out_path(config, "mfw_stability.json"))?;
    emit_run_config(config)?;
    println!(
        "wrote {} ({} word-list sizes, top {} tokens)",
        csv_path.display(),
        report.rows.len(),
        top
    );
    Ok(())
}

pub fn robustness_bootstrap(
    config: &RunConfig,
    freq: Option<&Path>,
    authors: &str,
    top: usize,
    iterations: usize,
    restandardize: bool,
) -> Result<()> {
    let pair = parse_author_pair(authors)?;
    let (freq, _) = load_frequency(config, freq)?;
    let doc_authors = manifest_authors(config, freq.docs())?;
    let (freq, doc_authors) = maybe_restrict(freq, doc_authors, &pair, restandardize)?;
    let report = bootstrap_stability(
        &freq,
        &doc_authors,
        &pair.0,
        &pair.1,
        &config.metric_spec(),
        &config.pipeline_params(),
        top,
        iterations,
        config.seed,
    )?;
    let csv_path = out_path(config, "bootstrap_stability.csv");
    write_bootstrap_artifacts(&report, &csv_path, &out_path(config, "bootstrap_stability.json"))?;
    emit_run_config(config)?;
    println!(
        "wrote {} (mean Jaccard {}, deviation {})",
        csv_path.display(),
        report.mean_jaccard,
        report.std_dev
    );
    Ok(())
}

pub fn robustness_removal(
    config: &RunConfig,
    freq: Option<&Path>,
    authors: &str,
    k_list: &str,
    restandardize: bool,
) -> Result<()> {
    let pair = parse_author_pair(authors)?;
    let (freq, _) = load_frequency(config, freq)?;
    let doc_authors = manifest_authors(config, freq.docs())?;
    let (freq, doc_authors) = maybe_restrict(freq, doc_authors, &pair, restandardize)?;
    let k_list = parse_list(k_list, "--k-list", |s| {
        s.parse::<usize>()
            .with_context(|| format!("invalid K value {s:?}"))
    })?;
    let spec = config.metric_spec();
    let (side1, side2) = author_pair_profiles(
        &freq,
        &doc_authors,
        &pair.0,
        &pair.1,
        &spec,
        &config.pipeline_params(),
    )?;
    let report = removal_experiment(&side1, &side2, &spec, config.epsilon, &k_list)?;
    let csv_path = out_path(config, "removal.csv");
    write_removal_artifacts(&report, &csv_path, &out_path(config, "removal.json"))?;
    emit_run_config(config)?;
    println!(
        "wrote {} (distance before removal {})",
        csv_path.display(),
        report.before
    );
    Ok(())
}
