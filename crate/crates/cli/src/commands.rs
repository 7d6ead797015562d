//! Subcommand implementations.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use roughspec::corpus::{build_term_space, Corpus};
use roughspec::evalx::{confusion, cut_criteria, ScoreReport};
use roughspec::explain::{explain_clusters, to_json, to_markdown};
use roughspec::pipeline::{
    improvement_csv, improvement_summary, run_corpus, run_similarity, sweep as run_sweep, sweep_table, FilterSpec,
    SweepCell, SweepMetric,
};
use roughspec::roughfilter::{filter_boundary, similarity_profile, suggest_threshold};
use roughspec::simcore::io::{read_similarity_csv, similarity_to_csv, write_similarity_csv};
use roughspec::synthgen::{generate as generate_matrix, inject_noise, planted_corpus, LabelsFile};
use roughspec::{Error, Partition, Result};
use serde::{Deserialize, Serialize};

use crate::config::{config_dir, read_config, read_labels, Loaded, NoiseSpec, PipelineConfig, SweepConfig};
use crate::{ClusterArgs, EvaluateArgs, ExplainArgs, FilterArgs, GenerateArgs, ProfileArgs, ReportFormat, SweepArgs};

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, contents)?;
    Ok(())
}

pub fn generate(a: GenerateArgs) -> Result<()> {
    let input = crate::config::InputSource {
        preset: a.preset,
        params: match &a.params {
            Some(p) => Some(read_config(p)?),
            None => None,
        },
        n: a.n,
        seed: a.seed,
        ..Default::default()
    };
    if input.preset.is_none() && input.params.is_none() {
        return Err(Error::InvalidParameter("generate needs --preset or --params".into()));
    }
    let params = input.generator_params()?.expect("preset or params");
    let (s, labels) = generate_matrix::<f64>(&params)?;
    let mut file = serde_json::to_value(LabelsFile::new(&params, &labels))?;
    let s = match (a.noise_count, a.noise_max) {
        (Some(count), Some(max_sim)) => {
            let (s, idx) = inject_noise(&s, count, max_sim, params.seed.wrapping_add(1))?;
            let labels = file["labels"].as_array_mut().expect("labels array");
            labels.extend(idx.iter().map(|_| serde_json::Value::from("noise")));
            file["noise"] = serde_json::to_value(NoiseSpec { count, max_sim })?;
            s
        }
        _ => s,
    };
    fs::create_dir_all(&a.out)?;
    write_similarity_csv(&s, &a.out.join("similarity.csv"))?;
    write(&a.out.join("labels.json"), &serde_json::to_string_pretty(&file)?)
}

pub fn profile(a: ProfileArgs) -> Result<()> {
    let s = read_similarity_csv::<f64>(&a.similarity)?;
    let profile = similarity_profile(&s, a.q)?;
    let ids: Vec<String> = match s.item_ids() {
        Some(ids) => ids.to_vec(),
        None => (0..s.n()).map(|i| i.to_string()).collect(),
    };
    let csv = profile.to_csv(&ids, &a.thresholds);
    let csv = if a.sorted {
        let mut lines = csv.lines();
        let header = lines.next().unwrap_or_default();
        let rows: Vec<&str> = lines.collect();
        let mut out = format!("{header}\n");
        for &i in &profile.sorted_order {
            out.push_str(rows[i]);
            out.push('\n');
        }
        out
    } else {
        csv
    };
    write(&a.out, &csv)?;
    eprintln!("suggested threshold: {:.6}", suggest_threshold(&profile));
    Ok(())
}

#[derive(Serialize)]
struct FilterReport<'a> {
    threshold: f64,
    q: f64,
    kept: &'a [usize],
    removed: &'a [usize],
    removed_ids: Vec<String>,
}

pub fn filter(a: FilterArgs) -> Result<()> {
    let s = read_similarity_csv::<f64>(&a.similarity)?;
    let profile = similarity_profile(&s, a.q)?;
    let out = filter_boundary(&s, &profile, a.threshold)?;
    fs::create_dir_all(&a.out)?;
    write_similarity_csv(&out.core, &a.out.join("core.csv"))?;
    let report = FilterReport {
        threshold: a.threshold,
        q: a.q,
        kept: &out.kept,
        removed: &out.removed,
        removed_ids: out
            .removed
            .iter()
            .map(|&i| s.item_id(i))
            .collect(),
    };
    write(&a.out.join("filter.json"), &serde_json::to_string_pretty(&report)?)
}

/// Predicted labels for every input item; filtered items are `null`.
#[derive(Debug, Serialize, Deserialize)]
pub struct PartitionFile {
    pub k: usize,
    pub labels: Vec<Option<usize>>,
    pub item_ids: Vec<String>,
    pub method: String,
    pub threshold: f64,
}

fn apply_overrides(cfg: &mut PipelineConfig, a: &ClusterArgs) {
    if a.similarity.is_some() || a.corpus.is_some() || a.preset.is_some() {
        cfg.input = crate::config::InputSource {
            similarity: a.similarity.clone(),
            corpus: a.corpus.clone(),
            preset: a.preset,
            ..Default::default()
        };
    }
    if a.labels.is_some() {
        cfg.input.labels = a.labels.clone();
    }
    if let Some(w) = a.weighting {
        cfg.input.weighting = Some(w.into());
    }
    if a.n.is_some() {
        cfg.input.n = a.n;
    }
    if a.seed.is_some() {
        cfg.input.seed = a.seed;
    }
    if let Some(m) = a.method {
        cfg.method.method = m;
    }
    cfg.method.unit_rows |= a.unit_rows;
    cfg.method.extra_dimension |= a.extra_dimension;
    if a.svd_rank.is_some() {
        cfg.method.svd_rank = a.svd_rank;
    }
    if a.k.is_some() {
        cfg.kmeans.k = a.k;
    }
    if let Some(s) = a.kmeans_seed {
        cfg.kmeans.seed = s;
    }
    if let Some(r) = a.restarts {
        cfg.kmeans.restarts = r;
    }
    if let Some(t) = a.threshold {
        cfg.filter.thresholds = vec![t];
    }
    if let Some(q) = a.q {
        cfg.filter.q = q;
    }
    if let Some(out) = &a.out {
        cfg.output_dir = out.clone();
    }
}

pub fn cluster(a: ClusterArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(path) => {
            let mut cfg: PipelineConfig = read_config(path)?;
            cfg.input.rebase(&config_dir(path));
            cfg
        }
        None => PipelineConfig::default(),
    };
    apply_overrides(&mut cfg, &a);
    cfg.validate()?;
    let input = cfg.input.load()?;

    let k = match (cfg.kmeans.k, &input.truth) {
        (Some(k), _) => k,
        (None, Some(t)) => {
            let mut distinct = t.clone();
            distinct.sort_unstable();
            distinct.dedup();
            distinct.len()
        }
        (None, None) => return Err(Error::InvalidParameter("k is required when no labels are available".into())),
    };
    let kcfg = cfg.kmeans.with_k(k);
    let threshold = cfg.filter.thresholds.first().copied().unwrap_or(0.0);
    let filter = Some(FilterSpec {
        q: cfg.filter.q,
        threshold,
    });
    let (n, out) = match &input.data {
        Loaded::Similarity(s) => (s.n(), run_similarity(s, &cfg.method, filter, &kcfg)?),
        Loaded::Corpus(space) => (space.n(), run_corpus(space, &cfg.method, filter, &kcfg)?),
    };
    let mut labels = vec![None; n];
    for (pos, &i) in out.kept.iter().enumerate() {
        labels[i] = Some(out.result.partition.label(pos));
    }
    let file = PartitionFile {
        k,
        labels,
        item_ids: input.ids.clone(),
        method: cfg.method.label(),
        threshold,
    };
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir)?;
    write(&dir.join("partition.json"), &serde_json::to_string_pretty(&file)?)?;
    write(&dir.join("kmeans.json"), &out.result.to_json(&kcfg)?)?;
    write(&dir.join("config.json"), &serde_json::to_string_pretty(&cfg)?)?;
    if let Some(truth) = &input.truth {
        let doc = serde_json::json!({ "labels": truth, "item_ids": input.ids });
        write(&dir.join("truth.json"), &serde_json::to_string_pretty(&doc)?)?;
    }
    if let Some(params) = &cfg.input.planted {
        write(&dir.join("corpus.jsonl"), &planted_corpus(params)?.corpus.to_jsonl()?)?;
    }
    if let Loaded::Similarity(s) = &input.data {
        if cfg.input.similarity.is_none() {
            write(&dir.join("similarity.csv"), &similarity_to_csv(s))?;
        }
    }
    Ok(())
}

/// Writes to stdout; a closed pipe is not an error.
fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn read_partition(path: &Path) -> Result<PartitionFile> {
    read_config(path)
}

pub fn evaluate(a: EvaluateArgs) -> Result<()> {
    let truth = read_labels(&a.truth)?;
    let pred = read_partition(&a.pred)?;
    if truth.len() != pred.labels.len() {
        return Err(Error::Dimension(format!(
            "{} true labels for {} predicted labels",
            truth.len(),
            pred.labels.len()
        )));
    }
    let kept: Vec<usize> = (0..truth.len()).filter(|&i| pred.labels[i].is_some()).collect();
    let partition = Partition::new(kept.iter().map(|&i| pred.labels[i].expect("kept")).collect(), pred.k)?;
    let kept_truth: Vec<&String> = kept.iter().map(|&i| &truth[i]).collect();
    let criteria = match &a.similarity {
        Some(path) => {
            let s = read_similarity_csv::<f64>(path)?;
            if s.n() != truth.len() {
                return Err(Error::Dimension(format!("similarity has {} items, labels {}", s.n(), truth.len())));
            }
            Some(cut_criteria(&s.submatrix(&kept), &partition)?)
        }
        None => None,
    };
    let report = ScoreReport::new(confusion(&kept_truth, &partition)?, criteria)?;
    let json = serde_json::to_string_pretty(&report)?;
    match &a.out {
        Some(p) => write(p, &json),
        None => emit(&format!("{json}\n")),
    }
}

pub fn explain(a: ExplainArgs) -> Result<()> {
    let corpus = Corpus::from_jsonl(&fs::read_to_string(&a.corpus)?)?;
    let space = build_term_space(&corpus, a.weighting.into())?;
    let pred = read_partition(&a.partition)?;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (id, label) in pred.item_ids.iter().zip(&pred.labels) {
        let Some(label) = label else { continue };
        let pos = space
            .doc_ids
            .iter()
            .position(|d| d == id)
            .ok_or_else(|| Error::InvalidParameter(format!("document `{id}` is not in the term space")))?;
        rows.push(pos);
        labels.push(*label);
    }
    let sub = space.select(&rows);
    let explanations = explain_clusters(&sub, &Partition::new(labels, pred.k)?, a.w)?;
    let text = match a.format {
        ReportFormat::Markdown => to_markdown(&explanations),
        ReportFormat::Json => to_json(&explanations)?,
    };
    match &a.out {
        Some(p) => write(p, &text),
        None => emit(&text),
    }
}

fn cell_file_name(c: &SweepCell) -> String {
    let clean = |s: &str| s.chars().map(|ch| if ch.is_alphanumeric() || ch == '+' || ch == '-' { ch } else { '_' }).collect::<String>();
    format!("{}__{}__t{}.json", clean(&c.dataset), clean(&c.method), c.threshold)
}

fn cells_csv(cells: &[SweepCell]) -> String {
    let mut out = String::from("dataset,method,threshold,kept,removed,k,relative_error,f1\n");
    for c in cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{:.6},{:.6}\n",
            c.dataset, c.method, c.threshold, c.kept, c.removed, c.k, c.relative_error, c.f1
        ));
    }
    out
}

pub fn sweep(a: SweepArgs) -> Result<()> {
    let mut cfg: SweepConfig = read_config(&a.config)?;
    let base = config_dir(&a.config);
    for d in &mut cfg.datasets {
        d.input.rebase(&base);
    }
    if let Some(out) = a.out {
        cfg.output_dir = out;
    }
    cfg.validate()?;
    let datasets = cfg.load_datasets()?;
    let methods = cfg.methods.resolve()?;
    let cells = run_sweep(&datasets, &methods, &cfg.thresholds, cfg.q, &cfg.kmeans.with_k(1))?;

    let dir: PathBuf = cfg.output_dir.clone();
    let cell_dir = dir.join("cells");
    fs::create_dir_all(&cell_dir)?;
    for c in &cells {
        write(&cell_dir.join(cell_file_name(c)), &serde_json::to_string_pretty(c)?)?;
    }
    write(&dir.join("cells.csv"), &cells_csv(&cells))?;
    for &t in &cfg.thresholds {
        write(&dir.join(format!("relative_error_t{t}.csv")), &sweep_table(&cells, t, SweepMetric::RelativeError))?;
        write(&dir.join(format!("f1_t{t}.csv")), &sweep_table(&cells, t, SweepMetric::F1))?;
    }
    write(&dir.join("improvement.csv"), &improvement_csv(&improvement_summary(&cells)))?;
    write(&dir.join("config.json"), &serde_json::to_string_pretty(&cfg)?)
}
