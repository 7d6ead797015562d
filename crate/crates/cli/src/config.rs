//! Pipeline and sweep configuration files and input loading.

use std::fs;
use std::path::{Path, PathBuf};

use roughspec::corpus::{build_term_space, Corpus, TermVectorSpace, Weighting};
use roughspec::kmeans::KMeansConfig;
use roughspec::pipeline::{variant_method, MethodSpec, SweepDataset, SweepInput, VARIANT_COUNT};
use roughspec::roughfilter::DEFAULT_FRACTION;
use roughspec::simcore::io::read_similarity_csv;
use roughspec::synthgen::{dataset_preset, generate, inject_noise, planted_corpus, GeneratorParams, PlantedCorpusParams};
use roughspec::{Error, Result, SimilarityMatrix64};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub count: usize,
    pub max_sim: f64,
}

/// Exactly one of `similarity`, `corpus`, `preset`, `params` or `planted`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub similarity: Option<PathBuf>,
    /// Ground-truth labels for a similarity CSV: JSON with a `labels` array.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weighting: Option<Weighting>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<GeneratorParams>,
    /// Sample size override for `preset`/`params`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planted: Option<PlantedCorpusParams>,
    /// Uniform-noise items appended to generated matrices; their true label
    /// is `noise`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
}

pub enum Loaded {
    Similarity(SimilarityMatrix64),
    Corpus(TermVectorSpace),
}

pub struct LoadedInput {
    pub data: Loaded,
    pub truth: Option<Vec<String>>,
    pub ids: Vec<String>,
}

impl InputSource {
    pub fn validate(&self) -> Result<()> {
        let count = [
            self.similarity.is_some(),
            self.corpus.is_some(),
            self.preset.is_some(),
            self.params.is_some(),
            self.planted.is_some(),
        ]
        .iter()
        .filter(|&&b| b)
        .count();
        if count != 1 {
            return Err(Error::InvalidParameter(format!(
                "input needs exactly one of similarity, corpus, preset, params or planted (got {count})"
            )));
        }
        let generated = self.preset.is_some() || self.params.is_some();
        if (self.n.is_some() || self.noise.is_some()) && !generated {
            return Err(Error::InvalidParameter("n and noise apply only to preset or params input".into()));
        }
        if self.labels.is_some() && self.similarity.is_none() {
            return Err(Error::InvalidParameter("labels applies only to similarity input".into()));
        }
        if self.weighting.is_some() && self.corpus.is_none() && self.planted.is_none() {
            return Err(Error::InvalidParameter("weighting applies only to corpus input".into()));
        }
        Ok(())
    }

    pub fn generator_params(&self) -> Result<Option<GeneratorParams>> {
        let base = match (&self.preset, &self.params) {
            (Some(id), _) => dataset_preset(*id)?,
            (_, Some(p)) => p.clone(),
            _ => return Ok(None),
        };
        let mut p = base;
        if let Some(n) = self.n {
            p.n = n;
        }
        if let Some(seed) = self.seed {
            p.seed = seed;
        }
        Ok(Some(p))
    }

    /// Resolves relative paths against `base`.
    pub fn rebase(&mut self, base: &Path) {
        for p in [&mut self.similarity, &mut self.labels, &mut self.corpus].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn load(&self) -> Result<LoadedInput> {
        self.validate()?;
        let weighting = self.weighting.unwrap_or(Weighting::TfIdf);
        if let Some(path) = &self.similarity {
            let s = read_similarity_csv::<f64>(path)?;
            let truth = match &self.labels {
                Some(l) => Some(read_labels(l)?),
                None => None,
            };
            if let Some(t) = &truth {
                if t.len() != s.n() {
                    return Err(Error::Dimension(format!("{} labels for {} items", t.len(), s.n())));
                }
            }
            let ids = item_ids(&s);
            return Ok(LoadedInput {
                data: Loaded::Similarity(s),
                truth,
                ids,
            });
        }
        if let Some(path) = &self.corpus {
            let corpus = Corpus::from_jsonl(&fs::read_to_string(path)?)?;
            return Ok(corpus_input(&corpus, weighting)?);
        }
        if let Some(p) = &self.planted {
            let mut p = p.clone();
            if let Some(seed) = self.seed {
                p.seed = seed;
            }
            return corpus_input(&planted_corpus(&p)?.corpus, weighting);
        }
        let params = self.generator_params()?.expect("validated");
        let (s, labels) = generate::<f64>(&params)?;
        let mut truth: Vec<String> = labels.labels().iter().map(|l| l.to_string()).collect();
        let s = match self.noise {
            Some(noise) => {
                let (s, idx) = inject_noise(&s, noise.count, noise.max_sim, params.seed.wrapping_add(1))?;
                truth.extend(idx.iter().map(|_| "noise".to_string()));
                s
            }
            None => s,
        };
        let ids = item_ids(&s);
        Ok(LoadedInput {
            data: Loaded::Similarity(s),
            truth: Some(truth),
            ids,
        })
    }
}

fn corpus_input(corpus: &Corpus, weighting: Weighting) -> Result<LoadedInput> {
    let space = build_term_space(corpus, weighting)?;
    let truth = corpus
        .labels()
        .map(|l| space.kept.iter().map(|&i| l[i].clone()).collect());
    Ok(LoadedInput {
        ids: space.doc_ids.clone(),
        data: Loaded::Corpus(space),
        truth,
    })
}

fn item_ids(s: &SimilarityMatrix64) -> Vec<String> {
    match s.item_ids() {
        Some(ids) => ids.to_vec(),
        None => (0..s.n()).map(|i| i.to_string()).collect(),
    }
}

/// Reads a JSON document with a `labels` array of numbers or strings.
pub fn read_labels(path: &Path) -> Result<Vec<String>> {
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(path)?)?;
    let arr = v
        .get("labels")
        .and_then(|l| l.as_array())
        .ok_or_else(|| Error::InvalidParameter(format!("{} has no `labels` array", path.display())))?;
    arr.iter()
        .enumerate()
        .map(|(i, l)| match l {
            serde_json::Value::String(s) => Ok(s.clone()),
            serde_json::Value::Number(n) => Ok(n.to_string()),
            _ => Err(Error::InvalidParameter(format!("label {i} must be a string or number"))),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default)]
    pub thresholds: Vec<f64>,
}

fn default_q() -> f64 {
    DEFAULT_FRACTION
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            q: DEFAULT_FRACTION,
            thresholds: Vec::new(),
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q <= 0.5) {
            return Err(Error::InvalidParameter(format!("q must lie in (0, 0.5], got {}", self.q)));
        }
        if self.thresholds.iter().any(|t| !(*t >= 0.0)) {
            return Err(Error::InvalidParameter("thresholds must be >= 0".into()));
        }
        if self.thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("thresholds must be sorted ascending without duplicates".into()));
        }
        Ok(())
    }
}

/// k-means settings where `k` may be derived from the ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KMeansSettings {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_restarts() -> usize {
    KMeansConfig::new(1, 0).restarts
}
fn default_max_iter() -> usize {
    KMeansConfig::new(1, 0).max_iter
}
fn default_tol() -> f64 {
    KMeansConfig::new(1, 0).tol
}

impl Default for KMeansSettings {
    fn default() -> Self {
        Self {
            k: None,
            restarts: default_restarts(),
            max_iter: default_max_iter(),
            tol: default_tol(),
            seed: 0,
        }
    }
}

impl KMeansSettings {
    pub fn with_k(&self, k: usize) -> KMeansConfig {
        KMeansConfig {
            k,
            restarts: self.restarts,
            max_iter: self.max_iter,
            tol: self.tol,
            seed: self.seed,
        }
    }
}

fn default_method() -> MethodSpec {
    MethodSpec::new(roughspec::pipeline::Method::N)
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub input: InputSource,
    #[serde(default = "default_method")]
    pub method: MethodSpec,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default)]
    pub kmeans: KMeansSettings,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            input: InputSource::default(),
            method: default_method(),
            filter: FilterConfig::default(),
            kmeans: KMeansSettings::default(),
            output_dir: default_output(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.input.validate()?;
        self.filter.validate()?;
        if self.filter.thresholds.len() > 1 {
            return Err(Error::InvalidParameter(
                "cluster takes at most one threshold; use sweep for several".into(),
            ));
        }
        Ok(())
    }
}

/// Method list in a sweep: explicit specs or the nine numbered variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MethodList {
    Named(String),
    Explicit(Vec<MethodSpec>),
}

impl MethodList {
    pub fn resolve(&self) -> Result<Vec<MethodSpec>> {
        match self {
            Self::Named(name) if name == "variants" => (0..VARIANT_COUNT).map(variant_method).collect(),
            Self::Named(name) => Err(Error::InvalidParameter(format!("unknown method list `{name}`"))),
            Self::Explicit(v) if v.is_empty() => Err(Error::InvalidParameter("method list is empty".into())),
            Self::Explicit(v) => Ok(v.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub name: String,
    pub input: InputSource,
}

fn default_sweep_thresholds() -> Vec<f64> {
    vec![0.0, 0.1, 0.2]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub datasets: Vec<DatasetEntry>,
    pub methods: MethodList,
    #[serde(default = "default_sweep_thresholds")]
    pub thresholds: Vec<f64>,
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default)]
    pub kmeans: KMeansSettings,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() {
            return Err(Error::InvalidParameter("sweep needs at least one dataset".into()));
        }
        let mut names: Vec<&str> = self.datasets.iter().map(|d| d.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter("dataset names must be unique".into()));
        }
        if self.kmeans.k.is_some() {
            return Err(Error::InvalidParameter(
                "sweep derives k from the labels of each cell; remove kmeans.k".into(),
            ));
        }
        FilterConfig {
            q: self.q,
            thresholds: self.thresholds.clone(),
        }
        .validate()?;
        for d in &self.datasets {
            d.input.validate()?;
        }
        self.methods.resolve().map(|_| ())
    }

    pub fn load_datasets(&self) -> Result<Vec<SweepDataset>> {
        self.datasets
            .iter()
            .map(|d| {
                let loaded = d.input.load()?;
                let truth = loaded.truth.ok_or_else(|| {
                    Error::InvalidParameter(format!("dataset `{}` has no ground-truth labels", d.name))
                })?;
                Ok(SweepDataset {
                    name: d.name.clone(),
                    input: match loaded.data {
                        Loaded::Similarity(s) => SweepInput::Similarity(s),
                        Loaded::Corpus(c) => SweepInput::Corpus(c),
                    },
                    truth,
                })
            })
            .collect()
    }
}

/// Parses a JSON configuration; relative input paths are resolved against
/// the file's directory.
pub fn read_config<C: for<'de> Deserialize<'de>>(path: &Path) -> Result<C> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn config_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}
