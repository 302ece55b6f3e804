use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::intrusion::{AnnotatorPolicy, IntrusionSettings, TestMethod};
use crate::lda::{make_asymmetric_prior, make_symmetric_prior, LdaConfig};
use crate::vocab::{VocabScheme, DEFAULT_SKIP_TOP, DEFAULT_VOCAB_SIZE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusFormat {
    /// One `doc_id<TAB>text` line per document.
    Tsv,
    /// One file per document; the file name is the document id.
    Dir,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum View {
    Lemmatized,
    Surface,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Unfiltered,
    Filtered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Prior {
    Symmetric,
    Asymmetric,
}

impl fmt::Display for View {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            View::Lemmatized => "lemmatized",
            View::Surface => "surface",
        })
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Unfiltered => "unfiltered",
            Scheme::Filtered => "filtered",
        })
    }
}

impl fmt::Display for Prior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Prior::Symmetric => "symmetric",
            Prior::Asymmetric => "asymmetric",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSection {
    pub path: PathBuf,
    #[serde(default = "default_format")]
    pub format: CorpusFormat,
    /// Required by the lemmatized view and by the filtered surface scheme.
    #[serde(default)]
    pub lexicon: Option<PathBuf>,
}

fn default_format() -> CorpusFormat {
    CorpusFormat::Tsv
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessSection {
    pub view: View,
    pub scheme: Scheme,
    #[serde(default)]
    pub truncate: Option<usize>,
    #[serde(default = "default_vocab_size")]
    pub vocab_size: usize,
    #[serde(default = "default_skip_top")]
    pub skip_top: usize,
}

fn default_vocab_size() -> usize {
    DEFAULT_VOCAB_SIZE
}

fn default_skip_top() -> usize {
    DEFAULT_SKIP_TOP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub num_topics: usize,
    pub prior: Prior,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub tau0: Option<f64>,
    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default)]
    pub local_max_iters: Option<usize>,
    #[serde(default)]
    pub local_tol: Option<f64>,
    #[serde(default)]
    pub passes: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntrusionSection {
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_depth")]
    pub exclusion_depth: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_m() -> usize {
    IntrusionSettings::default().m
}

fn default_depth() -> usize {
    IntrusionSettings::default().exclusion_depth
}

impl Default for IntrusionSection {
    fn default() -> Self {
        Self {
            m: default_m(),
            exclusion_depth: default_depth(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreSection {
    /// Human responses (JSON Lines). When absent a simulated annotator
    /// answers instead.
    #[serde(default)]
    pub responses: Option<PathBuf>,
    #[serde(default = "default_policy")]
    pub annotator: AnnotatorPolicy,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub label: Option<String>,
}

fn default_policy() -> AnnotatorPolicy {
    AnnotatorPolicy::PmiCoherence
}

impl Default for ScoreSection {
    fn default() -> Self {
        Self {
            responses: None,
            annotator: default_policy(),
            seed: 0,
            label: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSection {
    /// Report of the baseline model `a`; this run's report is `b` and the
    /// alternative is `DR_b > DR_a`.
    pub baseline: PathBuf,
    #[serde(default)]
    pub method: TestMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_root")]
    pub root: PathBuf,
}

fn default_root() -> PathBuf {
    PathBuf::from("runs")
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { root: default_root() }
    }
}

/// Declarative description of one experiment, read from TOML. Relative
/// paths are resolved against the directory holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub corpus: CorpusSection,
    pub preprocess: PreprocessSection,
    pub model: ModelSection,
    #[serde(default)]
    pub intrusion: IntrusionSection,
    #[serde(default)]
    pub score: ScoreSection,
    #[serde(default)]
    pub compare: Option<CompareSection>,
    #[serde(default)]
    pub output: OutputSection,
}

/// The part of the config that determines artifact contents.
#[derive(Serialize)]
struct Fingerprint<'a> {
    corpus: &'a CorpusSection,
    preprocess: &'a PreprocessSection,
    model: &'a ModelSection,
    intrusion: &'a IntrusionSection,
    score: &'a ScoreSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let needs_lexicon = self.preprocess.view == View::Lemmatized || self.preprocess.scheme == Scheme::Filtered;
        if needs_lexicon && self.corpus.lexicon.is_none() {
            return Err(Error::Config(format!(
                "{} view with {} scheme needs corpus.lexicon",
                self.preprocess.view, self.preprocess.scheme
            )));
        }
        if self.preprocess.truncate == Some(0) {
            return Err(Error::Config("preprocess.truncate must be positive".into()));
        }
        if self.preprocess.vocab_size == 0 {
            return Err(Error::Config("preprocess.vocab_size must be positive".into()));
        }
        if self.intrusion.m == 0 {
            return Err(Error::Config("intrusion.m must be positive".into()));
        }
        self.lda_config()?;
        Ok(())
    }

    pub fn lda_config(&self) -> Result<LdaConfig> {
        let m = &self.model;
        let alpha = match m.prior {
            Prior::Symmetric => make_symmetric_prior(m.num_topics)?,
            Prior::Asymmetric => make_asymmetric_prior(m.num_topics)?,
        };
        let mut c = LdaConfig::new(m.num_topics)?.with_alpha(alpha).with_seed(m.seed);
        if let Some(v) = m.eta {
            c.eta = v;
        }
        if let Some(v) = m.kappa {
            c.kappa = v;
        }
        if let Some(v) = m.tau0 {
            c.tau0 = v;
        }
        if let Some(v) = m.batch_size {
            c.batch_size = v;
        }
        if let Some(v) = m.local_max_iters {
            c.local_max_iters = v;
        }
        if let Some(v) = m.local_tol {
            c.local_tol = v;
        }
        if let Some(v) = m.passes {
            c.passes = v;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn intrusion_settings(&self) -> IntrusionSettings {
        IntrusionSettings {
            m: self.intrusion.m,
            exclusion_depth: self.intrusion.exclusion_depth,
            seed: self.intrusion.seed,
        }
    }

    pub fn vocab_scheme(&self) -> VocabScheme {
        match (self.preprocess.view, self.preprocess.scheme) {
            (_, Scheme::Unfiltered) => VocabScheme::Unfiltered,
            (View::Lemmatized, Scheme::Filtered) => VocabScheme::FilteredLemma,
            (View::Surface, Scheme::Filtered) => VocabScheme::ProjectedSurface,
        }
    }

    /// Label used for reports, e.g. `lemmatized-filtered-symmetric-trunc50`.
    pub fn model_label(&self) -> String {
        if let Some(label) = &self.score.label {
            return label.clone();
        }
        let p = &self.preprocess;
        let mut label = format!("{}-{}-{}", p.view, p.scheme, self.model.prior);
        if let Some(n) = p.truncate {
            label.push_str(&format!("-trunc{n}"));
        }
        label
    }

    /// Hex SHA-256 of the canonical JSON form of every setting that
    /// affects artifacts. The output root and comparison target are left
    /// out so a finished run can be compared without retraining.
    pub fn fingerprint(&self) -> String {
        let canonical = serde_json::to_string(&Fingerprint {
            corpus: &self.corpus,
            preprocess: &self.preprocess,
            model: &self.model,
            intrusion: &self.intrusion,
            score: &self.score,
        })
        .expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    /// Rewrites relative paths against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.corpus.path);
        if let Some(p) = self.corpus.lexicon.as_mut() {
            fix(p);
        }
        if let Some(p) = self.score.responses.as_mut() {
            fix(p);
        }
        if let Some(c) = self.compare.as_mut() {
            fix(&mut c.baseline);
        }
        fix(&mut self.output.root);
    }
}
