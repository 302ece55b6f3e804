//! Configuration-driven experiment runner. Every stage reads its inputs
//! from, and writes its artifacts to, a run directory named by the config
//! fingerprint, and records artifact hashes in `manifest.json`.

mod config;
mod manifest;
mod topics;

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use config::{
    CompareSection, CorpusFormat, CorpusSection, ExperimentConfig, IntrusionSection, ModelSection, OutputSection,
    PreprocessSection, Prior, Scheme, ScoreSection, View,
};
pub use manifest::{sha256_file, ExperimentManifest, StageRecord, MANIFEST_FILE};
pub use topics::{emit_topic_table, TopicRow, TopicTable};

use crate::corpus::{
    lemmatize_corpus, read_corpus_dir, read_corpus_tsv, read_tokenized, truncate_document, write_tokenized,
    LemmaLexicon, LemmatizationStats, TokenizedDocument,
};
use crate::error::{Error, Result};
use crate::intrusion::{
    build_intrusion_tasks, dr_difference_test, load_tasks, score_detection_rate, write_tasks, AnnotationResponse,
    AnnotatorPolicy, CooccurrenceTable, DetectionReport, Reference, SimulatedAnnotator,
};
use crate::jsonl::{read_json, read_jsonl, write_json, write_jsonl};
use crate::lda::{Execution, LdaModel, Trainer};
use crate::vocab::{
    build_filtered_lemma_vocab, build_unfiltered_vocab, document_frequencies, encode_documents,
    project_lemma_vocab_to_surface, read_encoded, write_encoded, Vocabulary,
};

pub const SURFACE_DOCS: &str = "surface.tsv";
pub const LEMMA_DOCS: &str = "lemma.tsv";
pub const INGEST_STATS: &str = "ingest.json";
pub const VOCAB_FILE: &str = "vocab.tsv";
pub const ENCODED_CORPUS: &str = "corpus.enc";
pub const MODEL_FILE: &str = "model.mlda";
pub const TRAIN_LOG: &str = "train.log";
pub const TASKS_FILE: &str = "tasks.jsonl";
pub const KEY_FILE: &str = "key.jsonl";
pub const RESPONSES_FILE: &str = "responses.jsonl";
pub const REPORT_FILE: &str = "report.json";
pub const COMPARE_FILE: &str = "compare.json";
pub const TOPICS_TEXT: &str = "topics.txt";
pub const TOPICS_JSON: &str = "topics.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Ingest,
    Vocab,
    Train,
    Tasks,
    Score,
    Compare,
    Topics,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Ingest,
        Stage::Vocab,
        Stage::Train,
        Stage::Tasks,
        Stage::Score,
        Stage::Compare,
        Stage::Topics,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Vocab => "vocab",
            Stage::Train => "train",
            Stage::Tasks => "tasks",
            Stage::Score => "score",
            Stage::Compare => "compare",
            Stage::Topics => "topics",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown stage {s:?}")))
    }
}

/// Corpus-level counts written by the ingest stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IngestStats {
    pub num_docs: usize,
    pub surface_tokens: usize,
    pub lemmatization: Option<LemmatizationStats>,
    pub backoff_rate: Option<f64>,
}

pub struct Pipeline {
    config: ExperimentConfig,
    run_dir: PathBuf,
    execution: Execution,
}

impl Pipeline {
    /// Uses `config` as given; relative paths resolve against the current
    /// directory.
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let run_dir = config.output.root.join(&config.fingerprint()[..16]);
        Ok(Self {
            config,
            run_dir,
            execution: Execution::default(),
        })
    }

    /// Loads a TOML config, resolving its relative paths against the
    /// directory that contains it.
    pub fn from_config_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut config = ExperimentConfig::load(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.resolve_paths(base);
        Self::new(config)
    }

    pub fn execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn run_dir(&self) -> &Path {
        &self.run_dir
    }

    pub fn artifact(&self, name: &str) -> PathBuf {
        self.run_dir.join(name)
    }

    pub fn manifest(&self) -> Result<ExperimentManifest> {
        ExperimentManifest::load(&self.run_dir)
    }

    /// Runs ingest through score, then compare when configured, then topics.
    pub fn run_all(&self) -> Result<()> {
        for stage in Stage::ALL {
            if stage == Stage::Compare && self.config.compare.is_none() {
                continue;
            }
            self.run_stage(stage)?;
        }
        Ok(())
    }

    pub fn run_stage(&self, stage: Stage) -> Result<StageRecord> {
        fs::create_dir_all(&self.run_dir).map_err(|e| Error::io(&self.run_dir, e))?;
        log::info!("{stage}: {}", self.run_dir.display());
        let artifacts: Vec<&str> = match stage {
            Stage::Ingest => self.ingest()?,
            Stage::Vocab => self.vocab()?,
            Stage::Train => self.train()?,
            Stage::Tasks => self.tasks()?,
            Stage::Score => self.score()?,
            Stage::Compare => self.compare()?,
            Stage::Topics => self.topics()?,
        };
        let mut manifest = ExperimentManifest::load_or_new(&self.run_dir, &self.config)?;
        let record = manifest.record(&self.run_dir, stage, &artifacts)?.clone();
        manifest.save(&self.run_dir)?;
        Ok(record)
    }

    fn require(&self, stage: Stage, names: &[&str]) -> Result<()> {
        if names.iter().all(|n| self.artifact(n).exists()) {
            Ok(())
        } else {
            Err(Error::MissingStage { stage: stage.to_string() })
        }
    }

    fn lexicon(&self) -> Result<LemmaLexicon> {
        let path = self
            .config
            .corpus
            .lexicon
            .as_ref()
            .ok_or_else(|| Error::Config("corpus.lexicon is not set".into()))?;
        LemmaLexicon::load(path)
    }

    fn ingest(&self) -> Result<Vec<&'static str>> {
        let c = &self.config.corpus;
        let raw = match c.format {
            CorpusFormat::Tsv => read_corpus_tsv(&c.path)?,
            CorpusFormat::Dir => read_corpus_dir(&c.path)?,
        };
        let surface: Vec<TokenizedDocument> = raw.iter().map(TokenizedDocument::from_text).collect();
        write_tokenized(self.artifact(SURFACE_DOCS), &surface)?;
        let mut artifacts = vec![SURFACE_DOCS];
        let mut stats = IngestStats {
            num_docs: surface.len(),
            surface_tokens: surface.iter().map(TokenizedDocument::len).sum(),
            lemmatization: None,
            backoff_rate: None,
        };
        if c.lexicon.is_some() {
            let (lemma, lem_stats) = lemmatize_corpus(&self.lexicon()?, &surface);
            write_tokenized(self.artifact(LEMMA_DOCS), &lemma)?;
            artifacts.push(LEMMA_DOCS);
            stats.lemmatization = Some(lem_stats);
            stats.backoff_rate = Some(lem_stats.backoff_rate());
            log::info!("back-off rate {:.4}", lem_stats.backoff_rate());
        }
        write_json(self.artifact(INGEST_STATS), &stats)?;
        artifacts.push(INGEST_STATS);
        Ok(artifacts)
    }

    fn vocab(&self) -> Result<Vec<&'static str>> {
        let p = &self.config.preprocess;
        let needs_lemma = p.view == View::Lemmatized || p.scheme == Scheme::Filtered;
        let mut inputs = vec![SURFACE_DOCS];
        if needs_lemma {
            inputs.push(LEMMA_DOCS);
        }
        self.require(Stage::Ingest, &inputs)?;
        let surface = read_tokenized(self.artifact(SURFACE_DOCS))?;
        let lemma = if needs_lemma {
            Some(read_tokenized(self.artifact(LEMMA_DOCS))?)
        } else {
            None
        };

        let vocab = match (p.view, p.scheme) {
            (View::Lemmatized, Scheme::Unfiltered) => {
                build_unfiltered_vocab(&document_frequencies(lemma.as_deref().unwrap_or_default()), p.vocab_size)?
            }
            (View::Lemmatized, Scheme::Filtered) => build_filtered_lemma_vocab(
                &document_frequencies(lemma.as_deref().unwrap_or_default()),
                p.skip_top,
                p.vocab_size,
            )?,
            (View::Surface, Scheme::Unfiltered) => {
                build_unfiltered_vocab(&document_frequencies(&surface), p.vocab_size)?
            }
            (View::Surface, Scheme::Filtered) => {
                let lemma_df = document_frequencies(lemma.as_deref().unwrap_or_default());
                let surface_df = document_frequencies(&surface);
                let lemma_vocab = build_filtered_lemma_vocab(&lemma_df, p.skip_top, p.vocab_size)?;
                project_lemma_vocab_to_surface(
                    &lemma_vocab,
                    &self.lexicon()?,
                    &surface,
                    &lemma_df.top(p.skip_top),
                    &surface_df.top(p.skip_top),
                )
            }
        };
        if vocab.is_empty() {
            return Err(Error::InvalidArgument("the vocabulary came out empty".into()));
        }

        let view_docs = match p.view {
            View::Lemmatized => lemma.unwrap_or_default(),
            View::Surface => surface,
        };
        let view_docs = match p.truncate {
            Some(limit) => view_docs
                .iter()
                .map(|d| truncate_document(d, limit))
                .collect::<Result<Vec<_>>>()?,
            None => view_docs,
        };
        let encoded = encode_documents(&view_docs, &vocab);
        if encoded.is_empty() {
            return Err(Error::InvalidArgument("no document keeps any vocabulary word".into()));
        }
        vocab.save(self.artifact(VOCAB_FILE))?;
        write_encoded(self.artifact(ENCODED_CORPUS), &encoded)?;
        Ok(vec![VOCAB_FILE, ENCODED_CORPUS])
    }

    fn load_vocab(&self) -> Result<Vocabulary> {
        Vocabulary::load(self.artifact(VOCAB_FILE), self.config.vocab_scheme())
    }

    fn load_model(&self) -> Result<LdaModel> {
        LdaModel::load(self.artifact(MODEL_FILE), &self.config.lda_config()?)
    }

    fn train(&self) -> Result<Vec<&'static str>> {
        self.require(Stage::Vocab, &[VOCAB_FILE, ENCODED_CORPUS])?;
        let vocab = self.load_vocab()?;
        let corpus = read_encoded(self.artifact(ENCODED_CORPUS))?;
        let mut log_lines = String::new();
        let model = Trainer::new(self.config.lda_config()?)
            .execution(self.execution)
            .on_batch(|entry| {
                log_lines.push_str(&entry.to_line());
                log_lines.push('\n');
            })
            .fit(vocab.len(), &corpus)?;
        model.save(self.artifact(MODEL_FILE))?;
        let log_path = self.artifact(TRAIN_LOG);
        fs::write(&log_path, log_lines).map_err(|e| Error::io(&log_path, e))?;
        Ok(vec![MODEL_FILE, TRAIN_LOG])
    }

    fn tasks(&self) -> Result<Vec<&'static str>> {
        self.require(Stage::Train, &[MODEL_FILE])?;
        self.require(Stage::Vocab, &[VOCAB_FILE])?;
        let vocab = self.load_vocab()?;
        let model = self.load_model()?;
        let tasks = build_intrusion_tasks(&model, vocab.words(), &self.config.intrusion_settings())?;
        write_tasks(self.artifact(TASKS_FILE), self.artifact(KEY_FILE), &tasks)?;
        Ok(vec![TASKS_FILE, KEY_FILE])
    }

    fn score(&self) -> Result<Vec<&'static str>> {
        self.require(Stage::Tasks, &[TASKS_FILE, KEY_FILE])?;
        let tasks = load_tasks(self.artifact(TASKS_FILE), self.artifact(KEY_FILE))?;
        let s = &self.config.score;
        let responses: Vec<AnnotationResponse> = match &s.responses {
            Some(path) => read_jsonl(path)?,
            None => self.simulate_responses(&tasks)?,
        };
        write_jsonl(self.artifact(RESPONSES_FILE), &responses)?;
        let report = score_detection_rate(&tasks, &responses, &self.config.model_label())?;
        write_json(self.artifact(REPORT_FILE), &report)?;
        log::info!("{}: DR {:.3}", report.model_label, report.detection_rate);
        Ok(vec![RESPONSES_FILE, REPORT_FILE])
    }

    /// PMI is measured on the lemmatized corpus when a lexicon is
    /// configured, and surface task words are lemmatized before judging,
    /// so both views are judged against the same reference.
    fn simulate_responses(&self, tasks: &[crate::intrusion::IntrusionTask]) -> Result<Vec<AnnotationResponse>> {
        let s = &self.config.score;
        let lexicon = match self.config.corpus.lexicon {
            Some(_) => Some(self.lexicon()?),
            None => None,
        };
        let reference = match s.annotator {
            AnnotatorPolicy::UniformRandom => None,
            AnnotatorPolicy::PmiCoherence => {
                let docs_file = if lexicon.is_some() { LEMMA_DOCS } else { SURFACE_DOCS };
                self.require(Stage::Ingest, &[docs_file])?;
                let docs = read_tokenized(self.artifact(docs_file))?;
                Some(Reference::Cooccurrence(CooccurrenceTable::from_tokenized(&docs)))
            }
            AnnotatorPolicy::Oracle => {
                return Err(Error::Config(
                    "the oracle annotator needs generating topics; set score.responses or another annotator".into(),
                ))
            }
        };
        let annotator = SimulatedAnnotator::new(s.annotator, reference, s.seed);
        tasks
            .iter()
            .map(|t| {
                let mut view = t.view();
                if let Some(lex) = &lexicon {
                    view.words = view.words.iter().map(|w| lex.lemmatize(w).to_owned()).collect();
                }
                annotator.respond(&view)
            })
            .collect()
    }

    fn compare(&self) -> Result<Vec<&'static str>> {
        let cmp = self
            .config
            .compare
            .as_ref()
            .ok_or_else(|| Error::Config("no [compare] section".into()))?;
        self.require(Stage::Score, &[REPORT_FILE])?;
        if !cmp.baseline.exists() {
            return Err(Error::MissingStage {
                stage: format!("score (baseline {})", cmp.baseline.display()),
            });
        }
        let a: DetectionReport = read_json(&cmp.baseline)?;
        let b: DetectionReport = read_json(self.artifact(REPORT_FILE))?;
        let result = dr_difference_test(&a, &b, cmp.method)?;
        write_json(self.artifact(COMPARE_FILE), &result)?;
        Ok(vec![COMPARE_FILE])
    }

    fn topics(&self) -> Result<Vec<&'static str>> {
        self.require(Stage::Train, &[MODEL_FILE])?;
        self.require(Stage::Vocab, &[VOCAB_FILE])?;
        let table = emit_topic_table(&self.load_model()?, self.config.intrusion.m, &self.load_vocab()?)?;
        let text_path = self.artifact(TOPICS_TEXT);
        let mut f = fs::File::create(&text_path).map_err(|e| Error::io(&text_path, e))?;
        f.write_all(table.to_text().as_bytes()).map_err(|e| Error::io(&text_path, e))?;
        write_json(self.artifact(TOPICS_JSON), &table)?;
        Ok(vec![TOPICS_TEXT, TOPICS_JSON])
    }
}
