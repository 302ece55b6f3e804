//! Acceptance checks, one line per criterion. Run with
//! `cargo test -p lemlda --release --test acceptance`; pass a substring to
//! select criteria by name.

mod common;

use std::collections::{HashMap, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use common::*;
use lemlda::corpus::{truncate_document, TokenizedDocument, DEFAULT_TRUNCATION};
use lemlda::intrusion::*;
use lemlda::lda::*;
use lemlda::pipeline::*;
use lemlda::vocab::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};

enum Status {
    Pass,
    /// Reported only: the measured trend is inverted but inside sampling noise.
    WithinNoise,
    Fail,
}

type Check = fn() -> (Status, String);

fn status(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

fn main() -> ExitCode {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [(&str, Check); 9] = [
        ("dr-arithmetic", dr_arithmetic),
        ("significance-oracle", significance_oracle),
        ("elbo-monotonicity", elbo_monotonicity),
        ("synthetic-recovery", synthetic_recovery),
        ("annotator-sanity", annotator_sanity),
        ("lemmatization-effect", lemmatization_effect),
        ("truncation-effect", truncation_effect),
        ("pipeline-reproducibility", pipeline_reproducibility),
        ("vocabulary-schemes", vocabulary_schemes),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let (st, detail) = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (Status::Fail, format!("panicked: {msg}"))
            });
        let label = match st {
            Status::Pass => "PASS",
            Status::WithinNoise => "PASS (within noise)",
            Status::Fail => {
                failed += 1;
                "FAIL"
            }
        };
        println!("{label} {name} [{:.1}s]: {detail}", start.elapsed().as_secs_f64());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}

fn respond(tasks: &[IntrusionTask], correct: usize) -> Vec<AnnotationResponse> {
    tasks
        .iter()
        .enumerate()
        .map(|(i, t)| AnnotationResponse {
            task_id: t.task_id.clone(),
            chosen_index: if i < correct { t.intruder_index } else { (t.intruder_index + 1) % t.num_choices() },
            annotator_id: "constructed".into(),
            timestamp: chrono::DateTime::UNIX_EPOCH,
        })
        .collect()
}

fn dr_arithmetic() -> (Status, String) {
    let tasks: Vec<IntrusionTask> = (0..100)
        .map(|k| IntrusionTask {
            task_id: task_id(k),
            topic_id: k,
            words: (0..6).map(|i| format!("w{k}_{i}")).collect(),
            intruder_index: (k * 7) % 6,
        })
        .collect();
    let drs: Vec<f64> = [65, 100, 0]
        .iter()
        .map(|&c| score_detection_rate(&tasks, &respond(&tasks, c), "m").unwrap().detection_rate)
        .collect();
    (status(drs == [0.65, 1.0, 0.0]), format!("DR = {drs:?}"))
}

/// Counts assignments of six pooled outcomes to group b by enumeration.
fn enumerated_tail(na: usize, sa: usize, nb: usize, sb: usize) -> f64 {
    let n = na + nb;
    let observed = sb as f64 / nb as f64 - sa as f64 / na as f64;
    let (mut hits, mut total) = (0, 0);
    for mask in 0u32..1 << n {
        if mask.count_ones() as usize != nb {
            continue;
        }
        total += 1;
        let in_b = (0..n).filter(|&i| mask >> i & 1 == 1 && i < sa + sb).count();
        let stat = in_b as f64 / nb as f64 - (sa + sb - in_b) as f64 / na as f64;
        if stat >= observed - 1e-12 {
            hits += 1;
        }
    }
    hits as f64 / total as f64
}

fn report(n: usize, correct: usize) -> DetectionReport {
    let outcomes = (0..n).map(|k| TopicOutcome { topic_id: k, correct: k < correct }).collect();
    DetectionReport::from_outcomes("m", outcomes).unwrap()
}

fn significance_oracle() -> (Status, String) {
    let exact = dr_difference_test(&report(3, 0), &report(3, 3), TestMethod::ExactPermutation).unwrap().p_value;
    let enumerated = enumerated_tail(3, 0, 3, 3);
    let normal = dr_difference_test(&report(100, 50), &report(100, 65), TestMethod::NormalApprox).unwrap().p_value;
    let ok = exact == 0.05 && enumerated == 0.05 && (normal - 0.02).abs() <= 0.01;
    (status(ok), format!("exact p = {exact} (enumerated {enumerated}), normal p = {normal:.4}"))
}

fn elbo_monotonicity() -> (Status, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let truth: Vec<Vec<f64>> = (0..5).map(|_| sample_dirichlet(&[0.1; 50], &mut rng)).collect();
    let corpus = sample_synthetic_corpus(&truth, &[0.5; 5], 200, 40, 5).unwrap();
    let model = LdaModel::init(LdaConfig::new(5).unwrap().with_seed(5), 50).unwrap();
    let mut fb = FullBatch::new(model, &corpus.docs).unwrap();
    let bounds: Vec<f64> = (0..50).map(|_| fb.step()).collect();
    let worst = bounds
        .windows(2)
        .map(|w| (w[0] - w[1]) / w[0].abs())
        .fold(f64::NEG_INFINITY, f64::max);
    (
        status(worst <= 1e-8),
        format!("ELBO {:.2} -> {:.2}, largest relative drop {worst:.2e}", bounds[0], bounds[49]),
    )
}

struct Recovered {
    truth: Vec<Vec<f64>>,
    words: Vec<String>,
    model: LdaModel,
}

fn recover(seed: u64) -> Recovered {
    let truth = block_topics(10, 500, 1.0, seed);
    let corpus = sample_synthetic_corpus(&truth, &[0.05; 10], 2000, 80, seed).unwrap();
    let config = LdaConfig::new(10).unwrap().with_seed(seed);
    let model = Trainer::new(config).execution(Execution::Sequential).fit(500, &corpus.docs).unwrap();
    let words = (0..500).map(|i| format!("w{i:03}")).collect();
    Recovered { truth, words, model }
}

fn synthetic_recovery() -> (Status, String) {
    let r = recover(0);
    let sims = greedy_cosine_matching(&r.model.expected_topics(), &r.truth);
    let m = mean(&sims);
    let min = sims.iter().copied().fold(f64::INFINITY, f64::min);
    (status(m >= 0.8), format!("mean matched cosine {m:.3} (min {min:.3})"))
}

fn annotator_sanity() -> (Status, String) {
    let r = recover(0);
    let tasks = build_intrusion_tasks(&r.model, &r.words, &IntrusionSettings { seed: 0, ..Default::default() }).unwrap();
    let views: Vec<TaskView> = tasks.iter().map(IntrusionTask::view).collect();
    let oracle = SimulatedAnnotator::new(
        AnnotatorPolicy::Oracle,
        Some(Reference::TrueTopics(TopicAffinity::new(&r.truth, &r.words).unwrap())),
        0,
    );
    let oracle_dr = score_detection_rate(&tasks, &oracle.respond_all(&views).unwrap(), "oracle").unwrap().detection_rate;

    // pool many annotator seeds so the binomial band is informative
    let seeds = 100;
    let mut hits = 0;
    for seed in 0..seeds {
        let uniform = SimulatedAnnotator::new(AnnotatorPolicy::UniformRandom, None, seed);
        hits += score_detection_rate(&tasks, &uniform.respond_all(&views).unwrap(), "uniform").unwrap().num_correct();
    }
    let n = seeds as usize * tasks.len();
    let p = 1.0 / 6.0;
    let uniform_dr = hits as f64 / n as f64;
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    let z = (uniform_dr - p) / sigma;
    (
        status(oracle_dr >= 0.9 && z.abs() <= 3.0),
        format!("oracle DR {oracle_dr:.2}; uniform DR {uniform_dr:.4} over {n} tasks ({z:+.2} sigma)"),
    )
}

const LEM_TOPICS: usize = 20;
const LEM_DOCS: usize = 200;
const LEM_DOC_LEN: usize = 80;

/// Detection rates of the lemmatized and surface views on one inflected
/// corpus, both judged by PMI over lemma co-occurrence with surface task
/// words mapped to their lemmas.
fn view_detection_rates(seed: u64, truncate: Option<usize>) -> (f64, f64) {
    let c = inflected_corpus(LEM_TOPICS, LEM_DOCS, LEM_DOC_LEN, 0.9, 0.1, 0.3, seed);
    let reference = CooccurrenceTable::from_tokenized(&c.lemma);
    let lemma_df = document_frequencies(&c.lemma);
    let surface_df = document_frequencies(&c.surface);
    let skip = STOP_WORDS;
    let lemma_vocab = build_filtered_lemma_vocab(&lemma_df, skip, DEFAULT_VOCAB_SIZE).unwrap();
    let surface_vocab =
        project_lemma_vocab_to_surface(&lemma_vocab, &c.lexicon, &c.surface, &lemma_df.top(skip), &surface_df.top(skip));
    let cut = |docs: &[TokenizedDocument]| -> Vec<TokenizedDocument> {
        match truncate {
            Some(l) => docs.iter().map(|d| truncate_document(d, l).unwrap()).collect(),
            None => docs.to_vec(),
        }
    };
    let annotator = SimulatedAnnotator::new(AnnotatorPolicy::PmiCoherence, Some(Reference::Cooccurrence(reference)), seed);
    let mut drs = [0.0; 2];
    for (i, (docs, vocab)) in [(cut(&c.lemma), &lemma_vocab), (cut(&c.surface), &surface_vocab)].into_iter().enumerate() {
        let encoded = encode_documents(&docs, vocab);
        let config = LdaConfig::new(LEM_TOPICS).unwrap().with_seed(seed);
        let model = train(&config, vocab.len(), &encoded).unwrap();
        let settings = IntrusionSettings { seed, ..Default::default() };
        let tasks = build_intrusion_tasks(&model, vocab.words(), &settings).unwrap();
        let responses: Vec<AnnotationResponse> = tasks
            .iter()
            .map(|t| {
                let mut v = t.view();
                v.words = v.words.iter().map(|w| c.lexicon.lemmatize(w).to_owned()).collect();
                annotator.respond(&v).unwrap()
            })
            .collect();
        drs[i] = score_detection_rate(&tasks, &responses, "view").unwrap().detection_rate;
    }
    (drs[0], drs[1])
}

fn full_length_runs() -> &'static [(f64, f64)] {
    static RUNS: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RUNS.get_or_init(|| (0..10).map(|s| view_detection_rates(s, None)).collect())
}

fn lemmatization_effect() -> (Status, String) {
    let runs = full_length_runs();
    let wins = runs.iter().filter(|(l, s)| l > s).count();
    let pairs: Vec<String> = runs.iter().map(|(l, s)| format!("{l:.2}/{s:.2}")).collect();
    (
        status(wins >= 8),
        format!("lemmatized > surface in {wins}/10 seeds (lemma/surface DR: {})", pairs.join(" ")),
    )
}

fn truncation_effect() -> (Status, String) {
    let full = full_length_runs();
    let trunc: Vec<(f64, f64)> = (0..10).map(|s| view_detection_rates(s, Some(DEFAULT_TRUNCATION))).collect();
    let mut worst = Status::Pass;
    let mut parts = Vec::new();
    for (view, pick) in [("lemmatized", 0usize), ("surface", 1)] {
        let get = |p: &(f64, f64)| if pick == 0 { p.0 } else { p.1 };
        let diffs: Vec<f64> = trunc.iter().zip(full).map(|(t, f)| get(t) - get(f)).collect();
        let d = mean(&diffs);
        let var = diffs.iter().map(|x| (x - d).powi(2)).sum::<f64>() / (diffs.len() - 1) as f64;
        let se = (var / diffs.len() as f64).sqrt();
        let seeds: Vec<String> = full.iter().zip(&trunc).map(|(f, t)| format!("{:.2}/{:.2}", get(f), get(t))).collect();
        parts.push(format!(
            "{view}: full {:.3} vs trunc {:.3} (diff {d:+.3}, se {se:.3}; per seed {})",
            mean(&full.iter().map(get).collect::<Vec<_>>()),
            mean(&trunc.iter().map(get).collect::<Vec<_>>()),
            seeds.join(" ")
        ));
        let st = if d <= 0.0 {
            Status::Pass
        } else if d <= 2.0 * se {
            Status::WithinNoise
        } else {
            Status::Fail
        };
        worst = match (worst, st) {
            (Status::Fail, _) | (_, Status::Fail) => Status::Fail,
            (Status::WithinNoise, _) | (_, Status::WithinNoise) => Status::WithinNoise,
            _ => Status::Pass,
        };
    }
    (worst, parts.join("; "))
}

fn pipeline_run(fixture: &Path, root: &Path) -> Pipeline {
    let text = r#"
[corpus]
path = "corpus.tsv"
lexicon = "lexicon.tsv"

[preprocess]
view = "lemmatized"
scheme = "filtered"
skip_top = 20

[model]
num_topics = 10
prior = "symmetric"
seed = 7

[intrusion]
seed = 8

[score]
seed = 9
"#;
    let mut config = ExperimentConfig::from_toml(text).unwrap();
    config.resolve_paths(fixture);
    config.output.root = root.to_path_buf();
    let p = Pipeline::new(config).unwrap();
    p.run_all().unwrap();
    p
}

fn pipeline_reproducibility() -> (Status, String) {
    let dir = tempfile::tempdir().unwrap();
    write_inflected_fixture(&inflected_corpus(10, 300, 60, 0.9, 0.1, 0.3, 21), dir.path());
    let a = pipeline_run(dir.path(), &dir.path().join("run-a"));
    let b = pipeline_run(dir.path(), &dir.path().join("run-b"));
    let files = [VOCAB_FILE, ENCODED_CORPUS, MODEL_FILE, TRAIN_LOG, TASKS_FILE, KEY_FILE, RESPONSES_FILE, REPORT_FILE, TOPICS_TEXT];
    let differing: Vec<&str> = files
        .iter()
        .copied()
        .filter(|f| std::fs::read(a.artifact(f)).unwrap() != std::fs::read(b.artifact(f)).unwrap())
        .collect();
    let verified = a.manifest().unwrap().verify(a.run_dir()).unwrap().is_empty();
    (
        status(differing.is_empty() && verified),
        format!("{} artifacts compared, differing: {differing:?}, manifest verified: {verified}", files.len()),
    )
}

/// Document frequencies and their (df desc, word asc) ordering, computed
/// independently of the library.
fn df_ranking(docs: &[TokenizedDocument]) -> Vec<(String, usize)> {
    let mut df: HashMap<&str, usize> = HashMap::new();
    for d in docs {
        let unique: HashSet<&str> = d.tokens.iter().map(String::as_str).collect();
        for w in unique {
            *df.entry(w).or_default() += 1;
        }
    }
    let mut ranking: Vec<(String, usize)> = df.into_iter().map(|(w, c)| (w.to_owned(), c)).collect();
    ranking.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranking
}

fn zipf_docs(num_docs: usize, len: usize, words: &[String], seed: u64) -> Vec<TokenizedDocument> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zipf = Zipf::new(words.len() as f64, 1.0).unwrap();
    (0..num_docs)
        .map(|d| {
            let mut tokens: Vec<String> = (0..len).map(|_| words[zipf.sample(&mut rng) as usize - 1].clone()).collect();
            // every word occurs somewhere
            tokens.extend(words.iter().skip(d).step_by(num_docs).cloned());
            TokenizedDocument::new(format!("d{d}"), tokens)
        })
        .collect()
}

fn vocabulary_schemes() -> (Status, String) {
    let mut notes = Vec::new();

    let words: Vec<String> = (0..12_000).map(|i| format!("t{i:05}")).collect();
    let docs = zipf_docs(600, 300, &words, 1);
    let ranking = df_ranking(&docs);
    let filtered = build_filtered_lemma_vocab(&document_frequencies(&docs), 100, 10_000).unwrap();
    let expected: Vec<&str> = ranking[100..10_100].iter().map(|(w, _)| w.as_str()).collect();
    let filtered_ok = filtered.words().iter().map(String::as_str).eq(expected.iter().copied());
    notes.push(format!("filtered = ranks 101..10100: {filtered_ok}"));

    // lemmas with three forms each, one of which is the lemma itself, plus
    // out-of-lexicon tokens that back off unchanged
    let lemmas: Vec<String> = (0..3000).map(|i| format!("l{i:04}")).collect();
    let mut lexicon = lemlda::corpus::LemmaLexicon::new();
    for l in &lemmas {
        for suffix in ["", "s", "ed"] {
            lexicon.insert(format!("{l}{suffix}"), l.clone());
        }
    }
    let lemma_docs = {
        let mut vocab = lemmas.clone();
        vocab.extend((0..200).map(|i| format!("oov{i}")));
        zipf_docs(500, 200, &vocab, 2)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let surface_docs: Vec<TokenizedDocument> = lemma_docs
        .iter()
        .map(|d| {
            let tokens = d
                .tokens
                .iter()
                .map(|t| {
                    if t.starts_with("oov") {
                        t.clone()
                    } else {
                        format!("{t}{}", ["", "s", "ed"][rng.random_range(0..3)])
                    }
                })
                .collect();
            TokenizedDocument::new(d.doc_id.clone(), tokens)
        })
        .collect();
    let (lemmatized, _) = lemlda::corpus::lemmatize_corpus(&lexicon, &surface_docs);
    let lemma_df = document_frequencies(&lemmatized);
    let surface_df = document_frequencies(&surface_docs);
    let lemma_vocab = build_filtered_lemma_vocab(&lemma_df, 100, 10_000).unwrap();
    let lemma_top: HashSet<String> = df_ranking(&lemmatized).into_iter().take(100).map(|(w, _)| w).collect();
    let surface_rank = df_ranking(&surface_docs);
    let surface_top: HashSet<String> = surface_rank.iter().take(100).map(|(w, _)| w.clone()).collect();
    let projected = project_lemma_vocab_to_surface(
        &lemma_vocab,
        &lexicon,
        &surface_docs,
        &lemma_df.top(100),
        &surface_df.top(100),
    );
    let lemma_set: HashSet<&str> = lemma_vocab.words().iter().map(String::as_str).collect();
    let lemmas_ok = projected.words().iter().all(|w| lemma_set.contains(lexicon.lemmatize(w)));
    let tops_ok = projected.words().iter().all(|w| !lemma_top.contains(w) && !surface_top.contains(w));
    let oracle: Vec<&str> = surface_rank
        .iter()
        .map(|(w, _)| w.as_str())
        .filter(|w| lemma_set.contains(lexicon.lemmatize(w)) && !lemma_top.contains(*w) && !surface_top.contains(*w))
        .collect();
    let complete = projected.words().iter().map(String::as_str).eq(oracle.iter().copied());
    notes.push(format!(
        "projected ({} words from {} lemmas): lemmas in filtered vocab {lemmas_ok}, no top-100 word {tops_ok}, matches oracle {complete}",
        projected.len(),
        lemma_vocab.len()
    ));
    (status(filtered_ok && lemmas_ok && tops_ok && complete), notes.join("; "))
}
