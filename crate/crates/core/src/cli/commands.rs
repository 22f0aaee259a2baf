use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::config::{RunConfig, CONFIG_ECHO_FILE, MANIFEST_FILE};
use super::{CliError, EvalMode};
use crate::corpus::{self, ChunkingConfig, DEFAULT_CHUNK_SIZE, DEFAULT_OVERLAP};
use crate::embed;
use crate::evalbench::{
    self, BenchmarkItem, ExtractionResult, PassCounts, ResponseRecord, Subject,
};
use crate::ragflow::{Generator, HttpGenerator, PromptTemplate, RagAnswer, RagError, RagPipeline};
use crate::transport;
use crate::vecstore::{VectorIndex, VEC_FILE};

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, bytes)
        .map_err(|e| CliError::Other(format!("cannot write {}: {e}", path.display())))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path)
        .map_err(|e| CliError::Other(format!("cannot create {}: {e}", path.display())))
}

fn jsonl<T: Serialize>(records: &[T]) -> Vec<u8> {
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r).expect("record serializes");
        buf.push(b'\n');
    }
    buf
}

/// Chunks `config.corpus.corpus_dir` into `<dir>/chunks.jsonl` and writes a
/// manifest alongside.
pub fn cmd_ingest(config: &RunConfig, dir: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let corpus_dir = config
        .corpus
        .corpus_dir
        .as_deref()
        .ok_or_else(|| CliError::Usage("--corpus is required".into()))?;
    if !corpus_dir.is_dir() {
        return Err(CliError::Usage(format!(
            "corpus directory {} does not exist",
            corpus_dir.display()
        )));
    }
    let chunking = ChunkingConfig::new(
        config.corpus.chunk_size.unwrap_or(DEFAULT_CHUNK_SIZE),
        config.corpus.overlap.unwrap_or(DEFAULT_OVERLAP),
    )?;
    let documents = corpus::load_corpus(corpus_dir)?;
    let chunks = corpus::chunk_corpus(&documents, &chunking);

    create_dir(dir)?;
    let mut manifest = Vec::new();
    corpus::write_manifest(&documents, &mut manifest)?;
    write_file(&dir.join(MANIFEST_FILE), manifest)?;
    let chunks_path = config
        .corpus
        .chunks_path
        .clone()
        .unwrap_or_else(|| dir.join(super::config::CHUNKS_FILE));
    let mut store = Vec::new();
    corpus::write_chunks(&chunks, &mut store)?;
    write_file(&chunks_path, store)?;

    writeln!(
        out,
        "ingested {} document(s) into {} chunk(s): {}",
        documents.len(),
        chunks.len(),
        chunks_path.display()
    )?;
    Ok(())
}

/// Embeds the chunk store and writes `index.vec` and `index.meta`.
pub fn cmd_index(config: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let index_dir = config.index_dir()?;
    let chunks_path = config.chunks_path()?;
    if !chunks_path.is_file() {
        return Err(CliError::Usage(format!(
            "chunk store {} not found; run `thinkflow ingest` first",
            chunks_path.display()
        )));
    }
    let chunks = corpus::read_chunks(&chunks_path)?;
    if chunks.is_empty() {
        return Err(CliError::Usage(format!(
            "{} holds no chunks",
            chunks_path.display()
        )));
    }
    let provider = config.embed.build_provider()?;
    log::info!("embedding {} chunks with {}", chunks.len(), provider.name());
    let matrix = embed::embed_chunks(
        &chunks,
        provider.as_ref(),
        config.embed.batch_size(),
        config.eval.concurrency(),
    )?;
    let mut index = VectorIndex::with_dim(matrix.dim);
    index.add_matrix(&chunks, &matrix)?;
    index.save(index_dir)?;
    writeln!(
        out,
        "indexed {} chunk(s), dim {}: {}",
        index.len(),
        matrix.dim,
        index_dir.display()
    )?;
    Ok(())
}

fn load_index(config: &RunConfig) -> Result<VectorIndex, CliError> {
    let dir = config.index_dir()?;
    if !dir.join(VEC_FILE).is_file() {
        return Err(CliError::Usage(format!(
            "no index found in {}; run `thinkflow index` first",
            dir.display()
        )));
    }
    Ok(VectorIndex::load(dir)?)
}

fn load_template(config: &RunConfig) -> Result<PromptTemplate, CliError> {
    let path = config
        .generation
        .template_path
        .as_deref()
        .ok_or_else(|| CliError::Usage("--template is required".into()))?;
    let template = PromptTemplate::load(path).map_err(|e| match e {
        RagError::Io(io) => {
            CliError::Usage(format!("cannot read template {}: {io}", path.display()))
        }
        other => other.into(),
    })?;
    match &config.generation.system_path {
        Some(p) => {
            let preamble = fs::read_to_string(p)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())))?;
            Ok(template.with_preamble(preamble.trim_end()))
        }
        None => Ok(template),
    }
}

/// Where completions come from.
enum Backend {
    Http(HttpGenerator),
    Mock(BTreeMap<String, String>),
}

impl Backend {
    fn from_config(config: &RunConfig) -> Result<Self, CliError> {
        match &config.generation.mock_llm {
            Some(path) => Ok(Backend::Mock(evalbench::load_responses(path)?)),
            None => Ok(Backend::Http(HttpGenerator::new(
                config.generation.generation_config(),
            )?)),
        }
    }

    fn respond(&self, key: &str, prompt: &str) -> Result<String, RagError> {
        match self {
            Backend::Http(g) => g.generate(prompt),
            Backend::Mock(map) => map.get(key).cloned().ok_or_else(|| {
                RagError::Contract(format!("mock model has no response for {key:?}"))
            }),
        }
    }
}

fn print_answer(answer: &RagAnswer, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "== retrieved context ({}) ==", answer.retrieved.len())?;
    if answer.retrieved.is_empty() {
        writeln!(out, "{}", crate::ragflow::NO_CONTEXT_MARKER)?;
    }
    for r in &answer.retrieved {
        let meta = format!(
            "[{}] chunk {} | {} | similarity {:.6}",
            r.hit.rank, r.hit.chunk_id, r.doc_id, r.hit.similarity
        );
        writeln!(out, "{meta}\n{}\n", r.text)?;
    }
    let stripped = evalbench::strip_think(&answer.raw_response);
    writeln!(out, "== raw response ==\n{}\n", answer.raw_response)?;
    writeln!(out, "== stripped response ==\n{}\n", stripped.trim())?;
    writeln!(
        out,
        "== extracted answer ==\n{}",
        evalbench::extract_answer(&stripped).label()
    )
}

pub fn cmd_query(
    config: &RunConfig,
    question: &str,
    options: &[String],
    mock_id: &str,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    if options.len() != 4 {
        return Err(CliError::Usage(format!(
            "exactly four --option values (A-D) are required, got {}",
            options.len()
        )));
    }
    let template = load_template(config)?;
    let index = load_index(config)?;
    let provider = config.embed.build_provider()?;
    let backend = Backend::from_config(config)?;
    let pipeline = RagPipeline {
        index: &index,
        provider: provider.as_ref(),
        template: &template,
        k: config.generation.k(),
        embed_options: config.generation.embed_options(),
    };
    let mut answer = pipeline.prepare(question, options)?;
    answer.raw_response = backend.respond(mock_id, &answer.prompt)?;
    print_answer(&answer, out)?;
    Ok(())
}

fn load_items(config: &RunConfig) -> Result<Vec<BenchmarkItem>, CliError> {
    match (&config.eval.benchmark_path, &config.eval.caben_dir) {
        (Some(_), Some(_)) => Err(CliError::Usage(
            "give either --benchmark or --caben-dir, not both".into(),
        )),
        (Some(p), None) => Ok(evalbench::load_benchmark(p)?),
        (None, Some(d)) => Ok(evalbench::load_caben_dir(d)?),
        (None, None) => Err(CliError::Usage("--benchmark is required".into())),
    }
}

#[derive(Serialize)]
struct RetrievalRecord<'a> {
    item_id: &'a str,
    chunk_ids: Vec<u64>,
    similarities: Vec<f64>,
}

struct LiveOutcome {
    answer: Option<RagAnswer>,
    error: Option<String>,
}

/// Scores the benchmark and writes `report.csv`, `report.txt`,
/// `extractions.jsonl` and the config echo to the output directory. Live
/// mode also archives `responses.jsonl` (replayable) and `retrievals.jsonl`.
pub fn cmd_eval(config: &RunConfig, mode: EvalMode, out: &mut dyn Write) -> Result<(), CliError> {
    let items = load_items(config)?;
    let output_dir = config
        .eval
        .output_dir
        .as_deref()
        .ok_or_else(|| CliError::Usage("--out is required".into()))?;
    let rounding = config.eval.rounding()?;
    let threshold = config.eval.threshold();

    let (extractions, archive) = match mode {
        EvalMode::Replay => {
            let path = config
                .eval
                .responses_path
                .as_deref()
                .ok_or_else(|| CliError::Usage("replay mode needs --responses".into()))?;
            let responses = evalbench::load_responses(path)?;
            let extractions: Vec<ExtractionResult> = items
                .iter()
                .map(|item| match responses.get(&item.item_id) {
                    Some(raw) => ExtractionResult::from_response(&item.item_id, raw, item.gold),
                    None => ExtractionResult::failed(&item.item_id, "no archived response"),
                })
                .collect();
            (extractions, None)
        }
        EvalMode::Live => {
            let template = load_template(config)?;
            let index = load_index(config)?;
            let provider = config.embed.build_provider()?;
            let backend = Backend::from_config(config)?;
            let pipeline = RagPipeline {
                index: &index,
                provider: provider.as_ref(),
                template: &template,
                k: config.generation.k(),
                embed_options: config.generation.embed_options(),
            };
            let outcomes = transport::bounded_map(&items, config.eval.concurrency(), |_, item| {
                let result = pipeline
                    .prepare(&item.question, &item.options)
                    .and_then(|mut a| {
                        a.raw_response = backend.respond(&item.item_id, &a.prompt)?;
                        Ok(a)
                    });
                match result {
                    Ok(a) => LiveOutcome {
                        answer: Some(a),
                        error: None,
                    },
                    Err(e) => {
                        log::warn!("item {} failed: {e}", item.item_id);
                        LiveOutcome {
                            answer: None,
                            error: Some(e.to_string()),
                        }
                    }
                }
            });
            let failures = outcomes.iter().filter(|o| o.error.is_some()).count();
            if failures == items.len() {
                let first = outcomes[0].error.clone().unwrap_or_default();
                return Err(CliError::Transport(format!(
                    "every item failed; first error: {first}"
                )));
            }
            if failures > 0 {
                log::warn!("{failures} item(s) failed and were scored as ABSTAIN");
            }
            let extractions = items
                .iter()
                .zip(&outcomes)
                .map(|(item, o)| match (&o.answer, &o.error) {
                    (Some(a), _) => {
                        ExtractionResult::from_response(&item.item_id, &a.raw_response, item.gold)
                    }
                    (None, e) => {
                        ExtractionResult::failed(&item.item_id, e.clone().unwrap_or_default())
                    }
                })
                .collect();
            (extractions, Some(outcomes))
        }
    };

    let report = evalbench::build_report(&items, &extractions, threshold, rounding)?;

    create_dir(output_dir)?;
    write_file(&output_dir.join(CONFIG_ECHO_FILE), config.to_toml())?;
    if let Some(outcomes) = archive {
        let responses: Vec<ResponseRecord> = items
            .iter()
            .zip(&outcomes)
            .map(|(item, o)| ResponseRecord {
                item_id: item.item_id.clone(),
                response: o
                    .answer
                    .as_ref()
                    .map(|a| a.raw_response.clone())
                    .unwrap_or_default(),
            })
            .collect();
        write_file(&output_dir.join("responses.jsonl"), jsonl(&responses))?;
        let retrievals: Vec<RetrievalRecord> = items
            .iter()
            .zip(&outcomes)
            .map(|(item, o)| {
                let hits = o
                    .answer
                    .as_ref()
                    .map(|a| a.retrieved.as_slice())
                    .unwrap_or_default();
                RetrievalRecord {
                    item_id: &item.item_id,
                    chunk_ids: hits.iter().map(|r| r.hit.chunk_id).collect(),
                    similarities: hits.iter().map(|r| r.hit.similarity).collect(),
                }
            })
            .collect();
        write_file(&output_dir.join("retrievals.jsonl"), jsonl(&retrievals))?;
    }
    write_file(&output_dir.join("extractions.jsonl"), jsonl(&extractions))?;
    write_file(&output_dir.join("report.csv"), report.to_csv())?;
    let table = report.to_table();
    write_file(&output_dir.join("report.txt"), &table)?;
    write!(out, "{table}")?;
    Ok(())
}

/// Parses `subject,accuracy` rows; a header row is optional.
pub fn parse_accuracies(input: &str) -> Result<BTreeMap<Subject, f64>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(input.as_bytes());
    let mut out = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Data(format!("line {}: {e}", i + 1)))?;
        let (Some(code), Some(acc)) = (record.get(0), record.get(1)) else {
            return Err(CliError::Data(format!(
                "line {}: expected subject,accuracy",
                i + 1
            )));
        };
        let subject = match code.parse::<Subject>() {
            Ok(s) => s,
            Err(_) if i == 0 => continue,
            Err(m) => return Err(CliError::Data(format!("line {}: {m}", i + 1))),
        };
        let acc: f64 = acc
            .trim_end_matches('%')
            .parse()
            .map_err(|e| CliError::Data(format!("line {}: bad accuracy {acc:?}: {e}", i + 1)))?;
        if !(0.0..=100.0).contains(&acc) {
            return Err(CliError::Data(format!(
                "line {}: accuracy {acc} outside [0, 100]",
                i + 1
            )));
        }
        if out.insert(subject, acc).is_some() {
            return Err(CliError::Data(format!(
                "line {}: duplicate subject {subject}",
                i + 1
            )));
        }
    }
    Ok(out)
}

pub fn cmd_report(
    config: &RunConfig,
    accuracies: Option<&Path>,
    pass_counts: Option<&str>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let rounding = config.eval.rounding()?;
    let threshold = config.eval.threshold();
    let (passes, bottlenecks) = match (accuracies, pass_counts) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            let acc = parse_accuracies(&text)?;
            let passes = evalbench::pass_counts(&acc, threshold)?;
            (passes, Some(evalbench::bottlenecks(&acc, threshold)))
        }
        (None, Some(s)) => (s.parse::<PassCounts>().map_err(CliError::Usage)?, None),
        (None, None) => {
            return Err(CliError::Usage(
                "give --accuracies <csv> or --pass-counts f,i,fn".into(),
            ))
        }
    };
    let src = evalbench::src(&passes);
    writeln!(out, "passes (>= {threshold}%): {passes}")?;
    writeln!(
        out,
        "weighted score:  {}/{}",
        src.weighted_score, src.max_score
    )?;
    writeln!(out, "SRC:             {}", src.fraction().display(rounding))?;
    if let Some(b) = bottlenecks {
        let codes: Vec<&str> = b.iter().map(|s| s.code()).collect();
        let listed = if codes.is_empty() {
            "none".to_owned()
        } else {
            codes.join(", ")
        };
        writeln!(out, "bottlenecks (< {threshold}%): {listed}")?;
    }
    Ok(())
}
