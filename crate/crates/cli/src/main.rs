use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use editvec_core::extract::m2::{parse_m2, write_m2, Annotation, M2Error, M2Sentence};
use editvec_core::extract::{classify_coarse, extract_token_edits};
use editvec_core::metaeval::{agreement_matrix, pairwise_outcomes, parse_human_tsv, HumanScores, MetaEvalError, SystemScores};
use editvec_core::pipeline::{
    correlate, enumerate_sentences, inputs_from_m2, inputs_from_text, norm_stats, norm_stats_tsv, plans_tsv,
    rank_systems, read_lines, read_text, score_corpus, typed_edit_vectors, PipelineError, RankMethod, Ranking,
    Report, RunConfig, SentenceInput,
};
use editvec_core::{EditSet, TokenSeq, Vectorization};

/// Exit status for malformed or inconsistent inputs.
const EXIT_INPUT: u8 = 2;
/// Exit status when the embedding store or service fails.
const EXIT_DEPENDENCY: u8 = 3;

#[derive(Debug)]
struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn input(msg: impl Display) -> Self {
        Failure { code: EXIT_INPUT, msg: msg.to_string() }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let code = if e.is_dependency_failure() { EXIT_DEPENDENCY } else { EXIT_INPUT };
        Failure { code, msg: e.to_string() }
    }
}

impl From<M2Error> for Failure {
    fn from(e: M2Error) -> Self {
        Failure::input(e)
    }
}

impl From<MetaEvalError> for Failure {
    fn from(e: MetaEvalError) -> Self {
        Failure::input(e)
    }
}

type CliResult = Result<(), Failure>;

#[derive(Parser, Debug)]
#[command(name = "editvec", version, about = "Edit-vector transport scoring for grammatical error correction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EnumerateMode {
    Remove,
    Add,
    Both,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Baseline {
    Errant,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Trueskill,
    ExpectedWins,
}

/// Corpus inputs shared by `enumerate` and `score`.
#[derive(clap::Args, Debug)]
struct CorpusArgs {
    /// Source sentences, one tokenized sentence per line.
    #[arg(long)]
    src: Option<PathBuf>,
    /// Hypothesis sentences aligned with --src.
    #[arg(long)]
    hyp: Option<PathBuf>,
    /// Reference files aligned with --src, comma-separated.
    #[arg(long, value_delimiter = ',')]
    refs: Vec<PathBuf>,
    /// Hypothesis edits as M2 (annotator 0); replaces extraction.
    #[arg(long, requires = "ref_m2")]
    hyp_m2: Option<PathBuf>,
    /// Reference edits as M2, one reference per annotator.
    #[arg(long, requires = "hyp_m2")]
    ref_m2: Option<PathBuf>,
}

impl CorpusArgs {
    fn load(&self) -> Result<Vec<SentenceInput>, Failure> {
        if let (Some(h), Some(r)) = (&self.hyp_m2, &self.ref_m2) {
            return Ok(inputs_from_m2(&parse_m2(h)?, &parse_m2(r)?)?);
        }
        let (Some(src), Some(hyp)) = (&self.src, &self.hyp) else {
            return Err(Failure::input("either --src, --hyp and --refs or --hyp-m2 and --ref-m2 are required"));
        };
        if self.refs.is_empty() {
            return Err(Failure::input("--refs needs at least one file"));
        }
        let refs = self.refs.iter().map(read_lines).collect::<Result<Vec<_>, _>>()?;
        Ok(inputs_from_text(&read_lines(src)?, &read_lines(hyp)?, &refs)?)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Extract edits from parallel source/corrected files as M2.
    Extract {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        cor: PathBuf,
        /// Output path; stdout when omitted.
        #[arg(long)]
        m2_out: Option<PathBuf>,
    },
    /// List every sentence the scorer will embed, one per line.
    Enumerate {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, value_enum, default_value = "remove")]
        mode: EnumerateMode,
    },
    /// Score hypotheses against references and print a JSON report.
    Score {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// TOML run configuration; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write per-sentence transport plans as TSV.
        #[arg(long)]
        plans_out: Option<PathBuf>,
        /// Also report an exact-match baseline.
        #[arg(long, value_enum)]
        baseline: Option<Baseline>,
        /// Scoring threads; 0 uses all cores.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank systems from their score reports.
    Rank {
        /// Score reports, comma-separated.
        #[arg(long, value_delimiter = ',', required = true)]
        scores: Vec<PathBuf>,
        /// System names in the order of --scores.
        #[arg(long, value_delimiter = ',', required = true)]
        names: Vec<String>,
        #[arg(long, value_enum, default_value = "trueskill")]
        method: Method,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Correlate a ranking with human judgments.
    Correlate {
        #[arg(long)]
        ranking: PathBuf,
        /// TSV of system_id, score or system_id, sentence_id, score.
        #[arg(long)]
        human: PathBuf,
    },
    /// Per-pair agreement between metric and human sentence-level preferences.
    Agreement {
        #[arg(long, value_delimiter = ',', required = true)]
        metric_scores: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',', required = true)]
        names: Vec<String>,
        /// TSV of system_id, sentence_id, score.
        #[arg(long)]
        human_scores: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Edit-vector norm statistics per error type.
    NormStats {
        #[arg(long, required_unless_present = "m2")]
        src: Option<PathBuf>,
        #[arg(long, required_unless_present = "m2")]
        cor: Option<PathBuf>,
        /// Typed edits as M2 (annotator 0); replaces --src/--cor.
        #[arg(long)]
        m2: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, Failure> {
    match path {
        Some(p) => Ok(RunConfig::load(p)?),
        None => Ok(RunConfig::default()),
    }
}

fn emit(out: Option<&Path>, text: &str) -> CliResult {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::input(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::input(format!("stdout: {e}")))
        }
    }
}

fn build_embedder(cfg: &RunConfig) -> Result<Box<dyn editvec_core::Embedder>, Failure> {
    cfg.embedder.build().map_err(|e| Failure {
        code: EXIT_DEPENDENCY,
        msg: format!("embedder {}: {e}", cfg.embedder),
    })
}

fn extract(src: &Path, cor: &Path, m2_out: Option<&Path>) -> CliResult {
    let src = read_lines(src)?;
    let cor = read_lines(cor)?;
    if src.len() != cor.len() {
        return Err(Failure::input(format!(
            "line count mismatch: --src has {} lines, --cor has {}",
            src.len(),
            cor.len()
        )));
    }
    let sentences: Vec<M2Sentence> = src
        .iter()
        .zip(&cor)
        .map(|(s, c)| {
            let source = TokenSeq::tokenize(s);
            let edits = extract_token_edits(&source, &TokenSeq::tokenize(c));
            let typed = edits
                .iter()
                .map(|e| e.clone().with_label(classify_coarse(e, &source)))
                .collect();
            let edits = EditSet::new(typed).expect("labels do not change spans");
            M2Sentence {
                source,
                annotations: vec![Annotation { annotator: 0, edits }],
            }
        })
        .collect();
    match m2_out {
        Some(p) => Ok(write_m2(&sentences, p)?),
        None => emit(None, &editvec_core::extract::m2::format_m2(&sentences)),
    }
}

fn enumerate(corpus: &CorpusArgs, mode: EnumerateMode) -> CliResult {
    let inputs = corpus.load()?;
    let modes: &[Vectorization] = match mode {
        EnumerateMode::Remove => &[Vectorization::Remove],
        EnumerateMode::Add => &[Vectorization::Add],
        EnumerateMode::Both => &[Vectorization::Remove, Vectorization::Add],
    };
    let mut text = String::new();
    for s in enumerate_sentences(&inputs, modes)? {
        text.push_str(&s);
        text.push('\n');
    }
    emit(None, &text)
}

fn score(
    corpus: &CorpusArgs,
    config: Option<&Path>,
    plans_out: Option<&Path>,
    baseline: bool,
    workers: usize,
    out: Option<&Path>,
) -> CliResult {
    let cfg = load_config(config)?;
    let inputs = corpus.load()?;
    let embedder = build_embedder(&cfg)?;
    let report = score_corpus(&inputs, embedder.as_ref(), &cfg, workers, baseline)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    if let Some(p) = plans_out {
        fs::write(p, plans_tsv(&report)).map_err(|e| Failure::input(format!("{}: {e}", p.display())))?;
    }
    let mut json = report.to_json();
    json.push('\n');
    emit(out, &json)
}

fn load_systems(paths: &[PathBuf], names: &[String]) -> Result<Vec<SystemScores>, Failure> {
    if paths.len() != names.len() {
        return Err(Failure::input(format!(
            "{} score files but {} names",
            paths.len(),
            names.len()
        )));
    }
    paths
        .iter()
        .zip(names)
        .map(|(p, n)| Ok(Report::load(p)?.system_scores(n)))
        .collect()
}

fn rank(paths: &[PathBuf], names: &[String], method: Method, config: Option<&Path>, out: Option<&Path>) -> CliResult {
    let cfg = load_config(config)?;
    let systems = load_systems(paths, names)?;
    let method = match method {
        Method::Trueskill => RankMethod::Trueskill,
        Method::ExpectedWins => RankMethod::ExpectedWins,
    };
    let mut json = rank_systems(&systems, method, &cfg)?.to_json();
    json.push('\n');
    emit(out, &json)
}

fn correlate_cmd(ranking: &Path, human: &Path) -> CliResult {
    let ranking = Ranking::load(ranking)?;
    let human = parse_human_tsv(&read_text(human)?)?.system_level();
    let metric: Vec<(String, f64)> = ranking.ranking.iter().map(|r| (r.system.clone(), r.score)).collect();
    let c = correlate(&metric, &human)?;
    let mut json = serde_json::to_string_pretty(&c).expect("correlation serialises");
    json.push('\n');
    emit(None, &json)
}

fn agreement(paths: &[PathBuf], names: &[String], human: &Path, config: Option<&Path>, out: Option<&Path>) -> CliResult {
    let cfg = load_config(config)?;
    let metric = load_systems(paths, names)?;
    let HumanScores::Sentence(human) = parse_human_tsv(&read_text(human)?)? else {
        return Err(Failure::input("agreement needs sentence-level human scores (system_id, sentence_id, score)"));
    };
    let ordered: Vec<SystemScores> = names
        .iter()
        .map(|n| {
            human
                .iter()
                .find(|h| &h.system == n)
                .cloned()
                .ok_or_else(|| Failure::input(format!("no human scores for system {n:?}")))
        })
        .collect::<Result<_, _>>()?;
    let m = pairwise_outcomes(&metric, cfg.tie_epsilon)?;
    let h = pairwise_outcomes(&ordered, cfg.tie_epsilon)?;
    emit(out, &agreement_matrix(&m, &h)?.to_tsv())
}

fn norm_stats_cmd(src: Option<&Path>, cor: Option<&Path>, m2: Option<&Path>, config: Option<&Path>) -> CliResult {
    let cfg = load_config(config)?;
    let sentences: Vec<(TokenSeq, EditSet)> = match (m2, src, cor) {
        (Some(m2), _, _) => parse_m2(m2)?
            .into_iter()
            .map(|s| {
                let edits = s.edits_of(0).cloned().unwrap_or_else(EditSet::empty);
                (s.source, edits)
            })
            .collect(),
        (None, Some(src), Some(cor)) => {
            let src = read_lines(src)?;
            let cor = read_lines(cor)?;
            if src.len() != cor.len() {
                return Err(Failure::input(format!(
                    "line count mismatch: --src has {} lines, --cor has {}",
                    src.len(),
                    cor.len()
                )));
            }
            src.iter()
                .zip(&cor)
                .map(|(s, c)| {
                    let source = TokenSeq::tokenize(s);
                    let edits = extract_token_edits(&source, &TokenSeq::tokenize(c));
                    (source, edits)
                })
                .collect()
        }
        _ => return Err(Failure::input("either --m2 or both --src and --cor are required")),
    };
    let embedder = build_embedder(&cfg)?;
    let typed = typed_edit_vectors(&sentences, embedder.as_ref(), cfg.vectorization)?;
    emit(None, &norm_stats_tsv(&norm_stats(&typed)))
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Extract { src, cor, m2_out } => extract(&src, &cor, m2_out.as_deref()),
        Command::Enumerate { corpus, mode } => enumerate(&corpus, mode),
        Command::Score { corpus, config, plans_out, baseline, workers, out } => score(
            &corpus,
            config.as_deref(),
            plans_out.as_deref(),
            baseline.is_some(),
            workers,
            out.as_deref(),
        ),
        Command::Rank { scores, names, method, config, out } => {
            rank(&scores, &names, method, config.as_deref(), out.as_deref())
        }
        Command::Correlate { ranking, human } => correlate_cmd(&ranking, &human),
        Command::Agreement { metric_scores, names, human_scores, config, out } => {
            agreement(&metric_scores, &names, &human_scores, config.as_deref(), out.as_deref())
        }
        Command::NormStats { src, cor, m2, config } => {
            norm_stats_cmd(src.as_deref(), cor.as_deref(), m2.as_deref(), config.as_deref())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
