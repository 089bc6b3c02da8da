use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{ArgGroup, Args};
use serde::Serialize;
use serde_json::{json, Value};

use idr_core::metrics::{read_scores_csv, write_scores_csv};
use idr_core::panel::{
    median_split_from_rows, read_csv, write_csv, PersonSplit, SplitReport, PAPER_COLUMNS, PERSON_COLUMNS,
    PERSON_YEAR_COLUMNS,
};
use idr_core::sc_space::{counts_to_text, load_similarity_fixture, similarity_to_text};
use idr_core::simgen::write_simulation;
use idr_core::stats::{write_grid_csv, write_models_csv, PanelTables};
use idr_core::{
    build_cocitation, build_panels, generate, load_corpus, median_split_variance, run_h_models, score_corpus,
    sum_counts, to_cosine, CollabRule, Corpus, CorpusPaths, EpochRegistry, LoadReport, PaperRow, PanelConfig,
    PersonYearRow, SimConfig, Similarity, Strictness, SuiteSpec, YearWindow,
};

use crate::manifest::OutDir;

pub const SCORES_FILE: &str = "scores.csv";
pub const PERSON_PANEL_FILE: &str = "panel_person.csv";
pub const PERSON_YEAR_PANEL_FILE: &str = "panel_person_year.csv";
pub const PAPER_PANEL_FILE: &str = "panel_paper.csv";
pub const FIELD_PANEL_FILE: &str = "panel_fields.csv";
pub const MODELS_FILE: &str = "models.csv";
pub const GRID_FILE: &str = "figure_grid.csv";
pub const SPLIT_FILE: &str = "variance_split.json";
pub const SPLIT_PERSONS_FILE: &str = "variance_split_persons.csv";
pub const SUMMED_EPOCH: &str = "summed";

/// Bad invocation that clap cannot catch on its own.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn strictness(strict: bool) -> Strictness {
    if strict {
        Strictness::Strict
    } else {
        Strictness::Lenient
    }
}

fn report_warnings(report: &LoadReport) {
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
}

fn corpus_inputs(paths: &CorpusPaths) -> Vec<PathBuf> {
    paths.iter().map(Path::to_path_buf).collect()
}

fn open_corpus(dir: &Path, strict: bool) -> Result<(Corpus, CorpusPaths, LoadReport)> {
    if !dir.is_dir() {
        return Err(idr_core::Error::Invalid(format!("corpus directory {} not found", dir.display())).into());
    }
    let paths = CorpusPaths::in_dir(dir);
    let (corpus, report) = load_corpus(&paths, strictness(strict))?;
    report_warnings(&report);
    Ok((corpus, paths, report))
}

fn load_matrix(path: &Path, corpus: &Corpus) -> Result<Similarity> {
    let m: Similarity = load_similarity_fixture(path)?;
    m.aligned_to(corpus.catalog.labels())
        .with_context(|| format!("aligning {} to the corpus categories", path.display()))
}

fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> idr_core::Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

fn read_table<T: for<'de> serde::Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| idr_core::Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(read_csv(BufReader::new(file), &path.display().to_string())?)
}

// build-matrix ---------------------------------------------------------------

#[derive(Debug, Args, Serialize)]
pub struct BuildMatrixArgs {
    /// Papers file (JSON Lines) whose reference lists are counted.
    #[arg(long, value_name = "FILE")]
    pub papers: PathBuf,
    /// Journals file (JSON Lines) mapping journals to subject categories.
    #[arg(long, value_name = "FILE")]
    pub journals: PathBuf,
    /// Comma-separated epoch years; each gets its own count and similarity matrix.
    #[arg(long, value_name = "YEARS", value_delimiter = ',', default_value = "1987,1997,2007")]
    pub epochs: Vec<i32>,
    /// Window width in years; epoch E counts papers published in [E - width, E - 1].
    #[arg(long, value_name = "YEARS", default_value_t = 5, value_parser = clap::value_parser!(i32).range(1..))]
    pub window: i32,
    /// Abort on references to journals missing from the journals file instead of dropping them.
    #[arg(long)]
    pub strict: bool,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    #[serde(skip)]
    pub out: PathBuf,
}

pub fn build_matrix(args: &BuildMatrixArgs) -> Result<()> {
    let paths = CorpusPaths {
        papers: Some(args.papers.clone()),
        journals: Some(args.journals.clone()),
        ..CorpusPaths::default()
    };
    let (corpus, report) = load_corpus(&paths, strictness(args.strict))?;
    report_warnings(&report);
    let mut epochs = args.epochs.clone();
    epochs.sort_unstable();
    epochs.dedup();

    let mut out = OutDir::create(&args.out)?;
    let mut summary = BTreeMap::new();
    let mut all = Vec::new();
    for &epoch in &epochs {
        let window = YearWindow::preceding(epoch, args.window);
        let counts = build_cocitation(&corpus, window)?;
        let n = corpus.papers.iter().filter(|p| window.contains(p.year)).count();
        out.write(&format!("cocitation_{epoch}.txt"), counts_to_text(&counts))?;
        out.write(&format!("similarity_{epoch}.sim"), similarity_to_text(&to_cosine::<f64>(&counts)))?;
        summary.insert(format!("papers_in_window_{epoch}"), json!(n));
        all.push(counts);
    }
    let summed = sum_counts(&all)?;
    out.write(&format!("cocitation_{SUMMED_EPOCH}.txt"), counts_to_text(&summed))?;
    out.write(&format!("similarity_{SUMMED_EPOCH}.sim"), similarity_to_text(&to_cosine::<f64>(&summed)))?;
    summary.insert("categories".into(), json!(corpus.catalog.len()));
    summary.insert("dropped_references".into(), json!(report.dropped_references()));
    out.finish("build-matrix", args, &corpus_inputs(&paths), summary)?;
    Ok(())
}

// score ----------------------------------------------------------------------

#[derive(Debug, Args, Serialize)]
pub struct ScoreArgs {
    /// Corpus directory holding papers.jsonl and journals.jsonl (persons and fields are optional).
    #[arg(long, value_name = "DIR")]
    pub corpus: PathBuf,
    /// Similarity matrix as [YEAR=]PATH; repeat with years to score each paper against the nearest epoch.
    #[arg(long, value_name = "[YEAR=]PATH", required = true)]
    pub matrix: Vec<String>,
    /// Abort on references to unknown journals instead of dropping them.
    #[arg(long)]
    pub strict: bool,
    /// Output directory; receives scores.csv.
    #[arg(long, value_name = "DIR")]
    #[serde(skip)]
    pub out: PathBuf,
}

fn parse_matrix_arg(arg: &str) -> (Option<i32>, PathBuf) {
    match arg.split_once('=') {
        Some((year, path)) => match year.trim().parse::<i32>() {
            Ok(y) => (Some(y), PathBuf::from(path)),
            Err(_) => (None, PathBuf::from(arg)),
        },
        None => (None, PathBuf::from(arg)),
    }
}

pub fn score(args: &ScoreArgs) -> Result<()> {
    let (corpus, paths, report) = open_corpus(&args.corpus, args.strict)?;
    let specs: Vec<_> = args.matrix.iter().map(|m| parse_matrix_arg(m)).collect();
    if specs.len() > 1 && specs.iter().any(|(y, _)| y.is_none()) {
        return Err(usage("with several --matrix values, each needs a YEAR= prefix"));
    }
    let mut registry = EpochRegistry::new();
    for (year, path) in &specs {
        let year = year.unwrap_or(0);
        if registry.epochs().any(|e| e == year) {
            return Err(usage(format!("epoch {year} given twice")));
        }
        registry.insert(year, load_matrix(path, &corpus)?);
    }
    let scores = score_corpus(&corpus, &registry);

    let mut out = OutDir::create(&args.out)?;
    out.write(SCORES_FILE, csv_bytes(|b| write_scores_csv(&scores, b))?)?;
    let defined: Vec<f64> = scores.values().filter_map(|m| m.idr).collect();
    let summary = BTreeMap::from([
        ("papers".to_owned(), json!(scores.len())),
        ("scored".to_owned(), json!(defined.len())),
        ("undefined".to_owned(), json!(scores.len() - defined.len())),
        ("zero".to_owned(), json!(defined.iter().filter(|&&v| v == 0.0).count())),
        ("dropped_references".to_owned(), json!(report.dropped_references())),
    ]);
    let mut inputs = corpus_inputs(&paths);
    inputs.extend(specs.into_iter().map(|(_, p)| p));
    out.finish("score", args, &inputs, summary)?;
    Ok(())
}

// panel ----------------------------------------------------------------------

#[derive(Debug, Args, Serialize)]
pub struct PanelArgs {
    /// Corpus directory (papers, journals, persons, fields).
    #[arg(long, value_name = "DIR")]
    pub corpus: PathBuf,
    /// scores.csv written by `idr score`.
    #[arg(long, value_name = "FILE")]
    pub scores: PathBuf,
    /// Similarity matrix used for pooled-oeuvre multidisciplinarity.
    #[arg(long, value_name = "FILE")]
    pub similarity: PathBuf,
    /// Year at which person-level professional age is measured (default: last corpus year).
    #[arg(long, value_name = "YEAR")]
    pub reference_year: Option<i32>,
    /// What counts as a repeat collaboration: the identical author set, or any shared coauthor.
    #[arg(long, value_name = "RULE", value_enum, default_value = "exact-set")]
    pub collab_rule: CollabRuleArg,
    /// Abort on references to unknown journals instead of dropping them.
    #[arg(long)]
    pub strict: bool,
    /// Output directory; receives the person, person-year, paper and field tables.
    #[arg(long, value_name = "DIR")]
    #[serde(skip)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CollabRuleArg {
    ExactSet,
    AnyPair,
}

impl From<CollabRuleArg> for CollabRule {
    fn from(r: CollabRuleArg) -> Self {
        match r {
            CollabRuleArg::ExactSet => CollabRule::ExactSet,
            CollabRuleArg::AnyPair => CollabRule::AnyPair,
        }
    }
}

pub fn panel(args: &PanelArgs) -> Result<()> {
    let (corpus, paths, _) = open_corpus(&args.corpus, args.strict)?;
    let file = File::open(&args.scores).map_err(|e| idr_core::Error::Io {
        path: args.scores.clone(),
        source: e,
    })?;
    let scores = read_scores_csv(BufReader::new(file), &args.scores.display().to_string())?;
    let sim = load_matrix(&args.similarity, &corpus)?;
    let cfg = PanelConfig {
        reference_year: args.reference_year,
        collab_rule: args.collab_rule.into(),
    };
    let panels = build_panels(&corpus, &scores, &sim, &cfg)?;

    let mut out = OutDir::create(&args.out_dir)?;
    out.write(PERSON_PANEL_FILE, csv_bytes(|b| write_csv(&panels.person, PERSON_COLUMNS, b))?)?;
    out.write(PERSON_YEAR_PANEL_FILE, csv_bytes(|b| write_csv(&panels.person_year, PERSON_YEAR_COLUMNS, b))?)?;
    out.write(PAPER_PANEL_FILE, csv_bytes(|b| write_csv(&panels.paper, PAPER_COLUMNS, b))?)?;
    out.write(FIELD_PANEL_FILE, csv_bytes(|b| write_csv(&panels.fields, &["field_id", "mean_idr", "n_members"], b))?)?;

    let (ex_person, ex_py, ex_paper) = panels.n_excluded();
    let summary = BTreeMap::from([
        ("rows_person".to_owned(), json!(panels.person.len())),
        ("rows_person_year".to_owned(), json!(panels.person_year.len())),
        ("rows_paper".to_owned(), json!(panels.paper.len())),
        ("excluded_person".to_owned(), json!(ex_person)),
        ("excluded_person_year".to_owned(), json!(ex_py)),
        ("excluded_paper".to_owned(), json!(ex_paper)),
    ]);
    let mut inputs = corpus_inputs(&paths);
    inputs.extend([args.scores.clone(), args.similarity.clone()]);
    out.finish("panel", args, &inputs, summary)?;
    Ok(())
}

// regress --------------------------------------------------------------------

#[derive(Debug, Args, Serialize)]
pub struct RegressArgs {
    /// Directory written by `idr panel`.
    #[arg(long, value_name = "DIR")]
    pub panel: PathBuf,
    /// Model suite in TOML; the built-in productivity and visibility suite is used when omitted.
    #[arg(long, value_name = "FILE")]
    pub spec: Option<PathBuf>,
    /// Output directory; receives models.csv and figure_grid.csv.
    #[arg(long, value_name = "DIR")]
    #[serde(skip)]
    pub out: PathBuf,
}

fn read_suite(path: &Path) -> Result<SuiteSpec> {
    let text = fs::read_to_string(path).map_err(|e| idr_core::Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    toml::from_str(&text).map_err(|e| {
        idr_core::Error::Parse {
            file: path.display().to_string(),
            line: 0,
            message: e.to_string(),
        }
        .into()
    })
}

pub fn regress(args: &RegressArgs) -> Result<()> {
    let suite = match &args.spec {
        Some(p) => read_suite(p)?,
        None => SuiteSpec::default(),
    };
    let py_path = args.panel.join(PERSON_YEAR_PANEL_FILE);
    let paper_path = args.panel.join(PAPER_PANEL_FILE);
    let person_year: Vec<PersonYearRow> = read_table(&py_path)?;
    let paper: Vec<PaperRow> = read_table(&paper_path)?;
    let report = run_h_models(
        PanelTables {
            person_year: &person_year,
            paper: &paper,
        },
        &suite,
    )?;

    let mut out = OutDir::create(&args.out)?;
    out.write(MODELS_FILE, csv_bytes(|b| write_models_csv(&report, suite.cluster_se, b))?)?;
    out.write(GRID_FILE, csv_bytes(|b| write_grid_csv(&report, b))?)?;
    let summary = report
        .fits
        .iter()
        .map(|f| {
            let r = &f.result;
            let v = json!({
                "n_obs": r.n_obs,
                "n_entities": r.n_entities,
                "n_excluded": f.n_excluded,
                "n_missing": f.n_missing,
                "dropped": r.dropped,
                "iterations": r.convergence.as_ref().map(|c| c.iterations),
            });
            (f.name.clone(), v)
        })
        .collect();
    let mut inputs = vec![py_path, paper_path];
    inputs.extend(args.spec.clone());
    out.finish("regress", &json!({ "panel": args.panel, "suite": suite }), &inputs, summary)?;
    Ok(())
}

// variance-split -------------------------------------------------------------

#[derive(Debug, Args, Serialize)]
#[command(group(ArgGroup::new("source").required(true).args(["panel", "corpus"])))]
pub struct VarianceSplitArgs {
    /// Directory written by `idr panel`; the split uses panel_paper.csv.
    #[arg(long, value_name = "DIR")]
    pub panel: Option<PathBuf>,
    /// Corpus directory, as an alternative to --panel (needs --scores).
    #[arg(long, value_name = "DIR", requires = "scores")]
    pub corpus: Option<PathBuf>,
    /// scores.csv written by `idr score`; used with --corpus.
    #[arg(long, value_name = "FILE", requires = "corpus")]
    pub scores: Option<PathBuf>,
    /// Output directory; receives variance_split.json and variance_split_persons.csv.
    #[arg(long, value_name = "DIR")]
    #[serde(skip)]
    pub out: PathBuf,
}

fn split_json(r: &SplitReport) -> Value {
    json!({
        "median_idr": r.median_idr,
        "persons": r.persons.len(),
        "mean_sd_low": r.mean_sd_low,
        "mean_sd_high": r.mean_sd_high,
        "t": r.paired.map(|t| t.t),
        "df": r.paired.map(|t| t.df),
        "p_two_tailed": r.paired.map(|t| t.p_two_tailed),
    })
}

pub fn variance_split(args: &VarianceSplitArgs) -> Result<()> {
    let (report, inputs) = match (&args.panel, &args.corpus, &args.scores) {
        (Some(dir), _, _) => {
            let path = dir.join(PAPER_PANEL_FILE);
            let rows: Vec<PaperRow> = read_table(&path)?;
            (median_split_from_rows(&rows), vec![path])
        }
        (None, Some(dir), Some(scores)) => {
            let (corpus, paths, _) = open_corpus(dir, false)?;
            let file = File::open(scores).map_err(|e| idr_core::Error::Io {
                path: scores.clone(),
                source: e,
            })?;
            let scores_map = read_scores_csv(BufReader::new(file), &scores.display().to_string())?;
            let mut inputs = corpus_inputs(&paths);
            inputs.push(scores.clone());
            (median_split_variance(&corpus, &scores_map), inputs)
        }
        _ => return Err(usage("give --panel, or --corpus with --scores")),
    };

    let mut out = OutDir::create(&args.out)?;
    let summary = split_json(&report);
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    out.write(SPLIT_FILE, text)?;
    let header = ["person_id", "n_low", "n_high", "sd_low", "sd_high"];
    out.write(SPLIT_PERSONS_FILE, csv_bytes(|b| write_csv::<PersonSplit, _>(&report.persons, &header, b))?)?;
    let summary = summary.as_object().cloned().unwrap_or_default().into_iter().collect();
    out.finish("variance-split", args, &inputs, summary)?;
    Ok(())
}

// simulate -------------------------------------------------------------------

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// Generator settings in TOML; omitted keys take their defaults. Must not contain `seed`.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Random seed; every run with the same seed and config produces identical files.
    #[arg(long, value_name = "N")]
    pub seed: u64,
    /// Output directory; receives a corpus, similarity.sim and ground_truth.json.
    #[arg(long, value_name = "DIR")]
    #[serde(skip)]
    pub out_dir: PathBuf,
}

fn read_sim_config(path: &Path) -> Result<SimConfig> {
    let text = fs::read_to_string(path).map_err(|e| idr_core::Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let parse_err = |e: toml::de::Error| -> anyhow::Error {
        idr_core::Error::Parse {
            file: path.display().to_string(),
            line: 0,
            message: e.to_string(),
        }
        .into()
    };
    let table: toml::Table = toml::from_str(&text).map_err(parse_err)?;
    if table.contains_key("seed") {
        return Err(usage(format!("{}: set the seed with --seed, not in the config file", path.display())));
    }
    toml::from_str(&text).map_err(parse_err)
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(p) => read_sim_config(p)?,
        None => SimConfig::default(),
    };
    cfg.seed = args.seed;
    let sim = generate(&cfg)?;

    let mut out = OutDir::create(&args.out_dir)?;
    let files = write_simulation(&sim, &args.out_dir)?;
    for path in files.corpus.iter().chain([files.similarity.as_path(), files.ground_truth.as_path()]) {
        if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
            out.record(name);
        }
    }
    let summary = BTreeMap::from([
        ("persons".to_owned(), json!(sim.corpus.persons.len())),
        ("papers".to_owned(), json!(sim.corpus.papers.len())),
        ("categories".to_owned(), json!(sim.corpus.catalog.len())),
    ]);
    let inputs: Vec<PathBuf> = args.config.iter().cloned().collect();
    out.finish("simulate", &cfg, &inputs, summary)?;
    Ok(())
}
