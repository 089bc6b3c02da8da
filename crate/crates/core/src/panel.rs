//! Person, person-year and person-paper observation tables.
//!
//! Rows whose integration score is zero or undefined are kept but flagged
//! with `excluded = 1`; model fitting filters on that flag.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, PaperRecord};
use crate::error::{Error, Result};
use crate::metrics::{multidisciplinarity, variety, PaperMetrics};
use crate::sc_space::SimilarityMatrix;
use crate::stats::describe::{mean, median, sample_sd};
use crate::stats::ttest::{paired_ttest, TTest};

/// Width of the period buckets used as time dummies.
pub const PERIOD_YEARS: i32 = 5;

/// Years between PhD and first publication assumed when the PhD year is missing.
pub const IMPUTED_PHD_OFFSET: i32 = 5;

pub type Scores = BTreeMap<String, PaperMetrics<f64>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CollabRule {
    /// The identical author set published together before.
    #[default]
    ExactSet,
    /// Some pair of this paper's authors published together before.
    AnyPair,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PanelConfig {
    /// Year against which person-level professional age is measured;
    /// defaults to the last publication year in the corpus.
    pub reference_year: Option<i32>,
    pub collab_rule: CollabRule,
}

/// Productivity with each paper split evenly among its authors.
pub fn coauthor_weighted_count<'a>(papers: impl IntoIterator<Item = &'a PaperRecord>) -> Result<f64> {
    papers.into_iter().try_fold(0.0, |acc, p| match p.n_authors() {
        0 => Err(Error::NoAuthors(p.paper_id.clone())),
        n => Ok(acc + 1.0 / n as f64),
    })
}

fn author_set(p: &PaperRecord) -> BTreeSet<&str> {
    p.author_ids.iter().map(String::as_str).collect()
}

fn author_pairs(p: &PaperRecord) -> Vec<(&str, &str)> {
    let set: Vec<&str> = author_set(p).into_iter().collect();
    let mut pairs = Vec::new();
    for (i, a) in set.iter().enumerate() {
        for b in &set[i + 1..] {
            pairs.push((*a, *b));
        }
    }
    pairs
}

/// Whether `paper`'s authors published together in some paper of `history`
/// that precedes it in (year, paper_id) order.
pub fn repeat_collaboration(paper: &PaperRecord, history: &[&PaperRecord], rule: CollabRule) -> bool {
    let key = (paper.year, paper.paper_id.as_str());
    let earlier = history
        .iter()
        .filter(|h| (h.year, h.paper_id.as_str()) < key);
    match rule {
        CollabRule::ExactSet => {
            let set = author_set(paper);
            earlier.into_iter().any(|h| author_set(h) == set)
        }
        CollabRule::AnyPair => {
            let pairs = author_pairs(paper);
            earlier.into_iter().any(|h| {
                let hs = author_set(h);
                pairs.iter().any(|(a, b)| hs.contains(a) && hs.contains(b))
            })
        }
    }
}

/// Repeat-collaboration flag for every paper in one chronological sweep.
pub fn repeat_flags(corpus: &Corpus, rule: CollabRule) -> HashMap<String, bool> {
    let mut order: Vec<&PaperRecord> = corpus.papers.iter().collect();
    order.sort_by(|a, b| (a.year, &a.paper_id).cmp(&(b.year, &b.paper_id)));
    let mut seen_sets: HashSet<Vec<&str>> = HashSet::new();
    let mut seen_pairs: HashSet<(&str, &str)> = HashSet::new();
    let mut out = HashMap::with_capacity(order.len());
    for p in order {
        let set: Vec<&str> = author_set(p).into_iter().collect();
        let pairs = author_pairs(p);
        let flag = match rule {
            CollabRule::ExactSet => seen_sets.contains(&set),
            CollabRule::AnyPair => pairs.iter().any(|pr| seen_pairs.contains(pr)),
        };
        out.insert(p.paper_id.clone(), flag);
        seen_sets.insert(set);
        seen_pairs.extend(pairs);
    }
    out
}

/// Label of the five-year window containing `year`, e.g. `1985-1989`.
pub fn period_bucket(year: i32) -> String {
    let start = year.div_euclid(PERIOD_YEARS) * PERIOD_YEARS;
    format!("{}-{}", start, start + PERIOD_YEARS - 1)
}

fn flag(b: bool) -> u8 {
    u8::from(b)
}

fn excluded(idr: Option<f64>) -> bool {
    idr.is_none_or(|v| v == 0.0)
}

/// PhD year, imputed from the first publication when missing.
fn phd_year(corpus: &Corpus, person_id: &str, first_pub: i32) -> (i32, bool) {
    match corpus.persons.get(person_id).and_then(|p| p.phd_year) {
        Some(y) => (y, false),
        None => (first_pub - IMPUTED_PHD_OFFSET, true),
    }
}

fn jif(corpus: &Corpus, p: &PaperRecord) -> Option<f64> {
    corpus.journal(&p.journal_id).and_then(|j| j.impact_factor)
}

fn idr_of(scores: &Scores, p: &PaperRecord) -> Option<f64> {
    scores.get(&p.paper_id).and_then(|m| m.idr)
}

fn sorted_papers<'a>(corpus: &'a Corpus, person_id: &'a str) -> Vec<&'a PaperRecord> {
    let mut papers: Vec<&PaperRecord> = corpus.papers_of(person_id).collect();
    papers.sort_by(|a, b| (a.year, &a.paper_id).cmp(&(b.year, &b.paper_id)));
    papers
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldIdr {
    pub field_id: String,
    /// Unweighted mean of member scientists' mean scores; `None` if no member has one.
    pub mean_idr: Option<f64>,
    pub n_members: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonYearRow {
    pub person_id: String,
    pub year: i32,
    pub period: String,
    pub productivity: u32,
    pub weighted_productivity: f64,
    pub citations: u64,
    pub mean_idr: Option<f64>,
    pub n_scored: u32,
    pub mean_authors: f64,
    pub mean_jif: Option<f64>,
    pub repeat_collab_share: f64,
    pub mean_reach: f64,
    pub lag_cum_pubs: u32,
    pub lag_cum_cites_log: f64,
    pub professional_age: i32,
    pub age_imputed: u8,
    pub field_id: String,
    pub field_idr: Option<f64>,
    pub excluded: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonRow {
    pub person_id: String,
    pub field_id: String,
    pub total_pubs: u32,
    pub total_pubs_weighted: f64,
    pub total_citations: u64,
    pub mean_idr: Option<f64>,
    pub n_scored: u32,
    pub sd_citations: Option<f64>,
    pub variety: u32,
    pub multidisciplinarity: Option<f64>,
    pub mean_jif: Option<f64>,
    pub professional_age: i32,
    pub age_imputed: u8,
    pub field_idr: Option<f64>,
    pub female: Option<u8>,
    pub phd_rank: Option<f64>,
    pub status: Option<f64>,
    pub excluded: u8,
}

/// One row per (sample person, authored paper).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperRow {
    pub person_id: String,
    pub paper_id: String,
    pub year: i32,
    pub period: String,
    pub idr: Option<f64>,
    pub citations: u64,
    pub log_citations: f64,
    pub reach: u32,
    pub n_authors: u32,
    pub jif: Option<f64>,
    pub repeat_collab: u8,
    pub professional_age: i32,
    pub field_id: String,
    pub field_idr: Option<f64>,
    pub excluded: u8,
}

fn resolve_reference_year(corpus: &Corpus, cfg: &PanelConfig) -> i32 {
    cfg.reference_year
        .or_else(|| corpus.year_range().map(|(_, hi)| hi))
        .unwrap_or(0)
}

/// Person-level aggregates for every listed person with at least one paper.
/// `field_idr` is left empty; see [`field_idr`] and [`attach_field_idr`].
pub fn build_person(
    corpus: &Corpus,
    scores: &Scores,
    sim: &SimilarityMatrix<f64>,
    cfg: &PanelConfig,
) -> Result<Vec<PersonRow>> {
    let reference_year = resolve_reference_year(corpus, cfg);
    let mut rows = Vec::new();
    for person in corpus.persons.values() {
        let papers = sorted_papers(corpus, &person.person_id);
        let Some(first) = papers.first() else {
            continue;
        };
        let idrs: Vec<f64> = papers.iter().filter_map(|p| idr_of(scores, p)).collect();
        let cites: Vec<f64> = papers.iter().map(|p| p.citations as f64).collect();
        let jifs: Vec<f64> = papers.iter().filter_map(|p| jif(corpus, p)).collect();
        let (phd, imputed) = phd_year(corpus, &person.person_id, first.year);
        let mean_idr = mean(&idrs);
        rows.push(PersonRow {
            person_id: person.person_id.clone(),
            field_id: person.field_id.clone(),
            total_pubs: papers.len() as u32,
            total_pubs_weighted: coauthor_weighted_count(papers.iter().copied())?,
            total_citations: papers.iter().map(|p| p.citations).sum(),
            mean_idr,
            n_scored: idrs.len() as u32,
            sd_citations: sample_sd(&cites),
            variety: variety(papers.iter().copied(), corpus) as u32,
            multidisciplinarity: multidisciplinarity(papers.iter().copied(), corpus, sim).ok(),
            mean_jif: mean(&jifs),
            professional_age: reference_year - phd,
            age_imputed: flag(imputed),
            field_idr: None,
            female: person.female.map(u8::from),
            phd_rank: person.phd_rank,
            status: person.status,
            excluded: flag(excluded(mean_idr)),
        });
    }
    Ok(rows)
}

/// Mean of member scientists' mean scores, per field (sorted by field id).
pub fn field_idr(person_rows: &[PersonRow]) -> Vec<FieldIdr> {
    let mut groups: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for row in person_rows {
        let g = groups.entry(row.field_id.as_str()).or_default();
        if let Some(v) = row.mean_idr {
            g.push(v);
        }
    }
    groups
        .into_iter()
        .map(|(field, vals)| FieldIdr {
            field_id: field.to_owned(),
            mean_idr: mean(&vals),
            n_members: vals.len(),
        })
        .collect()
}

pub fn attach_field_idr(rows: &mut [PersonRow], fields: &[FieldIdr]) {
    let lookup: HashMap<&str, Option<f64>> = fields.iter().map(|f| (f.field_id.as_str(), f.mean_idr)).collect();
    for row in rows {
        row.field_idr = lookup.get(row.field_id.as_str()).copied().flatten();
    }
}

fn field_lookup<'a>(corpus: &'a Corpus, fields: &'a [FieldIdr]) -> impl Fn(&str) -> (String, Option<f64>) + 'a {
    let map: HashMap<&str, Option<f64>> = fields.iter().map(|f| (f.field_id.as_str(), f.mean_idr)).collect();
    move |person_id: &str| {
        let field = corpus
            .persons
            .get(person_id)
            .map(|p| p.field_id.clone())
            .unwrap_or_default();
        let value = map.get(field.as_str()).copied().flatten();
        (field, value)
    }
}

/// One row per (person, year in which the person published).
pub fn build_person_year(
    corpus: &Corpus,
    scores: &Scores,
    fields: &[FieldIdr],
    cfg: &PanelConfig,
) -> Result<Vec<PersonYearRow>> {
    let repeats = repeat_flags(corpus, cfg.collab_rule);
    let field_of = field_lookup(corpus, fields);
    let mut rows = Vec::new();
    for person in corpus.persons.values() {
        let papers = sorted_papers(corpus, &person.person_id);
        let Some(first) = papers.first() else {
            continue;
        };
        let (phd, imputed) = phd_year(corpus, &person.person_id, first.year);
        let (field_id, field_value) = field_of(&person.person_id);
        let mut by_year: BTreeMap<i32, Vec<&PaperRecord>> = BTreeMap::new();
        for p in &papers {
            by_year.entry(p.year).or_default().push(p);
        }
        let mut cum_pubs = 0u32;
        let mut cum_cites = 0u64;
        for (year, ps) in by_year {
            let idrs: Vec<f64> = ps.iter().filter_map(|p| idr_of(scores, p)).collect();
            let jifs: Vec<f64> = ps.iter().filter_map(|p| jif(corpus, p)).collect();
            let n = ps.len() as f64;
            let mean_idr = mean(&idrs);
            let citations: u64 = ps.iter().map(|p| p.citations).sum();
            rows.push(PersonYearRow {
                person_id: person.person_id.clone(),
                year,
                period: period_bucket(year),
                productivity: ps.len() as u32,
                weighted_productivity: coauthor_weighted_count(ps.iter().copied())?,
                citations,
                mean_idr,
                n_scored: idrs.len() as u32,
                mean_authors: ps.iter().map(|p| p.n_authors() as f64).sum::<f64>() / n,
                mean_jif: mean(&jifs),
                repeat_collab_share: ps.iter().filter(|p| repeats[&p.paper_id]).count() as f64 / n,
                mean_reach: ps.iter().map(|p| p.focal_sc_ids.len() as f64).sum::<f64>() / n,
                lag_cum_pubs: cum_pubs,
                lag_cum_cites_log: (cum_cites as f64).ln_1p(),
                professional_age: year - phd,
                age_imputed: flag(imputed),
                field_id: field_id.clone(),
                field_idr: field_value,
                excluded: flag(excluded(mean_idr)),
            });
            cum_pubs += ps.len() as u32;
            cum_cites += citations;
        }
    }
    Ok(rows)
}

/// One row per (listed person, authored paper).
pub fn build_paper_panel(
    corpus: &Corpus,
    scores: &Scores,
    fields: &[FieldIdr],
    cfg: &PanelConfig,
) -> Vec<PaperRow> {
    let repeats = repeat_flags(corpus, cfg.collab_rule);
    let field_of = field_lookup(corpus, fields);
    let mut rows = Vec::new();
    for person in corpus.persons.values() {
        let papers = sorted_papers(corpus, &person.person_id);
        let Some(first) = papers.first() else {
            continue;
        };
        let (phd, _) = phd_year(corpus, &person.person_id, first.year);
        let (field_id, field_value) = field_of(&person.person_id);
        for p in papers {
            let idr = idr_of(scores, p);
            rows.push(PaperRow {
                person_id: person.person_id.clone(),
                paper_id: p.paper_id.clone(),
                year: p.year,
                period: period_bucket(p.year),
                idr,
                citations: p.citations,
                log_citations: (p.citations as f64).ln_1p(),
                reach: p.focal_sc_ids.len() as u32,
                n_authors: p.n_authors() as u32,
                jif: jif(corpus, p),
                repeat_collab: flag(repeats[&p.paper_id]),
                professional_age: p.year - phd,
                field_id: field_id.clone(),
                field_idr: field_value,
                excluded: flag(excluded(idr)),
            });
        }
    }
    rows
}

/// All observation tables for one corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct Panels {
    pub person: Vec<PersonRow>,
    pub person_year: Vec<PersonYearRow>,
    pub paper: Vec<PaperRow>,
    pub fields: Vec<FieldIdr>,
}

impl Panels {
    pub fn n_excluded(&self) -> (usize, usize, usize) {
        (
            self.person.iter().filter(|r| r.excluded != 0).count(),
            self.person_year.iter().filter(|r| r.excluded != 0).count(),
            self.paper.iter().filter(|r| r.excluded != 0).count(),
        )
    }
}

/// Person rows first (they define field means), then the person-year and
/// paper tables with field means attached.
pub fn build_panels(
    corpus: &Corpus,
    scores: &Scores,
    sim: &SimilarityMatrix<f64>,
    cfg: &PanelConfig,
) -> Result<Panels> {
    let mut person = build_person(corpus, scores, sim, cfg)?;
    let fields = field_idr(&person);
    attach_field_idr(&mut person, &fields);
    let person_year = build_person_year(corpus, scores, &fields, cfg)?;
    let paper = build_paper_panel(corpus, scores, &fields, cfg);
    Ok(Panels {
        person,
        person_year,
        paper,
        fields,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PersonSplit {
    pub person_id: String,
    pub n_low: usize,
    pub n_high: usize,
    pub sd_low: f64,
    pub sd_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitReport {
    /// Median score over all papers with a nonzero defined score.
    pub median_idr: Option<f64>,
    pub persons: Vec<PersonSplit>,
    pub mean_sd_low: Option<f64>,
    pub mean_sd_high: Option<f64>,
    /// `sd_high - sd_low` per qualifying person.
    pub diffs: Vec<f64>,
    pub paired: Option<TTest<f64>>,
}

/// Split papers at the global median score (ties go low) and compare the
/// citation spread of each person's low- and high-score papers. Only persons
/// with at least two papers on each side qualify.
pub fn median_split_variance(corpus: &Corpus, scores: &Scores) -> SplitReport {
    let scored = |p: &PaperRecord| idr_of(scores, p).filter(|&v| v != 0.0);
    let all: Vec<f64> = corpus.papers.iter().filter_map(scored).collect();
    let persons = corpus.persons.keys().map(|pid| {
        let papers = corpus
            .papers_of(pid)
            .filter_map(|p| Some((scored(p)?, p.citations as f64)))
            .collect();
        (pid.clone(), papers)
    });
    split_at_median(&all, persons)
}

/// [`median_split_variance`] on a person-paper table. Papers shared by
/// several sample persons enter the median once.
pub fn median_split_from_rows(rows: &[PaperRow]) -> SplitReport {
    let scored = |r: &PaperRow| r.idr.filter(|&v| v != 0.0);
    let unique: BTreeMap<&str, f64> = rows
        .iter()
        .filter_map(|r| Some((r.paper_id.as_str(), scored(r)?)))
        .collect();
    let all: Vec<f64> = unique.into_values().collect();
    let mut by_person: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        if let Some(v) = scored(r) {
            by_person.entry(&r.person_id).or_default().push((v, r.citations as f64));
        }
    }
    split_at_median(&all, by_person.into_iter().map(|(k, v)| (k.to_owned(), v)))
}

/// `persons` yields each person's (score, citations) pairs in person order.
fn split_at_median(all: &[f64], persons: impl Iterator<Item = (String, Vec<(f64, f64)>)>) -> SplitReport {
    let Some(med) = median(all) else {
        return SplitReport {
            median_idr: None,
            persons: vec![],
            mean_sd_low: None,
            mean_sd_high: None,
            diffs: vec![],
            paired: None,
        };
    };
    let mut out = Vec::new();
    for (person_id, papers) in persons {
        let (low, high): (Vec<_>, Vec<_>) = papers.into_iter().partition(|&(v, _)| v <= med);
        let low: Vec<f64> = low.into_iter().map(|(_, c)| c).collect();
        let high: Vec<f64> = high.into_iter().map(|(_, c)| c).collect();
        if low.len() >= 2 && high.len() >= 2 {
            out.push(PersonSplit {
                person_id,
                n_low: low.len(),
                n_high: high.len(),
                sd_low: sample_sd(&low).unwrap(),
                sd_high: sample_sd(&high).unwrap(),
            });
        }
    }
    let lows: Vec<f64> = out.iter().map(|p| p.sd_low).collect();
    let highs: Vec<f64> = out.iter().map(|p| p.sd_high).collect();
    let diffs: Vec<f64> = out.iter().map(|p| p.sd_high - p.sd_low).collect();
    SplitReport {
        median_idr: Some(med),
        mean_sd_low: mean(&lows),
        mean_sd_high: mean(&highs),
        paired: paired_ttest(&diffs).ok(),
        diffs,
        persons: out,
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Invalid(format!("csv: {e}"))
}

/// Write rows with a header line (also for an empty table).
pub fn write_csv<T: Serialize, W: io::Write>(rows: &[T], header: &[&str], writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::Invalid(format!("csv: {e}")))
}

pub fn read_csv<T: for<'de> Deserialize<'de>, R: io::Read>(reader: R, name: &str) -> Result<Vec<T>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|e| Error::Parse {
                file: name.to_owned(),
                line: i + 2,
                message: e.to_string(),
            })
        })
        .collect()
}

pub const PERSON_YEAR_COLUMNS: &[&str] = &[
    "person_id",
    "year",
    "period",
    "productivity",
    "weighted_productivity",
    "citations",
    "mean_idr",
    "n_scored",
    "mean_authors",
    "mean_jif",
    "repeat_collab_share",
    "mean_reach",
    "lag_cum_pubs",
    "lag_cum_cites_log",
    "professional_age",
    "age_imputed",
    "field_id",
    "field_idr",
    "excluded",
];

pub const PERSON_COLUMNS: &[&str] = &[
    "person_id",
    "field_id",
    "total_pubs",
    "total_pubs_weighted",
    "total_citations",
    "mean_idr",
    "n_scored",
    "sd_citations",
    "variety",
    "multidisciplinarity",
    "mean_jif",
    "professional_age",
    "age_imputed",
    "field_idr",
    "female",
    "phd_rank",
    "status",
    "excluded",
];

pub const PAPER_COLUMNS: &[&str] = &[
    "person_id",
    "paper_id",
    "year",
    "period",
    "idr",
    "citations",
    "log_citations",
    "reach",
    "n_authors",
    "jif",
    "repeat_collab",
    "professional_age",
    "field_id",
    "field_idr",
    "excluded",
];
