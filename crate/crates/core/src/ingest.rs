//! Line-oriented corpus files: `papers.jsonl`, `journals.jsonl`,
//! `persons.jsonl`, `fields.jsonl`.
//!
//! Each file holds one JSON object per line; blank lines are skipped and
//! unknown keys are ignored. Subject-category labels are collected from every
//! file before ids are assigned, and ids follow sorted label order, so a
//! corpus written with [`write_corpus`] reloads to an identical value.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, FieldRecord, JournalRecord, PaperRecord, PersonRecord, ScCatalog};
use crate::error::{Error, Result};

pub const PAPERS_FILE: &str = "papers.jsonl";
pub const JOURNALS_FILE: &str = "journals.jsonl";
pub const PERSONS_FILE: &str = "persons.jsonl";
pub const FIELDS_FILE: &str = "fields.jsonl";

/// Maximum number of subject categories a journal may carry.
pub const MAX_JOURNAL_SCS: usize = 6;

/// Years a publication may precede the PhD before it is flagged.
pub const PRE_PHD_SLACK_YEARS: i32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strictness {
    /// Unresolvable journal references abort the load.
    Strict,
    /// Unresolvable journal references are dropped and counted.
    #[default]
    Lenient,
}

/// Input files. A missing entry is treated as an empty file.
#[derive(Debug, Clone, Default)]
pub struct CorpusPaths {
    pub papers: Option<PathBuf>,
    pub journals: Option<PathBuf>,
    pub persons: Option<PathBuf>,
    pub fields: Option<PathBuf>,
}

impl CorpusPaths {
    /// The four standard file names under `dir`; absent files are skipped.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        let pick = |name: &str| {
            let p = dir.join(name);
            p.exists().then_some(p)
        };
        Self {
            papers: pick(PAPERS_FILE),
            journals: pick(JOURNALS_FILE),
            persons: pick(PERSONS_FILE),
            fields: pick(FIELDS_FILE),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Path> {
        [&self.papers, &self.journals, &self.persons, &self.fields]
            .into_iter()
            .flatten()
            .map(PathBuf::as_path)
    }
}

/// In-memory file contents, with names used in error messages.
#[derive(Debug, Clone, Copy, Default)]
pub struct CorpusText<'a> {
    pub papers: &'a str,
    pub journals: &'a str,
    pub persons: &'a str,
    pub fields: &'a str,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LoadWarning {
    DroppedReference { paper_id: String, journal_id: String },
    UnknownPaperJournal { paper_id: String, journal_id: String },
}

impl fmt::Display for LoadWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadWarning::DroppedReference { paper_id, journal_id } => {
                write!(f, "paper `{paper_id}`: dropped reference to unknown journal `{journal_id}`")
            }
            LoadWarning::UnknownPaperJournal { paper_id, journal_id } => {
                write!(f, "paper `{paper_id}`: published in unknown journal `{journal_id}`")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub warnings: Vec<LoadWarning>,
}

impl LoadReport {
    pub fn dropped_references(&self) -> usize {
        self.warnings
            .iter()
            .filter(|w| matches!(w, LoadWarning::DroppedReference { .. }))
            .count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
enum Flag {
    Bool(bool),
    Int(u8),
}

impl Flag {
    fn as_bool(&self) -> Option<bool> {
        match *self {
            Flag::Bool(b) => Some(b),
            Flag::Int(0) => Some(false),
            Flag::Int(1) => Some(true),
            Flag::Int(_) => None,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RawPaper {
    paper_id: String,
    author_ids: Vec<String>,
    year: i32,
    #[serde(default)]
    journal_id: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    focal_scs: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    ref_journals: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    ref_scs: Vec<String>,
    #[serde(default)]
    citations: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawJournal {
    journal_id: String,
    #[serde(default)]
    scs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    jif: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawPerson {
    person_id: String,
    #[serde(default)]
    field_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phd_year: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    female: Option<Flag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phd_rank: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    status: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawField {
    field_id: String,
    #[serde(default)]
    size_phds: u64,
    #[serde(default)]
    avg_citations: f64,
    #[serde(default)]
    turnaround_months: f64,
}

struct Parsed<T> {
    line: usize,
    value: T,
}

fn parse_lines<T: DeserializeOwned>(file: &str, text: &str) -> Result<Vec<Parsed<T>>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(line).map_err(|e| Error::Parse {
            file: file.to_owned(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(Parsed { line: i + 1, value });
    }
    Ok(out)
}

fn check_finite(file: &str, line: usize, name: &str, value: Option<f64>) -> Result<()> {
    match value {
        Some(v) if !v.is_finite() => Err(Error::Parse {
            file: file.to_owned(),
            line,
            message: format!("`{name}` is not finite"),
        }),
        _ => Ok(()),
    }
}

fn duplicate(entity: &'static str, id: &str, file: &str, line: usize) -> Error {
    Error::Duplicate {
        entity,
        id: id.to_owned(),
        file: file.to_owned(),
        line,
    }
}

fn read_optional(path: &Option<PathBuf>) -> Result<String> {
    match path {
        Some(p) => fs::read_to_string(p).map_err(|e| Error::io(p, e)),
        None => Ok(String::new()),
    }
}

fn display_name(path: &Option<PathBuf>, default: &str) -> String {
    path.as_ref()
        .map(|p| p.display().to_string())
        .unwrap_or_else(|| default.to_owned())
}

/// Load and cross-reference a corpus from disk.
pub fn load_corpus(paths: &CorpusPaths, strictness: Strictness) -> Result<(Corpus, LoadReport)> {
    let ((papers, journals), (persons, fields)) = rayon::join(
        || (read_optional(&paths.papers), read_optional(&paths.journals)),
        || (read_optional(&paths.persons), read_optional(&paths.fields)),
    );
    let (papers, journals, persons, fields) = (papers?, journals?, persons?, fields?);
    let names = [
        display_name(&paths.papers, PAPERS_FILE),
        display_name(&paths.journals, JOURNALS_FILE),
        display_name(&paths.persons, PERSONS_FILE),
        display_name(&paths.fields, FIELDS_FILE),
    ];
    parse_named(
        CorpusText {
            papers: &papers,
            journals: &journals,
            persons: &persons,
            fields: &fields,
        },
        &names,
        strictness,
    )
}

/// Parse a corpus from in-memory file contents.
pub fn parse_corpus(text: CorpusText<'_>, strictness: Strictness) -> Result<(Corpus, LoadReport)> {
    let names = [PAPERS_FILE, JOURNALS_FILE, PERSONS_FILE, FIELDS_FILE].map(str::to_owned);
    parse_named(text, &names, strictness)
}

fn parse_named(
    text: CorpusText<'_>,
    names: &[String; 4],
    strictness: Strictness,
) -> Result<(Corpus, LoadReport)> {
    let [papers_name, journals_name, persons_name, fields_name] = names;
    let raw_papers: Vec<Parsed<RawPaper>> = parse_lines(papers_name, text.papers)?;
    let raw_journals: Vec<Parsed<RawJournal>> = parse_lines(journals_name, text.journals)?;
    let raw_persons: Vec<Parsed<RawPerson>> = parse_lines(persons_name, text.persons)?;
    let raw_fields: Vec<Parsed<RawField>> = parse_lines(fields_name, text.fields)?;

    let catalog = ScCatalog::from_labels(
        raw_journals
            .iter()
            .flat_map(|j| j.value.scs.iter())
            .chain(raw_papers.iter().flat_map(|p| p.value.focal_scs.iter().chain(&p.value.ref_scs)))
            .cloned(),
    );
    let sc = |label: &String| catalog.get(label).expect("label collected in first pass");

    let mut journals = BTreeMap::new();
    for Parsed { line, value } in raw_journals {
        check_finite(journals_name, line, "jif", value.jif)?;
        if journals.contains_key(&value.journal_id) {
            return Err(duplicate("journal", &value.journal_id, journals_name, line));
        }
        let record = JournalRecord {
            journal_id: value.journal_id.clone(),
            sc_ids: value.scs.iter().map(sc).collect(),
            impact_factor: value.jif,
        };
        journals.insert(value.journal_id, record);
    }

    let mut persons = BTreeMap::new();
    for Parsed { line, value } in raw_persons {
        check_finite(persons_name, line, "phd_rank", value.phd_rank)?;
        check_finite(persons_name, line, "status", value.status)?;
        if persons.contains_key(&value.person_id) {
            return Err(duplicate("person", &value.person_id, persons_name, line));
        }
        let female = match &value.female {
            None => None,
            Some(flag) => Some(flag.as_bool().ok_or_else(|| Error::Parse {
                file: persons_name.clone(),
                line,
                message: "`female` must be 0, 1, true or false".into(),
            })?),
        };
        let record = PersonRecord {
            person_id: value.person_id.clone(),
            field_id: value.field_id,
            phd_year: value.phd_year,
            female,
            phd_rank: value.phd_rank,
            status: value.status,
        };
        persons.insert(value.person_id, record);
    }

    let mut fields = BTreeMap::new();
    for Parsed { line, value } in raw_fields {
        check_finite(fields_name, line, "avg_citations", Some(value.avg_citations))?;
        check_finite(fields_name, line, "turnaround_months", Some(value.turnaround_months))?;
        if fields.contains_key(&value.field_id) {
            return Err(duplicate("field", &value.field_id, fields_name, line));
        }
        let record = FieldRecord {
            field_id: value.field_id.clone(),
            size_phds: value.size_phds,
            avg_citations: value.avg_citations,
            turnaround_months: value.turnaround_months,
        };
        fields.insert(value.field_id, record);
    }

    let mut report = LoadReport::default();
    let mut seen = HashSet::new();
    let mut papers = Vec::with_capacity(raw_papers.len());
    for Parsed { line, value } in raw_papers {
        if !seen.insert(value.paper_id.clone()) {
            return Err(duplicate("paper", &value.paper_id, papers_name, line));
        }
        let journal = journals.get(&value.journal_id);
        if journal.is_none() && !value.journal_id.is_empty() {
            report.warnings.push(LoadWarning::UnknownPaperJournal {
                paper_id: value.paper_id.clone(),
                journal_id: value.journal_id.clone(),
            });
        }
        let mut ref_journals = Vec::with_capacity(value.ref_journals.len());
        for jid in value.ref_journals {
            if journals.contains_key(&jid) {
                ref_journals.push(jid);
            } else {
                report.warnings.push(LoadWarning::DroppedReference {
                    paper_id: value.paper_id.clone(),
                    journal_id: jid,
                });
            }
        }
        let focal_sc_ids = if value.focal_scs.is_empty() {
            journal.map(JournalRecord::distinct_scs).unwrap_or_default()
        } else {
            value.focal_scs.iter().map(sc).collect()
        };
        papers.push(PaperRecord {
            paper_id: value.paper_id,
            author_ids: value.author_ids,
            year: value.year,
            journal_id: value.journal_id,
            focal_sc_ids,
            ref_journals,
            ref_scs: value.ref_scs.iter().map(sc).collect(),
            citations: value.citations,
        });
    }

    if strictness == Strictness::Strict && !report.warnings.is_empty() {
        return Err(Error::Unresolved {
            count: report.warnings.len(),
            first: report.warnings[0].to_string(),
        });
    }

    let corpus = Corpus {
        catalog,
        journals,
        papers,
        persons,
        fields,
    };
    Ok((corpus, report))
}

fn write_jsonl<T: Serialize>(path: &Path, rows: impl Iterator<Item = T>) -> Result<()> {
    let mut buf = Vec::new();
    for row in rows {
        serde_json::to_writer(&mut buf, &row).expect("in-memory serialization");
        buf.push(b'\n');
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&buf).map_err(|e| Error::io(path, e))
}

/// Write the four corpus files into `dir` in canonical form.
pub fn write_corpus(corpus: &Corpus, dir: impl AsRef<Path>) -> Result<CorpusPaths> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let label = |id| corpus.catalog.label(id).unwrap_or_default().to_owned();
    let paths = CorpusPaths {
        papers: Some(dir.join(PAPERS_FILE)),
        journals: Some(dir.join(JOURNALS_FILE)),
        persons: Some(dir.join(PERSONS_FILE)),
        fields: Some(dir.join(FIELDS_FILE)),
    };

    write_jsonl(
        paths.journals.as_deref().unwrap(),
        corpus.journals.values().map(|j| RawJournal {
            journal_id: j.journal_id.clone(),
            scs: j.sc_ids.iter().copied().map(label).collect(),
            jif: j.impact_factor,
        }),
    )?;
    write_jsonl(
        paths.papers.as_deref().unwrap(),
        corpus.papers.iter().map(|p| RawPaper {
            paper_id: p.paper_id.clone(),
            author_ids: p.author_ids.clone(),
            year: p.year,
            journal_id: p.journal_id.clone(),
            focal_scs: p.focal_sc_ids.iter().copied().map(label).collect(),
            ref_journals: p.ref_journals.clone(),
            ref_scs: p.ref_scs.iter().copied().map(label).collect(),
            citations: p.citations,
        }),
    )?;
    write_jsonl(
        paths.persons.as_deref().unwrap(),
        corpus.persons.values().map(|p| RawPerson {
            person_id: p.person_id.clone(),
            field_id: p.field_id.clone(),
            phd_year: p.phd_year,
            female: p.female.map(|f| Flag::Int(u8::from(f))),
            phd_rank: p.phd_rank,
            status: p.status,
        }),
    )?;
    write_jsonl(
        paths.fields.as_deref().unwrap(),
        corpus.fields.values().map(|f| RawField {
            field_id: f.field_id.clone(),
            size_phds: f.size_phds,
            avg_citations: f.avg_citations,
            turnaround_months: f.turnaround_months,
        }),
    )?;
    Ok(paths)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rule {
    /// Journal carries zero or more than six subject categories.
    ScCount,
    /// Journal lists a subject category twice.
    ScDuplicate,
    /// Paper has no authors.
    AuthorCount,
    /// Paper's own classification is empty or exceeds six categories.
    FocalScCount,
    /// Publication well before the author's PhD.
    Age,
    /// Person assigned to a field missing from the field table.
    UnknownField,
    /// Negative or non-finite field-level number.
    FieldNumeric,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::ScCount => "sc-count",
            Rule::ScDuplicate => "sc-duplicate",
            Rule::AuthorCount => "author-count",
            Rule::FocalScCount => "focal-sc-count",
            Rule::Age => "age",
            Rule::UnknownField => "unknown-field",
            Rule::FieldNumeric => "field-numeric",
        }
    }

    pub fn is_warning(self) -> bool {
        matches!(self, Rule::Age)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub rule: Rule,
    pub entity: String,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn counts(&self) -> BTreeMap<Rule, usize> {
        let mut counts = BTreeMap::new();
        for v in &self.violations {
            *counts.entry(v.rule).or_insert(0) += 1;
        }
        counts
    }

    pub fn count(&self, rule: Rule) -> usize {
        self.violations.iter().filter(|v| v.rule == rule).count()
    }
}

/// Check corpus invariants without modifying anything.
pub fn validate_corpus(corpus: &Corpus) -> ValidationReport {
    let mut violations = Vec::new();
    let mut push = |rule, entity: &str, detail: String| {
        violations.push(Violation {
            rule,
            entity: entity.to_owned(),
            detail,
        })
    };

    for j in corpus.journals.values() {
        let n = j.sc_ids.len();
        if n == 0 || n > MAX_JOURNAL_SCS {
            push(Rule::ScCount, &j.journal_id, format!("{n} subject categories"));
        }
        let distinct: BTreeSet<_> = j.sc_ids.iter().collect();
        if distinct.len() != n {
            push(Rule::ScDuplicate, &j.journal_id, "repeated subject category".into());
        }
    }

    for p in &corpus.papers {
        if p.author_ids.is_empty() {
            push(Rule::AuthorCount, &p.paper_id, "no authors".into());
        }
        let n = p.focal_sc_ids.len();
        if n == 0 || n > MAX_JOURNAL_SCS {
            push(Rule::FocalScCount, &p.paper_id, format!("{n} focal subject categories"));
        }
        for author in &p.author_ids {
            let Some(phd) = corpus.persons.get(author).and_then(|x| x.phd_year) else {
                continue;
            };
            if p.year < phd - PRE_PHD_SLACK_YEARS {
                push(
                    Rule::Age,
                    &p.paper_id,
                    format!("published {} by {author} (PhD {phd})", p.year),
                );
            }
        }
    }

    for person in corpus.persons.values() {
        if !corpus.fields.is_empty() && !corpus.fields.contains_key(&person.field_id) {
            push(
                Rule::UnknownField,
                &person.person_id,
                format!("field `{}`", person.field_id),
            );
        }
    }

    for f in corpus.fields.values() {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if !ok(f.avg_citations) || !ok(f.turnaround_months) {
            push(Rule::FieldNumeric, &f.field_id, "negative or non-finite value".into());
        }
    }

    ValidationReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;

    const JOURNALS: &str = r#"{"journal_id":"J1","scs":["Sociology"],"jif":1.5}
{"journal_id":"J2","scs":["Management","Sociology"]}
"#;

    fn papers_fixture() -> String {
        [
            r#"{"paper_id":"p1","author_ids":["a"],"year":2001,"journal_id":"J1","ref_journals":["J1","J2"],"citations":3}"#,
            r#"{"paper_id":"p2","author_ids":["a","b"],"year":2002,"journal_id":"J1","ref_journals":["J2"],"citations":0}"#,
            r#"{"paper_id":"p3","author_ids":["b"],"year":2003,"journal_id":"J2","ref_journals":["J1","J9"],"citations":7}"#,
            r#"{"paper_id":"p4","author_ids":["a"],"year":2003,"journal_id":"J2","ref_scs":["Economics"],"citations":1}"#,
            r#"{"paper_id":"p5","author_ids":["c"],"year":2004,"journal_id":"J1","focal_scs":["Sociology"],"citations":2,"extra":"ignored"}"#,
        ]
        .join("\n")
    }

    #[test]
    fn empty_files_give_empty_corpus() {
        let (corpus, report) = parse_corpus(CorpusText::default(), Strictness::Strict).unwrap();
        assert_eq!(corpus, Corpus::default());
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn single_reference_resolves() {
        let text = CorpusText {
            papers: r#"{"paper_id":"p","author_ids":["a"],"year":2000,"journal_id":"J1","ref_journals":["J1"]}"#,
            journals: r#"{"journal_id":"J1","scs":["Sociology"]}"#,
            ..Default::default()
        };
        let (corpus, _) = parse_corpus(text, Strictness::Strict).unwrap();
        assert_eq!(corpus.papers.len(), 1);
        let refs = corpus.resolved_refs(&corpus.papers[0]);
        assert_eq!(refs.len(), 1);
        assert_eq!(refs[0].scs.len(), 1);
    }

    #[test]
    fn lenient_drops_unknown_journal_reference() {
        let papers = papers_fixture();
        let text = CorpusText {
            papers: &papers,
            journals: JOURNALS,
            ..Default::default()
        };
        let (corpus, report) = parse_corpus(text, Strictness::Lenient).unwrap();
        assert_eq!(corpus.papers.len(), 5);
        assert_eq!(report.warnings.len(), 1);
        assert_eq!(report.dropped_references(), 1);
        assert_eq!(corpus.paper("p3").unwrap().ref_journals, vec!["J1".to_string()]);
        // focal categories default to the journal's own when not given
        assert_eq!(corpus.paper("p1").unwrap().focal_sc_ids.len(), 1);
        assert_eq!(corpus.paper("p3").unwrap().focal_sc_ids.len(), 2);
        // labels from ref_scs extend the catalog
        assert!(corpus.catalog.get("Economics").is_some());

        match parse_corpus(text, Strictness::Strict) {
            Err(Error::Unresolved { count, .. }) => assert_eq!(count, report.warnings.len()),
            other => panic!("expected unresolved error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = CorpusText {
            journals: "{\"journal_id\":\"J1\",\"scs\":[\"A\"]}\n\n{not json}\n",
            ..Default::default()
        };
        match parse_corpus(text, Strictness::Lenient) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_paper_is_rejected() {
        let text = CorpusText {
            papers: "{\"paper_id\":\"p\",\"author_ids\":[\"a\"],\"year\":1}\n{\"paper_id\":\"p\",\"author_ids\":[\"b\"],\"year\":2}",
            ..Default::default()
        };
        assert!(matches!(
            parse_corpus(text, Strictness::Lenient),
            Err(Error::Duplicate { entity: "paper", line: 2, .. })
        ));
    }

    #[test]
    fn non_finite_numbers_are_rejected() {
        let text = CorpusText {
            journals: r#"{"journal_id":"J","scs":["A"],"jif":1e999}"#,
            ..Default::default()
        };
        assert!(matches!(
            parse_corpus(text, Strictness::Lenient),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn female_flag_accepts_bool_and_int() {
        let text = CorpusText {
            persons: "{\"person_id\":\"a\",\"female\":1}\n{\"person_id\":\"b\",\"female\":false}\n",
            ..Default::default()
        };
        let (corpus, _) = parse_corpus(text, Strictness::Strict).unwrap();
        assert_eq!(corpus.persons["a"].female, Some(true));
        assert_eq!(corpus.persons["b"].female, Some(false));
        let bad = CorpusText {
            persons: r#"{"person_id":"a","female":2}"#,
            ..Default::default()
        };
        assert!(parse_corpus(bad, Strictness::Strict).is_err());
    }

    #[test]
    fn round_trip_is_a_fixed_point() {
        let papers = papers_fixture();
        let text = CorpusText {
            papers: &papers,
            journals: JOURNALS,
            persons: "{\"person_id\":\"a\",\"field_id\":\"soc\",\"phd_year\":1995,\"female\":0,\"phd_rank\":2.5,\"status\":3}\n",
            fields: "{\"field_id\":\"soc\",\"size_phds\":700,\"avg_citations\":8.5,\"turnaround_months\":4}\n",
        };
        let (first, _) = parse_corpus(text, Strictness::Lenient).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let paths = write_corpus(&first, dir.path()).unwrap();
        let (second, report) = load_corpus(&paths, Strictness::Strict).unwrap();
        assert!(report.warnings.is_empty());
        assert_eq!(first, second);
    }

    #[test]
    fn valid_fixture_has_empty_report() {
        let text = CorpusText {
            papers: r#"{"paper_id":"p","author_ids":["a"],"year":2000,"journal_id":"J1","ref_journals":["J1"]}"#,
            journals: r#"{"journal_id":"J1","scs":["Sociology"]}"#,
            persons: r#"{"person_id":"a","field_id":"soc","phd_year":1995}"#,
            fields: r#"{"field_id":"soc","size_phds":10,"avg_citations":1,"turnaround_months":2}"#,
        };
        let (corpus, _) = parse_corpus(text, Strictness::Strict).unwrap();
        assert!(validate_corpus(&corpus).is_empty());
    }

    #[test]
    fn seven_category_journal_is_one_violation() {
        let text = CorpusText {
            journals: r#"{"journal_id":"big","scs":["a","b","c","d","e","f","g"]}"#,
            ..Default::default()
        };
        let (corpus, _) = parse_corpus(text, Strictness::Strict).unwrap();
        let report = validate_corpus(&corpus);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.count(Rule::ScCount), 1);
        assert_eq!(report.violations[0].entity, "big");
    }

    #[test]
    fn early_paper_triggers_age_warning() {
        // PhD 2000: 1990 is inside the slack, 1989 is not.
        let text = CorpusText {
            papers: "{\"paper_id\":\"ok\",\"author_ids\":[\"a\"],\"year\":1990,\"focal_scs\":[\"X\"]}\n{\"paper_id\":\"early\",\"author_ids\":[\"a\"],\"year\":1989,\"focal_scs\":[\"X\"]}\n",
            persons: r#"{"person_id":"a","field_id":"f","phd_year":2000}"#,
            ..Default::default()
        };
        let (corpus, _) = parse_corpus(text, Strictness::Strict).unwrap();
        let report = validate_corpus(&corpus);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].rule, Rule::Age);
        assert_eq!(report.violations[0].entity, "early");
        assert!(Rule::Age.is_warning());
    }
}
