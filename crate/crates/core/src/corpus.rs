//! In-memory citation corpus.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Dense index into the subject-category catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ScId(pub u32);

impl ScId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ScId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Bijection between subject-category labels and dense ids `0..K`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScCatalog {
    labels: Vec<String>,
    index: HashMap<String, ScId>,
}

impl ScCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Catalog whose ids follow the sorted order of `labels` (duplicates ignored).
    pub fn from_labels<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let sorted: BTreeSet<String> = labels.into_iter().map(Into::into).collect();
        let mut catalog = Self::new();
        for label in sorted {
            catalog.intern(&label);
        }
        catalog
    }

    /// Id for `label`, appending it to the catalog if new.
    pub fn intern(&mut self, label: &str) -> ScId {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        let id = ScId(self.labels.len() as u32);
        self.labels.push(label.to_owned());
        self.index.insert(label.to_owned(), id);
        id
    }

    pub fn get(&self, label: &str) -> Option<ScId> {
        self.index.get(label).copied()
    }

    pub fn label(&self, id: ScId) -> Option<&str> {
        self.labels.get(id.index()).map(String::as_str)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JournalRecord {
    pub journal_id: String,
    pub sc_ids: Vec<ScId>,
    pub impact_factor: Option<f64>,
}

impl JournalRecord {
    /// Distinct subject categories in first-listed order.
    pub fn distinct_scs(&self) -> Vec<ScId> {
        let mut seen = BTreeSet::new();
        self.sc_ids.iter().copied().filter(|sc| seen.insert(*sc)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PaperRecord {
    pub paper_id: String,
    pub author_ids: Vec<String>,
    pub year: i32,
    pub journal_id: String,
    pub focal_sc_ids: Vec<ScId>,
    /// References given as journals; resolved through the journal table.
    pub ref_journals: Vec<String>,
    /// References given directly as subject categories.
    pub ref_scs: Vec<ScId>,
    pub citations: u64,
}

impl PaperRecord {
    pub fn n_authors(&self) -> usize {
        self.author_ids.len()
    }

    pub fn has_author(&self, person_id: &str) -> bool {
        self.author_ids.iter().any(|a| a == person_id)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PersonRecord {
    pub person_id: String,
    pub field_id: String,
    pub phd_year: Option<i32>,
    pub female: Option<bool>,
    pub phd_rank: Option<f64>,
    /// Number of academy members at the person's institution.
    pub status: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FieldRecord {
    pub field_id: String,
    pub size_phds: u64,
    pub avg_citations: f64,
    pub turnaround_months: f64,
}

/// One reference resolved to subject categories.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedRef {
    /// Distinct categories the reference is spread over; each receives `1 / len`.
    pub scs: Vec<ScId>,
}

/// Loaded corpus. Immutable once built; share by reference.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub catalog: ScCatalog,
    pub journals: BTreeMap<String, JournalRecord>,
    pub papers: Vec<PaperRecord>,
    pub persons: BTreeMap<String, PersonRecord>,
    pub fields: BTreeMap<String, FieldRecord>,
}

impl Corpus {
    pub fn journal(&self, journal_id: &str) -> Option<&JournalRecord> {
        self.journals.get(journal_id)
    }

    pub fn paper(&self, paper_id: &str) -> Option<&PaperRecord> {
        self.papers.iter().find(|p| p.paper_id == paper_id)
    }

    /// References of `paper` that resolve to at least one subject category.
    pub fn resolved_refs(&self, paper: &PaperRecord) -> Vec<ResolvedRef> {
        let via_journal = paper.ref_journals.iter().filter_map(|jid| {
            let scs = self.journal(jid)?.distinct_scs();
            (!scs.is_empty()).then_some(ResolvedRef { scs })
        });
        let direct = paper.ref_scs.iter().map(|&sc| ResolvedRef { scs: vec![sc] });
        via_journal.chain(direct).collect()
    }

    /// Set of subject categories appearing anywhere in the paper's references.
    pub fn ref_sc_set(&self, paper: &PaperRecord) -> BTreeSet<ScId> {
        self.resolved_refs(paper)
            .into_iter()
            .flat_map(|r| r.scs)
            .collect()
    }

    /// Papers listing `person_id` among their authors, in corpus order.
    pub fn papers_of<'a>(&'a self, person_id: &'a str) -> impl Iterator<Item = &'a PaperRecord> + 'a {
        self.papers.iter().filter(move |p| p.has_author(person_id))
    }

    pub fn year_range(&self) -> Option<(i32, i32)> {
        let min = self.papers.iter().map(|p| p.year).min()?;
        let max = self.papers.iter().map(|p| p.year).max()?;
        Some((min, max))
    }
}
