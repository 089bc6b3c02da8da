//! Paper- and person-level diversity measures.
//!
//! The integration score of a reference profile `p` under similarity `s` is
//! `1 - sum_{i <= j} s_ij p_i p_j`, where every unordered category pair
//! (diagonal included) enters the sum once. It is 0 for a single-category
//! profile and grows as references spread over dissimilar categories.

use std::collections::{BTreeMap, BTreeSet};
use std::io;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, PaperRecord, ResolvedRef, ScId};
use crate::error::{Error, Result};
use crate::sc_space::{EpochRegistry, SimilarityMatrix};
use crate::scalar::Weight;

/// Share of a paper's references falling in each subject category.
#[derive(Debug, Clone, PartialEq)]
pub struct RefProportions<T = f64> {
    pub weights: BTreeMap<ScId, T>,
    pub total_refs: usize,
}

impl<T: Weight> RefProportions<T> {
    /// Proportions from resolved references. Each reference carries one unit
    /// of weight split evenly over its categories. `None` when `refs` is empty.
    pub fn from_refs(refs: &[ResolvedRef]) -> Option<Self> {
        if refs.is_empty() {
            return None;
        }
        let mut weights: BTreeMap<ScId, T> = BTreeMap::new();
        for r in refs {
            let share = T::one() / T::from_count(r.scs.len());
            for &sc in &r.scs {
                let w = weights.entry(sc).or_insert_with(T::zero);
                *w = w.clone() + share.clone();
            }
        }
        let total = T::from_count(refs.len());
        for w in weights.values_mut() {
            *w = w.clone() / total.clone();
        }
        Some(Self {
            weights,
            total_refs: refs.len(),
        })
    }

    pub fn distinct_scs(&self) -> usize {
        self.weights.len()
    }

    pub fn get(&self, sc: ScId) -> T {
        self.weights.get(&sc).cloned().unwrap_or_else(T::zero)
    }
}

/// Reference proportions of `paper`; fails when no reference resolves.
pub fn ref_proportions<T: Weight>(paper: &PaperRecord, corpus: &Corpus) -> Result<RefProportions<T>> {
    RefProportions::from_refs(&corpus.resolved_refs(paper))
        .ok_or_else(|| Error::NoReferences(paper.paper_id.clone()))
}

/// Integration score `1 - sum_{i <= j} s_ij p_i p_j` over the categories
/// present in `props`. Result lies in `[0, 1)`.
pub fn paper_idr<T: Weight>(props: &RefProportions<T>, sim: &SimilarityMatrix<T>) -> Result<T> {
    let entries: Vec<(usize, &T)> = props.weights.iter().map(|(sc, p)| (sc.index(), p)).collect();
    if let Some(&(i, _)) = entries.iter().find(|(i, _)| *i >= sim.k()) {
        return Err(Error::UnknownSc(i));
    }
    let mut sum = T::zero();
    for (a, &(i, pi)) in entries.iter().enumerate() {
        for &(j, pj) in &entries[a..] {
            sum = sum + sim.get(i, j).clone() * pi.clone() * pj.clone();
        }
    }
    let idr = T::one() - sum;
    // rounding can push a single-category profile a hair below zero
    Ok(if idr < T::zero() { T::zero() } else { idr })
}

/// Number of categories classifying the paper itself.
pub fn reach(paper: &PaperRecord) -> Result<usize> {
    match paper.focal_sc_ids.len() {
        0 => Err(Error::NoFocalScs(paper.paper_id.clone())),
        n => Ok(n),
    }
}

/// Distinct categories referenced across all `papers`.
pub fn variety<'a>(papers: impl IntoIterator<Item = &'a PaperRecord>, corpus: &Corpus) -> usize {
    papers
        .into_iter()
        .flat_map(|p| corpus.ref_sc_set(p))
        .collect::<BTreeSet<_>>()
        .len()
}

/// Integration score of the pooled reference list of an oeuvre.
pub fn multidisciplinarity<'a, T: Weight>(
    papers: impl IntoIterator<Item = &'a PaperRecord>,
    corpus: &Corpus,
    sim: &SimilarityMatrix<T>,
) -> Result<T> {
    let mut ids = Vec::new();
    let pooled: Vec<ResolvedRef> = papers
        .into_iter()
        .flat_map(|p| {
            ids.push(p.paper_id.as_str());
            corpus.resolved_refs(p)
        })
        .collect();
    let props = RefProportions::from_refs(&pooled).ok_or_else(|| Error::NoReferences(ids.join(",")))?;
    paper_idr(&props, sim)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScoreFlag {
    NoReferences,
    NoFocalScs,
    UnknownSc(usize),
    NoMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PaperMetrics<T = f64> {
    pub paper_id: String,
    pub year: i32,
    /// `None` when the paper has no resolvable references (or scoring failed).
    pub idr: Option<T>,
    pub reach: usize,
    pub ref_count: usize,
    pub distinct_ref_scs: usize,
    pub flags: Vec<ScoreFlag>,
}

pub fn score_paper<T: Weight>(
    paper: &PaperRecord,
    corpus: &Corpus,
    registry: &EpochRegistry<T>,
) -> PaperMetrics<T> {
    let mut flags = Vec::new();
    let reach = reach(paper).unwrap_or_else(|_| {
        flags.push(ScoreFlag::NoFocalScs);
        0
    });
    let props = RefProportions::<T>::from_refs(&corpus.resolved_refs(paper));
    let (ref_count, distinct) = props
        .as_ref()
        .map_or((0, 0), |p| (p.total_refs, p.distinct_scs()));
    let idr = match (&props, registry.select(paper.year)) {
        (None, _) => {
            flags.push(ScoreFlag::NoReferences);
            None
        }
        (Some(_), Err(_)) => {
            flags.push(ScoreFlag::NoMatrix);
            None
        }
        (Some(p), Ok(sim)) => match paper_idr(p, sim) {
            Ok(v) => Some(v),
            Err(Error::UnknownSc(i)) => {
                flags.push(ScoreFlag::UnknownSc(i));
                None
            }
            Err(_) => None,
        },
    };
    PaperMetrics {
        paper_id: paper.paper_id.clone(),
        year: paper.year,
        idr,
        reach,
        ref_count,
        distinct_ref_scs: distinct,
        flags,
    }
}

/// Score every paper using the epoch matrix nearest its publication year.
/// Per-paper problems are recorded as flags; the batch never aborts.
pub fn score_corpus<T: Weight>(
    corpus: &Corpus,
    registry: &EpochRegistry<T>,
) -> BTreeMap<String, PaperMetrics<T>> {
    corpus
        .papers
        .par_iter()
        .map(|p| (p.paper_id.clone(), score_paper(p, corpus, registry)))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PersonMetrics<T = f64> {
    pub person_id: String,
    /// Mean over the person's papers with a defined score.
    pub mean_idr: Option<T>,
    pub n_scored: usize,
    pub n_unscored: usize,
    pub variety: usize,
    pub multidisciplinarity: Option<T>,
}

pub fn person_metrics<T: Weight>(
    person_id: &str,
    corpus: &Corpus,
    scores: &BTreeMap<String, PaperMetrics<T>>,
    sim: &SimilarityMatrix<T>,
) -> PersonMetrics<T> {
    let papers: Vec<&PaperRecord> = corpus.papers_of(person_id).collect();
    let defined: Vec<T> = papers
        .iter()
        .filter_map(|p| scores.get(&p.paper_id)?.idr.clone())
        .collect();
    let mean_idr = (!defined.is_empty()).then(|| {
        let n = T::from_count(defined.len());
        defined.iter().cloned().fold(T::zero(), |a, b| a + b) / n
    });
    PersonMetrics {
        person_id: person_id.to_owned(),
        mean_idr,
        n_scored: defined.len(),
        n_unscored: papers.len() - defined.len(),
        variety: variety(papers.iter().copied(), corpus),
        multidisciplinarity: multidisciplinarity(papers.iter().copied(), corpus, sim).ok(),
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ScoreRow {
    paper_id: String,
    year: i32,
    idr: String,
    reach: usize,
    ref_count: usize,
    distinct_ref_scs: usize,
}

/// Write `scores.csv`; scores are printed with six decimals, undefined as empty.
pub fn write_scores_csv<W: io::Write>(
    scores: &BTreeMap<String, PaperMetrics<f64>>,
    writer: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| Error::Invalid(format!("writing scores: {e}"));
    if scores.is_empty() {
        w.write_record(["paper_id", "year", "idr", "reach", "ref_count", "distinct_ref_scs"])
            .map_err(csv_err)?;
    }
    for m in scores.values() {
        w.serialize(ScoreRow {
            paper_id: m.paper_id.clone(),
            year: m.year,
            idr: m.idr.map(|v| format!("{v:.6}")).unwrap_or_default(),
            reach: m.reach,
            ref_count: m.ref_count,
            distinct_ref_scs: m.distinct_ref_scs,
        })
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Invalid(format!("writing scores: {e}")))
}

/// Read `scores.csv` back into per-paper metrics (flags are not stored).
pub fn read_scores_csv<R: io::Read>(reader: R, name: &str) -> Result<BTreeMap<String, PaperMetrics<f64>>> {
    let mut out = BTreeMap::new();
    for (i, row) in csv::Reader::from_reader(reader).deserialize::<ScoreRow>().enumerate() {
        let err = |message: String| Error::Parse {
            file: name.to_owned(),
            line: i + 2,
            message,
        };
        let row = row.map_err(|e| err(e.to_string()))?;
        let idr = if row.idr.is_empty() {
            None
        } else {
            Some(row.idr.parse::<f64>().map_err(|e| err(e.to_string()))?)
        };
        let flags = if idr.is_none() {
            vec![ScoreFlag::NoReferences]
        } else {
            vec![]
        };
        out.insert(
            row.paper_id.clone(),
            PaperMetrics {
                paper_id: row.paper_id,
                year: row.year,
                idr,
                reach: row.reach,
                ref_count: row.ref_count,
                distinct_ref_scs: row.distinct_ref_scs,
                flags,
            },
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{JournalRecord, ScCatalog};
    use crate::sc_space::Provenance;
    use num_rational::Ratio;

    type Q = Ratio<i64>;

    fn refs(ids: &[&[u32]]) -> Vec<ResolvedRef> {
        ids.iter()
            .map(|scs| ResolvedRef {
                scs: scs.iter().map(|&i| ScId(i)).collect(),
            })
            .collect()
    }

    fn q(num: i64, den: i64) -> Q {
        Q::new(num, den)
    }

    /// The four-category worked example: SC1..SC4 -> ids 0..3.
    fn example_sim_exact() -> SimilarityMatrix<Q> {
        let off = [
            ((0, 1), q(2487, 10_000)),
            ((0, 2), q(83, 10_000)),
            ((0, 3), q(0, 1)),
            ((1, 2), q(3503, 10_000)),
            ((1, 3), q(1, 10_000)),
            ((2, 3), q(11, 10_000)),
        ];
        let mut v = vec![q(0, 1); 16];
        for i in 0..4 {
            v[i * 4 + i] = q(1, 1);
        }
        for ((i, j), s) in off {
            v[i * 4 + j] = s;
            v[j * 4 + i] = s;
        }
        let labels = (1..=4).map(|i| format!("SC{i}")).collect();
        SimilarityMatrix::from_dense(labels, "", Provenance::Fixture, v).unwrap()
    }

    #[test]
    fn article_one_proportions() {
        // refs: SC2, SC1, SC3, SC4, SC1
        let p = RefProportions::<Q>::from_refs(&refs(&[&[1], &[0], &[2], &[3], &[0]])).unwrap();
        assert_eq!(p.get(ScId(0)), q(2, 5));
        for i in 1..4 {
            assert_eq!(p.get(ScId(i)), q(1, 5));
        }
        assert_eq!(p.total_refs, 5);
        assert_eq!(p.distinct_scs(), 4);
    }

    #[test]
    fn single_category_proportions() {
        let p = RefProportions::<f64>::from_refs(&refs(&[&[2], &[2], &[2], &[2]])).unwrap();
        assert_eq!(p.weights.len(), 1);
        assert_eq!(p.get(ScId(2)), 1.0);
    }

    #[test]
    fn fractional_counting() {
        // one ref to a {A,B} journal, one to {B}: A = 0.5/2, B = 1.5/2
        let p = RefProportions::<Q>::from_refs(&refs(&[&[0, 1], &[1]])).unwrap();
        assert_eq!(p.get(ScId(0)), q(1, 4));
        assert_eq!(p.get(ScId(1)), q(3, 4));
    }

    #[test]
    fn empty_reference_list_is_undefined() {
        assert!(RefProportions::<f64>::from_refs(&[]).is_none());
    }

    // Exact-arithmetic values of the worked example:
    //   article 1: 1 - 0.31462  = 0.68538
    //   article 2: 1 - 0.736048 = 0.263952
    //   article 3: 1 - 0.680176 = 0.319824
    // The published four-decimal figures round each cell product first.
    #[test]
    fn worked_articles_in_exact_arithmetic() {
        let sim = example_sim_exact();
        let a1 = RefProportions::<Q>::from_refs(&refs(&[&[1], &[0], &[2], &[3], &[0]])).unwrap();
        let a2 = RefProportions::<Q>::from_refs(&refs(&[&[1], &[2], &[2], &[2], &[2]])).unwrap();
        let a3 = RefProportions::<Q>::from_refs(&refs(&[&[3], &[2], &[2], &[2], &[2]])).unwrap();
        assert_eq!(paper_idr(&a1, &sim).unwrap(), q(68_538, 100_000));
        assert_eq!(paper_idr(&a2, &sim).unwrap(), q(263_952, 1_000_000));
        assert_eq!(paper_idr(&a3, &sim).unwrap(), q(319_824, 1_000_000));
    }

    #[test]
    fn single_category_scores_zero() {
        let sim = example_sim_exact();
        let p = RefProportions::<Q>::from_refs(&refs(&[&[3], &[3]])).unwrap();
        assert_eq!(paper_idr(&p, &sim).unwrap(), q(0, 1));
    }

    #[test]
    fn category_outside_matrix() {
        let sim = SimilarityMatrix::<f64>::identity(vec!["a".into()]);
        let p = RefProportions::<f64>::from_refs(&refs(&[&[0], &[4]])).unwrap();
        assert!(matches!(paper_idr(&p, &sim), Err(Error::UnknownSc(4))));
    }

    fn two_paper_oeuvre() -> Corpus {
        let mut corpus = Corpus {
            catalog: ScCatalog::from_labels(["A", "B"]),
            ..Default::default()
        };
        for (id, sc) in [("JA", 0), ("JB", 1)] {
            corpus.journals.insert(
                id.into(),
                JournalRecord {
                    journal_id: id.into(),
                    sc_ids: vec![ScId(sc)],
                    impact_factor: None,
                },
            );
        }
        for (pid, j) in [("p1", "JA"), ("p2", "JB")] {
            corpus.papers.push(PaperRecord {
                paper_id: pid.into(),
                author_ids: vec!["x".into()],
                year: 2000,
                journal_id: j.into(),
                focal_sc_ids: vec![ScId(0)],
                ref_journals: vec![j.into(); 3],
                ref_scs: vec![],
                citations: 0,
            });
        }
        corpus
    }

    #[test]
    fn pooled_versus_mean_score() {
        let corpus = two_paper_oeuvre();
        let sim = SimilarityMatrix::<Q>::identity(corpus.catalog.labels().to_vec());
        let registry = EpochRegistry::single(2000, sim.clone());
        let scores = score_corpus(&corpus, &registry);
        let pm = person_metrics("x", &corpus, &scores, &sim);
        assert_eq!(pm.mean_idr, Some(q(0, 1)));
        assert_eq!(pm.multidisciplinarity, Some(q(1, 2)));
        assert_eq!(pm.variety, 2);
        assert_eq!(pm.n_scored, 2);

        let one = multidisciplinarity([&corpus.papers[0]], &corpus, &sim).unwrap();
        assert_eq!(Some(one), scores["p1"].idr);
        assert!(multidisciplinarity(std::iter::empty(), &corpus, &sim).is_err());
    }

    #[test]
    fn variety_is_union() {
        let mut corpus = two_paper_oeuvre();
        assert_eq!(variety(&corpus.papers, &corpus), 2);
        assert_eq!(variety(&corpus.papers[..1], &corpus), 1);
        corpus.papers[0].ref_journals.clear();
        assert_eq!(variety(&corpus.papers[..1], &corpus), 0);
    }

    #[test]
    fn reach_counts_focal_categories() {
        let mut paper = two_paper_oeuvre().papers.remove(0);
        assert_eq!(reach(&paper).unwrap(), 1);
        paper.focal_sc_ids = (0..6).map(ScId).collect();
        assert_eq!(reach(&paper).unwrap(), 6);
        paper.focal_sc_ids.clear();
        assert!(matches!(reach(&paper), Err(Error::NoFocalScs(_))));
    }

    #[test]
    fn unscorable_papers_are_flagged_not_fatal() {
        let mut corpus = two_paper_oeuvre();
        corpus.papers[1].ref_journals.clear();
        corpus.papers[1].focal_sc_ids.clear();
        let registry = EpochRegistry::single(2000, SimilarityMatrix::<f64>::identity(vec!["A".into(), "B".into()]));
        let scores = score_corpus(&corpus, &registry);
        assert_eq!(scores["p2"].idr, None);
        assert_eq!(scores["p2"].flags, vec![ScoreFlag::NoFocalScs, ScoreFlag::NoReferences]);
        assert_eq!(scores["p1"].idr, Some(0.0));

        let empty = EpochRegistry::<f64>::new();
        assert_eq!(score_corpus(&corpus, &empty)["p1"].flags, vec![ScoreFlag::NoMatrix]);
        assert!(score_corpus(&Corpus::default(), &registry).is_empty());
    }

    #[test]
    fn scores_csv_round_trip() {
        let corpus = two_paper_oeuvre();
        let registry = EpochRegistry::single(2000, SimilarityMatrix::<f64>::identity(vec!["A".into(), "B".into()]));
        let mut scores = score_corpus(&corpus, &registry);
        scores.get_mut("p2").unwrap().idr = None;
        let mut buf = Vec::new();
        write_scores_csv(&scores, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text,
            "paper_id,year,idr,reach,ref_count,distinct_ref_scs\np1,2000,0.000000,1,3,1\np2,2000,,1,3,1\n"
        );
        let back = read_scores_csv(&buf[..], "mem").unwrap();
        assert_eq!(back["p1"].idr, Some(0.0));
        assert_eq!(back["p2"].idr, None);

        let mut empty = Vec::new();
        write_scores_csv(&BTreeMap::new(), &mut empty).unwrap();
        assert_eq!(String::from_utf8(empty).unwrap(), "paper_id,year,idr,reach,ref_count,distinct_ref_scs\n");
    }
}
