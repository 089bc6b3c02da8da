//! Synthetic corpora with planted effects of integration on productivity,
//! citation level and citation spread.
//!
//! Every person draws from its own ChaCha stream (stream `index + 1` of the
//! master seed; stream 0 builds the category space and journals), so the
//! output does not depend on thread scheduling.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, FieldRecord, JournalRecord, PaperRecord, PersonRecord, ScCatalog, ScId};
use crate::error::{Error, Result};
use crate::ingest::{write_corpus, CorpusPaths};
use crate::sc_space::{similarity_to_text, Provenance, SimilarityMatrix};

/// Largest allowed gap between a requested and a realised mix score.
pub const MIX_TOLERANCE: f64 = 0.02;
/// Half-width of the window from which an equally good two-category mix is drawn.
const MIX_WINDOW: f64 = 0.005;

pub const SIMILARITY_FILE: &str = "similarity.sim";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub n_persons: usize,
    pub n_fields: usize,
    pub year_start: i32,
    pub year_end: i32,
    pub scs_per_field: usize,
    /// Centre of within-field similarities (each jittered by ±0.2).
    pub within_similarity: f64,
    /// Upper bound of cross-field similarities.
    pub cross_similarity: f64,
    /// Latent mean score per field; empty spreads 0.2..0.4 evenly.
    pub field_idr_means: Vec<f64>,
    pub person_idr_sd: f64,
    pub year_idr_sd: f64,
    pub paper_idr_sd: f64,
    pub idr_min: f64,
    pub idr_max: f64,
    pub refs_per_paper: usize,
    /// Expected papers per year at zero score.
    pub base_rate: f64,
    pub person_rate_sd: f64,
    pub beta_idr_productivity: f64,
    pub beta_idr_x_field_productivity: f64,
    /// Mean of ln(1 + citations) at zero score.
    pub citation_base: f64,
    pub person_citation_sd: f64,
    pub beta_idr_citation_mean: f64,
    pub beta_idr_x_field_citation: f64,
    pub citation_sd: f64,
    pub gamma_idr_citation_dispersion: f64,
    pub mean_coauthors: f64,
    pub coauthor_pool: usize,
    pub journals_per_field: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_persons: 500,
            n_fields: 5,
            year_start: 1990,
            year_end: 2009,
            scs_per_field: 8,
            within_similarity: 0.6,
            cross_similarity: 0.03,
            field_idr_means: Vec::new(),
            person_idr_sd: 0.06,
            year_idr_sd: 0.1,
            paper_idr_sd: 0.03,
            idr_min: 0.08,
            idr_max: 0.6,
            refs_per_paper: 20,
            base_rate: 5.0,
            person_rate_sd: 0.3,
            beta_idr_productivity: 0.0,
            beta_idr_x_field_productivity: 0.0,
            citation_base: 3.0,
            person_citation_sd: 0.5,
            beta_idr_citation_mean: 0.0,
            beta_idr_x_field_citation: 0.0,
            citation_sd: 0.6,
            gamma_idr_citation_dispersion: 0.0,
            mean_coauthors: 1.5,
            coauthor_pool: 6,
            journals_per_field: 4,
        }
    }
}

impl SimConfig {
    pub fn k(&self) -> usize {
        self.n_fields * self.scs_per_field
    }

    pub fn field_means(&self) -> Vec<f64> {
        if !self.field_idr_means.is_empty() {
            return self.field_idr_means.clone();
        }
        let n = self.n_fields;
        (0..n)
            .map(|f| if n == 1 { 0.3 } else { 0.2 + 0.2 * f as f64 / (n - 1) as f64 })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Invalid(format!("simulation config: {m}")));
        if self.n_persons == 0 || self.n_fields == 0 {
            return bad("n_persons and n_fields must be positive");
        }
        if self.k() < 2 {
            return bad("need at least two subject categories");
        }
        if self.year_end < self.year_start {
            return bad("year_end precedes year_start");
        }
        if self.refs_per_paper < 3 {
            return bad("refs_per_paper must be at least 3");
        }
        if !self.field_idr_means.is_empty() && self.field_idr_means.len() != self.n_fields {
            return bad("field_idr_means needs one value per field");
        }
        if !(0.0 <= self.idr_min && self.idr_min < self.idr_max && self.idr_max < 1.0) {
            return bad("need 0 <= idr_min < idr_max < 1");
        }
        if !(0.0..=1.0).contains(&self.within_similarity) || !(0.0..=1.0).contains(&self.cross_similarity) {
            return bad("similarities must lie in [0, 1]");
        }
        let positive = [self.base_rate, self.mean_coauthors + 1.0];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return bad("rates must be positive");
        }
        let sds = [
            self.person_idr_sd,
            self.year_idr_sd,
            self.paper_idr_sd,
            self.person_rate_sd,
            self.person_citation_sd,
            self.citation_sd,
        ];
        if sds.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return bad("standard deviations must be finite and nonnegative");
        }
        let effects = [
            self.beta_idr_productivity,
            self.beta_idr_x_field_productivity,
            self.citation_base,
            self.beta_idr_citation_mean,
            self.beta_idr_x_field_citation,
            self.gamma_idr_citation_dispersion,
        ];
        if effects.iter().any(|v| !v.is_finite()) || self.field_means().iter().any(|v| !v.is_finite()) {
            return bad("effect sizes must be finite");
        }
        if self.coauthor_pool == 0 && self.mean_coauthors > 0.0 {
            return bad("coauthor_pool must be positive when coauthors are drawn");
        }
        if self.journals_per_field == 0 {
            return bad("journals_per_field must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearTruth {
    pub year: i32,
    /// Score targeted by every paper of the year before paper-level noise.
    pub target_idr: f64,
    /// Poisson mean of the year's paper count.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonTruth {
    pub person_id: String,
    pub field_id: String,
    pub field_mean: f64,
    pub idr_propensity: f64,
    pub log_rate_intercept: f64,
    pub citation_intercept: f64,
    pub anchor_sc: String,
    pub years: Vec<YearTruth>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub config: SimConfig,
    pub field_means: BTreeMap<String, f64>,
    pub persons: Vec<PersonTruth>,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub corpus: Corpus,
    pub similarity: SimilarityMatrix<f64>,
    pub truth: GroundTruth,
}

fn mix_idr(counts: &[(usize, usize)], sim: &SimilarityMatrix<f64>, n: usize) -> f64 {
    let n = n as f64;
    let mut sum = 0.0;
    for (a, &(i, ci)) in counts.iter().enumerate() {
        for &(j, cj) in &counts[a..] {
            sum += sim.get(i, j) * (ci as f64 / n) * (cj as f64 / n);
        }
    }
    (1.0 - sum).max(0.0)
}

fn expand(counts: &[(usize, usize)]) -> Vec<ScId> {
    counts
        .iter()
        .flat_map(|&(sc, c)| std::iter::repeat_n(ScId(sc as u32), c))
        .collect()
}

/// Two-category mixes anchored on one category, sorted by score.
#[derive(Debug, Clone)]
struct MixTable {
    /// (score, partner, references to the partner)
    entries: Vec<(f64, usize, usize)>,
}

impl MixTable {
    fn new(anchor: usize, sim: &SimilarityMatrix<f64>, n: usize) -> Self {
        let mut entries = vec![(0.0, anchor, 0)];
        for j in (0..sim.k()).filter(|&j| j != anchor) {
            for c in 1..n {
                entries.push((mix_idr(&[(anchor, n - c), (j, c)], sim, n), j, c));
            }
        }
        entries.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        Self { entries }
    }

    fn nearest(&self, target: f64) -> (f64, usize, usize) {
        let i = self.entries.partition_point(|e| e.0 < target);
        let below = i.checked_sub(1).map(|k| self.entries[k]);
        let above = self.entries.get(i).copied();
        match (below, above) {
            (Some(b), Some(a)) => {
                if (target - b.0) <= (a.0 - target) {
                    b
                } else {
                    a
                }
            }
            (Some(b), None) => b,
            (None, Some(a)) => a,
            (None, None) => unreachable!("table holds the single-category mix"),
        }
    }

    fn window(&self, target: f64) -> &[(f64, usize, usize)] {
        let lo = self.entries.partition_point(|e| e.0 < target - MIX_WINDOW);
        let hi = self.entries.partition_point(|e| e.0 <= target + MIX_WINDOW);
        &self.entries[lo..hi]
    }
}

/// Best three-category mix containing `anchor`; stops early on a near-exact hit.
fn three_category_mix(
    target: f64,
    anchor: usize,
    sim: &SimilarityMatrix<f64>,
    n: usize,
) -> Option<(f64, Vec<(usize, usize)>)> {
    let k = sim.k();
    let mut best: Option<(f64, Vec<(usize, usize)>)> = None;
    let others: Vec<usize> = (0..k).filter(|&j| j != anchor).collect();
    for (a, &j) in others.iter().enumerate() {
        for &l in &others[a + 1..] {
            let third = n / 3;
            let even = [(anchor, n - 2 * third), (j, third), (l, third)];
            if mix_idr(&even, sim, n) < target - MIX_TOLERANCE {
                continue;
            }
            for cj in 1..n - 1 {
                for cl in 1..n - cj {
                    let mix = vec![(anchor, n - cj - cl), (j, cj), (l, cl)];
                    let v = mix_idr(&mix, sim, n);
                    let err = (v - target).abs();
                    if best.as_ref().is_none_or(|(b, _)| err < (b - target).abs()) {
                        best = Some((v, mix));
                        if err < 1e-3 {
                            return best;
                        }
                    }
                }
            }
        }
    }
    best
}

fn unreachable_target(target: f64, ceiling: f64) -> Error {
    Error::UnreachableTarget { target, ceiling }
}

/// A reference multiset of `n_refs` categories whose score under `sim` is
/// within [`MIX_TOLERANCE`] of `target`. Two-category mixes are searched
/// first, then three-category mixes.
pub fn target_idr_mix(target: f64, sim: &SimilarityMatrix<f64>, n_refs: usize) -> Result<Vec<ScId>> {
    if !(0.0..1.0).contains(&target) || sim.k() == 0 || n_refs == 0 {
        return Err(unreachable_target(target, 0.0));
    }
    let mut best: Option<(f64, usize, usize, usize)> = None;
    let mut ceiling = 0.0f64;
    for anchor in 0..sim.k() {
        let table = MixTable::new(anchor, sim, n_refs);
        ceiling = ceiling.max(table.entries.last().map_or(0.0, |e| e.0));
        let (v, j, c) = table.nearest(target);
        if best.is_none_or(|b| (v - target).abs() < (b.0 - target).abs()) {
            best = Some((v, anchor, j, c));
        }
    }
    let (v, anchor, j, c) = best.expect("at least one category");
    if (v - target).abs() <= MIX_TOLERANCE {
        return Ok(expand(&[(anchor, n_refs - c), (j, c)]));
    }
    if target > v && n_refs >= 3 && sim.k() >= 3 {
        let mut best3: Option<(f64, Vec<(usize, usize)>)> = None;
        for anchor in 0..sim.k() {
            if let Some((v, mix)) = three_category_mix(target, anchor, sim, n_refs) {
                ceiling = ceiling.max(v);
                if best3.as_ref().is_none_or(|(b, _)| (v - target).abs() < (b - target).abs()) {
                    best3 = Some((v, mix));
                }
            }
        }
        if let Some((v, mix)) = best3 {
            if (v - target).abs() <= MIX_TOLERANCE {
                return Ok(expand(&mix));
            }
        }
    }
    Err(unreachable_target(target, ceiling))
}

/// Anchored variant used by the generator: draws among equally close
/// two-category mixes so a person's papers do not all cite the same pair.
fn anchored_mix(
    target: f64,
    anchor: usize,
    table: &MixTable,
    sim: &SimilarityMatrix<f64>,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<ScId>> {
    let window = table.window(target);
    if let Some(&(_, j, c)) = window.choose(rng) {
        return Ok(expand(&[(anchor, n - c), (j, c)]));
    }
    let (v, j, c) = table.nearest(target);
    if (v - target).abs() <= MIX_TOLERANCE {
        return Ok(expand(&[(anchor, n - c), (j, c)]));
    }
    let ceiling = table.entries.last().map_or(0.0, |e| e.0);
    if target > ceiling {
        if let Some((w, mix)) = three_category_mix(target, anchor, sim, n) {
            if (w - target).abs() <= MIX_TOLERANCE {
                return Ok(expand(&mix));
            }
            return Err(unreachable_target(target, w.max(ceiling)));
        }
    }
    Err(unreachable_target(target, ceiling))
}

fn label_width(k: usize) -> usize {
    k.to_string().len().max(3)
}

fn sc_label(i: usize, width: usize) -> String {
    format!("SC{:0width$}", i + 1)
}

fn field_label(f: usize) -> String {
    format!("F{:02}", f + 1)
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Block-structured similarity: categories of one field are close, others far.
fn block_similarity(cfg: &SimConfig, labels: Vec<String>, rng: &mut ChaCha8Rng) -> Result<SimilarityMatrix<f64>> {
    let k = cfg.k();
    let mut values = vec![0.0; k * k];
    for i in 0..k {
        values[i * k + i] = 1.0;
        for j in (i + 1)..k {
            let v = if i / cfg.scs_per_field == j / cfg.scs_per_field {
                (cfg.within_similarity + rng.random_range(-0.2..=0.2)).clamp(0.0, 0.99)
            } else {
                rng.random_range(0.0..=cfg.cross_similarity)
            };
            values[i * k + j] = v;
            values[j * k + i] = v;
        }
    }
    SimilarityMatrix::from_dense(labels, "simulated", Provenance::Fixture, values)
}

struct Journals {
    records: Vec<JournalRecord>,
    /// Publication outlets per field, as indices into `records`.
    by_field: Vec<Vec<usize>>,
}

fn make_journals(cfg: &SimConfig, width: usize, rng: &mut ChaCha8Rng) -> Journals {
    let ref_jif = LogNormal::new(0.0, 0.5).expect("valid");
    let pub_jif = LogNormal::new(0.5, 0.5).expect("valid");
    let mut records: Vec<JournalRecord> = (0..cfg.k())
        .map(|i| JournalRecord {
            journal_id: format!("J-{}", sc_label(i, width)),
            sc_ids: vec![ScId(i as u32)],
            impact_factor: Some(round4(ref_jif.sample(rng))),
        })
        .collect();
    let mut by_field = Vec::new();
    for f in 0..cfg.n_fields {
        let block: Vec<usize> = (f * cfg.scs_per_field..(f + 1) * cfg.scs_per_field).collect();
        let mut ids = Vec::new();
        for j in 0..cfg.journals_per_field {
            let n = rng.random_range(1..=block.len().min(3));
            let mut scs: Vec<ScId> = block.choose_multiple(rng, n).map(|&i| ScId(i as u32)).collect();
            scs.sort();
            ids.push(records.len());
            records.push(JournalRecord {
                journal_id: format!("{}-J{}", field_label(f), j + 1),
                sc_ids: scs,
                impact_factor: Some(round4(pub_jif.sample(rng))),
            });
        }
        by_field.push(ids);
    }
    Journals { records, by_field }
}

fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

struct PersonOutput {
    record: PersonRecord,
    papers: Vec<PaperRecord>,
    truth: PersonTruth,
}

struct Shared<'a> {
    cfg: &'a SimConfig,
    sim: &'a SimilarityMatrix<f64>,
    tables: &'a [MixTable],
    journals: &'a Journals,
    field_means: &'a [f64],
    width: usize,
}

fn clamp_idr(cfg: &SimConfig, v: f64) -> f64 {
    v.clamp(cfg.idr_min, cfg.idr_max)
}

fn generate_person(index: usize, ctx: &Shared<'_>) -> Result<PersonOutput> {
    let cfg = ctx.cfg;
    let mut rng = stream(cfg.seed, index as u64 + 1);
    let std_normal = Normal::new(0.0, 1.0).expect("valid");
    let normal = |rng: &mut ChaCha8Rng, sd: f64| sd * std_normal.sample(rng);

    let person_id = format!("R{:0w$}", index + 1, w = cfg.n_persons.to_string().len().max(4));
    let field = index % cfg.n_fields;
    let field_id = field_label(field);
    let field_mean = ctx.field_means[field];
    let anchor = field * cfg.scs_per_field + rng.random_range(0..cfg.scs_per_field);
    let propensity = clamp_idr(cfg, field_mean + normal(&mut rng, cfg.person_idr_sd));
    let log_rate_intercept = cfg.base_rate.ln() + normal(&mut rng, cfg.person_rate_sd);
    let citation_intercept = cfg.citation_base + normal(&mut rng, cfg.person_citation_sd);
    let record = PersonRecord {
        person_id: person_id.clone(),
        field_id: field_id.clone(),
        phd_year: Some(cfg.year_start - rng.random_range(1..=20)),
        female: Some(rng.random_bool(0.3)),
        phd_rank: Some(rng.random_range(1..=100) as f64),
        status: Some(rng.random_range(0..=20) as f64),
    };
    let pool: Vec<String> = (0..cfg.coauthor_pool).map(|c| format!("{person_id}-c{}", c + 1)).collect();
    let coauthors = (cfg.mean_coauthors > 0.0).then(|| Poisson::new(cfg.mean_coauthors).expect("positive mean"));
    let outlets = &ctx.journals.by_field[field];

    let mut papers = Vec::new();
    let mut years = Vec::new();
    for year in cfg.year_start..=cfg.year_end {
        let target = clamp_idr(cfg, propensity + normal(&mut rng, cfg.year_idr_sd));
        let rate = (log_rate_intercept
            + cfg.beta_idr_productivity * target
            + cfg.beta_idr_x_field_productivity * target * field_mean)
            .exp();
        years.push(YearTruth {
            year,
            target_idr: target,
            rate,
        });
        let count = Poisson::new(rate).map_err(|e| Error::Invalid(format!("rate {rate}: {e}")))?.sample(&mut rng) as usize;
        for k in 0..count {
            let paper_target = clamp_idr(cfg, target + normal(&mut rng, cfg.paper_idr_sd));
            let refs = anchored_mix(paper_target, anchor, &ctx.tables[anchor], ctx.sim, cfg.refs_per_paper, &mut rng)?;
            let counts = tally(&refs);
            let idr = mix_idr(&counts, ctx.sim, refs.len());
            let log_mean = citation_intercept
                + cfg.beta_idr_citation_mean * idr
                + cfg.beta_idr_x_field_citation * idr * field_mean;
            let spread = (cfg.citation_sd + cfg.gamma_idr_citation_dispersion * idr).max(0.0);
            let citations = (log_mean + normal(&mut rng, spread)).exp() - 1.0;

            let mut authors = vec![person_id.clone()];
            if let Some(dist) = &coauthors {
                let m = (dist.sample(&mut rng) as usize).min(pool.len());
                authors.extend(pool.choose_multiple(&mut rng, m).cloned());
            }
            let journal = &ctx.journals.records[*outlets.choose(&mut rng).expect("field has outlets")];
            papers.push(PaperRecord {
                paper_id: format!("{person_id}-{year}-{:02}", k + 1),
                author_ids: authors,
                year,
                journal_id: journal.journal_id.clone(),
                focal_sc_ids: journal.sc_ids.clone(),
                ref_journals: refs
                    .iter()
                    .map(|sc| format!("J-{}", sc_label(sc.index(), ctx.width)))
                    .collect(),
                ref_scs: Vec::new(),
                citations: citations.round().max(0.0) as u64,
            });
        }
    }
    Ok(PersonOutput {
        record,
        papers,
        truth: PersonTruth {
            person_id,
            field_id,
            field_mean,
            idr_propensity: propensity,
            log_rate_intercept,
            citation_intercept,
            anchor_sc: sc_label(anchor, ctx.width),
            years,
        },
    })
}

fn tally(refs: &[ScId]) -> Vec<(usize, usize)> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for r in refs {
        *counts.entry(r.index()).or_default() += 1;
    }
    counts.into_iter().collect()
}

/// Build a corpus, its similarity matrix and the planted ground truth.
pub fn generate(cfg: &SimConfig) -> Result<Simulation> {
    cfg.validate()?;
    let k = cfg.k();
    let width = label_width(k);
    let labels: Vec<String> = (0..k).map(|i| sc_label(i, width)).collect();
    let mut rng = stream(cfg.seed, 0);
    let similarity = block_similarity(cfg, labels.clone(), &mut rng)?;
    let journals = make_journals(cfg, width, &mut rng);
    let field_means = cfg.field_means();
    let tables: Vec<MixTable> = (0..k)
        .into_par_iter()
        .map(|a| MixTable::new(a, &similarity, cfg.refs_per_paper))
        .collect();
    let ctx = Shared {
        cfg,
        sim: &similarity,
        tables: &tables,
        journals: &journals,
        field_means: &field_means,
        width,
    };
    let people = (0..cfg.n_persons)
        .into_par_iter()
        .map(|i| generate_person(i, &ctx))
        .collect::<Result<Vec<_>>>()?;

    let mut fields = BTreeMap::new();
    for f in 0..cfg.n_fields {
        let id = field_label(f);
        fields.insert(
            id.clone(),
            FieldRecord {
                field_id: id,
                size_phds: rng.random_range(100..=2000),
                avg_citations: round4(rng.random_range(5.0..40.0)),
                turnaround_months: round4(rng.random_range(2.0..12.0)),
            },
        );
    }
    let mut corpus = Corpus {
        catalog: ScCatalog::from_labels(labels),
        journals: journals
            .records
            .iter()
            .map(|j| (j.journal_id.clone(), j.clone()))
            .collect(),
        fields,
        ..Default::default()
    };
    let mut truths = Vec::with_capacity(people.len());
    for p in people {
        corpus.persons.insert(p.record.person_id.clone(), p.record);
        corpus.papers.extend(p.papers);
        truths.push(p.truth);
    }
    let truth = GroundTruth {
        config: cfg.clone(),
        field_means: (0..cfg.n_fields).map(|f| (field_label(f), field_means[f])).collect(),
        persons: truths,
    };
    Ok(Simulation {
        corpus,
        similarity,
        truth,
    })
}

#[derive(Debug, Clone)]
pub struct SimulationFiles {
    pub corpus: CorpusPaths,
    pub similarity: PathBuf,
    pub ground_truth: PathBuf,
}

/// Write the corpus files, `similarity.sim` and `ground_truth.json` into `dir`.
pub fn write_simulation(sim: &Simulation, dir: impl AsRef<Path>) -> Result<SimulationFiles> {
    let dir = dir.as_ref();
    let corpus = write_corpus(&sim.corpus, dir)?;
    let similarity = dir.join(SIMILARITY_FILE);
    fs::write(&similarity, similarity_to_text(&sim.similarity)).map_err(|e| Error::io(&similarity, e))?;
    let ground_truth = dir.join(GROUND_TRUTH_FILE);
    let mut json = serde_json::to_string_pretty(&sim.truth).expect("in-memory serialization");
    json.push('\n');
    fs::write(&ground_truth, json).map_err(|e| Error::io(&ground_truth, e))?;
    Ok(SimulationFiles {
        corpus,
        similarity,
        ground_truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::validate_corpus;
    use crate::metrics::score_corpus;
    use crate::sc_space::EpochRegistry;

    fn orthogonal(k: usize) -> SimilarityMatrix<f64> {
        SimilarityMatrix::identity((0..k).map(|i| format!("S{i}")).collect())
    }

    #[test]
    fn zero_target_is_single_category() {
        let refs = target_idr_mix(0.0, &orthogonal(3), 10).unwrap();
        assert_eq!(refs.len(), 10);
        assert!(refs.iter().all(|r| *r == refs[0]));
    }

    #[test]
    fn half_with_two_orthogonal_categories_is_even_split() {
        let refs = target_idr_mix(0.5, &orthogonal(2), 20).unwrap();
        let counts = tally(&refs);
        assert_eq!(counts, vec![(0, 10), (1, 10)]);
        assert_eq!(mix_idr(&counts, &orthogonal(2), 20), 0.5);
    }

    #[test]
    fn targets_above_the_ceiling_fail() {
        let err = target_idr_mix(0.9, &orthogonal(2), 20).unwrap_err();
        match err {
            Error::UnreachableTarget { ceiling, .. } => assert_eq!(ceiling, 0.5),
            e => panic!("{e:?}"),
        }
        assert!(target_idr_mix(1.0, &orthogonal(4), 20).is_err());
        assert!(target_idr_mix(-0.1, &orthogonal(4), 20).is_err());
    }

    #[test]
    fn three_category_fallback() {
        // two orthogonal categories reach at most 0.5; three reach 2/3
        let refs = target_idr_mix(0.6, &orthogonal(3), 30).unwrap();
        let v = mix_idr(&tally(&refs), &orthogonal(3), 30);
        assert!((v - 0.6).abs() <= MIX_TOLERANCE, "{v}");
        assert_eq!(tally(&refs).len(), 3);
    }

    #[test]
    fn mixes_hit_targets_on_block_similarity() {
        let cfg = SimConfig {
            n_persons: 1,
            ..Default::default()
        };
        let mut rng = stream(1, 0);
        let labels = (0..cfg.k()).map(|i| sc_label(i, 3)).collect();
        let sim = block_similarity(&cfg, labels, &mut rng).unwrap();
        for t in [0.08, 0.1, 0.25, 0.4, 0.49, 0.55, 0.6] {
            let refs = target_idr_mix(t, &sim, 20).unwrap();
            let v = mix_idr(&tally(&refs), &sim, 20);
            assert!((v - t).abs() <= MIX_TOLERANCE, "{t}: {v}");
        }
    }

    fn small() -> SimConfig {
        SimConfig {
            seed: 42,
            n_persons: 30,
            year_start: 2000,
            year_end: 2005,
            ..Default::default()
        }
    }

    #[test]
    fn generated_corpus_is_valid_and_scores_near_targets() {
        let s = generate(&small()).unwrap();
        assert!(validate_corpus(&s.corpus).is_empty());
        let scores = score_corpus(&s.corpus, &EpochRegistry::single(2000, s.similarity.clone()));
        let realised: Vec<f64> = scores.values().map(|m| m.idr.unwrap()).collect();
        let mean = realised.iter().sum::<f64>() / realised.len() as f64;
        let planted: f64 = s.truth.persons.iter().map(|p| p.field_mean).sum::<f64>() / s.truth.persons.len() as f64;
        assert!((mean - planted).abs() < 0.03, "{mean} vs {planted}");
    }

    #[test]
    fn same_seed_same_corpus() {
        let a = generate(&small()).unwrap();
        let b = generate(&small()).unwrap();
        assert_eq!(a.corpus, b.corpus);
        assert_eq!(a.truth, b.truth);
        let c = generate(&SimConfig { seed: 43, ..small() }).unwrap();
        assert_ne!(a.corpus.papers, c.corpus.papers);
    }

    #[test]
    fn invalid_configs_rejected() {
        for bad in [
            SimConfig { n_persons: 0, ..small() },
            SimConfig { base_rate: 0.0, ..small() },
            SimConfig { idr_max: 1.0, ..small() },
            SimConfig { field_idr_means: vec![0.1], ..small() },
            SimConfig { beta_idr_productivity: f64::NAN, ..small() },
        ] {
            assert!(generate(&bad).is_err());
        }
    }
}
