#![allow(dead_code)]

use std::path::PathBuf;

use idr_core::panel::{build_panels, PanelConfig, Panels};
use idr_core::sc_space::{load_similarity_fixture, EpochRegistry};
use idr_core::stats::{run_h_models, ModelSuiteReport, PanelTables, SuiteSpec};
use idr_core::{generate, load_corpus, score_corpus, Corpus, CorpusPaths, Scores, SimConfig, Similarity, Simulation, Strictness};

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/worked_example")
}

pub fn worked_example() -> (Corpus, Similarity) {
    let dir = fixture_dir();
    let (corpus, report) = load_corpus(&CorpusPaths::in_dir(&dir), Strictness::Strict).expect("fixture corpus");
    assert!(report.warnings.is_empty());
    let sim = load_similarity_fixture(dir.join("similarity.sim")).expect("fixture matrix");
    (corpus, sim)
}

pub struct Outcome {
    pub sim: Simulation,
    pub scores: Scores,
    pub panels: Panels,
    pub report: ModelSuiteReport,
}

/// Simulate and score every paper against the generating matrix.
pub fn scored(cfg: &SimConfig) -> (Simulation, Scores) {
    let sim = generate(cfg).expect("simulation");
    let registry = EpochRegistry::single(cfg.year_start, sim.similarity.clone());
    let scores = score_corpus(&sim.corpus, &registry);
    (sim, scores)
}

/// [`scored`], then build panels and fit the default suite.
pub fn pipeline(cfg: &SimConfig) -> Outcome {
    let (sim, scores) = scored(cfg);
    let panels = build_panels(&sim.corpus, &scores, &sim.similarity, &PanelConfig::default()).expect("panels");
    let tables = PanelTables {
        person_year: &panels.person_year,
        paper: &panels.paper,
    };
    let report = run_h_models(tables, &SuiteSpec::default()).expect("model suite");
    Outcome {
        sim,
        scores,
        panels,
        report,
    }
}

/// 500 persons over 20 years with the productivity and visibility effects planted.
pub fn planted_main_effects(seed: u64) -> SimConfig {
    SimConfig {
        seed,
        beta_idr_productivity: -0.15,
        beta_idr_citation_mean: 0.45,
        ..SimConfig::default()
    }
}

/// Citation spread growing with the paper's score.
pub fn planted_dispersion(seed: u64) -> SimConfig {
    SimConfig {
        seed,
        beta_idr_citation_mean: 0.45,
        gamma_idr_citation_dispersion: 1.0,
        ..SimConfig::default()
    }
}

/// Productivity penalty that weakens in high-integration fields.
pub fn planted_moderation(seed: u64) -> SimConfig {
    SimConfig {
        seed,
        field_idr_means: vec![0.12, 0.2, 0.28, 0.36, 0.44],
        beta_idr_productivity: -0.6,
        beta_idr_x_field_productivity: 1.0,
        ..SimConfig::default()
    }
}
