//! Acceptance checks. Each criterion prints one PASS/FAIL line with its
//! measured runtime; the process exits non-zero if any criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use idr_core::corpus::{PaperRecord, ResolvedRef, ScCatalog};
use idr_core::metrics::{paper_idr, person_metrics, RefProportions};
use idr_core::panel::{median_split_variance, write_csv, PAPER_COLUMNS, PERSON_COLUMNS, PERSON_YEAR_COLUMNS};
use idr_core::sc_space::{build_cocitation, counts_to_text, similarity_to_text, to_cosine, Provenance, YearWindow};
use idr_core::stats::regression::{poisson_log_likelihood, poisson_score, LOGLIK_SLACK};
use idr_core::stats::{
    ols, poisson_irls, within_demean, write_grid_csv, write_models_csv, DesignMatrix, Effects, IrlsOptions,
    OutcomeKind, INTERACTION,
};
use idr_core::{score_corpus, CoCitationCounts, Corpus, EpochRegistry, ScId, SimConfig, Similarity};

type Verdict = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    check: fn() -> Verdict,
}

fn ensure(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// 1 ------------------------------------------------------------------------

fn worked_example_conformance() -> Verdict {
    let (corpus, sim) = common::worked_example();
    let scores = score_corpus(&corpus, &EpochRegistry::single(2010, sim));
    let expected = [("article-1", 0.6854), ("article-2", 0.2639), ("article-3", 0.3198)];
    let mut parts = Vec::new();
    let mut ok = true;
    for (id, want) in expected {
        let got = scores[id].idr.ok_or(format!("{id} unscored"))?;
        let diff = (got - want).abs();
        let pass = diff <= 5e-5;
        ok &= pass;
        parts.push(format!("{id} {got:.6} vs {want} (|d| {diff:.1e}{})", if pass { "" } else { " > 5e-5" }));
    }
    ensure(ok, parts.join("; "))
}

// 2 ------------------------------------------------------------------------

fn random_similarity(k: usize, rng: &mut ChaCha8Rng) -> Similarity {
    let mut values = vec![0.0; k * k];
    for i in 0..k {
        values[i * k + i] = 1.0;
        for j in (i + 1)..k {
            let v = if rng.random_bool(0.3) { 0.0 } else { rng.random::<f64>() };
            values[i * k + j] = v;
            values[j * k + i] = v;
        }
    }
    let labels = (0..k).map(|i| format!("S{i:03}")).collect();
    Similarity::from_dense(labels, "", Provenance::Fixture, values).unwrap()
}

fn random_refs(k: usize, n_refs: usize, max_scs: usize, rng: &mut ChaCha8Rng) -> Vec<ResolvedRef> {
    let n_cats = rng.random_range(1..=max_scs.min(k));
    let pool: Vec<u32> = (0..n_cats).map(|_| rng.random_range(0..k as u32)).collect();
    (0..n_refs)
        .map(|_| {
            let scs = if rng.random_bool(0.2) {
                // a multi-category journal
                let a = pool[rng.random_range(0..pool.len())];
                let b = pool[rng.random_range(0..pool.len())];
                BTreeSet::from([a, b]).into_iter().map(ScId).collect()
            } else {
                vec![ScId(pool[rng.random_range(0..pool.len())])]
            };
            ResolvedRef { scs }
        })
        .collect()
}

fn idr_bounds_and_zero_law() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut singles = 0;
    for _ in 0..10_000 {
        let k = rng.random_range(1..=20);
        let sim = random_similarity(k, &mut rng);
        let n_refs = rng.random_range(1..=30);
        let refs = random_refs(k, n_refs, 6, &mut rng);
        let props = RefProportions::<f64>::from_refs(&refs).unwrap();
        let v = paper_idr(&props, &sim).map_err(|e| e.to_string())?;
        if !(0.0..1.0).contains(&v) {
            return Err(format!("score {v} outside [0, 1)"));
        }
        if props.distinct_scs() == 1 {
            singles += 1;
            if v != 0.0 {
                return Err(format!("single-category paper scored {v}"));
            }
        }
        min = min.min(v);
        max = max.max(v);
    }
    Ok(format!("10000 instances in [{min:.4}, {max:.4}], {singles} single-category papers exactly 0"))
}

// 3 ------------------------------------------------------------------------

fn sparse_equals_naive() -> Verdict {
    let k = 244;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sim = random_similarity(k, &mut rng);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let refs = random_refs(k, rng.random_range(1..=60), 25, &mut rng);
        let props = RefProportions::<f64>::from_refs(&refs).unwrap();
        let sparse = paper_idr(&props, &sim).map_err(|e| e.to_string())?;
        let dense: Vec<f64> = (0..k).map(|i| props.get(ScId(i as u32))).collect();
        let mut sum = 0.0;
        for i in 0..k {
            for j in i..k {
                sum += sim.get(i, j) * dense[i] * dense[j];
            }
        }
        let naive = (1.0 - sum).max(0.0);
        let rel = if naive == 0.0 { sparse.abs() } else { (sparse - naive).abs() / naive.abs() };
        worst = worst.max(rel);
    }
    ensure(worst <= 1e-12, format!("1000 papers, K = 244, worst relative gap {worst:.1e}"))
}

// 4 ------------------------------------------------------------------------

fn cosine_properties() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_scale: f64 = 0.0;
    for _ in 0..1000 {
        let k = rng.random_range(1..=25);
        let mut counts = vec![0u64; k * k];
        for i in 0..k {
            for j in i..k {
                let v = if rng.random_bool(0.4) { 0 } else { rng.random_range(0..500) };
                counts[i * k + j] = v;
                counts[j * k + i] = v;
            }
        }
        let labels: Vec<String> = (0..k).map(|i| format!("S{i}")).collect();
        let m = CoCitationCounts::from_dense(labels, "e", counts).map_err(|e| e.to_string())?;
        let s: Similarity = to_cosine(&m);
        for i in 0..k {
            if *s.get(i, i) != 1.0 {
                return Err(format!("diagonal {i} = {}", s.get(i, i)));
            }
            for j in 0..k {
                let v = *s.get(i, j);
                if !(0.0..=1.0).contains(&v) || v != *s.get(j, i) {
                    return Err(format!("entry ({i}, {j}) = {v} out of range or asymmetric"));
                }
            }
        }
        let factor = rng.random_range(2..1000);
        let scaled: Similarity = to_cosine(&m.scaled(factor));
        for (a, b) in s.as_slice().iter().zip(scaled.as_slice()) {
            worst_scale = worst_scale.max((a - b).abs());
        }
    }
    ensure(
        worst_scale <= 1e-12,
        format!("1000 matrices symmetric, unit diagonal, in [0, 1]; scaling moves entries by at most {worst_scale:.1e}"),
    )
}

// 5 ------------------------------------------------------------------------

fn mono_paper(id: &str, sc: u32) -> PaperRecord {
    PaperRecord {
        paper_id: id.into(),
        author_ids: vec!["x".into()],
        year: 2000,
        journal_id: String::new(),
        focal_sc_ids: vec![ScId(sc)],
        ref_journals: vec![],
        ref_scs: vec![ScId(sc)],
        citations: 0,
    }
}

fn inter_versus_multi() -> Verdict {
    let corpus = Corpus {
        catalog: ScCatalog::from_labels(["A", "B"]),
        papers: vec![mono_paper("a", 0), mono_paper("b", 1)],
        ..Default::default()
    };
    let sim = Similarity::identity(vec!["A".into(), "B".into()]);
    let scores = score_corpus(&corpus, &EpochRegistry::single(2000, sim.clone()));
    let m = person_metrics("x", &corpus, &scores, &sim);
    ensure(
        m.mean_idr == Some(0.0) && m.multidisciplinarity == Some(0.5),
        format!("mean per-paper {:?}, pooled {:?}", m.mean_idr, m.multidisciplinarity),
    )
}

// 6 ------------------------------------------------------------------------

fn fwl_equivalence() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    let mut instances = 0;
    for _ in 0..200 {
        let g = rng.random_range(2..=20);
        let mut entity = Vec::new();
        for e in 0..g {
            for _ in 0..rng.random_range(2..=6) {
                entity.push(e);
            }
        }
        let n = entity.len();
        let k = rng.random_range(1..=4);
        let effects: Vec<f64> = (0..g).map(|_| noise.sample(&mut rng) * 3.0).collect();
        let cols: Vec<Vec<f64>> = (0..k)
            .map(|_| entity.iter().map(|&e| effects[e] + noise.sample(&mut rng)).collect())
            .collect();
        let y: Vec<f64> = (0..n)
            .map(|i| effects[entity[i]] + cols.iter().map(|c| 0.7 * c[i]).sum::<f64>() + noise.sample(&mut rng))
            .collect();
        if n <= k + g {
            continue;
        }
        let names: Vec<String> = (0..k).map(|j| format!("x{j}")).collect();
        let design = DesignMatrix::new(names.clone(), cols.clone(), y.clone(), entity.clone(), OutcomeKind::LogContinuous)
            .map_err(|e| e.to_string())?;
        let within = ols(&within_demean(&design).design).map_err(|e| e.to_string())?;

        let mut dummy_names = names.clone();
        let mut dummy_cols = cols.clone();
        for e in 0..g {
            dummy_names.push(format!("d{e}"));
            dummy_cols.push(entity.iter().map(|&x| f64::from(u8::from(x == e))).collect());
        }
        let lsdv = ols(&DesignMatrix::new(dummy_names, dummy_cols, y, vec![], OutcomeKind::LogContinuous).unwrap())
            .map_err(|e| e.to_string())?;
        for name in &names {
            let (a, b) = (within.coef(name).unwrap(), lsdv.coef(name).unwrap());
            worst = worst.max((a - b).abs());
            let (sa, sb) = (within.se_classical_of(name).unwrap(), lsdv.se_classical_of(name).unwrap());
            if (sa - sb).abs() > 1e-8 * sb.max(1.0) {
                return Err(format!("classical SE differs: {sa} vs {sb}"));
            }
        }
        instances += 1;
    }
    ensure(worst <= 1e-8, format!("{instances} instances, max coefficient gap {worst:.1e}"))
}

// 7 ------------------------------------------------------------------------

fn poisson_checks() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let counts: Vec<f64> = (0..300).map(|_| Poisson::new(3.7).unwrap().sample(&mut rng)).collect();
    let mean = counts.iter().sum::<f64>() / counts.len() as f64;
    let d0 = DesignMatrix::new(vec![], vec![], counts, vec![], OutcomeKind::Count)
        .unwrap()
        .with_intercept();
    let fit0 = poisson_irls(&d0, IrlsOptions::default()).map_err(|e| e.to_string())?;
    let gap0 = (fit0.coefficients[0] - mean.ln()).abs();
    if gap0 > 1e-10 {
        return Err(format!("intercept {} vs ln(mean) {}", fit0.coefficients[0], mean.ln()));
    }

    let mut worst_score: f64 = 0.0;
    let mut worst_fd: f64 = 0.0;
    for effects in [Effects::Pooled, Effects::EntityFixed] {
        let n = 400;
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let z: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
        let entity: Vec<usize> = (0..n).map(|i| i % 40).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let lam = (0.5 + 1.0 * x[i] - 0.3 * z[i] + 0.1 * (entity[i] % 5) as f64).exp();
                Poisson::new(lam).unwrap().sample(&mut rng)
            })
            .collect();
        let mut d = DesignMatrix::new(vec!["x".into(), "z".into()], vec![x, z], y, entity, OutcomeKind::Count).unwrap();
        d = if effects == Effects::Pooled { d.with_intercept() } else { d.with_effects(effects) };
        let fit = poisson_irls(&d, IrlsOptions::default()).map_err(|e| e.to_string())?;
        let beta = fit.coefficients.clone();
        let score = poisson_score(&d, &beta);
        let path = &fit.convergence.as_ref().unwrap().log_likelihood_path;
        if path.windows(2).any(|w| w[1] < w[0] - LOGLIK_SLACK * w[0].abs().max(1.0)) {
            return Err("log-likelihood decreased along the IRLS path".into());
        }
        let h = 1e-5;
        for j in 0..beta.len() {
            let mut up = beta.clone();
            let mut down = beta.clone();
            up[j] += h;
            down[j] -= h;
            let fd = (poisson_log_likelihood(&d, &up) - poisson_log_likelihood(&d, &down)) / (2.0 * h);
            worst_score = worst_score.max(score[j].abs());
            worst_fd = worst_fd.max(fd.abs());
        }
    }
    ensure(
        worst_score < 1e-6 && worst_fd < 1e-6,
        format!("intercept gap {gap0:.1e}; converged score max {worst_score:.1e}, finite-difference max {worst_fd:.1e}"),
    )
}

// 8 ------------------------------------------------------------------------

fn within(est: f64, planted: f64, se: f64) -> bool {
    (est - planted).abs() <= 3.0 * se
}

fn planted_recovery() -> Verdict {
    let out = common::pipeline(&common::planted_main_effects(8));
    let prod = &out.report.get("productivity").unwrap().result;
    let vis = &out.report.get("visibility").unwrap().result;
    let (bp, sp) = (prod.coef("idr").unwrap(), prod.se_hc1_of("idr").unwrap());
    let (bv, sv) = (vis.coef("idr").unwrap(), vis.se_hc1_of("idr").unwrap());
    ensure(
        bp < 0.0 && within(bp, -0.15, sp) && bv > 0.0 && within(bv, 0.45, sv),
        format!(
            "productivity {bp:.4} (SE {sp:.4}, planted -0.15, n {}); visibility {bv:.4} (SE {sv:.4}, planted 0.45, n {})",
            prod.n_obs, vis.n_obs
        ),
    )
}

// 9 ------------------------------------------------------------------------

fn dispersion_split() -> Verdict {
    let (sim, scores) = common::scored(&common::planted_dispersion(9));
    let split = median_split_variance(&sim.corpus, &scores);
    let (lo, hi) = (split.mean_sd_low.unwrap_or(f64::NAN), split.mean_sd_high.unwrap_or(f64::NAN));
    let p = split.paired.map_or(f64::NAN, |t| t.p_two_tailed);
    ensure(
        hi > lo && p < 0.01,
        format!("mean sd high {hi:.2} vs low {lo:.2}, paired p {p:.2e}, {} persons", split.persons.len()),
    )
}

// 10 -----------------------------------------------------------------------

fn grid_slope(grid: &[idr_core::stats::GridPoint], level: &str) -> f64 {
    let pts: Vec<_> = grid.iter().filter(|p| p.field_level == level).collect();
    let (first, last) = (pts.first().unwrap(), pts.last().unwrap());
    (last.predicted - first.predicted) / (last.idr - first.idr)
}

fn field_moderation() -> Verdict {
    let out = common::pipeline(&common::planted_moderation(10));
    let fit = out.report.get("productivity_x_field").unwrap();
    let (b, se) = (fit.result.coef(INTERACTION).unwrap(), fit.result.se_hc1_of(INTERACTION).unwrap());
    let (low, high) = (grid_slope(&fit.grid, "mean-sd"), grid_slope(&fit.grid, "mean+sd"));
    ensure(
        b > 0.0 && within(b, 1.0, se) && high.abs() < low.abs(),
        format!("interaction {b:.3} (SE {se:.3}, planted 1.0); grid slope at mean-sd {low:.3}, at mean+sd {high:.3}"),
    )
}

// 11 -----------------------------------------------------------------------

fn write_run(cfg: &SimConfig, dir: &Path) -> Result<(), String> {
    let e = |e: idr_core::Error| e.to_string();
    let out = common::pipeline(cfg);
    idr_core::simgen::write_simulation(&out.sim, dir).map_err(e)?;
    let window = YearWindow::new(cfg.year_start, cfg.year_end);
    let counts = build_cocitation(&out.sim.corpus, window).map_err(e)?;
    let cosine: Similarity = to_cosine(&counts);
    let io = |err: std::io::Error| err.to_string();
    fs::write(dir.join("cocitation.txt"), counts_to_text(&counts)).map_err(io)?;
    fs::write(dir.join("cosine.sim"), similarity_to_text(&cosine)).map_err(io)?;
    let file = |name: &str| fs::File::create(dir.join(name)).map_err(io);
    idr_core::metrics::write_scores_csv(&out.scores, file("scores.csv")?).map_err(e)?;
    write_csv(&out.panels.person, PERSON_COLUMNS, file("panel_person.csv")?).map_err(e)?;
    write_csv(&out.panels.person_year, PERSON_YEAR_COLUMNS, file("panel_person_year.csv")?).map_err(e)?;
    write_csv(&out.panels.paper, PAPER_COLUMNS, file("panel_paper.csv")?).map_err(e)?;
    write_models_csv(&out.report, true, file("models.csv")?).map_err(e)?;
    write_grid_csv(&out.report, file("figure_grid.csv")?).map_err(e)?;
    Ok(())
}

fn digests(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

fn determinism() -> Verdict {
    let cfg = SimConfig {
        n_persons: 200,
        ..common::planted_moderation(11)
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    write_run(&cfg, a.path())?;
    write_run(&cfg, b.path())?;
    let (da, db) = (digests(a.path()), digests(b.path()));
    let differing: Vec<&String> = da.keys().filter(|k| da.get(*k) != db.get(*k)).collect();
    ensure(
        da.len() == db.len() && differing.is_empty() && da.len() >= 12,
        format!("{} files compared, differing: {differing:?}", da.len()),
    )
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "worked-example conformance", limit: Duration::from_secs(1), check: worked_example_conformance },
        Criterion { id: 2, name: "score bounds and zero law", limit: Duration::from_secs(10), check: idr_bounds_and_zero_law },
        Criterion { id: 3, name: "sparse vs naive evaluation", limit: Duration::from_secs(30), check: sparse_equals_naive },
        Criterion { id: 4, name: "cosine matrix properties", limit: Duration::from_secs(10), check: cosine_properties },
        Criterion { id: 5, name: "inter- vs multidisciplinarity", limit: Duration::from_secs(1), check: inter_versus_multi },
        Criterion { id: 6, name: "within vs dummy-variable OLS", limit: Duration::from_secs(5), check: fwl_equivalence },
        Criterion { id: 7, name: "Poisson IRLS", limit: Duration::from_secs(5), check: poisson_checks },
        Criterion { id: 8, name: "planted effect recovery", limit: Duration::from_secs(60), check: planted_recovery },
        Criterion { id: 9, name: "citation spread split", limit: Duration::from_secs(60), check: dispersion_split },
        Criterion { id: 10, name: "field moderation", limit: Duration::from_secs(60), check: field_moderation },
        Criterion { id: 11, name: "determinism", limit: Duration::from_secs(60), check: determinism },
    ];
    let mut failed = Vec::new();
    for c in &criteria {
        let start = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(c.check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let in_time = elapsed <= c.limit;
        let (pass, detail) = match verdict {
            Ok(d) => (in_time, d),
            Err(d) => (false, d),
        };
        println!(
            "criterion {:>2} [{}] {}: {} ({:.2}s, limit {}s{})",
            c.id,
            if pass { "PASS" } else { "FAIL" },
            c.name,
            detail,
            elapsed.as_secs_f64(),
            c.limit.as_secs(),
            if in_time { "" } else { ", over time" },
        );
        if !pass {
            failed.push(c.id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria pass", criteria.len());
    } else {
        println!("acceptance: {} of {} criteria fail: {failed:?}", failed.len(), criteria.len());
        std::process::exit(1);
    }
}
