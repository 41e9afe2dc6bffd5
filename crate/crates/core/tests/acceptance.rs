//! Acceptance criteria. Each test prints one `[PASS]`/`[FAIL]` line per
//! criterion (run with `--nocapture` to see them) and then asserts.
//!
//! Desk scale: 600 users, 400 items, 48 000 links, 10 realizations from
//! master seed 1. Realizations are cached per (case, spam) and shared across
//! tests.

mod common;

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, LazyLock, Mutex};
use std::time::{Duration, Instant};

use common::oracle;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rankproj::graph::{self, InputFormat};
use rankproj::metrics::ranking_score;
use rankproj::projection::{project_graph, project_rating};
use rankproj::ranking::{self, rank_observed};
use rankproj::sweep::{self, Realization};
use rankproj::{
    Algorithm, BenchmarkSet, DataSource, DiscretizationCase, GridSpec, Link, Metric,
    ProjectionParams, RankingConfig, RatingGraph, SweepGrid, SweepPlan, SynthSpec,
};

const REALIZATIONS: usize = 10;
const MASTER_SEED: u64 = 1;
/// Paired sign test: this many of the 10 realizations must agree.
const SIGN_TEST_AGREE: usize = 9;
const STEP: f64 = 0.05;

fn report(id: &str, pass: bool, detail: impl AsRef<str>) -> bool {
    println!(
        "[{}] criterion {id}: {}",
        if pass { "PASS" } else { "FAIL" },
        detail.as_ref()
    );
    pass
}

type Cache = Mutex<HashMap<(DiscretizationCase, u64), Arc<Vec<Realization>>>>;
static DESK: LazyLock<Cache> = LazyLock::new(Default::default);

fn desk_spec(case: DiscretizationCase, spam: f64) -> SynthSpec {
    SynthSpec {
        case,
        spam_fraction: spam,
        ..SynthSpec::desk_scale()
    }
}

fn desk(case: DiscretizationCase, spam: f64) -> Arc<Vec<Realization>> {
    let key = (case, spam.to_bits());
    if let Some(r) = DESK.lock().unwrap().get(&key) {
        return r.clone();
    }
    let source = DataSource::synthetic(desk_spec(case, spam));
    let built = Arc::new(sweep::realize_all(&source, REALIZATIONS, MASTER_SEED).unwrap());
    DESK.lock().unwrap().entry(key).or_insert(built).clone()
}

/// Runs a sweep and checks that the projected optimum never loses to the
/// unprojected cell when the grid contains (0.5, 0.5).
fn checked_sweep(
    name: &str,
    realizations: &[Realization],
    alg: Algorithm,
    metric: Metric,
    grid: GridSpec,
) -> SweepGrid {
    let plan = SweepPlan {
        algorithm: RankingConfig::new(alg),
        metric,
        grid,
        realizations: realizations.len(),
        master_seed: MASTER_SEED,
        tag: name.to_owned(),
    };
    let swept = sweep::sweep_realizations(realizations, &plan).unwrap();
    if swept.grid.contains(0.5, 0.5) {
        let c = sweep::compare(&swept).unwrap();
        let ok = c.projected <= c.original;
        report(
            "10",
            ok,
            format!(
                "{name} {alg} {metric}: projected {:.5} <= original {:.5}",
                c.projected, c.original
            ),
        );
        assert!(ok, "structural guarantee violated on {name}");
    }
    swept
}

fn values(grid: &SweepGrid, p1: f64, p2: f64) -> Vec<f64> {
    grid.cell(p1, p2).unwrap().values.clone()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn agreeing(pairs: impl Iterator<Item = bool>) -> usize {
    pairs.filter(|&b| b).count()
}

// ---------------------------------------------------------------------------

fn movielens_path() -> Option<PathBuf> {
    let candidates = [
        std::env::var_os("RANKPROJ_MOVIELENS_1M").map(PathBuf::from),
        Some(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/ml-1m/ratings.dat")),
    ];
    candidates.into_iter().flatten().find(|p| p.is_file())
}

#[test]
fn criterion_01_movielens_ingestion() {
    let Some(path) = movielens_path() else {
        report(
            "1",
            false,
            "MovieLens-1M ratings.dat not found (set RANKPROJ_MOVIELENS_1M or place it at data/ml-1m/ratings.dat)",
        );
        panic!("MovieLens-1M dataset unavailable");
    };
    let started = Instant::now();
    let file = std::io::BufReader::new(std::fs::File::open(&path).unwrap());
    let ds = graph::ingest_ratings(file, InputFormat::MovieLens).unwrap();
    let elapsed = started.elapsed();
    let s = ds.graph.stats();
    let ok = s.num_users == 6040
        && s.num_items == 3706
        && (s.sparsity - 0.0447).abs() <= 0.0005
        && elapsed < Duration::from_secs(30);
    assert!(report(
        "1",
        ok,
        format!(
            "|U|={} |O|={} sparsity={:.4} <k_u>={:.0} <k_o>={:.0} in {:.2?}",
            s.num_users, s.num_items, s.sparsity, s.mean_user_degree, s.mean_item_degree, elapsed
        )
    ));
}

fn random_small_graph(rng: &mut ChaCha8Rng) -> RatingGraph {
    let users = rng.random_range(2..=50);
    let items = rng.random_range(2..=30);
    let mut links = Vec::new();
    for u in 0..users {
        let k = rng.random_range(1..=items);
        let mut chosen: Vec<usize> = (0..items).collect();
        chosen.shuffle(rng);
        for &a in &chosen[..k] {
            links.push(Link::new(u, a, rng.random_range(1..=5u8) as f64));
        }
    }
    RatingGraph::new(users, items, links).unwrap()
}

#[test]
fn criterion_02_degenerate_equivalences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_cr: f64 = 0.0;
    let mut worst_ir: f64 = 0.0;
    for _ in 0..20 {
        let g = random_small_graph(&mut rng);
        let trace = |cfg: RankingConfig| {
            let mut t = Vec::new();
            let res = rank_observed(&g, &cfg, |s| {
                t.push((s.qualities.to_vec(), s.reputations.to_vec()))
            })
            .unwrap();
            (t, res)
        };
        let (cr, cr_res) = trace(RankingConfig::new(Algorithm::Cr));
        let (rr, rr_res) = trace(RankingConfig {
            penalty: false,
            damping: false,
            theta: 1.0,
            ..RankingConfig::new(Algorithm::Rr)
        });
        assert_eq!(cr.len(), rr.len());
        assert_eq!(cr_res.iterations_used, rr_res.iterations_used);
        for ((q1, r1), (q2, r2)) in cr.iter().zip(&rr) {
            for (a, b) in q1.iter().zip(q2).chain(r1.iter().zip(r2)) {
                worst_cr = worst_cr.max((a - b).abs());
            }
        }

        let mean = ranking::rank_mean(&g);
        let ir = ranking::rank(
            &g,
            &RankingConfig {
                beta: 0.0,
                ..RankingConfig::new(Algorithm::Ir)
            },
        )
        .unwrap();
        for (a, b) in ir.qualities.iter().zip(&mean.qualities) {
            worst_ir = worst_ir.max((a - b).abs());
        }
    }
    let ok = worst_cr <= 1e-12 && worst_ir <= 1e-12;
    assert!(report(
        "2",
        ok,
        format!("20 graphs: max |CR - RR(F=1,G=1,θ=1)| per iteration = {worst_cr:e}, max |IR(β=0) - Mean| = {worst_ir:e}")
    ));
}

#[test]
fn criterion_03_identity_projection() {
    let g = &desk(DiscretizationCase::Case0, 0.0)[0].graph;
    let projected = project_graph(g, ProjectionParams::IDENTITY);
    let bit_identical = projected == *g
        && projected
            .links()
            .iter()
            .zip(g.links())
            .all(|(a, b)| a.rating.to_bits() == b.rating.to_bits());

    let mut endpoints_ok = true;
    let p = |p1, p2| ProjectionParams::new(p1, p2).unwrap();
    for (r, p1, p2, want) in [
        (1.0, 0.0, 0.0, 1.0),
        (1.0, 1.0, 1.0, 1.0),
        (2.0, 0.0, 0.5, 1.0),
        (2.0, 1.0, 0.5, 3.0),
        (3.0, 0.0, 0.0, 3.0),
        (3.0, 1.0, 1.0, 3.0),
        (4.0, 0.5, 0.0, 3.0),
        (4.0, 0.5, 1.0, 5.0),
        (5.0, 0.0, 0.0, 5.0),
        (5.0, 1.0, 1.0, 5.0),
    ] {
        endpoints_ok &= project_rating(r, p(p1, p2)).unwrap() == want;
    }
    // spans over the parameter range
    let axis = GridSpec::uniform(0.01).unwrap().p1_values;
    let twos: Vec<f64> = axis.iter().map(|&x| project_rating(2.0, p(x, 0.5)).unwrap()).collect();
    let fours: Vec<f64> = axis.iter().map(|&x| project_rating(4.0, p(0.5, x)).unwrap()).collect();
    let span = |v: &[f64]| (v.iter().cloned().fold(f64::MAX, f64::min), v.iter().cloned().fold(f64::MIN, f64::max));
    endpoints_ok &= span(&twos) == (1.0, 3.0) && span(&fours) == (3.0, 5.0);

    assert!(report(
        "3",
        bit_identical && endpoints_ok,
        format!("identity bit-identical on {} links: {bit_identical}; endpoint table 1→1, 2→[1,3], 3→3, 4→[3,5], 5→5: {endpoints_ok}", g.num_links())
    ));
}

#[test]
fn criterion_04_oracle_equivalence() {
    const ROUNDS: usize = 1_000_000;
    let tight = |alg| RankingConfig {
        delta: 1e-30,
        max_iterations: ROUNDS,
        ..RankingConfig::new(alg)
    };
    let mut all_ok = true;
    let mut lines = Vec::new();
    for (name, d) in oracle::toy_graphs() {
        let g = oracle::to_graph(&d);
        for alg in [Algorithm::Ir, Algorithm::Rr] {
            let cfg = tight(alg);
            let (q_ref, r_ref) = match alg {
                Algorithm::Ir => oracle::ir_reference(&d, cfg.beta, cfg.epsilon, ROUNDS),
                _ => oracle::rr_reference(&d, cfg.theta, true, true, ROUNDS),
            };
            let res = ranking::rank(&g, &cfg).unwrap();
            let dq = res
                .qualities
                .iter()
                .zip(&q_ref)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            // IR reputations reach 1/ε; compare them relative to scale
            let dr = res
                .reputations
                .iter()
                .zip(&r_ref)
                .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
                .fold(0.0, f64::max);
            let ok = dq <= 1e-8 && dr <= 1e-8;
            all_ok &= ok;
            lines.push(format!(
                "{name}/{alg}: |ΔQ|={dq:.1e} |ΔR|rel={dr:.1e} ({} iters)",
                res.iterations_used
            ));
        }
    }
    assert!(report("4", all_ok, lines.join("; ")));
}

/// Average RS over every strict ordering consistent with the qualities.
fn rs_by_tie_permutations(q: &[f64], bench: &[usize]) -> f64 {
    let m = q.len();
    let key = |a: usize| if q[a].is_nan() { f64::NEG_INFINITY } else { q[a] };
    let mut perm: Vec<usize> = (0..m).collect();
    let mut total = 0.0;
    let mut count = 0usize;
    permute(&mut perm, 0, &mut |order| {
        if order.windows(2).all(|w| key(w[0]) >= key(w[1])) {
            let mut pos = vec![0usize; m];
            for (i, &a) in order.iter().enumerate() {
                pos[a] = i + 1;
            }
            total += bench.iter().map(|&a| pos[a] as f64 / m as f64).sum::<f64>() / bench.len() as f64;
            count += 1;
        }
    });
    total / count as f64
}

fn permute(v: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, f);
        v.swap(k, i);
    }
}

#[test]
fn criterion_05_ranking_score() {
    let levels = [f64::NAN, 1.0, 2.0, 3.0];
    let mut checked = 0usize;
    let mut worst: f64 = 0.0;
    for m in 1..=6usize {
        for code in 0..levels.len().pow(m as u32) {
            let mut c = code;
            let q: Vec<f64> = (0..m)
                .map(|_| {
                    let v = levels[c % levels.len()];
                    c /= levels.len();
                    v
                })
                .collect();
            for mask in 1..(1u32 << m) {
                let bench: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
                let set = BenchmarkSet::new(bench.clone(), m).unwrap();
                let got = ranking_score(&q, &set).unwrap().value;
                let want = rs_by_tie_permutations(&q, &bench);
                worst = worst.max((got - want).abs());
                checked += 1;
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m = 1000;
    let bench = BenchmarkSet::new((0..10).collect(), m).unwrap();
    let mut q: Vec<f64> = (0..m).map(|i| i as f64).collect();
    let shuffled_mean = (0..1000)
        .map(|_| {
            q.shuffle(&mut rng);
            ranking_score(&q, &bench).unwrap().value
        })
        .sum::<f64>()
        / 1000.0;

    let ok = worst <= 1e-12 && (shuffled_mean - 0.5).abs() <= 0.02;
    assert!(report(
        "5",
        ok,
        format!("{checked} (qualities, benchmark) cases with M<=6: max |midrank - permutation average| = {worst:e}; random-permutation mean RS = {shuffled_mean:.4}")
    ));
}

#[test]
fn criterion_06_case0_correlation_optimum() {
    let started = Instant::now();
    let reals = desk(DiscretizationCase::Case0, 0.0);
    let grid = checked_sweep(
        "case0 full grid",
        &reals,
        Algorithm::Cr,
        Metric::Correlation,
        GridSpec::uniform(STEP).unwrap(),
    );
    let opt = sweep::find_optimum(&grid).unwrap();
    let elapsed = started.elapsed();
    let near = (opt.p1 - 0.5).abs() <= STEP + 1e-9 && (opt.p2 - 0.5).abs() <= STEP + 1e-9;
    let ok = near && elapsed < Duration::from_secs(600);
    let at_identity = grid.cell(0.5, 0.5).unwrap().mean();
    assert!(report(
        "6",
        ok,
        format!(
            "CR corr optimum at ({}, {}) = {:.4} (identity {:.4}), 21x21x10 in {:.1?}",
            opt.p1, opt.p2, opt.value, at_identity, elapsed
        )
    ));
}

/// Per realization: range of RS over the p1 slice vs. over the p2 slice.
fn p1_insensitivity(name: &str, reals: &[Realization], alg: Algorithm) -> (usize, f64, f64) {
    let p1s = checked_sweep(name, reals, alg, Metric::Rs, GridSpec::p1_slice(STEP, 0.5).unwrap());
    let p2s = checked_sweep(name, reals, alg, Metric::Rs, GridSpec::p2_slice(STEP, 0.5).unwrap());
    let range = |grid: &SweepGrid, r: usize| {
        let v: Vec<f64> = grid.cells.iter().map(|c| c.values[r]).collect();
        v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min)
    };
    let agree = agreeing((0..reals.len()).map(|r| range(&p1s, r) < 0.2 * range(&p2s, r)));
    let mean_range = |grid: &SweepGrid| {
        let m: Vec<f64> = grid.cells.iter().map(|c| c.mean()).collect();
        m.iter().cloned().fold(f64::MIN, f64::max) - m.iter().cloned().fold(f64::MAX, f64::min)
    };
    (agree, mean_range(&p1s), mean_range(&p2s))
}

#[test]
fn criterion_07a_p1_insensitivity() {
    let mut all_ok = true;
    for case in DiscretizationCase::ALL {
        let reals = desk(case, 0.0);
        for alg in [Algorithm::Cr, Algorithm::Rr] {
            let (agree, r1, r2) = p1_insensitivity(&format!("{case} slices"), &reals, alg);
            let ok = agree >= SIGN_TEST_AGREE;
            all_ok &= ok;
            report(
                "7a",
                ok,
                format!("{case} {alg}: p1-range < 0.2·p2-range in {agree}/10 realizations (mean ranges {r1:.4} vs {r2:.4})"),
            );
        }
    }
    assert!(all_ok);
}

#[test]
fn criterion_07b_p2_direction_cases_3_and_4() {
    let mut all_ok = true;
    for (case, small_wins) in [(DiscretizationCase::Case3, true), (DiscretizationCase::Case4, false)] {
        let reals = desk(case, 0.0);
        for alg in [Algorithm::Cr, Algorithm::Rr] {
            let g = checked_sweep(
                &format!("{case} p2 ends"),
                &reals,
                alg,
                Metric::Rs,
                GridSpec::new(vec![0.5], vec![0.05, 0.5, 0.95]).unwrap(),
            );
            let low = values(&g, 0.5, 0.05);
            let high = values(&g, 0.5, 0.95);
            let agree = agreeing(low.iter().zip(&high).map(|(l, h)| if small_wins { l < h } else { h < l }));
            let ok = agree >= SIGN_TEST_AGREE;
            all_ok &= ok;
            report(
                "7b",
                ok,
                format!(
                    "{case} {alg}: RS(p2=0.05)={:.4} vs RS(p2=0.95)={:.4}, expected {} lower in {agree}/10",
                    mean(&low),
                    mean(&high),
                    if small_wins { "small p2" } else { "large p2" }
                ),
            );
        }
    }
    assert!(all_ok);
}

#[test]
fn criterion_07c_case4_is_most_harmful() {
    let mut all_ok = true;
    let identity = || GridSpec::point(0.5, 0.5).unwrap();
    for alg in [Algorithm::Cr, Algorithm::Rr] {
        let rs: Vec<Vec<f64>> = [1, 2, 3, 4]
            .iter()
            .map(|&c| {
                let case = DiscretizationCase::from_index(c).unwrap();
                let g = checked_sweep(&format!("{case} identity"), &desk(case, 0.0), alg, Metric::Rs, identity());
                values(&g, 0.5, 0.5)
            })
            .collect();
        let agree = agreeing(
            (0..REALIZATIONS).map(|r| (0..3).all(|c| rs[3][r] > rs[c][r])),
        );
        let ok = agree >= SIGN_TEST_AGREE;
        all_ok &= ok;
        let means: Vec<String> = rs.iter().map(|v| format!("{:.4}", mean(v))).collect();
        report(
            "7c",
            ok,
            format!("{alg}: mean RS cases 1-4 = [{}], case 4 highest in {agree}/10", means.join(", ")),
        );
    }
    assert!(all_ok);
}

#[test]
fn criterion_07d_rr_correlation_beats_cr() {
    let reals = desk(DiscretizationCase::Case0, 0.0);
    let corr = |alg| {
        let g = checked_sweep("case0 identity", &reals, alg, Metric::Correlation, GridSpec::point(0.5, 0.5).unwrap());
        values(&g, 0.5, 0.5)
    };
    let cr = corr(Algorithm::Cr);
    let rr = corr(Algorithm::Rr);
    let agree = agreeing(rr.iter().zip(&cr).map(|(r, c)| r.abs() >= c.abs()));
    let ok = agree >= SIGN_TEST_AGREE;
    assert!(report(
        "7d",
        ok,
        format!(
            "case0 corr(R,e): RR {:.4} vs CR {:.4}; |RR| >= |CR| in {agree}/10",
            mean(&rr),
            mean(&cr)
        )
    ));
}

#[test]
fn criterion_08_spam_robustness() {
    let clean = desk(DiscretizationCase::Case0, 0.0);
    let spammed = desk(DiscretizationCase::Case0, 0.9);
    let mut all_ok = true;
    for alg in Algorithm::ALL {
        let at = |reals: &[Realization], name: &str| {
            let g = checked_sweep(name, reals, alg, Metric::Rs, GridSpec::point(0.5, 0.5).unwrap());
            mean(&values(&g, 0.5, 0.5))
        };
        let without = at(&clean, "case0 identity");
        let with = at(&spammed, "case0 spam identity");
        let ok = with > without;
        all_ok &= ok;
        report("8", ok, format!("{alg}: RS with p=0.9 spam {with:.4} > without {without:.4}"));
    }
    for alg in [Algorithm::Cr, Algorithm::Rr] {
        let (agree, r1, r2) = p1_insensitivity("case0 spam slices", &spammed, alg);
        let ok = agree >= SIGN_TEST_AGREE;
        all_ok &= ok;
        report(
            "8",
            ok,
            format!("spam {alg}: p1-range < 0.2·p2-range in {agree}/10 (mean ranges {r1:.4} vs {r2:.4})"),
        );
    }
    assert!(all_ok);
}

#[test]
fn criterion_09_reputation_error_anticorrelation() {
    let reals = desk(DiscretizationCase::Case0, 0.0);
    let mut all_ok = true;
    for alg in [Algorithm::Ir, Algorithm::Cr, Algorithm::Rr] {
        let g = checked_sweep("case0 identity", &reals, alg, Metric::Correlation, GridSpec::point(0.5, 0.5).unwrap());
        let c = mean(&values(&g, 0.5, 0.5));
        let ok = c < -0.3;
        all_ok &= ok;
        report("9", ok, format!("{alg}: mean corr(R_i, e_i) = {c:.4} (< -0.3)"));
    }
    assert!(all_ok);
}

#[test]
fn criterion_10_projected_never_worse() {
    // Every sweep above goes through `checked_sweep`; this adds coarse full
    // grids for all four algorithms on both metrics.
    let reals = desk(DiscretizationCase::Case2, 0.0);
    for alg in Algorithm::ALL {
        for metric in [Metric::Rs, Metric::Correlation] {
            checked_sweep("case2 coarse", &reals, alg, metric, GridSpec::uniform(0.25).unwrap());
        }
    }
    // real-data style source: one deterministic realization
    let net = rankproj::synth::generate(&SynthSpec {
        case: DiscretizationCase::Case3,
        seed: 99,
        ..SynthSpec::desk_scale()
    })
    .unwrap();
    let bench = rankproj::metrics::top_fraction_benchmark(&net.truth, 0.05).unwrap();
    let source = DataSource::Real { graph: net.graph, benchmark: bench };
    let real = sweep::realize_all(&source, 1, 0).unwrap();
    for alg in Algorithm::ALL {
        checked_sweep("real-style", &real, alg, Metric::Rs, GridSpec::uniform(0.1).unwrap());
    }
}
