use rankproj::metrics::{ranking_score, top_fraction_benchmark};
use rankproj::sweep::{self, SweepError};
use rankproj::{
    Algorithm, DataSource, DiscretizationCase, GridSpec, Metric, RankingConfig, SweepPlan, SynthSpec,
};

fn small() -> SynthSpec {
    SynthSpec {
        num_users: 120,
        num_items: 80,
        num_links: 2400,
        case: DiscretizationCase::Case2,
        seed: 17,
        ..SynthSpec::default()
    }
}

fn plan(alg: Algorithm, metric: Metric, grid: GridSpec, realizations: usize) -> SweepPlan {
    SweepPlan {
        algorithm: RankingConfig::new(alg),
        metric,
        grid,
        realizations,
        master_seed: 9,
        tag: "t".into(),
    }
}

#[test]
fn real_identity_point_matches_rank_and_eval() {
    let net = rankproj::synth::generate(&small()).unwrap();
    let bench = top_fraction_benchmark(&net.truth, 0.05).unwrap();
    let direct = {
        let r = rankproj::ranking::rank(&net.graph, &RankingConfig::new(Algorithm::Rr)).unwrap();
        ranking_score(&r.qualities, &bench).unwrap().value
    };
    let source = DataSource::Real { graph: net.graph, benchmark: bench };
    let grid = sweep::run_sweep(&source, &plan(Algorithm::Rr, Metric::Rs, GridSpec::point(0.5, 0.5).unwrap(), 1)).unwrap();
    assert_eq!(grid.cell(0.5, 0.5).unwrap().values, vec![direct]);
}

#[test]
fn real_data_rejects_repeats_and_correlation() {
    let net = rankproj::synth::generate(&small()).unwrap();
    let bench = top_fraction_benchmark(&net.truth, 0.05).unwrap();
    let source = DataSource::Real { graph: net.graph, benchmark: bench };
    let g = GridSpec::point(0.5, 0.5).unwrap();
    assert!(matches!(
        sweep::run_sweep(&source, &plan(Algorithm::Cr, Metric::Rs, g.clone(), 3)),
        Err(SweepError::RealizationsOnRealData(3))
    ));
    assert!(matches!(
        sweep::run_sweep(&source, &plan(Algorithm::Cr, Metric::Correlation, g, 1)),
        Err(SweepError::CorrelationWithoutTruth)
    ));
}

#[test]
fn cells_are_independent_of_the_grid() {
    let source = DataSource::synthetic(small());
    let p = plan(Algorithm::Cr, Metric::Correlation, GridSpec::uniform(0.25).unwrap(), 3);
    let grid = sweep::run_sweep(&source, &p).unwrap();
    for (p1, p2) in [(0.0, 1.0), (0.75, 0.25), (0.5, 0.5)] {
        let alone = sweep::evaluate_cell(&source, &p, p1, p2).unwrap();
        assert_eq!(alone.values, grid.cell(p1, p2).unwrap().values);
    }
}

#[test]
fn sweeps_are_reproducible() {
    let source = DataSource::synthetic(small());
    let p = plan(Algorithm::Rr, Metric::Rs, GridSpec::uniform(0.5).unwrap(), 3);
    let a = sweep::run_sweep(&source, &p).unwrap();
    let b = sweep::run_sweep(&source, &p).unwrap();
    let mut ca = Vec::new();
    let mut cb = Vec::new();
    a.write_csv(&[], &mut ca).unwrap();
    b.write_csv(&[], &mut cb).unwrap();
    assert_eq!(ca, cb);
    assert_eq!(a.cells.len(), 9);
    assert!(a.cells.iter().all(|c| c.n() == 3));
}

#[test]
fn table_lists_every_algorithm() {
    let source = DataSource::synthetic(small());
    let mut grids = std::collections::HashMap::new();
    for alg in Algorithm::ALL {
        let g = sweep::run_sweep(&source, &plan(alg, Metric::Rs, GridSpec::uniform(0.5).unwrap(), 2)).unwrap();
        grids.insert(("case2".to_owned(), alg), g);
    }
    let table = sweep::compare_table(&["case2".to_owned()], &Algorithm::ALL, &grids).unwrap();
    let mut out = Vec::new();
    table.write_csv(&[], &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("dataset,mean_original,mean_projected"));
    assert!(lines.next().unwrap().starts_with("case2,"));
    for row in &table.rows {
        for c in &row.1 {
            assert!(c.projected <= c.original);
        }
    }
}
