use bnmtf::experiments::{gen_toy_nmf, gen_toy_nmtf};
use bnmtf::selection::{grid_search, greedy_search, line_search, restart_fit, run_search};
use bnmtf::{Criterion, Engine, FitSpec, Rank, SearchKind, SearchSpec};

fn spec(engine: Engine, k: Vec<usize>, l: Option<Vec<usize>>, criterion: Criterion) -> SearchSpec {
    SearchSpec {
        k_values: k,
        l_values: l,
        restarts: 2,
        criterion,
        fit: FitSpec::new(engine).with_iterations(200),
        seed: 3,
    }
}

#[test]
fn line_search_finds_a_clear_rank() {
    let toy = gen_toy_nmf(50, 40, 3, 0.01, 5).unwrap();
    let s = spec(Engine::Vb, (1..=6).collect(), None, Criterion::Bic);
    let res = line_search(&toy.data, &s).unwrap();
    assert_eq!(res.best, Rank::Nmf { k: 3 });
    assert_eq!(res.evaluated.len(), 6);
    let best = res.best_evaluation().criterion;
    assert!(res.evaluated.iter().all(|e| e.criterion >= best));
}

#[test]
fn elbo_criterion_prefers_larger_values() {
    let toy = gen_toy_nmf(30, 25, 2, 0.01, 8).unwrap();
    let s = spec(Engine::Vb, vec![1, 2, 3], None, Criterion::Elbo);
    let res = line_search(&toy.data, &s).unwrap();
    let best = res.best_evaluation().criterion;
    assert!(res.evaluated.iter().all(|e| e.criterion <= best));
    let mut bad = s.clone();
    bad.fit.engine = Engine::Gibbs;
    assert!(line_search(&toy.data, &bad).is_err());
}

#[test]
fn greedy_stays_near_grid_with_fewer_fits() {
    let toy = gen_toy_nmtf(40, 30, 2, 3, 0.05, 11).unwrap();
    let s = spec(Engine::Vb, (1..=5).collect(), Some((1..=5).collect()), Criterion::Aic);
    let grid = grid_search(&toy.data, &s).unwrap();
    let greedy = greedy_search(&toy.data, &s).unwrap();
    assert_eq!(grid.evaluated.len(), 25);
    assert!(greedy.evaluated.len() < 25);
    assert_eq!(greedy.path.first(), Some(&Rank::Nmtf { k: 1, l: 1 }));
    let (g, o) = (greedy.best_evaluation().criterion, grid.best_evaluation().criterion);
    assert!(g <= o + 0.01 * o.abs(), "greedy {g} vs grid {o}");
    let exact = grid.evaluated.iter().find(|e| e.rank == greedy.best).unwrap();
    assert_eq!(exact.criterion, g);
}

#[test]
fn search_is_reproducible_and_order_free() {
    let toy = gen_toy_nmf(25, 20, 2, 0.1, 2).unwrap();
    let s = spec(Engine::Icm, vec![3, 1, 2], None, Criterion::Aic);
    let a = run_search(&toy.data, SearchKind::Line, &s).unwrap();
    let b = run_search(&toy.data, SearchKind::Line, &s.canonical()).unwrap();
    assert_eq!(a.best, b.best);
    let key = |r: &bnmtf::SearchResult| {
        let mut v: Vec<_> = r.evaluated.iter().map(|e| (format!("{}", e.rank), e.criterion.to_bits())).collect();
        v.sort();
        v
    };
    assert_eq!(key(&a), key(&b));
}

#[test]
fn restarts_keep_the_most_likely_fit() {
    let toy = gen_toy_nmf(20, 15, 2, 0.5, 4).unwrap();
    let fit_spec = FitSpec::new(Engine::Vb).with_iterations(50);
    let rank = Rank::Nmf { k: 2 };
    let best = restart_fit(&toy.data, rank, &fit_spec, 4, 9).unwrap();
    for r in 0..4 {
        let seed = bnmtf::selection::restart_seed(9, rank, r);
        let single = bnmtf::fit(&toy.data, rank, &fit_spec, seed).unwrap();
        assert!(single.log_likelihood(&toy.data) <= best.log_likelihood(&toy.data));
    }
}

#[test]
fn invalid_specs_are_rejected() {
    let toy = gen_toy_nmf(10, 10, 2, 0.5, 4).unwrap();
    let mut s = spec(Engine::Vb, vec![], None, Criterion::Aic);
    assert!(line_search(&toy.data, &s).is_err());
    s.k_values = vec![0, 1];
    assert!(line_search(&toy.data, &s).is_err());
    s.k_values = vec![1];
    s.restarts = 0;
    assert!(line_search(&toy.data, &s).is_err());
}
