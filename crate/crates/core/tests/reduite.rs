use finereg_core::geometry::DomainSpec;
use finereg_core::greens::green_column;
use finereg_core::reduite::{
    complementarity_residual, estimate_hardy_constant, hardy_quotients, solve_reduite, solve_reduite_with,
    verify_energy_bound, ObstacleProblem, ReduiteOptions,
};
use finereg_core::{DiscreteProblem, EllipticOperator, Field, GridDomain, Mode, Point};
use proptest::prelude::*;

fn square(cells: f64) -> DiscreteProblem {
    let grid = GridDomain::new(&DomainSpec::unit_square(), 1.0 / cells).unwrap();
    DiscreteProblem::new(grid.clone(), EllipticOperator::laplacian(&grid)).unwrap()
}

#[test]
fn one_node_obstacle_is_a_scaled_green_column() {
    // With A = {a}, the réduite is w(a) G(·, a) / G(a, a).
    let p = square(12.0);
    let grid = p.grid();
    let a = grid.nearest_node(&Point::xy(0.4, 0.6)).unwrap();
    let w = Field::constant(grid, 2.0);
    let ob = ObstacleProblem::from_nodes(grid, Mode::Laplacian, &[a], w).unwrap();
    let r = solve_reduite(&p, &ob).unwrap();
    assert!(r.converged);
    let g = green_column(&p, Mode::Laplacian, a).unwrap();
    for i in 0..grid.len() {
        let expected = 2.0 * g.at(i) / g.at(a);
        assert!((r.solution[i] - expected).abs() < 1e-7, "node {i}: {} vs {expected}", r.solution[i]);
    }
    assert_eq!(r.active, vec![a]);
}

#[test]
fn empty_set_gives_zero() {
    let p = square(8.0);
    let grid = p.grid();
    let ob = ObstacleProblem::new(grid, Mode::Laplacian, vec![false; grid.len()], Field::constant(grid, 1.0)).unwrap();
    let r = solve_reduite(&p, &ob).unwrap();
    assert!(r.solution.iter().all(|v| *v == 0.0));
    assert_eq!(r.energy, 0.0);
}

#[test]
fn energy_is_the_dirichlet_form_of_the_solution() {
    let p = square(16.0);
    let grid = p.grid();
    let region: Vec<bool> = (0..grid.len()).map(|i| grid.point(i).dist(&Point::xy(0.5, 0.5)) < 0.2).collect();
    let ob = ObstacleProblem::new(grid, Mode::Laplacian, region, Field::constant(grid, 1.0)).unwrap();
    let r = solve_reduite(&p, &ob).unwrap();
    let a = p.system(Mode::Laplacian).unwrap().matrix();
    let s = r.solution.values();
    let e: f64 = s.iter().zip(a.apply(s)).map(|(x, y)| x * y).sum::<f64>() * grid.cell_volume();
    assert!((r.energy - e).abs() <= 1e-9 * e);
    assert!(complementarity_residual(a, s, &ob.lower_bound()) <= 1e-9);
}

#[test]
fn sor_alone_reaches_the_same_solution() {
    let p = square(12.0);
    let grid = p.grid();
    let region: Vec<bool> = (0..grid.len()).map(|i| grid.point(i).x() < 0.3).collect();
    let w = Field::from_fn(grid, |_, x| x.y() * (1.0 - x.y()));
    let ob = ObstacleProblem::new(grid, Mode::Laplacian, region, w).unwrap();
    let pdas = solve_reduite(&p, &ob).unwrap();
    let sor = solve_reduite_with(&p, &ob, ReduiteOptions { active_set_iterations: 0, ..ReduiteOptions::default() }).unwrap();
    assert!(pdas.converged && sor.converged);
    let diff = pdas.solution.iter().zip(sor.solution.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(diff < 1e-7);
}

#[test]
fn negative_obstacle_is_rejected() {
    let p = square(8.0);
    let grid = p.grid();
    assert!(ObstacleProblem::new(grid, Mode::Laplacian, vec![true; grid.len()], Field::constant(grid, -1.0)).is_err());
}

#[test]
fn energy_bound_is_finite_for_an_interior_disc() {
    let p = square(16.0);
    let grid = p.grid();
    let region: Vec<bool> = (0..grid.len()).map(|i| grid.point(i).dist(&Point::xy(0.3, 0.3)) < 0.15).collect();
    let b = verify_energy_bound(&p, Mode::Laplacian, p.x0(), &region).unwrap();
    assert!(b.converged && !b.flagged);
    assert!(b.ratio.is_finite() && b.ratio > 0.0);
}

#[test]
fn hardy_quotients_stay_below_the_constant() {
    let grid = GridDomain::new(&DomainSpec::unit_square(), 1.0 / 16.0).unwrap();
    let est = estimate_hardy_constant(&grid).unwrap();
    assert!(est.constant > 1.0 && est.constant < 4.0, "{}", est.constant);
    let fields = vec![
        Field::constant(&grid, 1.0),
        Field::from_fn(&grid, |_, x| x.x() * (1.0 - x.x())),
        est.mode.clone(),
    ];
    let q = hardy_quotients(&grid, &fields).unwrap();
    assert!(q.iter().all(|v| *v <= est.constant * (1.0 + 1e-9)));
    assert!((q[2] / est.constant - 1.0).abs() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn reduite_is_monotone_in_set_and_obstacle(
        cx in 0.2..0.8f64, cy in 0.2..0.8f64, r in 0.05..0.2f64, grow in 0.0..0.15f64, scale in 0.1..1.0f64,
    ) {
        let p = square(10.0);
        let grid = p.grid();
        let c = Point::xy(cx, cy);
        let w = Field::from_fn(grid, |_, x| 1.0 + x.x());
        let small: Vec<bool> = (0..grid.len()).map(|i| grid.point(i).dist(&c) < r).collect();
        let large: Vec<bool> = (0..grid.len()).map(|i| grid.point(i).dist(&c) < r + grow).collect();
        let solve = |region: &[bool], w: &Field| {
            let ob = ObstacleProblem::new(grid, Mode::Laplacian, region.to_vec(), w.clone()).unwrap();
            solve_reduite(&p, &ob).unwrap().solution
        };
        let s_small = solve(&small, &w);
        let s_large = solve(&large, &w);
        let s_low = solve(&small, &w.scaled(scale));
        for i in 0..grid.len() {
            prop_assert!(s_small[i] <= s_large[i] + 1e-8);
            prop_assert!(s_low[i] <= s_small[i] + 1e-8);
            prop_assert!(s_small[i] >= -1e-12);
        }
    }
}
