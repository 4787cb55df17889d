use finereg_core::geometry::DomainSpec;
use finereg_core::{Coefficients, DiscreteProblem, EllipticOperator, GridDomain, Mode, Point, PotentialSpec};
use proptest::prelude::*;

fn square(cells: f64) -> GridDomain {
    GridDomain::new(&DomainSpec::unit_square(), 1.0 / cells).unwrap()
}

#[test]
fn quadratic_harmonic_is_reproduced_exactly() {
    // The five-point stencil is exact on quadratics.
    let grid = square(16.0);
    let p = DiscreteProblem::new(grid.clone(), EllipticOperator::laplacian(&grid)).unwrap();
    let g = |x: &Point| x.x() * x.x() - x.y() * x.y();
    let u = p.system(Mode::Laplacian).unwrap().solve_dirichlet(g).unwrap();
    for i in 0..grid.len() {
        assert!((u[i] - g(&grid.point(i))).abs() < 1e-10);
    }
}

#[test]
fn constant_potential_shifts_the_diagonal() {
    let grid = square(8.0);
    let op = EllipticOperator::schrodinger(&grid, &PotentialSpec::Constant(3.0), 10.0).unwrap();
    let p = DiscreteProblem::new(grid.clone(), op).unwrap();
    let a0 = p.system(Mode::L0).unwrap().matrix();
    let a1 = p.system(Mode::L1).unwrap().matrix();
    for i in 0..grid.len() {
        assert!((a1.get(i, i) - a0.get(i, i) - 3.0).abs() < 1e-9);
    }
}

#[test]
fn anisotropic_coefficients_scale_the_x_stencil() {
    let grid = square(8.0);
    let h2 = grid.h() * grid.h();
    let op = EllipticOperator::new(&grid, Coefficients::diagonal(&[2.0, 1.0]), &PotentialSpec::Zero, &PotentialSpec::Zero, 1.0)
        .unwrap();
    let p = DiscreteProblem::new(grid.clone(), op).unwrap();
    let a = p.system(Mode::L0).unwrap().matrix();
    let c = grid.nearest_node(&Point::xy(0.5, 0.5)).unwrap();
    let e = grid.neighbor(c, [1, 0, 0]).unwrap();
    let n = grid.neighbor(c, [0, 1, 0]).unwrap();
    assert!((a.get(c, c) - 6.0 / h2).abs() < 1e-9 / h2);
    assert!((a.get(c, e) + 2.0 / h2).abs() < 1e-9 / h2);
    assert!((a.get(c, n) + 1.0 / h2).abs() < 1e-9 / h2);
}

#[test]
fn potential_above_the_bound_is_rejected() {
    let grid = square(8.0);
    assert!(EllipticOperator::schrodinger(&grid, &PotentialSpec::Hardy(2.0), 1.0).is_err());
}

proptest! {
    #[test]
    fn assembled_matrices_are_symmetric(kappa in 0.0..5.0f64, seed in 0u64..1000) {
        let grid = GridDomain::new(&DomainSpec::unit_disk(), 1.0 / 8.0).unwrap();
        let op = EllipticOperator::schrodinger(&grid, &PotentialSpec::Hardy(kappa * 0.1), 1.0).unwrap();
        let p = DiscreteProblem::new(grid.clone(), op).unwrap();
        let a = p.system(Mode::L1).unwrap().matrix();
        let n = grid.len();
        let i = (seed as usize) % n;
        for (j, v) in a.row(i) {
            prop_assert!((a.get(j, i) - v).abs() <= 1e-12 * v.abs().max(1.0));
        }
    }

    #[test]
    fn energy_is_positive(values in proptest::collection::vec(-1.0..1.0f64, 1..64)) {
        let grid = square(10.0);
        let p = DiscreteProblem::new(grid.clone(), EllipticOperator::laplacian(&grid)).unwrap();
        let a = p.system(Mode::Laplacian).unwrap().matrix();
        let mut x = vec![0.0; grid.len()];
        for (k, v) in values.iter().enumerate() {
            x[(k * 7) % grid.len()] = *v;
        }
        prop_assume!(x.iter().any(|v| *v != 0.0));
        let ax = a.apply(&x);
        let e: f64 = x.iter().zip(&ax).map(|(a, b)| a * b).sum();
        prop_assert!(e > 0.0);
    }
}
