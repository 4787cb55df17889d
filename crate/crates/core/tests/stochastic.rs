use finereg_core::geometry::{build_cone, DomainSpec};
use finereg_core::kernels::martin_kernel;
use finereg_core::stochastic::{
    conditioned_functional, summarize, truncated_quadrature, ConditionedWalk, PathOutcome, WalkConfig,
};
use finereg_core::{BoundaryPoint, DiscreteProblem, EllipticOperator, Error, Field, GridDomain, Mode, Point, PotentialSpec};

fn setup(h: f64, v: &PotentialSpec) -> (DiscreteProblem, BoundaryPoint, Field) {
    let d = DomainSpec::unit_disk();
    let grid = GridDomain::new(&d, h).unwrap();
    let op = EllipticOperator::schrodinger(&grid, v, 1e6).unwrap();
    let c = grid.nearest_node(&Point::xy(0.0, 0.0)).unwrap();
    let p = DiscreteProblem::new(grid, op).unwrap().with_x0(c).unwrap();
    let bp = BoundaryPoint::at(&d, Point::xy(0.0, -1.0)).unwrap();
    let k = martin_kernel(&p, Mode::Laplacian, &bp, None).unwrap().kernel().clone();
    (p, bp, k)
}

fn cone_potential(s: f64) -> PotentialSpec {
    let d = DomainSpec::unit_disk();
    let bp = BoundaryPoint::at(&d, Point::xy(0.0, -1.0)).unwrap();
    PotentialSpec::cone_power_law(build_cone(&bp, 0.5, 0.5).unwrap().strictly_inner(&d).unwrap(), s)
}

#[test]
fn zero_potential_accumulates_nothing() {
    let (p, bp, k) = setup(1.0 / 32.0, &PotentialSpec::Zero);
    let cfg = WalkConfig::new(k, p.x0(), bp.y, 0.125, 200, 3);
    let stats = conditioned_functional(p.grid(), p.op().potential(), &cfg).unwrap();
    assert_eq!(stats.mean, 0.0);
    assert_eq!(stats.std_error, 0.0);
    assert_eq!(stats.retained + stats.failures, 200);
}

#[test]
fn paths_are_reproducible_in_any_order() {
    let (p, bp, k) = setup(1.0 / 32.0, &PotentialSpec::Constant(1.0));
    let cfg = WalkConfig::new(k, p.x0(), bp.y, 0.125, 300, 9);
    let walk = ConditionedWalk::new(p.grid(), p.op().potential(), &cfg).unwrap();
    let forward: Vec<PathOutcome> = (0..300).map(|i| walk.path(i)).collect();
    let mut backward: Vec<PathOutcome> = (0..300).rev().map(|i| walk.path(i)).collect();
    backward.reverse();
    assert_eq!(forward, backward);
    assert_eq!(summarize(&forward).unwrap(), conditioned_functional(p.grid(), p.op().potential(), &cfg).unwrap());
}

#[test]
fn walk_mean_agrees_with_quadrature() {
    let (p, bp, k) = setup(1.0 / 32.0, &PotentialSpec::Constant(1.0));
    let eps = 0.125;
    let cfg = WalkConfig::new(k.clone(), p.x0(), bp.y, eps, 4000, 1);
    let stats = conditioned_functional(p.grid(), p.op().potential(), &cfg).unwrap();
    let quad = truncated_quadrature(&p, p.op().potential(), &k, p.x0(), &bp.y, eps).unwrap();
    assert!((stats.mean - quad).abs() < 4.0 * stats.std_error, "{stats:?} vs {quad}");
}

#[test]
fn quadrature_diverges_for_s2_as_the_ball_shrinks() {
    let (p, bp, k) = setup(1.0 / 128.0, &cone_potential(2.0));
    let v = p.op().potential();
    let a = truncated_quadrature(&p, v, &k, p.x0(), &bp.y, 0.1).unwrap();
    let b = truncated_quadrature(&p, v, &k, p.x0(), &bp.y, 0.05).unwrap();
    assert!(b / a >= 1.5, "{a} → {b}");
}

#[test]
fn truncation_ball_below_four_cells_is_rejected() {
    let (p, bp, k) = setup(1.0 / 32.0, &PotentialSpec::Zero);
    let cfg = WalkConfig::new(k, p.x0(), bp.y, 2.0 / 32.0, 100, 0);
    assert!(matches!(ConditionedWalk::new(p.grid(), p.op().potential(), &cfg), Err(Error::Precondition(_))));
}

#[test]
fn too_few_paths_are_insufficient() {
    let (p, bp, k) = setup(1.0 / 32.0, &PotentialSpec::Zero);
    let cfg = WalkConfig::new(k, p.x0(), bp.y, 0.125, 10, 0);
    assert!(matches!(
        conditioned_functional(p.grid(), p.op().potential(), &cfg),
        Err(Error::InsufficientStatistics { .. })
    ));
}
