use finereg_core::geometry::{build_cone, distance_to_boundary, DomainSpec, GraphChart};
use finereg_core::{BoundaryPoint, Error, Point};
use proptest::prelude::*;

#[test]
fn disk_distance_is_one_minus_radius() {
    let d = DomainSpec::unit_disk();
    for (x, y) in [(0.0, 0.0), (0.3, 0.4), (-0.9, 0.0)] {
        let p = Point::xy(x, y);
        let expected = 1.0 - p.norm();
        assert!((distance_to_boundary(&d, &p).unwrap() - expected).abs() < 1e-12);
    }
}

#[test]
fn points_outside_are_rejected() {
    let d = DomainSpec::unit_square();
    assert!(distance_to_boundary(&d, &Point::xy(1.5, 0.5)).is_err());
}

#[test]
fn graph_chart_needs_ten_r_below_rho() {
    assert!(GraphChart::new(0.1, 1.05, &[0.0, 0.0, 0.0]).is_ok());
    assert!(GraphChart::new(0.5, 1.0, &[0.0, 0.0, 0.0]).is_err());
}

#[test]
fn boundary_point_on_the_circle_by_rounding_is_accepted() {
    let d = DomainSpec::unit_disk();
    let th = -2.0f64;
    let y = Point::xy(th.cos(), th.sin());
    let bp = BoundaryPoint::at(&d, y).unwrap();
    assert!((bp.nu.norm() - 1.0).abs() < 1e-12);
    assert!(bp.nu.dot(&y) < -0.99);
}

#[test]
fn interior_point_is_not_a_boundary_point() {
    let d = DomainSpec::unit_disk();
    match BoundaryPoint::at(&d, Point::xy(0.0, -0.9)) {
        Err(Error::InvalidBoundaryPoint(_)) => {}
        other => panic!("expected InvalidBoundaryPoint, got {other:?}"),
    }
}

#[test]
fn cone_at_disk_bottom_contains_its_axis() {
    let d = DomainSpec::unit_disk();
    let bp = BoundaryPoint::at(&d, Point::xy(0.0, -1.0)).unwrap();
    let cone = build_cone(&bp, 0.5, 0.5).unwrap();
    assert!(cone.contains(&Point::xy(0.0, -0.8)));
    assert!(!cone.contains(&Point::xy(0.2, -0.95)));
    assert!(cone.contained_in(&d));
    let inner = cone.strictly_inner(&d).unwrap();
    assert!(inner.half_angle() <= cone.half_angle());
}

proptest! {
    #[test]
    fn disk_distance_is_one_lipschitz(a in 0.0..6.3f64, ra in 0.0..0.99f64, b in 0.0..6.3f64, rb in 0.0..0.99f64) {
        let d = DomainSpec::unit_disk();
        let p = Point::xy(ra * a.cos(), ra * a.sin());
        let q = Point::xy(rb * b.cos(), rb * b.sin());
        let dp = distance_to_boundary(&d, &p).unwrap();
        let dq = distance_to_boundary(&d, &q).unwrap();
        prop_assert!((dp - dq).abs() <= p.dist(&q) + 1e-12);
    }

    #[test]
    fn graph_projection_lands_on_the_boundary(x in -0.09..0.09f64, t in 0.01..0.5f64) {
        let d = DomainSpec::lipschitz_graph(0.1, 1.05, &[0.03, 0.015, 0.0, 0.015, 0.03]).unwrap();
        let chart = d.chart().unwrap();
        let p = Point::xy(x, chart.f(x) + t);
        prop_assume!(d.contains(&p));
        let y = d.project_to_boundary(&p);
        prop_assert!(d.boundary_distance(&y) < 1e-9);
        prop_assert!((p.dist(&y) - d.boundary_distance(&p)).abs() < 1e-9);
    }
}
