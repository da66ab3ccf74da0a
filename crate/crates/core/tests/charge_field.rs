mod common;

use apfmpc::charge::*;
use apfmpc::geometry::{OrientedRect, Pose, Vec2};
use proptest::prelude::*;

const K: FieldConstants = FieldConstants { k: 1.0 };

#[test]
fn potential_matches_asinh_form() {
    let mut r = common::rng(11);
    use rand::Rng;
    for _ in 0..500 {
        let a = Vec2::new(r.random_range(-5.0..5.0), r.random_range(-5.0..5.0));
        let b = a + Vec2::from_angle(r.random_range(-3.0..3.0)) * r.random_range(0.1..8.0);
        let p = Vec2::new(r.random_range(-10.0..10.0), r.random_range(-10.0..10.0));
        let line = FiniteLineCharge::new(a, b, 1.3).unwrap();
        let lib = potential_finite_line(p, &line, K).unwrap();
        let oracle = common::oracle_line_potential(p, a, b, 1.3, 1.0);
        assert!(
            (lib - oracle).abs() <= 1e-10 * oracle.abs().max(1.0),
            "{lib} vs {oracle}"
        );
    }
}

#[test]
fn far_field_looks_like_point_charge() {
    let line = FiniteLineCharge::new(Vec2::new(-0.5, 0.0), Vec2::new(0.5, 0.0), 2.0).unwrap();
    let p = Vec2::new(300.0, 400.0);
    let v = potential_finite_line(p, &line, K).unwrap();
    // total charge 2 C seen from 500 m
    assert!((v - 2.0 / 500.0).abs() < 1e-8);
}

#[test]
fn colinear_points_beyond_the_ends() {
    let line = FiniteLineCharge::new(Vec2::new(0.0, 0.0), Vec2::new(2.0, 0.0), 1.0).unwrap();
    let v = potential_finite_line(Vec2::new(4.0, 0.0), &line, K).unwrap();
    assert!((v - 2f64.ln()).abs() < 1e-12);
    assert!(matches!(
        potential_finite_line(Vec2::new(1.0, 0.0), &line, K),
        Err(ChargeError::SingularPotential)
    ));
}

#[test]
fn infinite_line_zero_at_d0() {
    let wall = InfiniteLineCharge::new(Vec2::ZERO, Vec2::new(1.0, 0.0), 1.0, 3.6);
    assert!(
        potential_infinite_line(Vec2::new(7.0, 3.6), &wall, K)
            .unwrap()
            .abs()
            < 1e-15
    );
    let near = potential_infinite_line(Vec2::new(0.0, 1.0), &wall, K).unwrap();
    assert!((near - 2.0 * 3.6f64.ln()).abs() < 1e-12);
}

#[test]
fn segment_line_closed_form_against_quadrature() {
    let c = common::check_segment_infinite(200, 5);
    assert!(
        c.max_rel_err < 1e-8,
        "max relative error {:.3e}",
        c.max_rel_err
    );
    assert!(
        c.continuity_rel < 1e-4,
        "parallel branch jump {:.3e}",
        c.continuity_rel
    );
}

#[test]
fn segment_pair_reciprocity() {
    let c = common::check_reciprocity(50, 3, 1.0);
    assert!(c.max_reciprocity < 1e-6, "{:.3e}", c.max_reciprocity);
    assert!(c.max_oracle_err < 1e-6, "{:.3e}", c.max_oracle_err);
}

#[test]
fn crossing_segments_are_infinite() {
    let a = FiniteLineCharge::new(Vec2::new(-1.0, 0.0), Vec2::new(1.0, 0.0), 1.0).unwrap();
    let b = FiniteLineCharge::new(Vec2::new(0.0, -1.0), Vec2::new(0.0, 1.0), 1.0).unwrap();
    assert_eq!(
        energy_segment_segment(&a, &b, K),
        Err(ChargeError::InfiniteEnergy)
    );
    let wall = InfiniteLineCharge::new(Vec2::ZERO, Vec2::new(0.0, 1.0), 1.0, 3.0);
    assert_eq!(
        energy_segment_infinite(&wall, &a, K),
        Err(ChargeError::InfiniteEnergy)
    );
}

#[test]
fn overlapping_bodies_hit_the_sentinel() {
    let ego = ChargedBody::rectangle(
        &OrientedRect::new(Pose::new(0.0, 0.0, 0.0), 4.5, 1.8),
        1.0,
        1.0,
    );
    // fully contained: no segment crossings, still overlapping
    let inner = ChargedBody::rectangle(
        &OrientedRect::new(Pose::new(0.0, 0.0, 0.0), 1.0, 0.5),
        1.0,
        1.0,
    );
    let e = system_energy(&ego, &[inner], &RoadCharges::default(), K);
    assert!(e >= SENTINEL_ENERGY);
    let apart = ChargedBody::rectangle(
        &OrientedRect::new(Pose::new(10.0, 0.0, 0.0), 4.5, 1.8),
        1.0,
        1.0,
    );
    assert!(system_energy(&ego, &[apart], &RoadCharges::default(), K) < 100.0);
}

#[test]
fn driver_charge_only_feeds_the_point_term() {
    let rect = OrientedRect::new(Pose::new(0.0, 0.0, 0.0), 4.5, 1.8);
    let plain = ChargedBody::rectangle(&rect, 1.0, 1.0);
    let guarded = plain.clone().with_point_charge(PointCharge {
        position: Vec2::new(0.8, 0.35),
        q: 3.0,
    });
    let obstacle = ChargedBody::rectangle(
        &OrientedRect::new(Pose::new(3.0, 4.0, 0.4), 4.5, 1.8),
        1.0,
        1.0,
    );
    let a = system_energy_terms(
        &plain,
        std::slice::from_ref(&obstacle),
        &RoadCharges::default(),
        K,
    );
    let b = system_energy_terms(
        &guarded,
        std::slice::from_ref(&obstacle),
        &RoadCharges::default(),
        K,
    );
    assert_eq!(a.body, b.body);
    assert_eq!(a.point, 0.0);
    let v = field_potential(
        Vec2::new(0.8, 0.35),
        &[obstacle],
        &RoadCharges::default(),
        K,
    )
    .unwrap();
    assert!((b.point - 3.0 * v).abs() < 1e-12);
}

fn segment_strategy() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (-5.0..5.0f64, -5.0..5.0f64, -3.1..3.1f64, 0.5..6.0f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    // Pushing a segment further along the normal of a source segment never
    // raises its energy.
    #[test]
    fn energy_falls_with_distance((x, y, ang, len) in segment_strategy(), d in 0.3..10.0f64, extra in 0.01..5.0f64, tilt in -1.2..1.2f64) {
        let src = FiniteLineCharge::new(Vec2::new(x, y), Vec2::new(x, y) + Vec2::from_angle(ang) * len, 1.0).unwrap();
        let mid = (src.p0 + src.p1) * 0.5;
        let normal = Vec2::from_angle(ang).perp();
        let place = |dist: f64| {
            let c = mid + normal * dist;
            let dir = Vec2::from_angle(ang + tilt);
            // keep the target on the far side of `c` so it never crosses the source
            let half = 0.45 * dist.min(2.0);
            FiniteLineCharge::new(c - dir * half, c + dir * half, 1.0).unwrap()
        };
        let e_near = energy_segment_segment(&src, &place(d), K).unwrap();
        let mut far_seg = place(d);
        far_seg.p0 += normal * extra;
        far_seg.p1 += normal * extra;
        let e_far = energy_segment_segment(&src, &far_seg, K).unwrap();
        prop_assert!(e_far <= e_near + 1e-12, "{e_far} > {e_near}");
    }

    #[test]
    fn energy_is_bilinear_in_density((x, y, ang, len) in segment_strategy(), l1 in 0.1..5.0f64, l2 in 0.1..5.0f64) {
        let a = FiniteLineCharge::new(Vec2::new(x, y), Vec2::new(x, y) + Vec2::from_angle(ang) * len, 1.0).unwrap();
        let b0 = Vec2::new(x + 20.0, y - 3.0);
        let b = FiniteLineCharge::new(b0, b0 + Vec2::new(0.0, 2.0), 1.0).unwrap();
        let unit = energy_segment_segment(&a, &b, K).unwrap();
        let scaled = energy_segment_segment(&FiniteLineCharge { lambda: l1, ..a }, &FiniteLineCharge { lambda: l2, ..b }, K).unwrap();
        prop_assert!((scaled - l1 * l2 * unit).abs() <= 1e-12 * scaled.abs().max(1.0));
    }

    #[test]
    fn system_energy_adds_over_obstacles(px in -30.0..30.0f64, py in 5.0..30.0f64, qx in -30.0..30.0f64, qy in -30.0..-5.0f64, w in 0.1..4.0f64) {
        let ego = ChargedBody::rectangle(&OrientedRect::new(Pose::new(0.0, 0.0, 0.2), 4.5, 1.8), 1.0, 1.0);
        let mut a = ChargedBody::rectangle(&OrientedRect::new(Pose::new(px, py, 0.0), 4.5, 1.8), 1.0, 1.0);
        a.set_weight(w);
        let b = ChargedBody::rectangle(&OrientedRect::new(Pose::new(qx, qy, 1.0), 4.5, 1.8), 1.0, 1.0);
        let road = RoadCharges::default();
        let both = system_energy(&ego, &[a.clone(), b.clone()], &road, K);
        let sum = system_energy(&ego, &[a], &road, K) + system_energy(&ego, &[b], &road, K);
        prop_assert!((both - sum).abs() <= 1e-10 * both.abs().max(1.0));
    }
}
