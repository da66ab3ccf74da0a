//! Independent oracles shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use std::time::{Duration, Instant};

use apfmpc::charge::{
    energy_segment_infinite, energy_segment_segment, segment_infinite_closed_form, FieldConstants,
    FiniteLineCharge, InfiniteLineCharge, PARALLEL_EPS,
};
use apfmpc::geometry::Vec2;
use apfmpc::quadrature::UnitRule;
use apfmpc::vehicle::{
    bicycle_derivative, step_unicycle, BicycleInput, BicycleParams, BicycleState, UnicycleInput,
    UnicycleState,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Finite line potential written with asinh: kλ(asinh(s1/d) − asinh(s0/d)).
pub fn oracle_line_potential(p: Vec2, a: Vec2, b: Vec2, lambda: f64, k: f64) -> f64 {
    let len = a.distance(b);
    let e = (b - a) * (1.0 / len);
    let s0 = (a - p).dot(e);
    let s1 = s0 + len;
    let d = (a - p).cross(e).abs();
    if d == 0.0 {
        return k * lambda * (s1 / s0).abs().ln();
    }
    k * lambda * ((s1 / d).asinh() - (s0 / d).asinh())
}

/// Energy of `tgt` in the field of `src` with an `nodes`-point rule.
pub fn oracle_segment_segment(
    src: &FiniteLineCharge,
    tgt: &FiniteLineCharge,
    k: f64,
    nodes: usize,
) -> f64 {
    let rule = UnitRule::new(nodes);
    let span = tgt.p1 - tgt.p0;
    let integral =
        rule.integrate(|t| oracle_line_potential(tgt.p0 + span * t, src.p0, src.p1, src.lambda, k));
    integral * tgt.lambda * span.norm()
}

/// Composite Gauss-Legendre of λ'·2kλ·ln(d0/d(x)) along `tgt`, together with
/// the integral of the absolute integrand.
pub fn oracle_segment_infinite(
    wall: &InfiniteLineCharge,
    tgt: &FiniteLineCharge,
    k: f64,
) -> (f64, f64) {
    let rule = UnitRule::new(24);
    let panels = 64;
    let len = tgt.length();
    let c = 2.0 * k * wall.lambda * tgt.lambda;
    let (mut sum, mut abs) = (0.0, 0.0);
    for p in 0..panels {
        let (t0, t1) = (p as f64 / panels as f64, (p + 1) as f64 / panels as f64);
        for &(t, w) in rule.pairs() {
            let x = tgt.p0 + (tgt.p1 - tgt.p0) * (t0 + (t1 - t0) * t);
            let f = c * (wall.d0 / wall.signed_offset(x).abs()).ln();
            sum += w * (t1 - t0) * f;
            abs += w * (t1 - t0) * f.abs();
        }
    }
    (sum * len, abs * len)
}

pub struct ClosedFormCheck {
    pub max_rel_err: f64,
    pub continuity_rel: f64,
    pub configs: usize,
    pub elapsed: Duration,
}

/// Random segment strictly on one side of a random infinite line with
/// |sinθ| > 0.1 between them.
pub fn random_segment_near_wall(r: &mut ChaCha8Rng) -> (InfiniteLineCharge, FiniteLineCharge) {
    loop {
        let dir = Vec2::from_angle(r.random_range(-3.2..3.2));
        let wall = InfiniteLineCharge::new(
            Vec2::new(r.random_range(-20.0..20.0), r.random_range(-20.0..20.0)),
            dir,
            r.random_range(0.2..3.0),
            r.random_range(0.5..20.0),
        );
        let side = if r.random_bool(0.5) { 1.0 } else { -1.0 };
        let along = r.random_range(-30.0..30.0);
        let off = side * r.random_range(0.05..15.0);
        let p0 = wall.anchor + dir * along + dir.perp() * off;
        let p1 = p0 + Vec2::from_angle(r.random_range(-3.2..3.2)) * r.random_range(0.2..12.0);
        let (o0, o1) = (wall.signed_offset(p0), wall.signed_offset(p1));
        if o0 * o1 <= 0.0 || o0.abs().min(o1.abs()) < 0.02 {
            continue;
        }
        let sin = (o1.abs() - o0.abs()) / p0.distance(p1);
        if sin.abs() <= 0.1 {
            continue;
        }
        let seg = FiniteLineCharge::new(p0, p1, r.random_range(0.2..3.0)).unwrap();
        return (wall, seg);
    }
}

/// Closed-form segment–line energy against quadrature over `n` random
/// configurations, plus continuity across the parallel branch. The relative
/// error is normalized by ∫|integrand| so configurations whose signed energy
/// cancels near zero (segments crossing the zero-potential distance) stay
/// meaningful.
pub fn check_segment_infinite(n: usize, seed: u64) -> ClosedFormCheck {
    let start = Instant::now();
    let k = FieldConstants::default();
    let mut r = rng(seed);
    let mut max_rel_err: f64 = 0.0;
    for _ in 0..n {
        let (wall, seg) = random_segment_near_wall(&mut r);
        let closed = energy_segment_infinite(&wall, &seg, k).expect("non-crossing");
        let (quad, scale) = oracle_segment_infinite(&wall, &seg, k.k);
        max_rel_err = max_rel_err.max((closed - quad).abs() / scale.max(quad.abs()));
    }
    // the two sides of the parallel threshold
    let mut continuity_rel: f64 = 0.0;
    for &(len, d, d0) in &[(4.5, 1.2, 3.6), (1.8, 0.3, 3.6), (10.0, 5.0, 2.0)] {
        let general = segment_infinite_closed_form(2.0, len, d, PARALLEL_EPS, d0);
        let parallel = segment_infinite_closed_form(2.0, len, d, PARALLEL_EPS * (1.0 - 1e-9), d0);
        continuity_rel = continuity_rel.max((general - parallel).abs() / parallel.abs());
        let below = segment_infinite_closed_form(2.0, len, d, -PARALLEL_EPS, d0);
        continuity_rel = continuity_rel.max((below - parallel).abs() / parallel.abs());
    }
    ClosedFormCheck {
        max_rel_err,
        continuity_rel,
        configs: n,
        elapsed: start.elapsed(),
    }
}

/// Two random segments at least `gap` apart.
pub fn random_separated_pair(r: &mut ChaCha8Rng, gap: f64) -> (FiniteLineCharge, FiniteLineCharge) {
    loop {
        let a0 = Vec2::new(r.random_range(-10.0..10.0), r.random_range(-10.0..10.0));
        let a1 = a0 + Vec2::from_angle(r.random_range(-3.2..3.2)) * r.random_range(0.5..5.0);
        let b0 = Vec2::new(r.random_range(-10.0..10.0), r.random_range(-10.0..10.0));
        let b1 = b0 + Vec2::from_angle(r.random_range(-3.2..3.2)) * r.random_range(0.5..5.0);
        if apfmpc::geometry::segment_segment_distance(a0, a1, b0, b1) < gap {
            continue;
        }
        return (
            FiniteLineCharge::new(a0, a1, r.random_range(0.5..2.0)).unwrap(),
            FiniteLineCharge::new(b0, b1, r.random_range(0.5..2.0)).unwrap(),
        );
    }
}

pub struct ReciprocityCheck {
    pub max_reciprocity: f64,
    pub max_oracle_err: f64,
    pub pairs: usize,
    pub elapsed: Duration,
}

/// E(A,B) against E(B,A), both relative to the 160-node oracle.
pub fn check_reciprocity(n: usize, seed: u64, gap: f64) -> ReciprocityCheck {
    let start = Instant::now();
    let k = FieldConstants::default();
    let mut r = rng(seed);
    let (mut max_reciprocity, mut max_oracle_err): (f64, f64) = (0.0, 0.0);
    for _ in 0..n {
        let (a, b) = random_separated_pair(&mut r, gap);
        let ab = energy_segment_segment(&a, &b, k).unwrap();
        let ba = energy_segment_segment(&b, &a, k).unwrap();
        let oracle = oracle_segment_segment(&a, &b, k.k, 160);
        max_reciprocity = max_reciprocity.max((ab - ba).abs() / oracle.abs());
        max_oracle_err = max_oracle_err
            .max((ab - oracle).abs() / oracle.abs())
            .max((ba - oracle).abs() / oracle.abs());
    }
    ReciprocityCheck {
        max_reciprocity,
        max_oracle_err,
        pairs: n,
        elapsed: start.elapsed(),
    }
}

fn rk4(s: [f64; 4], r: f64, a: f64, h: f64) -> [f64; 4] {
    let f = |s: [f64; 4]| [s[3] * s[2].cos(), s[3] * s[2].sin(), r, a];
    let add = |s: [f64; 4], d: [f64; 4], c: f64| {
        [
            s[0] + c * d[0],
            s[1] + c * d[1],
            s[2] + c * d[2],
            s[3] + c * d[3],
        ]
    };
    let k1 = f(s);
    let k2 = f(add(s, k1, h / 2.0));
    let k3 = f(add(s, k2, h / 2.0));
    let k4 = f(add(s, k3, h));
    [
        s[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        s[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        s[2] + h / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
        s[3] + h / 6.0 * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3]),
    ]
}

fn fitted_radius(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let cy = points.iter().map(|p| p.1).sum::<f64>() / n;
    points
        .iter()
        .map(|p| ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt())
        .sum::<f64>()
        / n
}

pub struct CircleCheck {
    pub analytic: f64,
    pub stepped: f64,
    pub rk4: f64,
}

/// Radius of one full constant-turn revolution stepped with the model,
/// against u/r and a fine RK4 reference.
pub fn check_unicycle_circle(u: f64, r: f64, dt: f64) -> CircleCheck {
    let steps = (2.0 * std::f64::consts::PI / (r.abs() * dt)).round() as usize;
    let mut s = UnicycleState {
        x: 0.0,
        y: 0.0,
        psi: 0.0,
        u,
    };
    let mut stepped = Vec::with_capacity(steps);
    for _ in 0..steps {
        stepped.push((s.x, s.y));
        s = step_unicycle(&s, &UnicycleInput { r, a: 0.0 }, dt);
    }
    let mut z = [0.0, 0.0, 0.0, u];
    let mut reference = Vec::with_capacity(steps);
    for _ in 0..steps {
        reference.push((z[0], z[1]));
        z = rk4(z, r, 0.0, dt);
    }
    CircleCheck {
        analytic: u / r.abs(),
        stepped: fitted_radius(&stepped),
        rk4: fitted_radius(&reference),
    }
}

pub struct SteadyTurn {
    pub fx: f64,
    pub v: f64,
    pub r: f64,
    pub residual: f64,
    /// Distance of (v, r) from the closed-form linear solution.
    pub linear_gap: f64,
}

/// Newton root-find of u̇ = v̇ = ṙ = 0 over (fx, v, r) at fixed u and δ,
/// with a finite-difference Jacobian.
pub fn bicycle_steady_turn(u: f64, delta: f64, p: &BicycleParams) -> SteadyTurn {
    let residual_of = |x: [f64; 3]| {
        let s = BicycleState {
            x: 0.0,
            y: 0.0,
            psi: 0.0,
            u,
            v: x[1],
            r: x[2],
        };
        let d = bicycle_derivative(&s, &BicycleInput { fx: x[0], delta }, p).unwrap();
        [d[3], d[4], d[5]]
    };
    let mut x = [0.0, 0.0, 0.0];
    for _ in 0..50 {
        let f = residual_of(x);
        let mut j = [[0.0; 3]; 3];
        for c in 0..3 {
            let h = 1e-6 * (1.0 + x[c].abs());
            let mut xp = x;
            xp[c] += h;
            let fp = residual_of(xp);
            for rr in 0..3 {
                j[rr][c] = (fp[rr] - f[rr]) / h;
            }
        }
        let dx = solve3(j, [-f[0], -f[1], -f[2]]);
        for c in 0..3 {
            x[c] += dx[c];
        }
        if dx.iter().all(|d| d.abs() < 1e-15) {
            break;
        }
    }
    let f = residual_of(x);
    // v̇ and ṙ are linear in (v, r): A·[v, r] = b
    let (cf, cr, m, iz, lf, lr) = (p.cf, p.cr, p.m, p.iz, p.lf, p.lr);
    let a = [
        [-(cf + cr) / (m * u), (-cf * lf + cr * lr) / (m * u) - u],
        [
            (-lf * cf + lr * cr) / (iz * u),
            -(lf * lf * cf + lr * lr * cr) / (iz * u),
        ],
    ];
    let b = [-cf * delta / m, -lf * cf * delta / iz];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let v = (b[0] * a[1][1] - a[0][1] * b[1]) / det;
    let r = (a[0][0] * b[1] - b[0] * a[1][0]) / det;
    SteadyTurn {
        fx: x[0],
        v: x[1],
        r: x[2],
        residual: f.iter().map(|e| e.abs()).fold(0.0, f64::max),
        linear_gap: (x[1] - v).abs().max((x[2] - r).abs()),
    }
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> [f64; 3] {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(a);
    let mut out = [0.0; 3];
    for c in 0..3 {
        let mut m = a;
        for r in 0..3 {
            m[r][c] = b[r];
        }
        out[c] = det(m) / d;
    }
    out
}

/// Ray-casting containment, independent of the library's polygon code.
pub fn inside_polygon(p: Vec2, poly: &[Vec2]) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn proper_cross(a0: Vec2, a1: Vec2, b0: Vec2, b1: Vec2) -> bool {
    let o = |p: Vec2, q: Vec2, r: Vec2| (q - p).cross(r - p);
    let (d1, d2) = (o(b0, b1, a0), o(b0, b1, a1));
    let (d3, d4) = (o(a0, a1, b0), o(a0, a1, b1));
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Convex polygon `inner` lies entirely in `outer`: every vertex inside and
/// no pair of edges crossing.
pub fn polygon_within(inner: &[Vec2], outer: &[Vec2]) -> bool {
    if !inner.iter().all(|&p| inside_polygon(p, outer)) {
        return false;
    }
    let (n, m) = (inner.len(), outer.len());
    for i in 0..n {
        for j in 0..m {
            if proper_cross(inner[i], inner[(i + 1) % n], outer[j], outer[(j + 1) % m]) {
                return false;
            }
        }
    }
    !outer.iter().any(|&v| inside_polygon(v, inner))
}

/// Two convex polygons share interior: a vertex of one inside the other or
/// a proper edge crossing.
pub fn polygons_intersect(a: &[Vec2], b: &[Vec2]) -> bool {
    if a.iter().any(|&p| inside_polygon(p, b)) || b.iter().any(|&p| inside_polygon(p, a)) {
        return true;
    }
    let (n, m) = (a.len(), b.len());
    (0..n).any(|i| (0..m).any(|j| proper_cross(a[i], a[(i + 1) % n], b[j], b[(j + 1) % m])))
}
