//! Library routines against independent brute-force or alternative-route oracles.

use ::zorich::density::{base_sequence, hits_ball, BallSpec, BaseSequence, LineSpec, YFace, YPoint, HIT_WINDOW};
use ::zorich::preimage::{project_to_plane_m, FaceConfig};
use ::zorich::verify::random_face_config;
use ::zorich::{zorich_second, Point3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Smallest distance from `q` over `n` equally spaced parameters of the window.
fn brute_min_distance(line: &LineSpec, q: Point3, n: usize) -> f64 {
    let (a, b) = HIT_WINDOW.resolve(line).unwrap();
    (0..=n)
        .filter_map(|k| zorich_second(line.at(a + (b - a) * k as f64 / n as f64)).ok())
        .map(|v| v.distance(q))
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn ball_hits_agree_with_dense_sampling() {
    let mut r = ChaCha8Rng::seed_from_u64(21);
    let (mut hits, mut forced) = (0, 0);
    for k in 0..24 {
        let alpha = YPoint::new(YFace::PosX1, r.gen_range(0.1..0.9), r.gen_range(0.3..1.5)).unwrap();
        let line = LineSpec::through(Point3::ORIGIN, alpha).unwrap();
        let dir = Point3::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
        let dir = dir * (1.0 / dir.norm());
        let q = if k % 2 == 0 {
            dir * r.gen_range(1.5..5.0)
        } else {
            // near a sampled point of the curve, so that dense sampling finds it
            let (a, b) = HIT_WINDOW.resolve(&line).unwrap();
            let on_curve = (0..10_000)
                .filter_map(|_| zorich_second(line.at(r.gen_range(a..b))).ok())
                .find(|v| (1.5..5.0).contains(&v.norm()))
                .unwrap();
            on_curve + dir * 0.1
        };
        let ball = BallSpec::new(q, 0.3).unwrap();
        let rec = hits_ball(&line, &ball, 10_000_000).unwrap();
        let brute = brute_min_distance(&line, q, 400_000);
        if brute < 0.5 * ball.delta {
            assert!(rec.hit, "dense sampling reaches {brute} from {q} but the trace missed");
            forced += 1;
        }
        if rec.hit {
            hits += 1;
            let s = rec.witness_param.unwrap();
            assert!(zorich_second(line.at(s)).unwrap().distance(q) < ball.delta);
        } else {
            assert!(rec.min_distance >= ball.delta);
        }
    }
    assert!(forced >= 10, "only {forced} cases were decided by dense sampling");
    assert!(hits >= forced);
}

#[test]
fn base_contains_a_ball_inside_the_reference_set() {
    let (c, r) = (Point3::new(3.0, 0.0, 0.0), 0.5);
    let n = BaseSequence::new()
        .take(1_000_000)
        .position(|b| b.q.distance(c) + b.delta <= r)
        .expect("no base ball inside B((3,0,0), 0.5)");
    let b = base_sequence(n as u64 + 1);
    assert!(b.q.distance(c) + b.delta <= r);
}

#[test]
fn base_reaches_random_open_balls() {
    let mut r = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..12 {
        // an open ball of the complement of the origin and the unit sphere
        let (c, rad) = loop {
            let c = Point3::new(r.gen_range(-3.5..3.5), r.gen_range(-3.5..3.5), r.gen_range(-3.5..3.5));
            let rad: f64 = r.gen_range(0.3..0.8);
            if c.norm() > rad && (c.norm() - 1.0).abs() > rad {
                break (c, rad);
            }
        };
        assert!(
            BaseSequence::new().take(3_000_000).any(|b| b.q.distance(c) + b.delta <= rad),
            "no base ball inside B({c}, {rad})"
        );
    }
}

#[test]
fn newton_face_projection_matches_the_bracketing_route() {
    let mut r = ChaCha8Rng::seed_from_u64(23);
    let mut compared = 0;
    for _ in 0..10 {
        let (cfg, patch) = random_face_config(&mut r);
        for (l, b) in cfg.strips_in_patch(&patch).into_iter().take(3) {
            let fast = cfg.face_map(l).unwrap();
            for _ in 0..20 {
                let u2 = r.gen_range(b[0]..b[1]);
                let u3 = r.gen_range(b[2]..b[3]);
                let x = fast([u2, u3]).unwrap();
                let y = cfg.project_to_face(l, u2, u3).unwrap();
                assert!((x - y).norm() <= 1e-9 * x.norm().max(1.0), "{x} vs {y}");
                compared += 1;
            }
        }
    }
    assert!(compared >= 200);
}

#[test]
fn face_projection_lies_on_the_ray_and_before_the_plane() {
    let mut r = ChaCha8Rng::seed_from_u64(24);
    for _ in 0..10 {
        let (cfg, patch) = random_face_config(&mut r);
        let (l, b) = cfg.strips_in_patch(&patch)[0];
        let (u2, u3) = (0.5 * (b[0] + b[1]), 0.5 * (b[2] + b[3]));
        let x = cfg.project_to_face(l, u2, u3).unwrap();
        let u = YPoint { face: YFace::PosX1, u2, u3 };
        let on_plane = project_to_plane_m(cfg.p, u, cfg.m).unwrap();
        // x = p + s (1, u2, u3) for some s, and the plane point is at s = c
        let s = x.x1 - cfg.p.x1;
        let expected = cfg.p + u.offset() * s;
        assert!((x - expected).norm() <= 1e-9 * x.norm().max(1.0));
        assert!((on_plane.x1 - cfg.p.x1 - FaceConfig::c(&cfg)).abs() < 1e-9);
    }
}
