//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
//!
//! Run with `cargo test -p hnn-core --test acceptance`.

use std::collections::HashSet;
use std::sync::Arc;
use std::time::Instant;

use num_rational::BigRational;
use rand::Rng;

use hnn_core::bass_serre::{TreeBall, TreePoint};
use hnn_core::compression::{
    compose_min, embed_tree, estimate_exponent, sparse_dist_pow, EmbeddingKind, EmbeddingSpec, Exponent,
};
use hnn_core::group::Letter;
use hnn_core::lattice::IMatrix;
use hnn_core::millefeuille::{act_m_unchecked, MSpace, FIBRE_TOL};
use hnn_core::sampling::{random_element, random_word, rng};
use hnn_core::y_grid::YGrid;
use hnn_core::y_space::{height_b, Window, YModel, YPoint};
use hnn_core::{Error, Presentation};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn pres(spec: &str) -> Arc<Presentation> {
    Arc::new(Presentation::from_preset(spec).expect("valid preset"))
}

// ---------------------------------------------------------------- 1

/// Inserts relators, inverse pairs and their conjugates at random positions.
fn rewrite<R: Rng>(p: &Presentation, w: &[Letter], r: &mut R) -> Vec<Letter> {
    let (a, b) = (p.m1().get(0, 0), p.m2().get(0, 0));
    let rel = vec![
        Letter::T { power: 1 },
        Letter::X { axis: 0, power: a },
        Letter::T { power: -1 },
        Letter::X { axis: 0, power: -b },
    ];
    let gens = p.generators();
    let mut out = w.to_vec();
    for _ in 0..r.gen_range(1..=3) {
        let at = r.gen_range(0..=out.len());
        let piece: Vec<Letter> = match r.gen_range(0..3) {
            0 => rel.clone(),
            1 => rel.iter().rev().map(Letter::inverse).collect(),
            _ => {
                let g = gens[r.gen_range(0..gens.len())];
                vec![g, g.inverse()]
            }
        };
        let piece = if r.gen_bool(0.5) {
            let c = gens[r.gen_range(0..gens.len())];
            let mut v = vec![c];
            v.extend(piece);
            v.push(c.inverse());
            v
        } else {
            piece
        };
        out.splice(at..at, piece);
    }
    out
}

fn criterion_1() -> Outcome {
    let mut agree = 0;
    let mut total = 0;
    let mut equal_cases = 0;
    let mut axioms_ok = true;
    for (spec, seed) in [("bs:1:2", 1u64), ("bs:1:3", 2)] {
        let p = pres(spec);
        let mut r = rng(seed);
        for i in 0..1000 {
            let w1 = random_word(&p, &mut r, 12);
            let w2 = if i % 2 == 0 { rewrite(&p, &w1, &mut r) } else { random_word(&p, &mut r, 12) };
            let same_nf = p.britton_reduce(&w1).unwrap() == p.britton_reduce(&w2).unwrap();
            let same_affine = p.affine_of_word(&w1).unwrap() == p.affine_of_word(&w2).unwrap();
            total += 1;
            agree += usize::from(same_nf == same_affine);
            equal_cases += usize::from(same_affine);
        }
        for _ in 0..300 {
            let a = random_element(&p, &mut r, 12);
            let b = random_element(&p, &mut r, 12);
            let c = random_element(&p, &mut r, 12);
            let e = p.identity();
            let ab_c = p.multiply(&p.multiply(&a, &b), &c);
            let a_bc = p.multiply(&a, &p.multiply(&b, &c));
            axioms_ok &= ab_c == a_bc
                && p.multiply(&a, &e) == a
                && p.multiply(&e, &a) == a
                && p.multiply(&a, &p.inverse(&a)) == e
                && p.multiply(&p.inverse(&a), &a) == e
                && p.affine_oracle(&p.multiply(&a, &b)).unwrap()
                    == p.affine_oracle(&a).unwrap().compose(&p.affine_oracle(&b).unwrap());
        }
    }
    outcome(
        agree == total && axioms_ok,
        format!("normal form vs affine oracle agree on {agree}/{total} word pairs ({equal_cases} equal); group axioms hold: {axioms_ok}"),
    )
}

// ---------------------------------------------------------------- 2

/// `[Z^n : L Z^n]` by listing the box `[0, |det|)^n` and merging vectors whose
/// difference has an integral preimage under `L`, tested in rationals.
fn coset_count_oracle(l: &IMatrix) -> usize {
    let n = l.dim();
    let det = l.det().unsigned_abs() as i64;
    let inv = l.to_rational().inverse().expect("nonsingular");
    let mut reps: Vec<Vec<i64>> = Vec::new();
    let total = (det as usize).pow(n as u32);
    for code in 0..total {
        let mut c = code;
        let v: Vec<i64> = (0..n)
            .map(|_| {
                let x = (c % det as usize) as i64;
                c /= det as usize;
                x
            })
            .collect();
        let fresh = reps.iter().all(|w| {
            let diff: Vec<BigRational> = v.iter().zip(w).map(|(a, b)| BigRational::from_integer((a - b).into())).collect();
            !inv.mul_vec(&diff).iter().all(|q| q.is_integer())
        });
        if fresh {
            reps.push(v);
        }
    }
    reps.len()
}

fn criterion_2() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for (spec, expected) in [("bs:1:2", 3usize), ("bs:2:3", 5), ("abc:2:2,1;1,1", 2)] {
        let p = pres(spec);
        let oracle = coset_count_oracle(p.m1()) + coset_count_oracle(p.m2());
        ok &= oracle == expected;
        for radius in 0..=5 {
            let ball = TreeBall::around_base(p.clone(), radius).unwrap();
            ok &= ball.is_tree();
            ok &= ball.interior_vertices().all(|i| ball.degree(i) == oracle);
            if radius == 5 {
                notes.push(format!("{spec}: degree {oracle}, |V|={} |E|={}", ball.vertex_count(), ball.edge_count()));
            }
        }
    }
    outcome(ok, format!("balls of radius 0..=5 are trees with oracle degrees; {}", notes.join("; ")))
}

// ---------------------------------------------------------------- 3

fn random_tree_point<R: Rng>(p: &Presentation, r: &mut R) -> TreePoint {
    let g = random_element(p, r, 8);
    let u = r.gen_range(0..64) as f64 / 64.0;
    p.tree_point(p.edge_of(&g), u).unwrap()
}

fn criterion_3() -> Outcome {
    let mut failures = 0;
    let mut checks = 0;
    for (spec, seed) in [("bs:1:2", 3u64), ("bs:2:3", 4)] {
        let p = pres(spec);
        let model = YModel::standard(p.clone(), 0.5, Window::symmetric(1, 1.0, 1.0)).unwrap();
        let mut r = rng(seed);
        for _ in 0..1000 {
            let g = random_element(&p, &mut r, 10);
            let x = random_tree_point(&p, &mut r);
            checks += 1;
            failures += usize::from(p.act_tree_point(&g, &x).height() != x.height() + g.t_exponent() as f64);
        }
        for _ in 0..1000 {
            let g = random_element(&p, &mut r, 10);
            let y = YPoint::new(vec![r.gen_range(-256..256) as f64 / 64.0], r.gen_range(-256..256) as f64 / 64.0);
            checks += 1;
            failures += usize::from(height_b(&model.act_y(&g, &y)) != height_b(&y) + g.t_exponent() as f64);
        }
        for _ in 0..500 {
            let g = random_element(&p, &mut r, 10);
            let tree = random_tree_point(&p, &mut r);
            let y = YPoint::new(vec![r.gen_range(-256..256) as f64 / 64.0], tree.height());
            let m = hnn_core::millefeuille::make_mpoint(tree, y).unwrap();
            checks += 1;
            failures += usize::from(act_m_unchecked(&model, &g, &m).fibre_gap() != 0.0);
        }
    }
    outcome(failures == 0, format!("{failures} failures in {checks} exact equivariance checks"))
}

// ---------------------------------------------------------------- 4

fn lemma_space() -> MSpace {
    let p = pres("bs:1:2");
    let ball = TreeBall::around_base(p.clone(), 5).unwrap();
    let model = YModel::standard(p, 0.05, Window::symmetric(1, 2.0, 6.0)).unwrap();
    MSpace::new(ball, YGrid::new(&model).unwrap()).unwrap()
}

fn criterion_4(sp: &MSpace) -> Outcome {
    let p = sp.presentation().clone();
    let kappa = sp.kappa();
    let mut r = rng(4);
    let (mut accepted, mut escaped) = (0, 0);
    let mut viol = [0usize; 5];
    let mut worst_ratio: f64 = 0.0;
    while accepted < 300 && accepted + escaped < 3000 {
        let a = sp.sample_mpoint(&mut r, 3, 2.0);
        let b = sp.sample_mpoint(&mut r, 3, 2.0);
        let path = match sp.connect_theta(&a, &b) {
            Ok(path) => path,
            Err(Error::PathEscapesWindow) => {
                escaped += 1;
                continue;
            }
            Err(e) => return outcome(false, format!("unexpected error {e}")),
        };
        accepted += 1;
        let (lo, hi) = sp.product_distance(&a, &b).unwrap();
        let dm = path.total_length();
        let dt = sp.ball().tree_distance(&a.tree, &b.tree).unwrap();
        let y2 = YPoint { x: a.y.x.clone(), s: b.y.s };
        let (dy_lo, _) = sp.grid().y_distance(&y2, &b.y).unwrap();
        viol[0] += usize::from(lo > dm);
        viol[1] += usize::from(dm > 4.0 * (1.0 + kappa) * hi);
        viol[2] += usize::from(path.theta1_length > 2.0 * dt);
        viol[3] += usize::from(path.theta2_length > 2.0 * (1.0 + kappa) * dy_lo);
        viol[4] += usize::from(path.sample(&p, 3).iter().any(|q| q.fibre_gap() > FIBRE_TOL));
        if hi > 0.0 {
            worst_ratio = worst_ratio.max(dm / hi);
        }
    }
    let pass = accepted >= 300 && kappa <= 0.15 && viol.iter().all(|v| *v == 0);
    outcome(
        pass,
        format!(
            "{accepted} pairs ({escaped} rejected: ray left the tree ball), kappa={kappa:.4}, \
             violations [d<=dM, dM<=4(1+k)d, theta1, theta2, fibre] = {viol:?}, max dM/d.upper = {worst_ratio:.3}"
        ),
    )
}

// ---------------------------------------------------------------- 5

fn criterion_5() -> Outcome {
    let p = pres("bs:1:2");
    let window = Window::symmetric(1, 4.0, 6.0);
    let verticals = [((0.0, 0.0), 2.0), ((0.0, -1.5), 3.0), ((0.7, 0.25), 1.5), ((-1.3, -2.0), 4.0)];
    let mut errs = Vec::new();
    let mut grid_errs = Vec::new();
    let mut last = None;
    for h in [0.2, 0.1, 0.05] {
        let g = YGrid::new(&YModel::standard(p.clone(), h, window.clone()).unwrap()).unwrap();
        let mut e: f64 = 0.0;
        let mut ge: f64 = 0.0;
        for ((x, s), u) in verticals {
            let a = YPoint::new(vec![x], s);
            let b = YPoint::new(vec![x], s + u);
            e = e.max((g.y_distance(&a, &b).unwrap().1 - u).abs() / u);
            ge = ge.max((g.grid_route_length(&a, &b).unwrap() - u).abs() / u);
        }
        errs.push(e);
        grid_errs.push(ge);
        last = Some(g);
    }
    let g = last.unwrap();
    let (h, kappa) = (0.05, g.kappa());
    let mut r = rng(5);
    let (mut tested, mut bad) = (0, 0);
    let mut worst: f64 = 0.0;
    while tested < 200 {
        let gamma = random_element(&p, &mut r, 6);
        if gamma.t_exponent().abs() > 2 {
            continue;
        }
        let pick = |r: &mut rand_chacha::ChaCha8Rng| {
            YPoint::new(vec![r.gen_range(-32..=32) as f64 / 64.0], r.gen_range(-128..=128) as f64 / 64.0)
        };
        let (a, b) = (pick(&mut r), pick(&mut r));
        let (ga, gb) = (g.model().act_y(&gamma, &a), g.model().act_y(&gamma, &b));
        if !g.model().in_window(&ga) || !g.model().in_window(&gb) {
            continue;
        }
        tested += 1;
        let d0 = g.y_distance(&a, &b).unwrap().1;
        let d1 = g.y_distance(&ga, &gb).unwrap().1;
        let slack = 2.0 * kappa * d0 + 4.0 * h;
        bad += usize::from((d1 - d0).abs() > slack);
        worst = worst.max((d1 - d0).abs() / slack);
    }
    let converging = errs.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let pass = errs[2] <= 0.01 && grid_errs[2] <= 0.01 && converging && bad == 0;
    outcome(
        pass,
        format!(
            "vertical relative error at h=0.2,0.1,0.05: {:?} (grid route alone {:?}); \
             near-isometry violations {bad}/{tested}, worst |diff|/slack {worst:.3}",
            errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>(),
            grid_errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>()
        ),
    )
}

// ---------------------------------------------------------------- 6

fn criterion_6(lemma: &MSpace) -> Outcome {
    let p = pres("bs:1:2");
    let model = YModel::standard(p.clone(), 0.1, Window::around_orbit(&p, 5, 1.0, 1.0).unwrap()).unwrap();
    let sp = MSpace::new(TreeBall::around_base(p.clone(), 5).unwrap(), YGrid::new(&model).unwrap()).unwrap();
    let rep = sp.properness_probe(5).unwrap();
    let mut r = rng(6);
    let mut ok = 0;
    for _ in 0..300 {
        let m = lemma.sample_mpoint(&mut r, 5, 2.0);
        if let Ok((g, out)) = lemma.normalize_to_fundamental_domain(&m) {
            let moved = act_m_unchecked(lemma.model(), &g, &m);
            let close = moved.tree == out.tree
                && moved.y.x.iter().zip(&out.y.x).all(|(a, b)| (a - b).abs() <= 1e-9)
                && (moved.y.s - out.y.s).abs() <= 1e-9;
            ok += usize::from(lemma.is_normalized(&out) && close);
        }
    }
    outcome(
        rep.collisions == 0 && ok == 300,
        format!(
            "{} collisions among {} elements of ball(5); normalization {ok}/300; \
             min displacement by length {:?} (nondecreasing: {})",
            rep.collisions,
            rep.elements,
            rep.min_displacement_by_length.iter().map(|d| format!("{d:.3}")).collect::<Vec<_>>(),
            rep.displacement_nondecreasing
        ),
    )
}

// ---------------------------------------------------------------- 7

fn criterion_7() -> Outcome {
    let p = pres("bs:1:2");
    let model = YModel::standard(p.clone(), 0.1, Window::around_orbit(&p, 6, 2.0, 4.0).unwrap()).unwrap();
    let sp = MSpace::new(TreeBall::around_base(p.clone(), 12).unwrap(), YGrid::new(&model).unwrap()).unwrap();
    let f4 = sp.orbit_qi_fit(4);
    let f6 = sp.orbit_qi_fit(6);
    match (f4, f6) {
        (Ok(f4), Ok(f6)) => outcome(
            f6.success() && f6.a_lower >= 0.5 * f4.a_lower,
            format!(
                "ball(6): a_lower={:.4} b_lower={:.4} A_upper={:.4} B_upper={:.4} over {} elements; ball(4): a_lower={:.4}",
                f6.a_lower, f6.b_lower, f6.a_upper, f6.b_upper, f6.sample_count, f4.a_lower
            ),
        ),
        (a, b) => outcome(false, format!("fit failed: {:?} / {:?}", a.err(), b.err())),
    }
}

// ---------------------------------------------------------------- 8

fn criterion_8() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for gamma in [0.25, 0.5, 1.0] {
        let pairs: Vec<(f64, f64)> = (1..=256).map(|k| (k as f64, (k as f64).powf(gamma))).collect();
        let e = estimate_exponent(&pairs).unwrap();
        ok &= (e.alpha_hat - gamma).abs() <= 0.01 + 1e-12;
        notes.push(format!("d^{gamma} -> {}", e.alpha_hat));
    }
    let p = pres("bs:1:2");
    let ball = TreeBall::around_base(p, 9).unwrap();
    // exact law on a 100-vertex prefix, all p tried
    for pp in [2.0, 4.0] {
        let f = embed_tree(&EmbeddingSpec::new(EmbeddingKind::EdgeIndicator, pp).unwrap(), &ball).unwrap();
        for a in 0..100 {
            for b in 0..100 {
                ok &= sparse_dist_pow(&f.images[a], &f.images[b], pp) == ball.vertex_distance(a, b) as f64;
            }
        }
    }
    // BFS order makes every prefix a subtree
    let prefix = 1000;
    let pairs_for = |spec: &EmbeddingSpec| -> Vec<(f64, f64)> {
        let f = embed_tree(spec, &ball).unwrap();
        let mut out = Vec::with_capacity(prefix * prefix / 2);
        for a in 0..prefix {
            for b in a + 1..prefix {
                out.push((ball.vertex_distance(a, b) as f64, f.distance(a, b)));
            }
        }
        out
    };
    for pp in [2.0, 4.0] {
        let e = estimate_exponent(&pairs_for(&EmbeddingSpec::new(EmbeddingKind::EdgeIndicator, pp).unwrap())).unwrap();
        ok &= (e.alpha_hat - 1.0 / pp).abs() <= 0.05;
        notes.push(format!("edge_indicator p={pp} -> {}", e.alpha_hat));
    }
    let mut column = Vec::new();
    for k in 1..=9 {
        let beta = k as f64 / 10.0;
        let spec = EmbeddingSpec::new(EmbeddingKind::WeightedGeodesic { beta }, 2.0).unwrap();
        column.push(estimate_exponent(&pairs_for(&spec)).unwrap().alpha_hat);
    }
    let monotone = column.windows(2).all(|w| w[1] >= w[0] - 0.01 - 1e-12);
    ok &= monotone;
    notes.push(format!("weighted beta=0.1..0.9 at p=2 -> {column:?}"));
    outcome(ok, notes.join("; "))
}

// ---------------------------------------------------------------- 9

fn criterion_9() -> Outcome {
    let k = |v: f64| Exponent::Known(v);
    let mut ok = compose_min(k(1.0), k(1.0)).value() == 1.0 && compose_min(k(0.5), k(1.0)).value() == 0.5;
    ok &= (0..=100).all(|i| {
        let a = i as f64 / 100.0;
        compose_min(k(a), k(a)).value() == a
    });
    // alpha(Gamma) = alpha(M) >= alpha(T x Y) = min(alpha(T), alpha(Y))
    let tree = Exponent::Estimate { label: "tree".into(), value: 0.5 };
    let y = Exponent::Estimate { label: "Y".into(), value: 1.0 };
    let bound = compose_min(tree, y);
    ok &= bound.value() == 0.5 && bound.to_string() == "min(tree=0.5, Y=1)";
    outcome(ok, format!("symbolic rule checks; proof skeleton {bound} = {}", bound.value()))
}

fn main() {
    let mut failed = 0;
    let lemma = {
        let t = Instant::now();
        let sp = lemma_space();
        println!("(lemma space: {} grid nodes, built in {:.1?})", sp.grid().node_count(), t.elapsed());
        sp
    };
    let runs: Vec<(usize, &str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        (1, "Britton normal form vs affine oracle", Box::new(criterion_1)),
        (2, "Bass-Serre balls are trees with coset degrees", Box::new(criterion_2)),
        (3, "exact equivariance of c, b and the fibre", Box::new(criterion_3)),
        (4, "discretized path lemma on BS(1,2)", Box::new(|| criterion_4(&lemma))),
        (5, "Y metric sanity", Box::new(criterion_5)),
        (6, "properness and normalization", Box::new(|| criterion_6(&lemma))),
        (7, "orbit quasi-isometry fit", Box::new(criterion_7)),
        (8, "compression engine calibration", Box::new(criterion_8)),
        (9, "composition rule", Box::new(criterion_9)),
    ];
    let mut seen = HashSet::new();
    for (n, name, run) in runs {
        seen.insert(n);
        let t = Instant::now();
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!o.pass);
        println!("criterion {n} [{tag}] {name} ({:.1?}): {}", t.elapsed(), o.detail);
    }
    assert_eq!(seen.len(), 9);
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all 9 criteria passed");
}
