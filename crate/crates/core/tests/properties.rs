use std::sync::Arc;

use proptest::prelude::*;

use hnn_core::bass_serre::{TreeBall, TreePoint};
use hnn_core::group::Letter;
use hnn_core::y_space::{height_b, Window, YModel, YPoint};
use hnn_core::{GroupElement, Presentation};

fn presets() -> Vec<Arc<Presentation>> {
    ["bs:1:2", "bs:1:3", "bs:2:3", "abc:2:2,1;1,1"]
        .iter()
        .map(|s| Arc::new(Presentation::from_preset(s).unwrap()))
        .collect()
}

fn word(p: &Presentation, picks: &[usize]) -> Vec<Letter> {
    let gens = p.generators();
    picks.iter().map(|i| gens[i % gens.len()]).collect()
}

fn elem(p: &Presentation, picks: &[usize]) -> GroupElement {
    p.britton_reduce(&word(p, picks)).unwrap()
}

fn picks(max: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0usize..64, 0..=max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn concatenation_is_multiplication(which in 0usize..4, a in picks(10), b in picks(10)) {
        let p = &presets()[which];
        let (wa, wb) = (word(p, &a), word(p, &b));
        let joined: Vec<Letter> = wa.iter().chain(&wb).copied().collect();
        prop_assert_eq!(p.britton_reduce(&joined).unwrap(), p.multiply(&elem(p, &a), &elem(p, &b)));
    }

    #[test]
    fn multiplication_is_associative(which in 0usize..4, a in picks(8), b in picks(8), c in picks(8)) {
        let p = &presets()[which];
        let (x, y, z) = (elem(p, &a), elem(p, &b), elem(p, &c));
        prop_assert_eq!(p.multiply(&p.multiply(&x, &y), &z), p.multiply(&x, &p.multiply(&y, &z)));
        prop_assert!(p.multiply(&x, &p.inverse(&x)).is_identity());
    }

    #[test]
    fn normal_form_equality_matches_affine(q in 2i64..5, a in picks(12), b in picks(12)) {
        let p = Presentation::baumslag_solitar(1, q).unwrap();
        let (wa, wb) = (word(&p, &a), word(&p, &b));
        let nf = p.britton_reduce(&wa).unwrap() == p.britton_reduce(&wb).unwrap();
        let af = p.affine_of_word(&wa).unwrap() == p.affine_of_word(&wb).unwrap();
        prop_assert_eq!(nf, af);
        prop_assert_eq!(p.affine_oracle(&p.britton_reduce(&wa).unwrap()).unwrap(), p.affine_of_word(&wa).unwrap());
    }

    #[test]
    fn relators_vanish(which in 0usize..3, a in picks(10), at in 0usize..11, inv in any::<bool>()) {
        let p = &presets()[which];
        let (m1, m2) = (p.m1().get(0, 0), p.m2().get(0, 0));
        let mut rel = vec![
            Letter::T { power: 1 },
            Letter::X { axis: 0, power: m1 },
            Letter::T { power: -1 },
            Letter::X { axis: 0, power: -m2 },
        ];
        if inv {
            rel = rel.iter().rev().map(Letter::inverse).collect();
        }
        let w = word(p, &a);
        let k = at.min(w.len());
        let mut w2 = w.clone();
        w2.splice(k..k, rel);
        prop_assert_eq!(p.britton_reduce(&w).unwrap(), p.britton_reduce(&w2).unwrap());
    }

    #[test]
    fn height_and_j_n_are_homomorphisms(which in 0usize..4, a in picks(10), b in picks(10)) {
        let p = &presets()[which];
        let (x, y) = (elem(p, &a), elem(p, &b));
        let xy = p.multiply(&x, &y);
        prop_assert_eq!(xy.t_exponent(), x.t_exponent() + y.t_exponent());
        prop_assert_eq!(p.j_n(&xy), p.ntilde_mul(&p.j_n(&x), &p.j_n(&y)));
    }

    #[test]
    fn heights_are_equivariant(which in 0usize..4, a in picks(10), b in picks(10), u in 0u32..64, sx in -64i32..64) {
        let p = &presets()[which];
        let g = elem(p, &a);
        let x = p.tree_point(p.edge_of(&elem(p, &b)), u as f64 / 64.0).unwrap();
        prop_assert_eq!(p.act_tree_point(&g, &x).height(), x.height() + g.t_exponent() as f64);
        let n = p.rank();
        let model = YModel::standard(p.clone(), 0.5, Window::symmetric(n, 1.0, 1.0)).unwrap();
        let y = YPoint::new(vec![sx as f64 / 16.0; n], x.height());
        prop_assert_eq!(height_b(&model.act_y(&g, &y)), height_b(&y) + g.t_exponent() as f64);
    }

    #[test]
    fn tree_action_is_an_isometry(which in 0usize..4, a in picks(8), v in 0usize..40, w in 0usize..40) {
        let p = &presets()[which];
        let g = elem(p, &a);
        let ball = TreeBall::around_base(p.clone(), 2).unwrap();
        let (v, w) = (v % ball.vertex_count(), w % ball.vertex_count());
        let d = ball.vertex_distance(v, w);
        let (gv, gw) = (p.act_vertex(&g, &ball.vertices()[v]), p.act_vertex(&g, &ball.vertices()[w]));
        let around = TreeBall::new(p.clone(), gv.clone(), 4).unwrap();
        let j = around.vertex_index(&gw).expect("image within distance 4");
        prop_assert_eq!(around.vertex_distance(0, j), d);
        // adjacency is carried to adjacency
        let mut image: Vec<_> = p.neighbors(&ball.vertices()[v]).iter().map(|i| p.act_vertex(&g, &i.neighbor)).collect();
        let mut direct: Vec<_> = p.neighbors(&gv).into_iter().map(|i| i.neighbor).collect();
        image.sort();
        direct.sort();
        prop_assert_eq!(image, direct);
    }

    #[test]
    fn geodesic_length_is_distance(which in 0usize..4, a in 0usize..200, b in 0usize..200, u in 1u32..64, w in 1u32..64) {
        let p = &presets()[which];
        let ball = TreeBall::around_base(p.clone(), 3).unwrap();
        let edges = ball.edges();
        let (ea, eb) = (&edges[a % edges.len()].0, &edges[b % edges.len()].0);
        let x = p.tree_point(ea.clone(), u as f64 / 64.0).unwrap();
        let y = p.tree_point(eb.clone(), w as f64 / 64.0).unwrap();
        let d = ball.tree_distance(&x, &y).unwrap();
        let segs = ball.geodesic_sigma(&x, &y).unwrap();
        let len: f64 = segs.iter().map(|s| s.length()).sum();
        prop_assert!((len - d).abs() < 1e-12);
        prop_assert_eq!(ball.tree_distance(&y, &x).unwrap(), d);
        let z = TreePoint::Vertex(ball.vertices()[0].clone());
        prop_assert!(d <= ball.tree_distance(&x, &z).unwrap() + ball.tree_distance(&z, &y).unwrap() + 1e-12);
    }
}

#[test]
fn word_length_is_subadditive_in_ball_four() {
    for p in presets() {
        let ball = p.ball(4).unwrap();
        let half: Vec<(&GroupElement, usize)> = ball.iter().filter(|(_, l)| *l <= 2).collect();
        for (a, la) in &half {
            for (b, lb) in &half {
                let ab = p.multiply(a, b);
                let l = ball.length_of(&ab).expect("product lies in ball(4)");
                assert!(l <= la + lb);
                assert_eq!(ball.length_of(&p.inverse(a)), Some(*la));
            }
        }
    }
}
