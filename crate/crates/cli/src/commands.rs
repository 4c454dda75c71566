use std::path::Path;

use anyhow::{bail, Context};
use rand::Rng;
use serde::Serialize;
use serde_json::json;

use hnn_core::bass_serre::TreeBall;
use hnn_core::compression::{
    compose_min, embed_group, embed_tree, estimate_exponent, group_pairs, EmbeddingKind, EmbeddingSpec,
    ExponentEstimate, Exponent,
};
use hnn_core::millefeuille::{act_m_unchecked, MSpace, FIBRE_TOL};
use hnn_core::sampling::{index_pairs, rng};
use hnn_core::y_grid::YGrid;
use hnn_core::y_space::{Window, YPoint};
use hnn_core::Error;

use crate::config::RunConfig;
use crate::output::Sink;

/// Whether a command found a violated bound; mapped to the exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Clean,
    Violated,
}

impl Verdict {
    fn from_ok(ok: bool) -> Self {
        if ok {
            Verdict::Clean
        } else {
            Verdict::Violated
        }
    }
}

fn sink(cfg: &RunConfig) -> anyhow::Result<Sink> {
    Sink::new(cfg.output_dir.clone())
}

pub fn normal_form(cfg: &RunConfig, word: &str) -> anyhow::Result<Verdict> {
    let p = cfg.presentation()?;
    let letters = p.parse_word(word)?;
    let g = p.britton_reduce(&letters)?;
    let form = p.format(&g);
    println!("{form}");
    println!("p = {}", g.t_exponent());
    let out = sink(cfg)?;
    out.text(
        "normal_form.json",
        &serde_json::to_string_pretty(&json!({
            "presentation": p.to_doc(),
            "word": word,
            "normal_form": form,
            "t_exponent": g.t_exponent(),
        }))?,
    )?;
    Ok(Verdict::Clean)
}

pub fn word_length(cfg: &RunConfig, word: &str) -> anyhow::Result<Verdict> {
    let p = cfg.presentation()?;
    let g = p.britton_reduce(&p.parse_word(word)?)?;
    let budget = cfg.radius_or(12);
    let len = p.word_length(&g, budget)?;
    sink(cfg)?.summary(
        "word_length.json",
        &json!({
            "presentation": p.to_doc(),
            "word": word,
            "normal_form": p.format(&g),
            "word_length": len,
            "budget": budget,
        }),
    )?;
    Ok(Verdict::Clean)
}

#[derive(Serialize)]
struct GrowthRow {
    radius: usize,
    sphere: usize,
    ball: usize,
}

pub fn ball_growth(cfg: &RunConfig) -> anyhow::Result<Verdict> {
    let p = cfg.presentation()?;
    let radius = cfg.radius_or(8);
    let growth = p.ball(radius)?.growth();
    let rows: Vec<GrowthRow> = growth
        .iter()
        .enumerate()
        .map(|(r, &b)| GrowthRow { radius: r, sphere: b - if r == 0 { 0 } else { growth[r - 1] }, ball: b })
        .collect();
    let out = sink(cfg)?;
    out.csv("ball_growth.csv", &rows)?;
    out.summary(
        "ball_growth.json",
        &json!({
            "presentation": p.to_doc(),
            "radius": radius,
            "ball_sizes": growth,
            "sphere_sizes": rows.iter().map(|r| r.sphere).collect::<Vec<_>>(),
        }),
    )?;
    Ok(Verdict::Clean)
}

pub fn tree_ball(cfg: &RunConfig) -> anyhow::Result<Verdict> {
    let p = cfg.presentation()?;
    let radius = cfg.radius_or(5);
    let ball = TreeBall::around_base(p.clone(), radius)?;
    let expected = (p.m1().det().abs() + p.m2().det().abs()) as usize;
    let mut degrees: Vec<usize> = ball.interior_vertices().map(|i| ball.degree(i)).collect();
    degrees.sort_unstable();
    degrees.dedup();
    let is_tree = ball.is_tree();
    let ok = is_tree && degrees.iter().all(|d| *d == expected);
    let out = sink(cfg)?;
    out.text("tree_ball.csv", &ball.to_csv())?;
    out.summary(
        "tree_ball.json",
        &json!({
            "presentation": p.to_doc(),
            "radius": radius,
            "vertices": ball.vertex_count(),
            "edges": ball.edge_count(),
            "is_tree": is_tree,
            "interior_degrees": degrees,
            "expected_degree": expected,
        }),
    )?;
    Ok(Verdict::from_ok(ok))
}

/// Dyadic point of the window, so every query is exactly representable.
fn window_point<R: Rng>(w: &Window, r: &mut R) -> YPoint {
    let pick = |r: &mut R, lo: f64, hi: f64| {
        let (a, b) = ((lo * 64.0).ceil() as i64, (hi * 64.0).floor() as i64);
        r.gen_range(a..=b) as f64 / 64.0
    };
    let x = w.x_lo.iter().zip(&w.x_hi).map(|(lo, hi)| pick(r, *lo, *hi)).collect();
    YPoint::new(x, pick(r, w.s_lo, w.s_hi))
}

fn read_queries(path: &Path, n: usize) -> anyhow::Result<Vec<(YPoint, YPoint)>> {
    let mut rd = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        if rec.len() != 2 * n + 2 {
            bail!("query row {} has {} fields, expected {}", i + 1, rec.len(), 2 * n + 2);
        }
        let v: Vec<f64> = rec
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .with_context(|| format!("query row {}", i + 1))?;
        out.push((YPoint::new(v[..n].to_vec(), v[n]), YPoint::new(v[n + 1..2 * n + 1].to_vec(), v[2 * n + 1])));
    }
    Ok(out)
}

fn point_header(prefix: &str, n: usize) -> Vec<String> {
    let mut h: Vec<String> = if n == 1 {
        vec![format!("{prefix}x")]
    } else {
        (1..=n).map(|k| format!("{prefix}x{k}")).collect()
    };
    h.push(format!("{prefix}s"));
    h
}

pub fn y_dist(cfg: &RunConfig, queries: Option<&Path>, export_grid: bool) -> anyhow::Result<Verdict> {
    let p = cfg.presentation()?;
    let n = p.rank();
    let model = cfg.y_model(p.clone())?;
    let grid = YGrid::new(&model)?;
    let pairs = match queries {
        Some(path) => read_queries(path, n)?,
        None => {
            let mut r = rng(cfg.seed);
            let w = model.window();
            (0..cfg.budget_or(100)).map(|_| (window_point(w, &mut r), window_point(w, &mut r))).collect()
        }
    };
    let mut header = point_header("a", n);
    header.extend(point_header("b", n));
    header.extend(["lower".to_string(), "upper".to_string()]);
    let mut rows = Vec::with_capacity(pairs.len());
    for (i, (a, b)) in pairs.iter().enumerate() {
        let (lo, hi) = grid.y_distance(a, b).with_context(|| format!("pair {}", i + 1))?;
        let mut row: Vec<String> = a.x.iter().chain([&a.s]).chain(&b.x).chain([&b.s]).map(f64::to_string).collect();
        row.extend([lo.to_string(), hi.to_string()]);
        rows.push(row);
    }
    let out = sink(cfg)?;
    out.records("y_dist.csv", &header, &rows)?;
    if export_grid {
        out.text("grid.csv", &grid.to_csv())?;
    }
    out.summary(
        "y_dist.json",
        &json!({
            "presentation": p.to_doc(),
            "grid_step": model.grid_step(),
            "window": model.window(),
            "nodes": grid.node_count(),
            "kappa": grid.kappa(),
            "pairs": rows.len(),
            "seed": cfg.seed,
        }),
    )?;
    Ok(Verdict::Clean)
}

#[derive(Serialize)]
struct LemmaRow {
    pair: usize,
    d_lower: f64,
    d_upper: f64,
    dm_upper: f64,
    theta1: f64,
    theta2: f64,
    within: bool,
}

pub fn verify_lemma(cfg: &RunConfig) -> anyhow::Result<Verdict> {
    let p = cfg.presentation()?;
    let radius = cfg.radius_or(5);
    let budget = cfg.budget_or(300);
    let ball = TreeBall::around_base(p.clone(), radius)?;
    let sp = MSpace::new(ball, YGrid::new(&cfg.y_model(p.clone())?)?)?;
    let kappa = sp.kappa();
    let bound = 4.0 * (1.0 + kappa);
    let depth = radius.saturating_sub(2).max(1).min(radius);
    let x_half = sp.model().window().x_hi.iter().chain(&sp.model().window().x_lo).fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let mut r = rng(cfg.seed);
    let (mut rejected, mut attempts) = (0usize, 0usize);
    let mut rows = Vec::new();
    let (mut v_lower, mut v_upper, mut v_t1, mut v_t2, mut v_fibre) = (0usize, 0usize, 0usize, 0usize, 0usize);
    let mut ratios = Vec::new();
    while rows.len() < budget && attempts < 10 * budget {
        attempts += 1;
        let a = sp.sample_mpoint(&mut r, depth, x_half);
        let b = sp.sample_mpoint(&mut r, depth, x_half);
        let path = match sp.connect_theta(&a, &b) {
            Ok(path) => path,
            Err(Error::PathEscapesWindow | Error::OutsideWindow | Error::OutsideBall) => {
                rejected += 1;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let (lo, hi) = sp.product_distance(&a, &b)?;
        let dm = path.total_length();
        let dt = sp.ball().tree_distance(&a.tree, &b.tree)?;
        let corner = YPoint { x: a.y.x.clone(), s: b.y.s };
        let (dy_lo, _) = sp.grid().y_distance(&corner, &b.y)?;
        let checks = [
            lo <= dm,
            dm <= bound * hi,
            path.theta1_length <= 2.0 * dt,
            path.theta2_length <= 2.0 * (1.0 + kappa) * dy_lo,
            path.sample(&p, 3).iter().all(|q| q.fibre_gap() <= FIBRE_TOL),
        ];
        for (count, ok) in [&mut v_lower, &mut v_upper, &mut v_t1, &mut v_t2, &mut v_fibre].into_iter().zip(checks) {
            *count += usize::from(!ok);
        }
        if hi > 0.0 {
            ratios.push(dm / hi);
        }
        rows.push(LemmaRow {
            pair: rows.len(),
            d_lower: lo,
            d_upper: hi,
            dm_upper: dm,
            theta1: path.theta1_length,
            theta2: path.theta2_length,
            within: checks[0] && checks[1],
        });
    }
    let within = rows.iter().filter(|r| r.within).count();
    let stats = (!ratios.is_empty()).then(|| {
        json!({
            "min": ratios.iter().copied().fold(f64::INFINITY, f64::min),
            "max": ratios.iter().copied().fold(0.0, f64::max),
            "mean": ratios.iter().sum::<f64>() / ratios.len() as f64,
        })
    });
    let clean = v_lower + v_upper + v_t1 + v_t2 + v_fibre == 0;
    let out = sink(cfg)?;
    out.csv("verify_lemma.csv", &rows)?;
    out.summary(
        "verify_lemma.json",
        &json!({
            "presentation": p.to_doc(),
            "tree_radius": radius,
            "grid_step": sp.model().grid_step(),
            "window": sp.model().window(),
            "kappa": kappa,
            "bound": bound,
            "pairs": rows.len(),
            "rejected": rejected,
            "informative_pairs": ratios.len(),
            "ratio_dm_over_d_upper": stats,
            "fraction_within": if rows.is_empty() { serde_json::Value::Null } else { (within as f64 / rows.len() as f64).into() },
            "violations": {
                "d_le_dm": v_lower,
                "dm_le_bound": v_upper,
                "theta1": v_t1,
                "theta2": v_t2,
                "fibre": v_fibre,
            },
            "seed": cfg.seed,
        }),
    )?;
    Ok(Verdict::from_ok(clean))
}

pub fn probe(cfg: &RunConfig) -> anyhow::Result<Verdict> {
    let p = cfg.presentation()?;
    let radius = cfg.radius_or(5);
    let budget = cfg.budget_or(300);
    // room for the ascending legs of orbit paths
    let ball = TreeBall::around_base(p.clone(), (2 * radius).max(2))?;
    let window = match &cfg.y_model.window {
        Some(w) => w.clone(),
        None => Window::around_orbit(&p, radius, 2.0, 4.0)?,
    };
    let sp = MSpace::new(ball, YGrid::new(&cfg.y_model_in(p.clone(), window)?)?)?;
    let report = sp.properness_probe(radius)?;
    let mut r = rng(cfg.seed);
    let (mut drawn, mut normalized) = (0, 0);
    for _ in 0..20 * budget {
        if drawn == budget {
            break;
        }
        let m = sp.sample_mpoint(&mut r, radius.max(1), 1.0);
        if !sp.contains(&m) {
            continue;
        }
        drawn += 1;
        if let Ok((g, out)) = sp.normalize_to_fundamental_domain(&m) {
            let moved = act_m_unchecked(sp.model(), &g, &m);
            let agrees = moved.tree == out.tree
                && moved.y.x.iter().zip(&out.y.x).all(|(a, b)| (a - b).abs() <= 1e-9)
                && (moved.y.s - out.y.s).abs() <= 1e-9;
            normalized += usize::from(sp.is_normalized(&out) && agrees);
        }
    }
    // one element gives no slope to fit
    let fit = if radius > 0 { Some(sp.orbit_qi_fit(radius)?) } else { None };
    let ok = report.collisions == 0 && drawn > 0 && normalized == drawn;
    sink(cfg)?.summary(
        "probe.json",
        &json!({
            "presentation": p.to_doc(),
            "radius": radius,
            "elements": report.elements,
            "collisions": report.collisions,
            "min_displacement_by_length": report.min_displacement_by_length,
            "displacement_nondecreasing": report.displacement_nondecreasing,
            "normalization": {
                "attempted": drawn,
                "succeeded": normalized,
                "rate": normalized as f64 / drawn.max(1) as f64,
            },
            "qi_fit": fit,
            "qi_fit_success": fit.as_ref().map(|f| f.success()),
            "kappa": sp.kappa(),
            "seed": cfg.seed,
        }),
    )?;
    Ok(Verdict::from_ok(ok))
}

#[derive(Serialize)]
struct EstimateRow {
    p: f64,
    embedding: String,
    alpha_hat: f64,
    c: f64,
    d: f64,
    a: f64,
    b: f64,
    pairs: usize,
    d_min: f64,
    d_max: f64,
}

fn estimate_json(e: &ExponentEstimate, seed: u64) -> serde_json::Value {
    json!({
        "alpha_hat": e.alpha_hat,
        "C": e.c_hat,
        "D": e.d_hat,
        "A": e.a_hat,
        "B": e.b_hat,
        "pairs": e.pair_count,
        "distance_range": [e.distance_range.0, e.distance_range.1],
        "slope": e.slope,
        "seed": seed,
    })
}

/// Runs the estimator and confirms both envelopes on every input pair.
fn checked_estimate(pairs: &[(f64, f64)]) -> anyhow::Result<(ExponentEstimate, bool)> {
    let e = estimate_exponent(pairs)?;
    let valid = pairs.iter().all(|(d, r)| e.lower_holds(*d, *r) && e.upper_holds(*d, *r));
    Ok((e, valid))
}

pub fn estimate_compression(cfg: &RunConfig) -> anyhow::Result<Verdict> {
    let p = cfg.presentation()?;
    let radius = cfg.radius_or(9);
    if radius < 2 {
        bail!("estimate-compression needs radius >= 2");
    }
    let ball = TreeBall::around_base(p.clone(), radius)?;
    let idx = index_pairs(ball.vertex_count(), cfg.seed);
    let dists: Vec<f64> = idx.iter().map(|&(a, b)| ball.vertex_distance(a, b) as f64).collect();
    let model = cfg.y_model(p.clone())?;
    // anchors deep enough to reach t^-m and x t^-m, which share a tree vertex
    let anchors = radius / 2;
    let group_tree_radius = anchors + radius - 1;
    let word_pairs = group_pairs(&p, &p.ball(anchors)?, &p.ball(radius - 1)?, cfg.seed);

    let mut rows = Vec::new();
    let mut per_p = Vec::new();
    let mut valid_all = true;
    for &pp in &cfg.p_values {
        let mut kinds = vec![(EmbeddingKind::EdgeIndicator, "edge_indicator".to_string())];
        kinds.extend((1..=9).map(|k| {
            let beta = k as f64 / 10.0;
            (EmbeddingKind::WeightedGeodesic { beta }, format!("weighted_geodesic(beta={beta})"))
        }));
        let mut tree_best: Option<(f64, String, EmbeddingSpec)> = None;
        let mut tree_json = Vec::new();
        for (kind, label) in kinds {
            let spec = EmbeddingSpec::new(kind, pp)?;
            let f = embed_tree(&spec, &ball)?;
            let pairs: Vec<(f64, f64)> = idx.iter().zip(&dists).map(|(&(a, b), d)| (*d, f.distance(a, b))).collect();
            let (e, valid) = checked_estimate(&pairs)?;
            valid_all &= valid;
            if tree_best.as_ref().is_none_or(|(a, _, _)| e.alpha_hat > *a) {
                tree_best = Some((e.alpha_hat, label.clone(), spec));
            }
            rows.push(row(pp, &label, &e));
            let mut j = estimate_json(&e, cfg.seed);
            j["embedding"] = label.into();
            j["envelopes_valid"] = valid.into();
            tree_json.push(j);
        }
        let (tree_alpha, tree_label, tree_spec) = tree_best.expect("at least one tree embedding");

        let g = embed_group(pp, &tree_spec, &model, group_tree_radius)?;
        let mut gpairs = Vec::with_capacity(word_pairs.len());
        for (a, b, len) in &word_pairs {
            gpairs.push((*len as f64, g.distance(&g.image(a)?, &g.image(b)?)));
        }
        let group_label = format!("group[{tree_label}]");
        let group_json = match checked_estimate(&gpairs) {
            Ok((e, valid)) => {
                valid_all &= valid;
                rows.push(row(pp, &group_label, &e));
                let mut j = estimate_json(&e, cfg.seed);
                j["envelopes_valid"] = valid.into();
                j
            }
            Err(e) => json!({ "error": e.to_string() }),
        };

        // the factor Y enters with its known exponent 1
        let bound = compose_min(
            Exponent::Estimate { label: format!("T[{tree_label}]"), value: tree_alpha },
            Exponent::Known(1.0),
        );
        per_p.push(json!({
            "p": pp,
            "tree": tree_json,
            "group": group_json,
            "group_embedding": group_label,
            "composed_bound": {
                "expression": bound.to_string(),
                "value": bound.value(),
            },
        }));
    }
    let out = sink(cfg)?;
    out.csv("estimate_compression.csv", &rows)?;
    out.summary(
        "estimate_compression.json",
        &json!({
            "presentation": p.to_doc(),
            "tree_radius": radius,
            "tree_vertices": ball.vertex_count(),
            "tree_pairs": idx.len(),
            "group_pairs": word_pairs.len(),
            "group_anchor_radius": anchors,
            "results": per_p,
            "seed": cfg.seed,
        }),
    )?;
    Ok(Verdict::from_ok(valid_all))
}

fn row(p: f64, label: &str, e: &ExponentEstimate) -> EstimateRow {
    EstimateRow {
        p,
        embedding: label.to_string(),
        alpha_hat: e.alpha_hat,
        c: e.c_hat,
        d: e.d_hat,
        a: e.a_hat,
        b: e.b_hat,
        pairs: e.pair_count,
        d_min: e.distance_range.0,
        d_max: e.distance_range.1,
    }
}
