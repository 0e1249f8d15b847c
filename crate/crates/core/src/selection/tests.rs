use super::*;
use crate::model::parse_model;
use crate::sim::simulate_theta;

fn model(s: &str) -> LatentModel {
    parse_model(s, 1.0).unwrap()
}

fn opts(seed: u64) -> RankOptions {
    RankOptions {
        fit: FitOptions {
            guesses: 200,
            bootstrap: 40,
            seed,
            ..FitOptions::default()
        },
        ..RankOptions::default()
    }
}

fn ar1_wn(len: usize, seed: u64) -> Vec<f64> {
    simulate_theta(&model("AR1()+WN()"), &[0.9, 0.05, 1.0], len, seed).unwrap()
}

#[test]
fn enumeration_counts() {
    let full = model("4*AR1()+WN()+RW()");
    let subs = enumerate_submodels(&full, 64).unwrap();
    assert_eq!(subs.len(), 19);
    let names: std::collections::HashSet<String> = subs.iter().map(|m| m.render()).collect();
    assert_eq!(names.len(), 19);
    assert!(names.contains("WN()") && names.contains("RW()") && names.contains("4*AR1()+WN()+RW()"));
    assert!(names.contains("AR1()+RW()"));
    assert_eq!(enumerate_submodels(&model("WN()"), 64).unwrap().len(), 1);
    assert_eq!(enumerate_submodels(&model("2*GM()+AR1()+QN()"), 64).unwrap().len(), 11);
}

#[test]
fn enumeration_cap() {
    let full = model("4*AR1()+WN()+RW()+QN()+DR()");
    match enumerate_submodels(&full, 64) {
        Err(Error::TooManyCandidates { count, cap }) => assert_eq!((count, cap), (79, 64)),
        other => panic!("{other:?}"),
    }
    assert_eq!(enumerate_submodels(&full, 79).unwrap().len(), 79);
}

#[test]
fn embedding_keeps_sub_fit() {
    let sub = model("AR1()+WN()");
    let sup = model("2*AR1()+WN()+RW()");
    let base = vec![0.5, 2.0, 0.7, 3.0, 4.0, 5.0];
    let all = embeddings(&sub, &[0.9, 0.1, 1.0], &sup, &base);
    assert_eq!(all.len(), 2);
    let e = &all[0];
    assert_eq!(&e[..2], &[0.9, 0.1]);
    assert_eq!(e[2], 0.7);
    assert!((e[3] - 3e-12).abs() < 1e-24);
    assert_eq!(e[4], 1.0);
    assert!((e[5] - 5e-12).abs() < 1e-24);
    assert_eq!(&all[1][2..5], &[0.9, 0.1, 1.0]);
    assert!(embeddings(&model("QN()"), &[1.0], &sup, &base).is_empty());
}

#[test]
fn restrictions_pick_each_subset() {
    let sup = model("3*AR1()+WN()");
    let sub = model("AR1()+WN()");
    let theta = [0.1, 1.0, 0.2, 2.0, 0.3, 3.0, 9.0];
    let r = restrictions(&sup, &theta, &sub, &[0.0; 3]);
    assert_eq!(r, vec![vec![0.1, 1.0, 9.0], vec![0.2, 2.0, 9.0], vec![0.3, 3.0, 9.0]]);
    assert_eq!(block_maps(&model("2*AR1()"), &sup, 64).len(), 3);
}

#[test]
fn single_candidate_and_method_agreement() {
    let x = ar1_wn(1 << 12, 3);
    let c = vec![model("AR1()+WN()")];
    let t1 = rank_models(&x, &c, &opts(5)).unwrap();
    assert_eq!(t1.rows.len(), 1);
    assert_eq!(t1.rows[0].model, "AR1()+WN()");
    assert!(t1.rows[0].omega_source);
    let t2 = wic_fast(&x, &c, &opts(5)).unwrap();
    assert_eq!(t1.rows, t2.rows);
}

#[test]
fn deterministic_and_a_monotone() {
    let x = ar1_wn(1 << 12, 11);
    let c = vec![model("WN()"), model("AR1()+WN()"), model("2*AR1()+WN()"), model("AR1()")];
    let t = rank_models(&x, &c, &opts(2)).unwrap();
    let again = rank_models(&x, &c, &opts(2)).unwrap();
    assert_eq!(serde_json::to_string(&t).unwrap(), serde_json::to_string(&again).unwrap());
    let a = |name: &str| t.rows.iter().find(|r| r.model == name).unwrap().a.unwrap();
    for sub in ["WN()", "AR1()+WN()", "AR1()"] {
        assert!(a("2*AR1()+WN()") <= a(sub) + 1e-6, "{sub}: {} vs {}", a("2*AR1()+WN()"), a(sub));
    }
    assert!(a("AR1()+WN()") <= a("WN()") + 1e-6);
    for r in &t.rows {
        assert_eq!(r.a, r.objective);
        assert!((r.wic.unwrap() - r.a.unwrap() - r.b.unwrap()).abs() <= 1e-12 * r.wic.unwrap().abs());
    }
    for w in t.rows.windows(2) {
        assert!(w[0].wic.unwrap() <= w[1].wic.unwrap() + 1e-12 * w[1].wic.unwrap().abs());
    }
}

#[test]
fn failed_candidate_is_flagged() {
    let x = ar1_wn(1 << 10, 1);
    let mut o = opts(1);
    o.fit.levels = Some(3);
    let c = vec![model("WN()"), model("2*AR1()+WN()")];
    let t = rank_models(&x, &c, &o).unwrap();
    assert_eq!(t.rows[0].model, "WN()");
    assert!(t.rows[1].error.is_some() && t.rows[1].wic.is_none());
    assert!(t.rows[0].omega_source);
    let mut csv = Vec::new();
    t.write_csv(&mut csv).unwrap();
    let csv = String::from_utf8(csv).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(t.pretty().contains("failed"));
}

#[test]
fn saturated_fit_has_no_apparent_loss() {
    let m = model("WN()+QN()+RW()");
    let x = simulate_theta(&m, &[1.0, 1.0, 0.5], 1 << 14, 4).unwrap();
    let mut o = opts(4);
    o.fit.levels = Some(3);
    let t = rank_models(&x, &[m], &o).unwrap();
    let r = &t.rows[0];
    assert!(r.a.unwrap() < 1e-8, "{:?}", r.a);
    assert!((r.wic.unwrap() - r.b.unwrap()).abs() < 1e-8);
}

#[test]
fn optimism_stable_when_h_doubles() {
    let m = model("WN()");
    let x = simulate_theta(&m, &[2.0], 1 << 12, 8).unwrap();
    let fit = crate::gmwm_fit(&x, &m, &opts(8).fit).unwrap();
    let w1 = wic(&fit, 100, 1).unwrap();
    let w2 = wic(&fit, 200, 2).unwrap();
    let se = (w1.b_se.powi(2) + w2.b_se.powi(2)).sqrt();
    assert!((w1.b - w2.b).abs() < 2.0 * se, "{w1:?} {w2:?}");
    assert!(w1.b > 0.0 && w1.dropped == 0);
}
