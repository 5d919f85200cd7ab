use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use afindex_core::analytics::{bucket_shares, make_quantiles, oaxaca_decompose, OaxacaVariant};
use afindex_core::catalog::{
    load_catalog, write_catalog, Amenity, AmenitySpec, DescriptorCatalog, Education,
    EmploymentPanel, PanelCell, Sex,
};
use afindex_core::econ::{
    midranks, ols_robust, spearman, DataTable, HcType, PValueMethod, RegressionSpec,
};
use afindex_core::embedder::{builtin_embed, parse_exchange, write_exchange, EmbeddingMatrix};
use afindex_core::index::{
    build_age_embedding, build_occupation_vectors, score_afi, AfiTable, WeightMode,
};
use afindex_core::survey::{
    aggregate_and_validate, filter_responses, Response, ResponseSet, Score, CONTROL_ATHLETE,
    CONTROL_ATTENTION,
};
use afindex_core::timeseries::{backcast, BandMode, DescriptorSeries};

fn ids(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i:02}")).collect()
}

fn texts(descs: &[String]) -> BTreeMap<String, String> {
    descs
        .iter()
        .map(|d| (d.clone(), format!("text of {d}")))
        .collect()
}

fn unit_rows(rows: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    rows.into_iter()
        .map(|r| {
            let n = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            r.into_iter().map(|v| v / n).collect()
        })
        .collect()
}

/// Random unit vectors of length `dim`, bounded away from zero before normalizing.
fn unit_matrix(n: usize, dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1.0f64..1.0, dim), n)
        .prop_filter("non-degenerate", |rows| {
            rows.iter()
                .all(|r| r.iter().map(|v| v * v).sum::<f64>() > 1e-3)
        })
        .prop_map(unit_rows)
}

fn row_weights(n: usize, d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.0f64..=1.0, d), n)
        .prop_filter("a positive weight per row", |w| {
            w.iter().all(|r| r.iter().any(|v| *v > 1e-3))
        })
}

fn afi_for(catalog: &DescriptorCatalog, desc: &EmbeddingMatrix, target: Vec<f64>) -> AfiTable {
    let spec = AmenitySpec::new(vec![Amenity {
        name: "t".into(),
        definition: "t".into(),
        weight_absolute: 1.0,
        weight_relative: 1.0,
    }])
    .unwrap();
    let emb = EmbeddingMatrix::new(vec!["t".into()], target.len(), vec![target], "test").unwrap();
    let d0 = build_age_embedding(&spec, &emb, WeightMode::Absolute).unwrap();
    score_afi(&build_occupation_vectors(catalog, desc).unwrap(), &d0).unwrap()
}

proptest! {
    #[test]
    fn builtin_vectors_are_unit(text in "[a-zA-Z]{1,8}( [a-zA-Z0-9]{1,8}){0,6}", dim in 2usize..64) {
        let v = builtin_embed(&text, dim).unwrap();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((n - 1.0).abs() < 1e-12);
    }

    #[test]
    fn afi_in_range_and_row_scale_invariant(
        w in row_weights(4, 5),
        d in unit_matrix(5, 6),
        t in unit_matrix(1, 6),
        c in prop::sample::select(vec![0.1, 7.0, 1e3]),
    ) {
        let occs = ids("o", 4);
        let descs = ids("d", 5);
        let cat = DescriptorCatalog::new(2020, occs.clone(), descs.clone(), w.clone(), texts(&descs)).unwrap();
        let emb = EmbeddingMatrix::new(descs.clone(), 6, d.clone(), "test").unwrap();
        let afi = afi_for(&cat, &emb, t[0].clone());
        prop_assert!(afi.values().values().all(|v| (-1.0..=1.0).contains(v)));

        // rescale row 0 by c, keeping it inside [0, 1]
        let mut scaled = w.clone();
        let max = w[0].iter().fold(0.0f64, |m, v| m.max(*v));
        scaled[0] = if max * c > 1.0 {
            w[0].iter().map(|v| v / max).collect()
        } else {
            w[0].iter().map(|v| v * c).collect()
        };
        let norm = scaled;
        let cat2 = DescriptorCatalog::new(2020, occs.clone(), descs.clone(), norm, texts(&descs)).unwrap();
        let afi2 = afi_for(&cat2, &emb, t[0].clone());
        prop_assert!((afi.get("o00").unwrap() - afi2.get("o00").unwrap()).abs() < 1e-12);
    }

    #[test]
    fn catalog_round_trip(w in row_weights(3, 4)) {
        let occs = ids("o", 3);
        let descs = ids("d", 4);
        let cat = DescriptorCatalog::new(2020, occs, descs.clone(), w, texts(&descs)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (wp, tp) = (dir.path().join("w.csv"), dir.path().join("t.csv"));
        write_catalog(&cat, &wp, &tp).unwrap();
        let back = load_catalog(&wp, &tp, 2020).unwrap();
        prop_assert_eq!(&back, &cat);
        let (wp2, tp2) = (dir.path().join("w2.csv"), dir.path().join("t2.csv"));
        write_catalog(&back, &wp2, &tp2).unwrap();
        prop_assert_eq!(std::fs::read(&wp).unwrap(), std::fs::read(&wp2).unwrap());
    }

    #[test]
    fn exchange_round_trip(rows in unit_matrix(3, 7)) {
        let m = EmbeddingMatrix::new(ids("x", 3), 7, rows, "test").unwrap();
        let mut buf = Vec::new();
        write_exchange(&m, &mut buf).unwrap();
        let (_, back) = parse_exchange(buf.as_slice()).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn backcast_stays_in_band(
        years in prop::collection::btree_set(2000i32..2025, 3..9),
        vals in prop::collection::vec(0.0f64..=1.0, 9),
        target in 1980i32..2000,
        prediction in any::<bool>(),
    ) {
        let obs: Vec<(f64, f64)> = years.iter().zip(&vals).map(|(y, v)| (f64::from(*y), *v)).collect();
        let s = DescriptorSeries::new("o", "d", &obs).unwrap();
        let band = if prediction { BandMode::Prediction } else { BandMode::Residual };
        let b = backcast(&s, f64::from(target), band).unwrap();
        let (lo, hi) = (b.linear - b.stderr, b.linear + b.stderr);
        prop_assert!(b.banded >= lo - 1e-12 && b.banded <= hi + 1e-12);
        prop_assert!((0.0..=1.0).contains(&b.final_value));
        if hi >= 0.0 && lo <= 1.0 {
            prop_assert!(b.final_value >= lo - 1e-12 && b.final_value <= hi + 1e-12);
        }
    }
}

fn two_year_panel(e0: &[f64], e1: &[f64]) -> EmploymentPanel {
    let mut cells = Vec::new();
    for (year, emp) in [(1990, e0), (2020, e1)] {
        for (i, &c) in emp.iter().enumerate() {
            cells.push(PanelCell {
                year,
                occupation: format!("o{i:02}"),
                age_band: "25-49".into(),
                sex: Sex::Male,
                education: Education::NoCollege,
                industry: "x".into(),
                count: c,
                wage: None,
            });
        }
    }
    EmploymentPanel::new(cells).unwrap()
}

fn table(year: i32, v: &[f64]) -> AfiTable {
    AfiTable::new(
        year,
        None,
        v.iter()
            .enumerate()
            .map(|(i, x)| (format!("o{i:02}"), *x))
            .collect(),
    )
    .unwrap()
}

proptest! {
    #[test]
    fn oaxaca_is_additive(
        e0 in prop::collection::vec(1.0f64..1e6, 2..40),
        seed in prop::collection::vec((1.0f64..1e6, -1.0f64..1.0, -1.0f64..1.0), 40),
        variant in prop::sample::select(vec![OaxacaVariant::Midpoint, OaxacaVariant::Initial, OaxacaVariant::Final]),
    ) {
        let n = e0.len();
        let e1: Vec<f64> = seed[..n].iter().map(|s| s.0).collect();
        let a0: Vec<f64> = seed[..n].iter().map(|s| s.1).collect();
        let a1: Vec<f64> = seed[..n].iter().map(|s| s.2).collect();
        let p = two_year_panel(&e0, &e1);
        let d = oaxaca_decompose(&table(1990, &a0), &table(2020, &a1), &p, 1990, 2020, variant).unwrap();
        prop_assert!((d.within + d.between + d.interaction - d.total).abs() < 1e-12);

        // frozen shares: scale employment uniformly
        let scaled: Vec<f64> = e0.iter().map(|v| v * 3.0).collect();
        let p2 = two_year_panel(&e0, &scaled);
        let d2 = oaxaca_decompose(&table(1990, &a0), &table(2020, &a1), &p2, 1990, 2020, OaxacaVariant::Midpoint).unwrap();
        prop_assert!(d2.between.abs() < 1e-12);
        // frozen values
        let d3 = oaxaca_decompose(&table(1990, &a0), &table(2020, &a0), &p, 1990, 2020, OaxacaVariant::Midpoint).unwrap();
        prop_assert!(d3.within.abs() < 1e-12);
    }

    #[test]
    fn bucket_shares_conserve_employment(
        rows in prop::collection::vec((0.5f64..1e7, -1.0f64..1.0), 10..50),
    ) {
        let e: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let a: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let p = two_year_panel(&e, &e);
        let afi = table(2020, &a);
        let q = make_quantiles(&afi, 4);
        prop_assume!(q.is_ok());
        let shares = bucket_shares(&afi, &p, &q.unwrap());
        let s: f64 = shares.iter().map(|b| b.employment_share).sum();
        let tot: f64 = shares.iter().map(|b| b.employment).sum();
        prop_assert!((s - 1.0).abs() < 1e-12);
        prop_assert!((tot - e.iter().sum::<f64>()).abs() <= 1e-9 * tot);
    }

    #[test]
    fn quantiles_balanced_and_anchored(
        m in 1usize..8,
        k in prop::sample::select(vec![2usize, 4, 5, 10]),
        raw in prop::collection::btree_set(-1_000_000i32..1_000_000, 80),
        other in prop::collection::vec(-1.0f64..1.0, 80),
    ) {
        let n = m * k;
        let values: Vec<f64> = raw.iter().take(n).map(|v| f64::from(*v) / 1e6).collect();
        prop_assume!(values.len() == n);
        let anchor = table(2020, &values);
        let q = make_quantiles(&anchor, k).unwrap();
        let mut counts = vec![0usize; k];
        for v in &values {
            counts[q.assign(*v) - 1] += 1;
        }
        prop_assert!(counts.iter().all(|c| *c == m), "{:?}", counts);
        // assigning another year's values uses the same cut points
        let shifted = table(1990, &other[..n]);
        let q2 = make_quantiles(&anchor, k).unwrap();
        prop_assert_eq!(&q.cuts, &q2.cuts);
        for v in shifted.values().values() {
            prop_assert_eq!(q.assign(*v), 1 + q.cuts.iter().filter(|c| **c <= *v).count());
        }
    }
}

fn regression(n: usize, cols: &[(&str, Vec<f64>)]) -> DataTable {
    let mut t = DataTable::new(ids("r", n));
    for (name, v) in cols {
        t.push_column(name, v.clone()).unwrap();
    }
    t
}

fn spec(regs: &[&str], focus: &str, hc: HcType) -> RegressionSpec {
    RegressionSpec {
        dependent: "y".into(),
        regressors: regs.iter().map(|s| s.to_string()).collect(),
        intercept: true,
        focus: Some(focus.into()),
        hc,
    }
}

proptest! {
    #[test]
    fn residuals_orthogonal_to_design(
        rows in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0), 8..40),
    ) {
        let n = rows.len();
        let x1: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let x2: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let y: Vec<f64> = rows.iter().map(|r| 1.0 + 0.5 * r.0 - r.1 + r.2).collect();
        let t = regression(n, &[("y", y), ("x1", x1.clone()), ("x2", x2.clone())]);
        let r = ols_robust(&t, &spec(&["x1", "x2"], "x1", HcType::Hc1)).unwrap();
        let e = &r.residuals;
        let dot = |c: &[f64]| c.iter().zip(e).map(|(a, b)| a * b).sum::<f64>();
        prop_assert!(e.iter().sum::<f64>().abs() < 1e-9);
        prop_assert!(dot(&x1).abs() < 1e-9 && dot(&x2).abs() < 1e-9);
        let p = r.partial_r_squared.unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn hc1_equals_classical_under_constant_squared_residuals(
        xs in prop::collection::vec(-5.0f64..5.0, 3..20),
        b0 in -3.0f64..3.0,
        b1 in -3.0f64..3.0,
        c in 0.01f64..2.0,
    ) {
        // rows in pairs with equal x and residuals +c, -c: X'e = 0 and e_i^2 = c^2
        let mut x = Vec::new();
        let mut y = Vec::new();
        for &v in &xs {
            x.extend([v, v]);
            y.extend([b0 + b1 * v + c, b0 + b1 * v - c]);
        }
        prop_assume!(xs.iter().any(|v| (v - xs[0]).abs() > 1e-3));
        let n = x.len();
        let t = regression(n, &[("y", y), ("x", x.clone())]);
        let r = ols_robust(&t, &spec(&["x"], "x", HcType::Hc1)).unwrap();
        let mean = x.iter().sum::<f64>() / n as f64;
        let sxx: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
        let sigma2 = r.ssr / (n - 2) as f64;
        let se_slope = (sigma2 / sxx).sqrt();
        let se_int = (sigma2 * x.iter().map(|v| v * v).sum::<f64>() / (n as f64 * sxx)).sqrt();
        prop_assert!((r.coefficients[1].std_error - se_slope).abs() < 1e-9);
        prop_assert!((r.coefficients[0].std_error - se_int).abs() < 1e-9);
    }

    #[test]
    fn partial_r2_zero_for_null_regressor(
        xs in prop::collection::vec(-5.0f64..5.0, 3..20),
        es in prop::collection::vec(0.01f64..2.0, 20),
    ) {
        prop_assume!(xs.iter().any(|v| (v - xs[0]).abs() > 1e-3));
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (v, e) in xs.iter().zip(&es) {
            x.extend([*v, *v]);
            y.extend([2.0 + e, 2.0 - e]);
        }
        let t = regression(x.len(), &[("y", y), ("x", x)]);
        let r = ols_robust(&t, &spec(&["x"], "x", HcType::Hc1)).unwrap();
        prop_assert!(r.coefficients[1].estimate.abs() < 1e-12);
        prop_assert!(r.partial_r_squared.unwrap() < 1e-12);
    }

    #[test]
    fn spearman_monotone_invariance(
        pairs in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..30),
    ) {
        let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        prop_assume!(x.iter().any(|v| *v != x[0]) && y.iter().any(|v| *v != y[0]));
        let base = spearman(&x, &y, PValueMethod::Asymptotic).unwrap();
        let fx: Vec<f64> = x.iter().map(|v| v.powi(3) + 2.0 * v).collect();
        let fy: Vec<f64> = y.iter().map(|v| (v / 4.0).exp()).collect();
        prop_assert_eq!(midranks(&fx), midranks(&x));
        let moved = spearman(&fx, &fy, PValueMethod::Asymptotic).unwrap();
        prop_assert_eq!(base.rho, moved.rho);
    }
}

fn responses_strategy() -> impl Strategy<Value = Vec<Response>> {
    let score = prop_oneof![(1u8..=10).prop_map(Score::Value), Just(Score::DoNotKnow)];
    prop::collection::vec((0usize..12, 0usize..8, score), 1..120).prop_map(|rows| {
        let mut seen = BTreeSet::new();
        rows.into_iter()
            .filter_map(|(p, i, s)| {
                let item = match i {
                    0 => CONTROL_ATTENTION.to_string(),
                    1 => CONTROL_ATHLETE.to_string(),
                    k => format!("o{k:02}"),
                };
                let participant = format!("p{p:02}");
                seen.insert((participant.clone(), item.clone()))
                    .then_some(Response {
                        participant,
                        item,
                        score: s,
                    })
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn filtering_is_idempotent(rows in responses_strategy()) {
        let known: BTreeSet<String> = (2..8).map(|k| format!("o{k:02}")).collect();
        let set = ResponseSet::new(rows).unwrap();
        let (once, _) = filter_responses(&set, &known).unwrap();
        let (twice, report) = filter_responses(&once, &known).unwrap();
        prop_assert_eq!(&once, &twice);
        prop_assert_eq!(report.discarded, 0);
    }

    #[test]
    fn aggregation_ignores_row_order(rows in responses_strategy(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let rows: Vec<Response> = rows.into_iter().filter(|r| r.item.starts_with('o')).collect();
        let afi = table(2020, &[0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]);
        let q = make_quantiles(&afi, 10).unwrap();
        let set = ResponseSet::new(rows.clone()).unwrap();
        let base = aggregate_and_validate(&set, &afi, &q, Default::default());
        let mut shuffled = rows;
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let again = aggregate_and_validate(&ResponseSet::new(shuffled).unwrap(), &afi, &q, Default::default());
        match (base, again) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a.items, b.items);
                prop_assert_eq!(a.occupation_rho, b.occupation_rho);
            }
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "outcome depends on row order"),
        }
    }
}
