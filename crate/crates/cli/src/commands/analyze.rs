use std::collections::BTreeMap;

use serde_json::json;

use afindex_core::analytics::{
    bucket_changes, bucket_characteristics, bucket_shares, demographic_changes, demographic_table,
    group_profile, histogram, industry_means, make_quantiles, oaxaca_decompose, quantile_profile,
    BucketShare, GroupFilter, GroupingSpec, OaxacaVariant, ProfileRow, QuantileScheme,
};
use afindex_core::AfiTable;

use super::{panel, stage_afi, stage_catalog};
use crate::config::Project;
use crate::error::Result;
use crate::meta::{num, opt, Stage};

fn profile_rows(rows: &[ProfileRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            let mut v = vec![r.descriptor_id.clone()];
            v.extend(r.means.iter().map(|m| opt(*m)));
            v.push(opt(r.spread()));
            v
        })
        .collect()
}

fn share_rows(rows: &[BucketShare]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|b| {
            vec![
                b.year.to_string(),
                b.bucket.to_string(),
                b.n_occupations.to_string(),
                num(b.employment),
                num(b.employment_share),
                opt(b.mean_afi),
            ]
        })
        .collect()
}

pub fn analyze(project: &Project) -> Result<()> {
    let cfg = project.analysis()?;
    let mut st = Stage::begin(project, "analyze")?;
    st.set_parameters(json!({
        "analysis": cfg,
        "quantile_definition": "linear",
        "weight_mode": project.config.index.mode,
    }));
    let panel = panel(&mut st, project)?;
    let (t0, t1) = (cfg.t0, cfg.t1);
    let mut afi: BTreeMap<i32, AfiTable> = BTreeMap::new();
    for y in [t0, t1, cfg.anchor_year] {
        if let std::collections::btree_map::Entry::Vacant(e) = afi.entry(y) {
            e.insert(stage_afi(&mut st, project, y)?);
        }
    }
    let anchor = &afi[&cfg.anchor_year];
    let quartiles = make_quantiles(anchor, cfg.quartiles)?;
    let deciles = make_quantiles(anchor, cfg.deciles)?;
    st.write_json(
        "quantiles.json",
        &json!({ "quartiles": quartiles, "deciles": deciles }),
    )?;

    // within/between split, every variant so they can be compared
    let mut oaxaca_rows = Vec::new();
    let mut headline = None;
    for variant in [
        OaxacaVariant::Midpoint,
        OaxacaVariant::Initial,
        OaxacaVariant::Final,
    ] {
        let d = oaxaca_decompose(&afi[&t0], &afi[&t1], &panel, t0, t1, variant)?;
        oaxaca_rows.push(vec![
            variant.to_string(),
            t0.to_string(),
            t1.to_string(),
            num(d.mean_t0),
            num(d.mean_t1),
            num(d.total),
            num(d.relative_change),
            num(d.within),
            num(d.between),
            num(d.interaction),
            num(d.within_share()),
            d.common.len().to_string(),
        ]);
        if variant == cfg.variant {
            headline = Some(d);
        }
    }
    let d = headline.expect("configured variant is one of the three");
    st.write_csv(
        "oaxaca.csv",
        &[
            "variant",
            "t0",
            "t1",
            "mean_t0",
            "mean_t1",
            "total",
            "relative_change",
            "within",
            "between",
            "interaction",
            "within_share",
            "occupations",
        ],
        oaxaca_rows,
    )?;
    st.write_csv(
        "oaxaca_excluded.csv",
        &["occupation_id", "reason"],
        d.excluded
            .iter()
            .map(|e| vec![e.occupation_id.clone(), e.reason.clone()])
            .collect(),
    )?;

    // decile and quartile shifts under anchored cut points
    for (name, scheme) in [("decile", &deciles), ("quartile", &quartiles)] {
        let b0 = bucket_shares(&afi[&t0], &panel, scheme);
        let b1 = bucket_shares(&afi[&t1], &panel, scheme);
        let mut rows = share_rows(&b0);
        rows.extend(share_rows(&b1));
        st.write_csv(
            &format!("{name}_shares.csv"),
            &[
                "year",
                "bucket",
                "occupations",
                "employment",
                "employment_share",
                "mean_afi",
            ],
            rows,
        )?;
        let changes = bucket_changes(&b0, &b1)
            .into_iter()
            .map(|c| {
                vec![
                    c.bucket.to_string(),
                    opt(c.employment_pct_change),
                    num(c.share_change_pp),
                    opt(c.afi_change),
                ]
            })
            .collect();
        st.write_csv(
            &format!("{name}_changes.csv"),
            &[
                "bucket",
                "employment_pct_change",
                "share_change_pp",
                "afi_change",
            ],
            changes,
        )?;
    }

    // descriptor profiles by quartile and by age band, anchor-year weights
    let catalog = stage_catalog(&mut st, project, cfg.anchor_year)?;
    let prof = quantile_profile(&catalog, anchor, &panel, &quartiles)?;
    let mut header: Vec<String> = vec!["descriptor_id".into()];
    header.extend((1..=quartiles.k).map(|q| format!("q{q}")));
    header.push("spread".into());
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    st.write_csv("quartile_profile.csv", &h, profile_rows(&prof))?;

    let bands: Vec<String> = panel.age_bands().into_iter().map(String::from).collect();
    let filters: Vec<GroupFilter> = bands
        .iter()
        .map(|b| GroupFilter {
            age_bands: Some([b.clone()].into()),
            ..GroupFilter::year(cfg.anchor_year)
        })
        .collect();
    let prof = group_profile(&catalog, &panel, &filters)?;
    let mut header: Vec<String> = vec!["descriptor_id".into()];
    header.extend(bands.iter().map(|b| format!("age_{b}")));
    header.push("spread".into());
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    st.write_csv("age_profile.csv", &h, profile_rows(&prof))?;

    // demographic groups
    let spec = GroupingSpec {
        dimensions: cfg.dimensions.clone(),
        age_map: cfg.age_map.clone(),
        include_totals: true,
    };
    let years: BTreeMap<i32, AfiTable> = [(t0, afi[&t0].clone()), (t1, afi[&t1].clone())].into();
    let demo = demographic_table(&years, &panel, &spec, Some(&quartiles))?;
    let dims: Vec<&str> = spec.dimensions.iter().map(|d| d.name()).collect();
    let mut header = dims.clone();
    header.extend([
        "year",
        "employment",
        "employment_share",
        "weighted_afi",
        "top_quartile_share",
        "empty",
    ]);
    let rows = demo
        .iter()
        .map(|r| {
            let mut v = r.group.clone();
            v.extend([
                r.year.to_string(),
                num(r.employment),
                num(r.employment_share),
                opt(r.weighted_afi),
                opt(r.top_share),
                r.empty.to_string(),
            ]);
            v
        })
        .collect();
    st.write_csv("demographics.csv", &header, rows)?;
    let mut header = dims.clone();
    header.extend([
        "employment_t0",
        "employment_t1",
        "employment_pct_change",
        "share_change_pp",
        "afi_change",
        "top_quartile_share_t0",
        "top_quartile_share_t1",
    ]);
    let rows = demographic_changes(&demo, t0, t1)
        .into_iter()
        .map(|c| {
            let mut v = c.group;
            v.extend([
                num(c.employment_t0),
                num(c.employment_t1),
                opt(c.employment_pct_change),
                num(c.share_change_pp),
                opt(c.afi_change),
                opt(c.top_share_t0),
                opt(c.top_share_t1),
            ]);
            v
        })
        .collect();
    st.write_csv("demographic_changes.csv", &header, rows)?;

    // distribution over occupations (unweighted)
    let all: Vec<f64> = [t0, t1]
        .iter()
        .flat_map(|y| afi[y].values().values().copied())
        .collect();
    let [lo, hi] = cfg.histogram_range.unwrap_or_else(|| {
        let lo = all.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if lo < hi {
            [lo, hi]
        } else {
            [lo - 0.5, lo + 0.5]
        }
    });
    let mut rows = Vec::new();
    for y in [t0, t1] {
        let v: Vec<f64> = afi[&y].values().values().copied().collect();
        for b in histogram(&v, lo, hi, cfg.histogram_bins)? {
            rows.push(vec![
                y.to_string(),
                num(b.lo),
                num(b.hi),
                b.count.to_string(),
                num(b.density),
            ]);
        }
    }
    st.write_csv(
        "histogram.csv",
        &["year", "lo", "hi", "count", "density"],
        rows,
    )?;

    let mut rows = Vec::new();
    for y in [t0, t1] {
        let (means, overall) = industry_means(&afi[&y], &panel)?;
        for m in means {
            rows.push(vec![
                y.to_string(),
                m.industry,
                num(m.employment),
                num(m.mean_afi),
            ]);
        }
        rows.push(vec![
            y.to_string(),
            "all".into(),
            num(panel.total(y)),
            num(overall),
        ]);
    }
    st.write_csv(
        "industry_means.csv",
        &["year", "industry", "employment", "mean_afi"],
        rows,
    )?;

    for (name, scheme) in [("quartile", &quartiles), ("decile", &deciles)] {
        st.write_csv(
            &format!("{name}_characteristics.csv"),
            &[
                "year",
                "bucket",
                "employment",
                "mean_wage",
                "graduate_share",
                "median_age",
            ],
            characteristics(&afi, [t0, t1], &panel, scheme),
        )?;
    }

    st.write_json(
        "summary.json",
        &json!({
            "t0": t0,
            "t1": t1,
            "variant": d.variant,
            "mean_afi_t0": d.mean_t0,
            "mean_afi_t1": d.mean_t1,
            "change": d.total,
            "relative_change": d.relative_change,
            "within": d.within,
            "between": d.between,
            "interaction": d.interaction,
            "within_share": d.within_share(),
            "occupations": d.common.len(),
            "excluded": d.excluded.len(),
        }),
    )?;
    st.finish()
}

fn characteristics(
    afi: &BTreeMap<i32, AfiTable>,
    years: [i32; 2],
    panel: &afindex_core::EmploymentPanel,
    scheme: &QuantileScheme,
) -> Vec<Vec<String>> {
    years
        .iter()
        .flat_map(|y| bucket_characteristics(&afi[y], panel, scheme))
        .map(|c| {
            vec![
                c.year.to_string(),
                c.bucket.to_string(),
                num(c.employment),
                opt(c.mean_wage),
                opt(c.graduate_share),
                opt(c.median_age),
            ]
        })
        .collect()
}
