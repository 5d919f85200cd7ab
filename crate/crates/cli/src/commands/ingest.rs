use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::json;

use afindex_core::catalog::{self, CatalogMeta, DescriptorCatalog};
use afindex_core::timeseries::{
    average_releases, backcast_catalog, pseudo_out_of_sample, write_backcast_report,
    DescriptorSeries,
};

use super::{catalog_files, load_panel, stage_catalog};
use crate::config::{CatalogEntry, Project};
use crate::error::{CliError, Result};
use crate::meta::{num, Stage};

#[derive(Serialize)]
struct ReleaseSummary<'a> {
    release: Option<&'a str>,
    native: bool,
    #[serde(flatten)]
    meta: &'a CatalogMeta,
}

#[derive(Serialize)]
struct CatalogSummary<'a> {
    year: i32,
    occupations: usize,
    descriptors: usize,
    releases: Vec<ReleaseSummary<'a>>,
}

pub fn ingest(project: &Project) -> Result<()> {
    let mut st = Stage::begin(project, "ingest")?;
    st.set_parameters(json!({
        "catalogs": project.config.catalog,
        "native_scaling": "min-max per descriptor over occupations",
        "missing_cells": "zero",
    }));

    let mut loaded: BTreeMap<i32, Vec<(&CatalogEntry, DescriptorCatalog)>> = BTreeMap::new();
    for e in &project.config.catalog {
        let w = st.input(&project.existing("catalog weights", &e.weights)?)?;
        let t = st.input(&project.existing("catalog texts", &e.texts)?)?;
        let c = if e.native {
            catalog::load_native_catalog(&w, &t, e.year)?
        } else {
            catalog::load_catalog(&w, &t, e.year)?
        };
        loaded.entry(e.year).or_default().push((e, c));
    }

    let mut summary = Vec::new();
    for (&year, releases) in &loaded {
        let cats: Vec<DescriptorCatalog> = releases.iter().map(|(_, c)| c.clone()).collect();
        let merged = if cats.len() == 1 {
            cats.into_iter().next().expect("one release")
        } else {
            average_releases(&cats)?
        };
        let (w, t) = catalog_files(year);
        catalog::write_catalog(&merged, &st.path(&w), &st.path(&t))?;
        st.register(&w);
        st.register(&t);
        summary.push(CatalogSummary {
            year,
            occupations: merged.n_occupations(),
            descriptors: merged.n_descriptors(),
            releases: releases
                .iter()
                .map(|(e, c)| ReleaseSummary {
                    release: e.release.as_deref(),
                    native: e.native,
                    meta: c.meta(),
                })
                .collect(),
        });
    }
    st.write_json("catalogs.json", &summary)?;

    let spec = catalog::load_amenities(
        &st.input(&project.existing("amenity spec", &project.config.paths.amenities)?)?,
    )?;
    st.write_json("amenities.json", &spec)?;

    if let Some(p) = project.optional_path("panel", &project.config.paths.panel)? {
        let panel = load_panel(&mut st, &p)?;
        let rows = panel
            .years()
            .into_iter()
            .map(|y| {
                let cells: Vec<_> = panel.cells().iter().filter(|c| c.year == y).collect();
                let occs: std::collections::BTreeSet<&str> =
                    cells.iter().map(|c| c.occupation.as_str()).collect();
                vec![
                    y.to_string(),
                    cells.len().to_string(),
                    occs.len().to_string(),
                    num(panel.total(y)),
                    cells
                        .iter()
                        .filter(|c| c.wage.is_none())
                        .count()
                        .to_string(),
                ]
            })
            .collect();
        st.write_csv(
            "panel_summary.csv",
            &[
                "year",
                "cells",
                "occupations",
                "employment",
                "missing_wages",
            ],
            rows,
        )?;
    }
    st.finish()
}

pub fn backcast(project: &Project) -> Result<()> {
    let cfg = project
        .config
        .backcast
        .as_ref()
        .ok_or_else(|| CliError::Config("no [backcast] section".into()))?;
    let mut st = Stage::begin(project, "backcast")?;
    let years = cfg
        .source_years
        .clone()
        .unwrap_or_else(|| project.catalog_years());
    st.set_parameters(json!({
        "target_year": cfg.target_year,
        "band": cfg.band,
        "source_years": years,
        "holdout": cfg.holdout,
        "clamp": "per evaluation point, band then [0, 1]",
        "extrapolation": "end cubic segment extended",
    }));

    let mut yearly = BTreeMap::new();
    for &y in &years {
        yearly.insert(y, stage_catalog(&mut st, project, y)?);
    }
    let (cat, rows) = backcast_catalog(&yearly, cfg.target_year, cfg.band)?;
    let (w, t) = catalog_files(cfg.target_year);
    catalog::write_catalog(&cat, &st.path(&w), &st.path(&t))?;
    st.register(&w);
    st.register(&t);
    st.write_with("report.csv", |buf| write_backcast_report(&rows, buf))?;

    if cfg.holdout > 0 {
        let base = yearly.values().next().expect("source years present");
        let aligned: Vec<(f64, DescriptorCatalog)> = yearly
            .iter()
            .map(|(&y, c)| {
                (
                    f64::from(y),
                    c.reordered(base.occupations())
                        .expect("checked by backcast_catalog"),
                )
            })
            .collect();
        let mut errors = Vec::with_capacity(base.n_occupations() * base.n_descriptors());
        let mut obs = Vec::with_capacity(aligned.len());
        for (i, occ) in base.occupations().iter().enumerate() {
            for (j, desc) in base.descriptors().iter().enumerate() {
                obs.clear();
                obs.extend(aligned.iter().map(|(t, c)| (*t, c.weight(i, j))));
                let s = DescriptorSeries::new(occ.clone(), desc.clone(), &obs)?;
                errors.push(pseudo_out_of_sample(&s, cfg.holdout, cfg.band)?);
            }
        }
        let mean = errors.iter().sum::<f64>() / errors.len() as f64;
        let max = errors.iter().copied().fold(0.0, f64::max);
        st.write_json(
            "validation.json",
            &json!({
                "holdout": cfg.holdout,
                "series": errors.len(),
                "mean_abs_error": mean,
                "max_series_mae": max,
            }),
        )?;
    }
    st.finish()
}
