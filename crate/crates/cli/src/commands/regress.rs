use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use serde_json::json;

use afindex_core::analytics::occupation_table;
use afindex_core::econ::{
    ols_robust, render_table, write_regression_csv, DataTable, RegressionSpec,
};

use super::{panel, stage_afi};
use crate::config::Project;
use crate::error::Result;
use crate::meta::Stage;

pub fn regress(project: &Project) -> Result<()> {
    let cfg = &project.config;
    let older = cfg
        .analysis
        .as_ref()
        .map(|a| a.older_bands.clone())
        .unwrap_or_else(crate::config::default_older);
    let mut st = Stage::begin(project, "regress")?;
    st.set_parameters(json!({
        "models": cfg.regression,
        "labels": cfg.regression_labels,
        "older_bands": older,
        "p_values": "two-sided Student t, n - k degrees of freedom",
    }));
    let panel = panel(&mut st, project)?;

    let mut tables: BTreeMap<i32, DataTable> = BTreeMap::new();
    let mut models = Vec::with_capacity(cfg.regression.len());
    for m in &cfg.regression {
        if let Entry::Vacant(e) = tables.entry(m.year) {
            let afi = stage_afi(&mut st, project, m.year)?;
            let t = occupation_table(&afi, &panel, &older);
            st.write_with(&format!("occupations_{}.csv", m.year), |buf| {
                t.write_csv(buf, "occupation_id")
            })?;
            e.insert(t);
        }
        let spec = RegressionSpec {
            dependent: m.dependent.clone(),
            regressors: m.regressors.clone(),
            intercept: m.intercept,
            focus: m.focus.clone(),
            hc: m.hc,
        };
        let fit = ols_robust(&tables[&m.year], &spec)?;
        if fit.dropped > 0 {
            log::warn!(
                "model {}: {} rows with missing values dropped",
                m.label,
                fit.dropped
            );
        }
        models.push((m.label.clone(), fit));
    }
    st.write_with("coefficients.csv", |buf| write_regression_csv(&models, buf))?;
    st.write_bytes(
        "table.txt",
        render_table(&models, &cfg.regression_labels, 3).as_bytes(),
    )?;
    let json: Vec<_> = models
        .iter()
        .zip(&cfg.regression)
        .map(|((label, fit), m)| json!({ "label": label, "year": m.year, "result": fit }))
        .collect();
    st.write_json("models.json", &json)?;
    st.finish()
}
