use std::fmt::Write as _;

use serde_json::{json, Value};

use afindex_core::index::top_bottom;

use super::stage_afi;
use crate::config::{read_titles, Project};
use crate::error::{CliError, Result};
use crate::meta::{num, Stage};

fn read_json(st: &mut Stage, command: &'static str, name: &str) -> Result<Value> {
    let p = st.upstream(command, name)?;
    let bytes = std::fs::read(&p).map_err(|e| CliError::io(&p, e))?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::data(&p, e))
}

fn copy(st: &mut Stage, command: &'static str, name: &str, as_name: &str) -> Result<()> {
    let p = st.upstream(command, name)?;
    let bytes = std::fs::read(&p).map_err(|e| CliError::io(&p, e))?;
    st.write_bytes(as_name, &bytes)
}

fn fmt(v: &Value) -> String {
    match v.as_f64() {
        Some(x) => format!("{x:.4}"),
        None => "n/a".into(),
    }
}

/// Collects the headline tables of the other stages into one directory.
pub fn report(project: &Project) -> Result<()> {
    let cfg = project.analysis()?;
    let mut st = Stage::begin(project, "report")?;
    st.set_parameters(json!({ "top_k": cfg.top_k, "year": cfg.t1 }));

    let titles = match project.optional_path("titles", &project.config.paths.titles)? {
        Some(p) => read_titles(&st.input(&p)?)?,
        None => Default::default(),
    };
    let afi = stage_afi(&mut st, project, cfg.t1)?;
    let (top, bottom) = top_bottom(&afi, cfg.top_k);
    let mut rows = Vec::new();
    for (side, list) in [("top", &top), ("bottom", &bottom)] {
        for (rank, (id, v)) in list.iter().enumerate() {
            rows.push(vec![
                side.to_string(),
                (rank + 1).to_string(),
                id.clone(),
                titles.get(id).cloned().unwrap_or_default(),
                num(*v),
            ]);
        }
    }
    st.write_csv(
        "top_bottom.csv",
        &["side", "rank", "occupation_id", "title", "afi"],
        rows,
    )?;

    let analysis = read_json(&mut st, "analyze", "summary.json")?;
    copy(&mut st, "analyze", "oaxaca.csv", "decomposition.csv")?;
    copy(
        &mut st,
        "analyze",
        "decile_changes.csv",
        "decile_shifts.csv",
    )?;
    copy(
        &mut st,
        "analyze",
        "quartile_characteristics.csv",
        "quartile_characteristics.csv",
    )?;
    copy(
        &mut st,
        "analyze",
        "demographic_changes.csv",
        "demographic_changes.csv",
    )?;
    copy(&mut st, "analyze", "histogram.csv", "histogram.csv")?;
    top_quartile_shares(&mut st)?;

    let regression = if project.config.regression.is_empty() {
        None
    } else {
        copy(&mut st, "regress", "table.txt", "regression_table.txt")?;
        let p = st.upstream("regress", "table.txt")?;
        Some(std::fs::read_to_string(&p).map_err(|e| CliError::io(&p, e))?)
    };
    let survey = match (&project.config.survey, &project.config.paths.responses) {
        (Some(_), Some(_)) => Some(read_json(&mut st, "survey", "validation.json")?),
        _ => None,
    };

    let summary = json!({
        "analysis": analysis,
        "survey": survey.as_ref().map(|s| json!({
            "rho_mode": s["rho_mode"],
            "rho": s["rho"]["rho"],
            "p": s["rho"]["p"],
            "participants": s["participants"],
            "ratings": s["ratings"],
            "ratings_per_item": s["ratings_per_item"],
        })),
    });
    st.write_json("summary.json", &summary)?;

    let mut md = String::new();
    let a = &analysis;
    let _ = writeln!(md, "# Age-friendliness summary\n");
    let _ = writeln!(
        md,
        "Mean AFI {} in {}, {} in {}: change {} ({} relative), of which {} within occupations and {} from employment shifts ({} decomposition, {} occupations).\n",
        fmt(&a["mean_afi_t0"]),
        a["t0"],
        fmt(&a["mean_afi_t1"]),
        a["t1"],
        fmt(&a["change"]),
        fmt(&a["relative_change"]),
        fmt(&a["within"]),
        fmt(&a["between"]),
        a["variant"].as_str().unwrap_or_default(),
        a["occupations"],
    );
    let _ = writeln!(md, "## Top {} occupations, {}\n", cfg.top_k, cfg.t1);
    for (id, v) in &top {
        let _ = writeln!(
            md,
            "- {id} {} ({v:.4})",
            titles.get(id).map(String::as_str).unwrap_or("")
        );
    }
    let _ = writeln!(md, "\n## Bottom {} occupations, {}\n", cfg.top_k, cfg.t1);
    for (id, v) in &bottom {
        let _ = writeln!(
            md,
            "- {id} {} ({v:.4})",
            titles.get(id).map(String::as_str).unwrap_or("")
        );
    }
    if let Some(t) = &regression {
        let _ = writeln!(md, "\n## Regressions\n\n```\n{}```", t);
    }
    if let Some(s) = &survey {
        let _ = writeln!(
            md,
            "\n## Survey\n\nSpearman rho {} (p = {}) over {} participants, {} ratings, {:.1} per item.",
            fmt(&s["rho"]["rho"]),
            fmt(&s["rho"]["p"]),
            s["participants"],
            s["ratings"],
            s["ratings_per_item"].as_f64().unwrap_or(f64::NAN),
        );
    }
    st.write_bytes("summary.md", md.as_bytes())?;
    st.finish()
}

/// Share of each demographic group employed in top-quartile occupations.
fn top_quartile_shares(st: &mut Stage) -> Result<()> {
    let p = st.upstream("analyze", "demographics.csv")?;
    let mut rdr = csv::Reader::from_path(&p).map_err(|e| CliError::data(&p, e))?;
    let h = rdr.headers().map_err(|e| CliError::data(&p, e))?.clone();
    let col = |name: &str| h.iter().position(|c| c == name);
    let (Some(year), Some(share)) = (col("year"), col("top_quartile_share")) else {
        return Err(CliError::Data(format!(
            "{}: unexpected header",
            p.display()
        )));
    };
    let mut header: Vec<&str> = h.iter().take(year).collect();
    header.extend(["year", "top_quartile_share"]);
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::data(&p, e))?;
        let mut r: Vec<String> = rec.iter().take(year).map(String::from).collect();
        r.push(rec[year].to_string());
        r.push(rec[share].to_string());
        rows.push(r);
    }
    st.write_csv("top_quartile_shares.csv", &header, rows)
}
