use std::collections::BTreeSet;

use serde_json::json;

use afindex_core::survey::{
    aggregate_and_validate, design_survey, filter_responses, write_instrument_json, InstrumentText,
    ResponseSet, RhoMode,
};

use super::stage_afi;
use crate::config::{read_survey_text, read_titles, Project};
use crate::error::{CliError, Result};
use crate::meta::{num, Stage};

pub fn survey(project: &Project) -> Result<()> {
    let cfg = project.survey()?;
    let paths = &project.config.paths;
    let mut st = Stage::begin(project, "survey")?;
    st.set_parameters(json!({
        "survey": cfg,
        "controls": "attention item must score 4, athlete item at most 4; do-not-know fails",
        "p_values": "Student t approximation, n - 2 degrees of freedom",
    }));
    let afi = stage_afi(&mut st, project, cfg.year)?;
    let design = design_survey(&afi, cfg.per_decile, cfg.seed)?;
    st.write_json("design.json", &design)?;

    let mut text = InstrumentText::default();
    if let Some(p) = project.optional_path("survey text", &paths.survey_text)? {
        let t = read_survey_text(&st.input(&p)?)?;
        text.definition = t.definition;
        text.controls = t.controls;
    }
    if let Some(p) = project.optional_path("titles", &paths.titles)? {
        text.titles = read_titles(&st.input(&p)?)?;
    }
    for form in &design.forms {
        st.write_with(&format!("{}.json", form.survey_id), |buf| {
            write_instrument_json(form, &text, &mut *buf)?;
            buf.push(b'\n');
            Ok::<_, afindex_core::survey::SurveyError>(())
        })?;
    }

    let Some(p) = project.optional_path("responses", &paths.responses)? else {
        return st.finish();
    };
    let p = st.input(&p)?;
    let file = std::fs::File::open(&p).map_err(|e| CliError::io(&p, e))?;
    let responses = ResponseSet::read_csv(file).map_err(|e| CliError::data(&p, e))?;
    let known: BTreeSet<String> = afi.values().keys().cloned().collect();
    let (filtered, report) = filter_responses(&responses, &known)?;
    st.write_json("filter_report.json", &report)?;
    st.write_with("responses_filtered.csv", |buf| filtered.write_csv(buf))?;

    let v = aggregate_and_validate(&filtered, &afi, &design.scheme, cfg.aggregate)?;
    let rows = v
        .items
        .iter()
        .map(|i| {
            vec![
                i.occupation_id.clone(),
                num(i.afi),
                i.afi_decile.to_string(),
                i.ratings.to_string(),
                i.do_not_know.to_string(),
                num(i.score),
                num(i.survey_rank),
                num(i.afi_rank),
            ]
        })
        .collect();
    st.write_csv(
        "items.csv",
        &[
            "occupation_id",
            "afi",
            "afi_decile",
            "ratings",
            "do_not_know",
            "score",
            "survey_rank",
            "afi_rank",
        ],
        rows,
    )?;
    st.write_json(
        "validation.json",
        &json!({
            "rho_mode": cfg.rho_mode,
            "rho": v.rho(cfg.rho_mode),
            "occupation_rho": v.rho(RhoMode::Occupation),
            "response_rho": v.rho(RhoMode::Response),
            "aggregate": v.aggregate,
            "participants": v.participants,
            "ratings": v.ratings,
            "items": v.items.len(),
            "ratings_per_item": v.ratings_per_item,
            "response_deviations": v.response_deviations,
            "rank_deviations": v.rank_deviations,
        }),
    )?;
    st.finish()
}
