//! One function per pipeline stage. Each reads its inputs from the config and
//! from upstream stage directories, and writes into `<out>/<command>/`.

mod analyze;
mod embed;
mod ingest;
mod regress;
mod report;
mod survey;

use std::path::Path;

use afindex_core::catalog::{self, DescriptorCatalog, EmploymentPanel};
use afindex_core::index::{read_afi_file, AfiTable};

use crate::config::Project;
use crate::error::Result;
use crate::meta::Stage;

pub use analyze::analyze;
pub use embed::{embed, index};
pub use ingest::{backcast, ingest};
pub use regress::regress;
pub use report::report;
pub use survey::survey;

pub fn catalog_files(year: i32) -> (String, String) {
    (
        format!("catalog_{year}.weights.csv"),
        format!("catalog_{year}.texts.csv"),
    )
}

pub fn afi_file(year: i32) -> String {
    format!("afi_{year}.csv")
}

pub fn descriptor_embedding_file(year: i32) -> String {
    format!("descriptors_{year}.jsonl")
}

pub const AMENITY_EMBEDDINGS: &str = "amenities.jsonl";

/// The catalog for `year` as written by `ingest`, or by `backcast` for the
/// backcast target.
pub fn stage_catalog(st: &mut Stage, project: &Project, year: i32) -> Result<DescriptorCatalog> {
    let from = match &project.config.backcast {
        Some(b) if b.target_year == year => "backcast",
        _ => "ingest",
    };
    let (w, t) = catalog_files(year);
    let w = st.upstream(from, &w)?;
    let t = st.upstream(from, &t)?;
    Ok(catalog::load_catalog(&w, &t, year)?)
}

pub fn stage_afi(st: &mut Stage, project: &Project, year: i32) -> Result<AfiTable> {
    let p = st.upstream("index", &afi_file(year))?;
    Ok(read_afi_file(&p, Some(project.config.index.mode))?)
}

pub fn panel(st: &mut Stage, project: &Project) -> Result<EmploymentPanel> {
    let p = project.required_path("panel", &project.config.paths.panel)?;
    load_panel(st, &p)
}

fn load_panel(st: &mut Stage, p: &Path) -> Result<EmploymentPanel> {
    let p = st.input(p)?;
    Ok(catalog::load_panel(&p)?)
}

/// Runs every stage the configuration enables, in dependency order.
pub fn all(project: &Project) -> Result<()> {
    ingest(project)?;
    if project.config.backcast.is_some() {
        backcast(project)?;
    }
    embed(project)?;
    index(project)?;
    if project.config.analysis.is_some() {
        analyze(project)?;
    }
    if !project.config.regression.is_empty() {
        regress(project)?;
    }
    if project.config.survey.is_some() {
        survey(project)?;
    }
    if project.config.analysis.is_some() {
        report(project)?;
    }
    Ok(())
}
