use serde_json::json;

use afindex_core::catalog::load_amenities;
use afindex_core::embedder::{
    embed_texts, read_embeddings, write_exchange, BuiltinEmbedder, EmbeddingMatrix,
    EmbeddingProvider, SubprocessProvider,
};
use afindex_core::index::{
    build_age_embedding, build_occupation_vectors, score_afi, write_afi_csv,
};

use super::{afi_file, descriptor_embedding_file, stage_catalog, AMENITY_EMBEDDINGS};
use crate::config::{Project, ProviderKind};
use crate::error::{CliError, Result};
use crate::meta::Stage;

/// Overrides the configured provider with an external command.
pub const PROVIDER_ENV: &str = "AFINDEX_PROVIDER_CMD";

fn provider(project: &Project) -> Result<Box<dyn EmbeddingProvider>> {
    let cfg = &project.config.embedding;
    let command = match std::env::var(PROVIDER_ENV) {
        Ok(c) if !c.trim().is_empty() => Some(c),
        _ if cfg.provider == ProviderKind::Command => {
            Some(cfg.command.clone().ok_or_else(|| {
                CliError::Config("[embedding] provider = \"command\" needs `command`".into())
            })?)
        }
        _ => None,
    };
    Ok(match command {
        Some(c) => Box::new(
            SubprocessProvider::from_command_line(&c)
                .ok_or_else(|| CliError::Config("empty provider command".into()))?,
        ),
        None => Box::new(BuiltinEmbedder {
            dim: cfg.dim.expect("validated"),
        }),
    })
}

fn check_dim(project: &Project, m: &EmbeddingMatrix, what: &str) -> Result<()> {
    match project.config.embedding.dim {
        Some(d) if d != m.dim() => Err(CliError::Data(format!(
            "{what}: provider returned {}-dimensional vectors, config expects {d}",
            m.dim()
        ))),
        _ => Ok(()),
    }
}

pub fn embed(project: &Project) -> Result<()> {
    let mut st = Stage::begin(project, "embed")?;
    let provider = provider(project)?;
    st.set_parameters(json!({
        "provider": provider.name(),
        "dim": project.config.embedding.dim,
        "normalization": "unit L2 per row",
    }));

    let spec = load_amenities(
        &st.input(&project.existing("amenity spec", &project.config.paths.amenities)?)?,
    )?;
    let amenities = embed_texts(&spec.texts(), provider.as_ref())?;
    check_dim(project, &amenities, "amenities")?;
    st.write_with(AMENITY_EMBEDDINGS, |buf| write_exchange(&amenities, buf))?;

    let mut cache: Vec<(Vec<(String, String)>, EmbeddingMatrix)> = Vec::new();
    for year in project.scored_years() {
        let cat = stage_catalog(&mut st, project, year)?;
        let items: Vec<(String, String)> = cat
            .descriptors()
            .iter()
            .map(|d| (d.clone(), cat.texts()[d].clone()))
            .collect();
        let m = match cache.iter().find(|(k, _)| *k == items) {
            Some((_, m)) => m.clone(),
            None => {
                log::info!("embedding {} descriptor texts for {year}", items.len());
                let m = embed_texts(&items, provider.as_ref())?;
                check_dim(project, &m, &format!("descriptors {year}"))?;
                cache.push((items, m.clone()));
                m
            }
        };
        st.write_with(&descriptor_embedding_file(year), |buf| {
            write_exchange(&m, buf)
        })?;
    }
    st.finish()
}

pub fn index(project: &Project) -> Result<()> {
    let mut st = Stage::begin(project, "index")?;
    let mode = project.config.index.mode;
    st.set_parameters(json!({
        "mode": mode,
        "occupation_vectors": "weighted sum in ascending descriptor order, unit-normalized",
        "range_slack": afindex_core::index::RANGE_SLACK,
    }));

    let amen = read_embeddings(&st.upstream("embed", AMENITY_EMBEDDINGS)?)?;
    let spec = load_amenities(
        &st.input(&project.existing("amenity spec", &project.config.paths.amenities)?)?,
    )?;
    let target = build_age_embedding(&spec, &amen, mode)?;
    st.write_json(
        "target.json",
        &json!({
            "mode": mode,
            "provider": amen.provider(),
            "dim": amen.dim(),
            "amenities": spec.amenities().iter().map(|a| a.name.as_str()).collect::<Vec<_>>(),
            "weights": target.weights,
            "vector": target.vector,
        }),
    )?;

    for year in project.scored_years() {
        let emb = read_embeddings(&st.upstream("embed", &descriptor_embedding_file(year))?)?;
        let cat = stage_catalog(&mut st, project, year)?;
        let vectors = build_occupation_vectors(&cat, &emb)?;
        let mut afi = score_afi(&vectors, &target)?;
        afi.mode = Some(mode);
        st.write_with(&afi_file(year), |buf| write_afi_csv(&afi, buf))?;
    }
    st.finish()
}
