//! Decile-stratified survey design, response filtering on the two control
//! items, and rank validation of the index against survey scores.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{make_quantiles, AnalyticsError, QuantileScheme};
use crate::econ::{midranks, spearman, DeviationStats, EconError, PValueMethod, SpearmanResult};
use crate::index::AfiTable;

/// Item id of the attention control, which must be scored exactly
/// [`ATTENTION_REQUIRED`].
pub const CONTROL_ATTENTION: &str = "CONTROL_ATTENTION";
/// Item id of the athlete control, which must be scored at most [`ATHLETE_MAX`].
pub const CONTROL_ATHLETE: &str = "CONTROL_ATHLETE";
pub const ATTENTION_REQUIRED: u8 = 4;
pub const ATHLETE_MAX: u8 = 4;

pub fn is_control(item: &str) -> bool {
    item == CONTROL_ATTENTION || item == CONTROL_ATHLETE
}

#[derive(Debug, Error)]
pub enum SurveyError {
    #[error("decile {decile} has {have} occupations, need {need}")]
    SparseDecile {
        decile: usize,
        have: usize,
        need: usize,
    },
    #[error("per-decile count must be positive")]
    ZeroPerDecile,
    #[error(transparent)]
    Quantiles(#[from] AnalyticsError),
    #[error("line {line}: {reason}")]
    Malformed { line: u64, reason: String },
    #[error("line {line}: participant `{participant}` rated `{item}` twice")]
    DuplicateResponse {
        line: u64,
        participant: String,
        item: String,
    },
    #[error("response references unknown item `{0}`")]
    UnknownItem(String),
    #[error("no participants left after filtering")]
    NoParticipants,
    #[error("item `{0}` has no scores")]
    NoScores(String),
    #[error(transparent)]
    Stats(#[from] EconError),
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = SurveyError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyItem {
    pub occupation_id: String,
    pub decile: usize,
}

/// One survey form: an item from every decile plus both controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyInstrument {
    pub survey_id: String,
    /// Ordered by decile.
    pub items: Vec<SurveyItem>,
    pub controls: Vec<String>,
    /// Seed for per-participant row order.
    pub order_seed: u64,
}

impl SurveyInstrument {
    /// Presentation order of items and controls for one participant.
    pub fn participant_order(&self, participant: u64) -> Vec<String> {
        let mut rows: Vec<String> = self
            .items
            .iter()
            .map(|i| i.occupation_id.clone())
            .chain(self.controls.iter().cloned())
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(
            self.order_seed ^ participant.wrapping_mul(0x9e37_79b9_7f4a_7c15),
        );
        rows.shuffle(&mut rng);
        rows
    }

    /// True when the items hit pairwise distinct deciles and both controls are present.
    pub fn is_stratified(&self) -> bool {
        let deciles: BTreeSet<usize> = self.items.iter().map(|i| i.decile).collect();
        deciles.len() == self.items.len()
            && self.controls.iter().any(|c| c == CONTROL_ATTENTION)
            && self.controls.iter().any(|c| c == CONTROL_ATHLETE)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyDesign {
    pub seed: u64,
    pub per_decile: usize,
    pub scheme: QuantileScheme,
    /// Selected occupations, by decile then draw order.
    pub selected: Vec<SurveyItem>,
    pub forms: Vec<SurveyInstrument>,
}

/// Buckets the scored occupations into deciles of their own AFI, draws
/// `per_decile` from each, and deals them into `per_decile` forms holding one
/// occupation per decile.
pub fn design_survey(afi: &AfiTable, per_decile: usize, seed: u64) -> Result<SurveyDesign> {
    const DECILES: usize = 10;
    if per_decile == 0 {
        return Err(SurveyError::ZeroPerDecile);
    }
    let scheme = make_quantiles(afi, DECILES)?;
    let mut members: Vec<Vec<String>> = vec![Vec::new(); DECILES];
    for (id, &v) in afi.values() {
        members[scheme.assign(v) - 1].push(id.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut selected = Vec::with_capacity(DECILES * per_decile);
    for (d, m) in members.iter_mut().enumerate() {
        if m.len() < per_decile {
            return Err(SurveyError::SparseDecile {
                decile: d + 1,
                have: m.len(),
                need: per_decile,
            });
        }
        m.shuffle(&mut rng);
        selected.extend(m[..per_decile].iter().map(|id| SurveyItem {
            occupation_id: id.clone(),
            decile: d + 1,
        }));
    }
    let forms = (0..per_decile)
        .map(|f| {
            use rand::Rng;
            SurveyInstrument {
                survey_id: format!("form-{:02}", f + 1),
                items: (0..DECILES)
                    .map(|d| selected[d * per_decile + f].clone())
                    .collect(),
                controls: vec![CONTROL_ATTENTION.to_string(), CONTROL_ATHLETE.to_string()],
                order_seed: rng.random(),
            }
        })
        .collect();
    Ok(SurveyDesign {
        seed,
        per_decile,
        scheme,
        selected,
        forms,
    })
}

/// Text shown with an instrument. Occupation titles are optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InstrumentText {
    pub definition: String,
    pub controls: BTreeMap<String, String>,
    pub titles: BTreeMap<String, String>,
}

#[derive(Serialize)]
struct ExportRow<'a> {
    id: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    decile: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    text: Option<&'a str>,
    control: bool,
}

#[derive(Serialize)]
struct Export<'a> {
    survey_id: &'a str,
    definition: &'a str,
    scale: [u8; 2],
    allow_do_not_know: bool,
    order_seed: u64,
    rows: Vec<ExportRow<'a>>,
}

/// Pretty JSON for one form, rows in design order (items, then controls).
pub fn write_instrument_json(
    instrument: &SurveyInstrument,
    text: &InstrumentText,
    out: impl Write,
) -> Result<()> {
    let mut rows: Vec<ExportRow> = instrument
        .items
        .iter()
        .map(|i| ExportRow {
            id: &i.occupation_id,
            decile: Some(i.decile),
            text: text.titles.get(&i.occupation_id).map(String::as_str),
            control: false,
        })
        .collect();
    rows.extend(instrument.controls.iter().map(|c| ExportRow {
        id: c,
        decile: None,
        text: text.controls.get(c).map(String::as_str),
        control: true,
    }));
    let export = Export {
        survey_id: &instrument.survey_id,
        definition: &text.definition,
        scale: [1, 10],
        allow_do_not_know: true,
        order_seed: instrument.order_seed,
        rows,
    };
    serde_json::to_writer_pretty(out, &export)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Score {
    Value(u8),
    DoNotKnow,
}

impl Score {
    pub fn value(self) -> Option<u8> {
        match self {
            Self::Value(v) => Some(v),
            Self::DoNotKnow => None,
        }
    }
}

impl FromStr for Score {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("DK") {
            return Ok(Self::DoNotKnow);
        }
        match s.parse::<u8>() {
            Ok(v) if (1..=10).contains(&v) => Ok(Self::Value(v)),
            _ => Err(format!("score `{s}` is not 1..10 or DK")),
        }
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Value(v) => write!(f, "{v}"),
            Self::DoNotKnow => f.write_str("DK"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Response {
    pub participant: String,
    pub item: String,
    pub score: Score,
}

/// Survey responses, at most one per participant and item.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResponseSet {
    rows: Vec<Response>,
}

impl ResponseSet {
    pub fn new(rows: Vec<Response>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (k, r) in rows.iter().enumerate() {
            if !seen.insert((&r.participant, &r.item)) {
                return Err(SurveyError::DuplicateResponse {
                    line: k as u64 + 2,
                    participant: r.participant.clone(),
                    item: r.item.clone(),
                });
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[Response] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn participants(&self) -> BTreeSet<&str> {
        self.rows.iter().map(|r| r.participant.as_str()).collect()
    }

    /// Non-control items.
    pub fn items(&self) -> BTreeSet<&str> {
        self.rows
            .iter()
            .map(|r| r.item.as_str())
            .filter(|i| !is_control(i))
            .collect()
    }

    /// Reads `participant_id,item_id,score`.
    pub fn read_csv(input: impl Read) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let h = r.headers()?;
        if h.iter().collect::<Vec<_>>() != ["participant_id", "item_id", "score"] {
            return Err(SurveyError::Malformed {
                line: 1,
                reason: "expected header participant_id,item_id,score".into(),
            });
        }
        let mut rows = Vec::new();
        for (k, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = k as u64 + 2;
            let score = rec[2]
                .parse()
                .map_err(|reason| SurveyError::Malformed { line, reason })?;
            if rec[0].is_empty() || rec[1].is_empty() {
                return Err(SurveyError::Malformed {
                    line,
                    reason: "empty participant or item id".into(),
                });
            }
            rows.push(Response {
                participant: rec[0].to_string(),
                item: rec[1].to_string(),
                score,
            });
        }
        Self::new(rows)
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["participant_id", "item_id", "score"])?;
        for r in &self.rows {
            w.write_record([
                r.participant.as_str(),
                r.item.as_str(),
                &r.score.to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FilterReport {
    pub participants: usize,
    pub retained: usize,
    pub discarded: usize,
    /// Attention control missing, "do not know", or not scored as required.
    pub failed_attention: usize,
    /// Athlete control missing, "do not know", or scored above the maximum.
    pub failed_athlete: usize,
    pub discarded_ids: Vec<String>,
}

/// Drops every participant who fails either control. Control rows of retained
/// participants are kept, so filtering twice changes nothing. `known_items`
/// lists the occupation items that may appear; anything else is an error.
pub fn filter_responses(
    responses: &ResponseSet,
    known_items: &BTreeSet<String>,
) -> Result<(ResponseSet, FilterReport)> {
    if let Some(r) = responses
        .rows
        .iter()
        .find(|r| !is_control(&r.item) && !known_items.contains(&r.item))
    {
        return Err(SurveyError::UnknownItem(r.item.clone()));
    }
    let mut attention: BTreeMap<&str, Score> = BTreeMap::new();
    let mut athlete: BTreeMap<&str, Score> = BTreeMap::new();
    for r in &responses.rows {
        match r.item.as_str() {
            CONTROL_ATTENTION => {
                attention.insert(&r.participant, r.score);
            }
            CONTROL_ATHLETE => {
                athlete.insert(&r.participant, r.score);
            }
            _ => {}
        }
    }
    let mut report = FilterReport::default();
    let mut failed = BTreeSet::new();
    for p in responses.participants() {
        report.participants += 1;
        let att_ok = attention.get(p).and_then(|s| s.value()) == Some(ATTENTION_REQUIRED);
        let ath_ok = athlete
            .get(p)
            .and_then(|s| s.value())
            .is_some_and(|v| v <= ATHLETE_MAX);
        report.failed_attention += usize::from(!att_ok);
        report.failed_athlete += usize::from(!ath_ok);
        if !(att_ok && ath_ok) {
            failed.insert(p);
        }
    }
    report.discarded = failed.len();
    report.retained = report.participants - failed.len();
    report.discarded_ids = failed.iter().map(|s| s.to_string()).collect();
    let rows = responses
        .rows
        .iter()
        .filter(|r| !failed.contains(r.participant.as_str()))
        .cloned()
        .collect();
    Ok((ResponseSet { rows }, report))
}

/// Average number of scored (non "do not know") ratings per surveyed item.
pub fn ratings_per_item(responses: &ResponseSet) -> f64 {
    let items = responses.items();
    if items.is_empty() {
        return 0.0;
    }
    let n = responses
        .rows
        .iter()
        .filter(|r| !is_control(&r.item) && r.score.value().is_some())
        .count();
    n as f64 / items.len() as f64
}

/// Per-item summary of survey scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    #[default]
    Mean,
    Median,
}

/// Pairs over which the rank correlation is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RhoMode {
    /// Aggregated item scores against item AFI.
    #[default]
    Occupation,
    /// Every individual score against the AFI of its item.
    Response,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItemSummary {
    pub occupation_id: String,
    pub afi: f64,
    pub afi_decile: usize,
    pub ratings: usize,
    pub do_not_know: usize,
    pub score: f64,
    /// Midrank of `score` among surveyed items (1 = lowest).
    pub survey_rank: f64,
    /// Midrank of `afi` among surveyed items.
    pub afi_rank: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Validation {
    pub aggregate: Aggregate,
    pub items: Vec<ItemSummary>,
    pub occupation_rho: SpearmanResult,
    pub response_rho: SpearmanResult,
    /// `|score - AFI decile of the item|` over all scored responses.
    pub response_deviations: DeviationStats,
    /// `|survey rank - AFI rank|` over items.
    pub rank_deviations: DeviationStats,
    pub participants: usize,
    pub ratings: usize,
    pub ratings_per_item: f64,
}

impl Validation {
    pub fn rho(&self, mode: RhoMode) -> &SpearmanResult {
        match mode {
            RhoMode::Occupation => &self.occupation_rho,
            RhoMode::Response => &self.response_rho,
        }
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Compares survey scores with the index on the surveyed items. `deciles` maps
/// AFI values to the 1..10 scale of the scores.
pub fn aggregate_and_validate(
    filtered: &ResponseSet,
    afi: &AfiTable,
    deciles: &QuantileScheme,
    aggregate: Aggregate,
) -> Result<Validation> {
    let participants = filtered.participants().len();
    if participants == 0 {
        return Err(SurveyError::NoParticipants);
    }
    let mut scores: BTreeMap<&str, (Vec<f64>, usize)> = BTreeMap::new();
    for r in filtered.rows.iter().filter(|r| !is_control(&r.item)) {
        if afi.get(&r.item).is_none() {
            return Err(SurveyError::UnknownItem(r.item.clone()));
        }
        let e = scores.entry(&r.item).or_default();
        match r.score.value() {
            Some(v) => e.0.push(f64::from(v)),
            None => e.1 += 1,
        }
    }
    let mut items = Vec::with_capacity(scores.len());
    let mut pairs_score = Vec::new();
    let mut pairs_afi = Vec::new();
    let mut response_devs = Vec::new();
    for (id, (mut s, dk)) in scores {
        if s.is_empty() {
            return Err(SurveyError::NoScores(id.to_string()));
        }
        let a = afi.get(id).expect("checked above");
        let decile = deciles.assign(a);
        pairs_score.extend(&s);
        pairs_afi.extend(std::iter::repeat_n(a, s.len()));
        response_devs.extend(s.iter().map(|v| (v - decile as f64).abs()));
        let score = match aggregate {
            Aggregate::Mean => s.iter().sum::<f64>() / s.len() as f64,
            Aggregate::Median => median(&mut s),
        };
        items.push(ItemSummary {
            occupation_id: id.to_string(),
            afi: a,
            afi_decile: decile,
            ratings: s.len(),
            do_not_know: dk,
            score,
            survey_rank: 0.0,
            afi_rank: 0.0,
        });
    }
    let sv: Vec<f64> = items.iter().map(|i| i.score).collect();
    let av: Vec<f64> = items.iter().map(|i| i.afi).collect();
    for (it, (sr, ar)) in items
        .iter_mut()
        .zip(midranks(&sv).into_iter().zip(midranks(&av)))
    {
        it.survey_rank = sr;
        it.afi_rank = ar;
    }
    let occupation_rho = spearman(&sv, &av, PValueMethod::Asymptotic)?;
    let response_rho = spearman(&pairs_score, &pairs_afi, PValueMethod::Asymptotic)?;
    let rank_devs: Vec<f64> = items.iter().map(|i| i.survey_rank - i.afi_rank).collect();
    let ratings = pairs_score.len();
    Ok(Validation {
        aggregate,
        ratings_per_item: ratings as f64 / items.len() as f64,
        items,
        occupation_rho,
        response_rho,
        response_deviations: DeviationStats::from_deviations(&response_devs)?,
        rank_deviations: DeviationStats::from_deviations(&rank_devs)?,
        participants,
        ratings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn afi(n: usize) -> AfiTable {
        let v = (0..n)
            .map(|i| (format!("o{i:03}"), -0.9 + 1.8 * i as f64 / (n - 1) as f64))
            .collect();
        AfiTable::new(2020, None, v).unwrap()
    }

    fn resp(p: &str, item: &str, s: &str) -> Response {
        Response {
            participant: p.into(),
            item: item.into(),
            score: s.parse().unwrap(),
        }
    }

    #[test]
    fn design_with_three_per_decile_takes_everything() {
        let t = afi(30);
        let d = design_survey(&t, 3, 7).unwrap();
        let chosen: BTreeSet<&str> = d
            .selected
            .iter()
            .map(|s| s.occupation_id.as_str())
            .collect();
        assert_eq!(chosen.len(), 30);
        assert_eq!(d.forms.len(), 3);
        assert!(d
            .forms
            .iter()
            .all(|f| f.is_stratified() && f.items.len() == 10));
        assert_eq!(d, design_survey(&t, 3, 7).unwrap());
        assert_ne!(d.selected, design_survey(&t, 3, 8).unwrap().selected);
    }

    #[test]
    fn design_on_larger_pool_respects_deciles() {
        let t = afi(300);
        let d = design_survey(&t, 3, 1).unwrap();
        assert_eq!(d.selected.len(), 30);
        for s in &d.selected {
            assert_eq!(d.scheme.assign(t.get(&s.occupation_id).unwrap()), s.decile);
        }
        assert!(matches!(
            design_survey(&afi(20), 3, 1),
            Err(SurveyError::SparseDecile { .. })
        ));
    }

    #[test]
    fn participant_order_is_a_permutation() {
        let d = design_survey(&afi(30), 3, 7).unwrap();
        let f = &d.forms[0];
        let mut a = f.participant_order(1);
        assert_eq!(a, f.participant_order(1));
        a.sort();
        let mut all: Vec<String> = f.items.iter().map(|i| i.occupation_id.clone()).collect();
        all.extend(f.controls.iter().cloned());
        all.sort();
        assert_eq!(a, all);
    }

    #[test]
    fn control_rules() {
        let known: BTreeSet<String> = ["o1".to_string()].into();
        let rows = vec![
            resp("keep", CONTROL_ATTENTION, "4"),
            resp("keep", CONTROL_ATHLETE, "2"),
            resp("keep", "o1", "5"),
            resp("att5", CONTROL_ATTENTION, "5"),
            resp("att5", CONTROL_ATHLETE, "1"),
            resp("ath7", CONTROL_ATTENTION, "4"),
            resp("ath7", CONTROL_ATHLETE, "7"),
            resp("dk", CONTROL_ATTENTION, "DK"),
            resp("dk", CONTROL_ATHLETE, "3"),
            resp("missing", CONTROL_ATTENTION, "4"),
            resp("edge", CONTROL_ATTENTION, "4"),
            resp("edge", CONTROL_ATHLETE, "4"),
        ];
        let set = ResponseSet::new(rows).unwrap();
        let (kept, report) = filter_responses(&set, &known).unwrap();
        assert_eq!(kept.participants(), ["edge", "keep"].into());
        assert_eq!(report.discarded_ids, ["ath7", "att5", "dk", "missing"]);
        assert_eq!((report.failed_attention, report.failed_athlete), (2, 2));
        let (again, _) = filter_responses(&kept, &known).unwrap();
        assert_eq!(again, kept);

        let bad = ResponseSet::new(vec![resp("x", "zzz", "3")]).unwrap();
        assert!(
            matches!(filter_responses(&bad, &known), Err(SurveyError::UnknownItem(i)) if i == "zzz")
        );
    }

    #[test]
    fn score_parsing() {
        assert_eq!("dk".parse::<Score>(), Ok(Score::DoNotKnow));
        assert_eq!(" 10".parse::<Score>(), Ok(Score::Value(10)));
        assert!("0".parse::<Score>().is_err());
        assert!("11".parse::<Score>().is_err());
        assert!("4.5".parse::<Score>().is_err());
    }

    #[test]
    fn csv_roundtrip_and_duplicates() {
        let text = "participant_id,item_id,score\np1,o1,3\np1,o2,DK\n";
        let set = ResponseSet::read_csv(text.as_bytes()).unwrap();
        let mut out = Vec::new();
        set.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);
        let dup = "participant_id,item_id,score\np1,o1,3\np1,o1,4\n";
        assert!(matches!(
            ResponseSet::read_csv(dup.as_bytes()),
            Err(SurveyError::DuplicateResponse { line: 3, .. })
        ));
        assert!(matches!(
            ResponseSet::read_csv("participant_id,item_id,score\np1,o1,12\n".as_bytes()),
            Err(SurveyError::Malformed { line: 2, .. })
        ));
    }

    #[test]
    fn means_and_midranks() {
        let t = AfiTable::new(
            2020,
            None,
            [("a", 0.1), ("b", 0.2), ("c", 0.3), ("d", 0.4)]
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect(),
        )
        .unwrap();
        let q = make_quantiles(&t, 2).unwrap();
        let rows = vec![
            resp("p", "a", "2"),
            resp("q", "a", "4"),
            resp("p", "b", "3"),
            resp("q", "b", "DK"),
            resp("p", "c", "3"),
            resp("p", "d", "9"),
        ];
        let v = aggregate_and_validate(&ResponseSet::new(rows).unwrap(), &t, &q, Aggregate::Mean)
            .unwrap();
        let scores: Vec<f64> = v.items.iter().map(|i| i.score).collect();
        assert_eq!(scores, [3.0, 3.0, 3.0, 9.0]);
        let ranks: Vec<f64> = v.items.iter().map(|i| i.survey_rank).collect();
        assert_eq!(ranks, [2.0, 2.0, 2.0, 4.0]);
        assert_eq!(v.items[1].do_not_know, 1);
        assert_eq!(v.ratings, 5);
        assert!((v.ratings_per_item - 1.25).abs() < 1e-15);
    }

    #[test]
    fn perfect_agreement_gives_rho_one() {
        let t = afi(10);
        let q = make_quantiles(&t, 10).unwrap();
        let mut rows = Vec::new();
        for p in 0..3 {
            for (k, id) in t.values().keys().enumerate() {
                rows.push(resp(&format!("p{p}"), id, &(k + 1).to_string()));
            }
        }
        let v = aggregate_and_validate(&ResponseSet::new(rows).unwrap(), &t, &q, Aggregate::Median)
            .unwrap();
        assert_eq!(v.occupation_rho.rho, 1.0);
        assert_eq!(v.response_rho.rho, 1.0);
        assert_eq!(v.response_deviations.mean, 0.0);
    }
}
