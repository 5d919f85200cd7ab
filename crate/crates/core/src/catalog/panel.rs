use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{check_header, open, CatalogError, Result};

/// The four age groups used throughout the analysis tables. The loader accepts
/// any band label; these are only the conventional ones.
pub const STANDARD_AGE_BANDS: [&str; 4] = ["15-24", "25-49", "50-64", "65-74"];

const PANEL_HEADER: [&str; 8] = [
    "year",
    "occupation_id",
    "age_band",
    "sex",
    "education",
    "industry",
    "count",
    "wage",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sex {
    Female,
    Male,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Education {
    #[serde(rename = "college")]
    College,
    #[serde(rename = "no-college")]
    NoCollege,
}

impl FromStr for Sex {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "female" => Ok(Self::Female),
            "male" => Ok(Self::Male),
            other => Err(format!("unknown sex `{other}`")),
        }
    }
}

impl FromStr for Education {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "college" => Ok(Self::College),
            "no-college" => Ok(Self::NoCollege),
            other => Err(format!("unknown education `{other}`")),
        }
    }
}

impl fmt::Display for Sex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Female => "female",
            Self::Male => "male",
        })
    }
}

impl fmt::Display for Education {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::College => "college",
            Self::NoCollege => "no-college",
        })
    }
}

/// One employment cell of the panel.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelCell {
    pub year: i32,
    pub occupation: String,
    pub age_band: String,
    pub sex: Sex,
    pub education: Education,
    pub industry: String,
    pub count: f64,
    pub wage: Option<f64>,
}

impl PanelCell {
    fn key(&self) -> (i32, &str, &str, Sex, Education, &str) {
        (
            self.year,
            &self.occupation,
            &self.age_band,
            self.sex,
            self.education,
            &self.industry,
        )
    }
}

/// Employment counts by year, occupation, age band, sex, education and industry.
#[derive(Debug, Clone, PartialEq)]
pub struct EmploymentPanel {
    cells: Vec<PanelCell>,
}

impl EmploymentPanel {
    /// Validates uniqueness of cell keys and non-negativity of counts and wages.
    /// Line numbers in errors count the header as line 1.
    pub fn new(cells: Vec<PanelCell>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(cells.len());
        for (idx, c) in cells.iter().enumerate() {
            let line = idx as u64 + 2;
            if !(c.count >= 0.0) || !c.count.is_finite() {
                return Err(CatalogError::NegativeValue {
                    line,
                    field: "count",
                    value: c.count,
                });
            }
            if let Some(w) = c.wage {
                if !(w >= 0.0) || !w.is_finite() {
                    return Err(CatalogError::NegativeValue {
                        line,
                        field: "wage",
                        value: w,
                    });
                }
            }
            if !seen.insert(c.key()) {
                return Err(CatalogError::DuplicatePanelKey {
                    line,
                    key: format!(
                        "({}, {}, {}, {}, {}, {})",
                        c.year, c.occupation, c.age_band, c.sex, c.education, c.industry
                    ),
                });
            }
        }
        Ok(Self { cells })
    }

    pub fn cells(&self) -> &[PanelCell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn years(&self) -> BTreeSet<i32> {
        self.cells.iter().map(|c| c.year).collect()
    }

    pub fn occupations(&self) -> BTreeSet<&str> {
        self.cells.iter().map(|c| c.occupation.as_str()).collect()
    }

    pub fn age_bands(&self) -> BTreeSet<&str> {
        self.cells.iter().map(|c| c.age_band.as_str()).collect()
    }

    pub fn industries(&self) -> BTreeSet<&str> {
        self.cells.iter().map(|c| c.industry.as_str()).collect()
    }

    pub fn total(&self, year: i32) -> f64 {
        self.cells
            .iter()
            .filter(|c| c.year == year)
            .map(|c| c.count)
            .sum()
    }
}

/// Loads the panel CSV. An empty wage field means the wage is missing.
pub fn load_panel(path: &Path) -> Result<EmploymentPanel> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(open(path)?);
    check_header(path, &mut rdr, &PANEL_HEADER)?;
    let mut cells = Vec::new();
    let mut seen = HashSet::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CatalogError::csv(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |reason: String| CatalogError::malformed(path, line, reason);
        if rec.len() != PANEL_HEADER.len() {
            return Err(bad(format!("expected 8 fields, found {}", rec.len())));
        }
        let num = |idx: usize| -> Result<f64> {
            rec[idx]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    bad(format!(
                        "{} `{}` is not a number",
                        PANEL_HEADER[idx], &rec[idx]
                    ))
                })
        };
        let year: i32 = rec[0]
            .parse()
            .map_err(|_| bad(format!("year `{}` is not an integer", &rec[0])))?;
        let count = num(6)?;
        let wage = if rec[7].is_empty() {
            None
        } else {
            Some(num(7)?)
        };
        let cell = PanelCell {
            year,
            occupation: nonempty(&rec[1]).ok_or_else(|| bad("empty occupation_id".into()))?,
            age_band: nonempty(&rec[2]).ok_or_else(|| bad("empty age_band".into()))?,
            sex: rec[3].parse().map_err(bad)?,
            education: rec[4].parse().map_err(bad)?,
            industry: nonempty(&rec[5]).ok_or_else(|| bad("empty industry".into()))?,
            count,
            wage,
        };
        if count < 0.0 {
            return Err(CatalogError::NegativeValue {
                line,
                field: "count",
                value: count,
            });
        }
        if let Some(w) = wage.filter(|w| *w < 0.0) {
            return Err(CatalogError::NegativeValue {
                line,
                field: "wage",
                value: w,
            });
        }
        let key = (
            cell.year,
            cell.occupation.clone(),
            cell.age_band.clone(),
            cell.sex,
            cell.education,
            cell.industry.clone(),
        );
        if !seen.insert(key) {
            return Err(CatalogError::DuplicatePanelKey {
                line,
                key: format!(
                    "({}, {}, {}, {}, {}, {})",
                    cell.year,
                    cell.occupation,
                    cell.age_band,
                    cell.sex,
                    cell.education,
                    cell.industry
                ),
            });
        }
        cells.push(cell);
    }
    EmploymentPanel::new(cells)
}

pub fn write_panel(panel: &EmploymentPanel, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CatalogError::csv(path, e))?;
    w.write_record(PANEL_HEADER)
        .map_err(|e| CatalogError::csv(path, e))?;
    for c in panel.cells() {
        w.write_record([
            c.year.to_string(),
            c.occupation.clone(),
            c.age_band.clone(),
            c.sex.to_string(),
            c.education.to_string(),
            c.industry.clone(),
            c.count.to_string(),
            c.wage.map(|v| v.to_string()).unwrap_or_default(),
        ])
        .map_err(|e| CatalogError::csv(path, e))?;
    }
    w.flush().map_err(|e| CatalogError::io(path, e))
}

fn nonempty(s: &str) -> Option<String> {
    (!s.is_empty()).then(|| s.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn panel_file(body: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("panel.csv");
        std::fs::File::create(&p)
            .unwrap()
            .write_all(body.as_bytes())
            .unwrap();
        (dir, p)
    }

    const HEAD: &str = "year,occupation_id,age_band,sex,education,industry,count,wage\n";

    #[test]
    fn four_rows() {
        let body = format!(
            "{HEAD}2020,a,15-24,female,college,retail,10,12.5\n2020,a,25-49,male,no-college,retail,5,\n\
             1990,b,50-64,male,college,mining,3,20\n1990,b,65-74,female,no-college,mining,0,\n"
        );
        let (_d, p) = panel_file(&body);
        let panel = load_panel(&p).unwrap();
        assert_eq!(panel.len(), 4);
        assert_eq!(panel.cells()[1].wage, None);
        assert_eq!(
            panel.years().into_iter().collect::<Vec<_>>(),
            vec![1990, 2020]
        );
        assert_eq!(panel.total(2020), 15.0);
    }

    #[test]
    fn duplicate_key_is_listed() {
        let body = format!(
            "{HEAD}2020,a,15-24,female,college,retail,10,\n2020,a,15-24,female,college,retail,4,\n"
        );
        let (_d, p) = panel_file(&body);
        let err = load_panel(&p).unwrap_err();
        assert!(matches!(
            err,
            CatalogError::DuplicatePanelKey { line: 3, .. }
        ));
        assert!(err
            .to_string()
            .contains("(2020, a, 15-24, female, college, retail)"));
    }

    #[test]
    fn negative_count_rejected() {
        let body = format!("{HEAD}2020,a,15-24,female,college,retail,-5,\n");
        let (_d, p) = panel_file(&body);
        assert!(matches!(
            load_panel(&p),
            Err(CatalogError::NegativeValue { field: "count", value, .. }) if value == -5.0
        ));
    }

    #[test]
    fn arbitrary_age_labels_and_bad_categories() {
        let body = format!("{HEAD}2020,a,18-30,female,college,retail,1,\n");
        let (_d, p) = panel_file(&body);
        assert_eq!(
            load_panel(&p)
                .unwrap()
                .age_bands()
                .into_iter()
                .collect::<Vec<_>>(),
            vec!["18-30"]
        );

        let body = format!("{HEAD}2020,a,18-30,other,college,retail,1,\n");
        let (_d, p) = panel_file(&body);
        assert!(load_panel(&p)
            .unwrap_err()
            .to_string()
            .contains("unknown sex"));
    }

    #[test]
    fn write_then_load() {
        let body = format!("{HEAD}2020,a,15-24,female,college,retail,10.25,12.5\n2020,b,25-49,male,no-college,retail,5,\n");
        let (d, p) = panel_file(&body);
        let panel = load_panel(&p).unwrap();
        let out = d.path().join("out.csv");
        write_panel(&panel, &out).unwrap();
        assert_eq!(load_panel(&out).unwrap(), panel);
    }
}
