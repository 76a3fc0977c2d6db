//! CSV datasets, JSON model configuration and result files.
//!
//! A dataset has a header with columns `x` and `y`, an optional `holdout`
//! column (`1`/`true` marks a held-out row) and any number of numeric
//! covariate columns. An empty `y` cell (or `NA`) makes the row a prediction
//! point.
//!
//! Configuration is strict JSON; unknown keys are rejected. Frequencies are
//! in radians per unit of `x`: `"period": c` is shorthand for `α = 2π/c`.
//!
//! ```json
//! {
//!   "components": [
//!     { "name": "cycle", "harmonic": 1, "psd_prior": { "h": 50, "u": 1, "p": 0.01 }, "levels": 9 }
//!   ],
//!   "periods": { "from": 6, "to": 12, "step": 0.1 },
//!   "noise": { "u": 1, "p": 0.01, "levels": 9 },
//!   "seed": 1
//! }
//! ```

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::BasisFamily;
use crate::inference::{
    ComponentSpec, Dataset, FixedEffects, ForecastTable, Frequency, LevelGrid, ModelSpec, NoiseSpec, PeriodGrid,
    PosteriorResult, Representation, CREDIBLE_LEVEL, DEFAULT_PRIOR_VARIANCE, SUMMARY_WEIGHT_FLOOR,
};
use crate::prior::{ExponentialPrior, PsdPrior};

/// Seventeen significant digits: exact round trip for `f64`.
pub fn format_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

fn parse_error(row: usize, column: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        row,
        column: column.to_string(),
        message: message.into(),
    }
}

fn is_missing(cell: &str) -> bool {
    let c = cell.trim();
    c.is_empty() || c.eq_ignore_ascii_case("na") || c.eq_ignore_ascii_case("nan")
}

fn parse_flag(cell: &str) -> Option<bool> {
    match cell.trim().to_ascii_lowercase().as_str() {
        "" | "0" | "false" | "no" => Some(false),
        "1" | "true" | "yes" => Some(true),
        _ => None,
    }
}

/// Reads a dataset; rows are numbered from 1 for the header.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(file)
}

/// [`load_dataset`] from any reader.
pub fn read_dataset(reader: impl std::io::Read) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| parse_error(1, "", e.to_string()))?
        .clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(parse_error(0, "", "empty file"));
    }
    let find = |name: &str| headers.iter().position(|h| h == name);
    let ix = find("x").ok_or_else(|| parse_error(1, "x", "missing required column"))?;
    let iy = find("y").ok_or_else(|| parse_error(1, "y", "missing required column"))?;
    let ih = find("holdout");
    let cov_cols: Vec<usize> = (0..headers.len()).filter(|&i| i != ix && i != iy && Some(i) != ih).collect();
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut holdout = Vec::new();
    let mut covs: Vec<Vec<f64>> = vec![Vec::new(); cov_cols.len()];
    for (k, record) in rdr.records().enumerate() {
        let row = k + 2;
        let record = record.map_err(|e| parse_error(row, "", e.to_string()))?;
        let cell = |i: usize| record.get(i).unwrap_or("");
        let number = |i: usize| -> Result<f64> {
            let c = cell(i);
            let v: f64 = c
                .parse()
                .map_err(|_| parse_error(row, &headers[i], format!("not a number: {c:?}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(parse_error(row, &headers[i], format!("not finite: {c:?}")))
            }
        };
        if is_missing(cell(ix)) {
            return Err(parse_error(row, "x", "missing value"));
        }
        let xv = number(ix)?;
        if xv < 0.0 {
            return Err(parse_error(row, "x", format!("negative location {xv}")));
        }
        x.push(xv);
        y.push(if is_missing(cell(iy)) { None } else { Some(number(iy)?) });
        if let Some(i) = ih {
            holdout.push(parse_flag(cell(i)).ok_or_else(|| parse_error(row, "holdout", format!("not a flag: {:?}", cell(i))))?);
        }
        for (col, &i) in covs.iter_mut().zip(&cov_cols) {
            if is_missing(cell(i)) {
                return Err(parse_error(row, &headers[i], "missing covariate value"));
            }
            col.push(number(i)?);
        }
    }
    if x.is_empty() {
        return Err(parse_error(1, "", "no data rows"));
    }
    let covariates = cov_cols.iter().map(|&i| headers[i].to_string()).zip(covs).collect();
    Dataset::new(x, y, ih.map(|_| holdout), covariates)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsdPriorConfig {
    pub h: f64,
    pub u: f64,
    pub p: f64,
}

/// Grid size (quantile nodes) or explicit values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LevelsConfig {
    Count(usize),
    Values(Vec<f64>),
}

impl Default for LevelsConfig {
    fn default() -> Self {
        LevelsConfig::Count(9)
    }
}

impl LevelsConfig {
    fn to_grid(&self) -> LevelGrid {
        match self {
            LevelsConfig::Count(n) => LevelGrid::Quantiles(*n),
            LevelsConfig::Values(v) => LevelGrid::Values(v.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RepresentationConfig {
    #[default]
    StateSpace,
    Fem,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentConfig {
    pub name: String,
    /// Fixed frequency in radians per unit of `x`.
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Fixed period, `α = 2π/period`.
    #[serde(default)]
    pub period: Option<f64>,
    /// Multiple of the grid frequency `2π/c`.
    #[serde(default)]
    pub harmonic: Option<f64>,
    pub psd_prior: PsdPriorConfig,
    #[serde(default)]
    pub levels: LevelsConfig,
    #[serde(default)]
    pub representation: RepresentationConfig,
    /// `"cubic"` or `"sb"` for FEM components.
    #[serde(default)]
    pub family: Option<String>,
    #[serde(default)]
    pub r: Option<usize>,
    #[serde(default)]
    pub domain: Option<[f64; 2]>,
    #[serde(default = "yes")]
    pub boundary: bool,
}

fn default_var() -> f64 {
    DEFAULT_PRIOR_VARIANCE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedConfig {
    #[serde(default = "yes")]
    pub intercept: bool,
    #[serde(default)]
    pub degree: usize,
    #[serde(default = "yes")]
    pub covariates: bool,
    #[serde(default = "default_var")]
    pub prior_var: f64,
}

impl Default for FixedConfig {
    fn default() -> Self {
        FixedConfig {
            intercept: true,
            degree: 0,
            covariates: true,
            prior_var: DEFAULT_PRIOR_VARIANCE,
        }
    }
}

/// Exponential prior on the noise SD, `P(σ_e > u) = p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub u: f64,
    pub p: f64,
    #[serde(default)]
    pub levels: LevelsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodRange {
    pub from: f64,
    pub to: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodValues {
    pub values: Vec<f64>,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
}

/// Candidate periods, `{from, to, step}` or `{values, weights?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PeriodsConfig {
    Range(PeriodRange),
    Values(PeriodValues),
}

/// Mirror of [`ModelSpec`] without the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub components: Vec<ComponentConfig>,
    #[serde(default)]
    pub fixed_effects: FixedConfig,
    #[serde(default = "default_var")]
    pub boundary_prior_var: f64,
    pub noise: NoiseConfig,
    #[serde(default)]
    pub periods: Option<PeriodsConfig>,
    /// Points for the `forecast` subcommand.
    #[serde(default)]
    pub horizon: Vec<f64>,
    /// Draws of the holdout excess (0 disables).
    #[serde(default)]
    pub excess_samples: usize,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

impl ModelConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_spec(&self, data: Dataset) -> Result<ModelSpec> {
        let config = |m: String| Error::Config(m);
        let mut components = Vec::with_capacity(self.components.len());
        for c in &self.components {
            let frequency = match (c.alpha, c.period, c.harmonic) {
                (Some(a), None, None) => Frequency::Alpha(a),
                (None, Some(p), None) if p > 0.0 => Frequency::Alpha(std::f64::consts::TAU / p),
                (None, None, Some(j)) => Frequency::Harmonic(j),
                _ => {
                    return Err(config(format!(
                        "component {} needs exactly one of alpha, period (positive) or harmonic",
                        c.name
                    )))
                }
            };
            let representation = match c.representation {
                RepresentationConfig::StateSpace => {
                    if c.family.is_some() || c.r.is_some() || c.domain.is_some() {
                        return Err(config(format!(
                            "component {}: family, r and domain apply to FEM components only",
                            c.name
                        )));
                    }
                    Representation::StateSpace
                }
                RepresentationConfig::Fem => Representation::Fem {
                    family: c.family.as_deref().unwrap_or("sb").parse::<BasisFamily>()?,
                    r: c.r.ok_or_else(|| config(format!("FEM component {} needs r", c.name)))?,
                    domain: c.domain.map(|[a, b]| (a, b)),
                },
            };
            let prior = PsdPrior::new(c.psd_prior.h, c.psd_prior.u, c.psd_prior.p)
                .map_err(|e| config(format!("component {}: {e}", c.name)))?;
            let mut spec = ComponentSpec::new(c.name.clone(), frequency, prior)
                .with_levels(c.levels.to_grid())
                .with_representation(representation);
            spec.boundary = c.boundary;
            components.push(spec);
        }
        let noise_prior = ExponentialPrior::from_tail(self.noise.u, self.noise.p).map_err(|e| config(format!("noise: {e}")))?;
        let mut spec = ModelSpec::new(data, components, NoiseSpec::new(noise_prior, self.noise.levels.to_grid()));
        spec.fixed = FixedEffects {
            intercept: self.fixed_effects.intercept,
            degree: self.fixed_effects.degree,
            covariates: self.fixed_effects.covariates,
            prior_var: self.fixed_effects.prior_var,
        };
        spec.boundary_prior_var = self.boundary_prior_var;
        spec.periods = match &self.periods {
            None => None,
            Some(PeriodsConfig::Range(r)) => Some(PeriodGrid::stepped(r.from, r.to, r.step)?),
            Some(PeriodsConfig::Values(v)) => Some(match &v.weights {
                None => PeriodGrid::uniform(v.values.clone())?,
                Some(w) => PeriodGrid::with_weights(v.values.clone(), w.clone())?,
            }),
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn finish(mut w: csv::Writer<BufWriter<File>>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e.to_string()))
}

/// Writes rows of already formatted cells.
pub fn write_csv(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    finish(w, path)
}

/// Files written by [`write_results`].
#[derive(Debug, Clone, PartialEq)]
pub struct OutputPaths {
    pub fit: PathBuf,
    pub hyper: PathBuf,
    pub summary: PathBuf,
}

#[derive(Serialize)]
struct PriorSummary {
    component: String,
    h: f64,
    u: f64,
    p: f64,
    rate: f64,
    levels: usize,
}

#[derive(Serialize)]
struct Summary<'a> {
    version: &'a str,
    seed: u64,
    observations: usize,
    grid_nodes: usize,
    excluded_nodes: usize,
    component_priors: Vec<PriorSummary>,
    noise_rate: f64,
    noise_levels: usize,
    period_mode: Option<f64>,
    decisions: Vec<String>,
    warnings: &'a [String],
}

fn decisions(spec: &ModelSpec) -> Vec<String> {
    let mut d = vec![
        format!(
            "intervals are {:.0}% quantiles of the exact Gaussian mixture over grid nodes",
            100.0 * CREDIBLE_LEVEL
        ),
        format!("nodes with weight below {SUMMARY_WEIGHT_FLOOR:e} are omitted from summaries"),
        "continuous scale priors are discretized on the level grids".to_string(),
    ];
    if spec.fixed.degree > 0 {
        d.push(format!(
            "trend is a degree-{} polynomial fixed effect in standardized x, not an integrated Wiener process",
            spec.fixed.degree
        ));
    }
    d
}

/// Writes `fit.csv`, `hyper.csv` and `summary.json` into `dir`.
pub fn write_results(result: &PosteriorResult, spec: &ModelSpec, seed: u64, dir: &Path) -> Result<OutputPaths> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = OutputPaths {
        fit: dir.join("fit.csv"),
        hyper: dir.join("hyper.csv"),
        summary: dir.join("summary.json"),
    };

    let mut header: Vec<String> = ["x", "y", "training", "fitted_mean", "fitted_sd", "lower", "upper"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for c in &result.components {
        header.push(format!("{}_mean", c.name));
        header.push(format!("{}_sd", c.name));
    }
    let rows = (0..result.x.len()).map(|i| {
        let mut row = vec![
            format_number(result.x[i]),
            spec.data.y()[i].map(format_number).unwrap_or_default(),
            u8::from(spec.data.is_training(i)).to_string(),
            format_number(result.fitted_mean[i]),
            format_number(result.fitted_sd[i]),
            format_number(result.lower[i]),
            format_number(result.upper[i]),
        ];
        for c in &result.components {
            row.push(format_number(c.mean[i]));
            row.push(format_number(c.sd[i]));
        }
        row
    });
    write_csv(&paths.fit, &header, rows)?;

    let mut header = vec!["node".to_string(), "period".to_string()];
    for c in &spec.components {
        header.push(format!("psd_{}", c.name));
    }
    for c in &spec.components {
        header.push(format!("sigma_{}", c.name));
    }
    header.extend(
        ["noise_sd", "log_prior", "log_marginal_likelihood", "weight", "excluded"]
            .iter()
            .map(|s| s.to_string()),
    );
    let rows = result.nodes.iter().enumerate().map(|(k, n)| {
        let mut row = vec![k.to_string(), n.period.map(format_number).unwrap_or_default()];
        row.extend(n.psd.iter().map(|&v| format_number(v)));
        row.extend(n.sigma.iter().map(|&v| format_number(v)));
        row.push(format_number(n.noise_sd));
        row.push(format_number(n.log_prior));
        row.push(format_number(n.log_marginal_likelihood));
        row.push(format_number(n.weight));
        row.push(u8::from(n.excluded).to_string());
        row
    });
    write_csv(&paths.hyper, &header, rows)?;

    let summary = Summary {
        version: env!("CARGO_PKG_VERSION"),
        seed,
        observations: spec.data.training_indices().len(),
        grid_nodes: result.nodes.len(),
        excluded_nodes: result.nodes.iter().filter(|n| n.excluded).count(),
        component_priors: spec
            .components
            .iter()
            .map(|c| PriorSummary {
                component: c.name.clone(),
                h: c.prior.h(),
                u: c.prior.u(),
                p: c.prior.p(),
                rate: c.prior.rate(),
                levels: match &c.levels {
                    LevelGrid::Quantiles(n) => *n,
                    LevelGrid::Values(v) => v.len(),
                },
            })
            .collect(),
        noise_rate: spec.noise.prior.rate(),
        noise_levels: match &spec.noise.levels {
            LevelGrid::Quantiles(n) => *n,
            LevelGrid::Values(v) => v.len(),
        },
        period_mode: result.period_mode(),
        decisions: decisions(spec),
        warnings: &result.warnings,
    };
    let mut w = create(&paths.summary)?;
    serde_json::to_writer_pretty(&mut w, &summary).map_err(|e| Error::io(&paths.summary, e.into()))?;
    w.write_all(b"\n").map_err(|e| Error::io(&paths.summary, e))?;
    w.flush().map_err(|e| Error::io(&paths.summary, e))?;
    Ok(paths)
}

/// Writes `x, mean, sd, lower, upper`.
pub fn write_forecast(table: &ForecastTable, path: &Path) -> Result<()> {
    let header: Vec<String> = ["x", "mean", "sd", "lower", "upper"].iter().map(|s| s.to_string()).collect();
    let rows = (0..table.x.len()).map(|i| {
        [table.x[i], table.mean[i], table.sd[i], table.lower[i], table.upper[i]]
            .iter()
            .map(|&v| format_number(v))
            .collect()
    });
    write_csv(path, &header, rows)
}

/// Reads a CSV written by this module into its header and numeric columns
/// (empty cells become `NaN`).
pub fn read_numeric_csv(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| parse_error(1, "", e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut cols = vec![Vec::new(); header.len()];
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| parse_error(k + 2, "", e.to_string()))?;
        for (i, cell) in rec.iter().enumerate() {
            let v = if cell.is_empty() {
                f64::NAN
            } else {
                cell.parse().map_err(|_| parse_error(k + 2, &header[i], format!("not a number: {cell:?}")))?
            };
            cols[i].push(v);
        }
    }
    Ok((header, cols))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_from_csv() {
        let d = read_dataset("x,y,temp\n3,0.3,1\n1,0.1,2\n2,,3\n".as_bytes()).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.x(), &[1.0, 2.0, 3.0]);
        assert_eq!(d.y(), &[Some(0.1), None, Some(0.3)]);
        assert_eq!(d.covariate_names(), &["temp".to_string()]);
        assert_eq!(d.covariate(0), &[2.0, 3.0, 1.0]);
        assert_eq!(d.training_indices(), vec![0, 2]);
    }

    #[test]
    fn holdout_column() {
        let d = read_dataset("x,y,holdout\n1,1,0\n2,2,1\n3,3,\n".as_bytes()).unwrap();
        assert_eq!(d.holdout(), &[false, true, false]);
        assert_eq!(d.holdout_rows(), (vec![2.0], vec![2.0]));
    }

    #[test]
    fn parse_errors_locate_the_cell() {
        match read_dataset("x,y\n1,2\n2,abc\n".as_bytes()) {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 3);
                assert_eq!(column, "y");
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(read_dataset("".as_bytes()), Err(Error::Parse { .. })));
        assert!(matches!(read_dataset("x,z\n1,2\n".as_bytes()), Err(Error::Parse { .. })));
        assert!(matches!(read_dataset("x,y\n,2\n".as_bytes()), Err(Error::Parse { .. })));
        assert!(matches!(read_dataset("x,y\n1,2,3\n".as_bytes()), Err(Error::Parse { .. })));
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let ok = r#"{"components":[{"name":"a","alpha":1.0,"psd_prior":{"h":1,"u":1,"p":0.5}}],"noise":{"u":1,"p":0.5}}"#;
        let cfg = ModelConfig::from_json(ok).unwrap();
        assert_eq!(cfg.components[0].levels, LevelsConfig::Count(9));
        let bad = ok.replace("\"alpha\"", "\"alhpa\"");
        assert!(matches!(ModelConfig::from_json(&bad), Err(Error::Config(_))));
        let bad = ok.replace("\"noise\"", "\"nosie\"");
        assert!(ModelConfig::from_json(&bad).is_err());
        let bad = ok.replace("}}", "}, \"periods\": {\"from\": 1, \"to\": 2, \"step\": 1, \"stpe\": 3}}");
        assert!(ModelConfig::from_json(&bad).is_err());
    }

    #[test]
    fn config_to_spec() {
        let text = r#"{
          "components": [
            {"name": "a", "harmonic": 1, "psd_prior": {"h": 50, "u": 1, "p": 0.01}, "levels": [0.1, 0.2]},
            {"name": "b", "period": 2, "psd_prior": {"h": 1, "u": 1, "p": 0.5}, "representation": "fem", "family": "cubic", "r": 30}
          ],
          "periods": {"from": 6, "to": 12, "step": 0.1},
          "noise": {"u": 1, "p": 0.01, "levels": 3}
        }"#;
        let cfg = ModelConfig::from_json(text).unwrap();
        let data = Dataset::observed(vec![1.0, 2.0], vec![0.0, 1.0]).unwrap();
        let spec = cfg.to_spec(data.clone()).unwrap();
        assert_eq!(spec.periods.as_ref().unwrap().values().len(), 61);
        assert_eq!(spec.components[1].frequency, Frequency::Alpha(std::f64::consts::PI));
        assert!(matches!(spec.components[1].representation, Representation::Fem { r: 30, .. }));
        let both = text.replace("\"harmonic\": 1", "\"harmonic\": 1, \"alpha\": 2");
        assert!(ModelConfig::from_json(&both).unwrap().to_spec(data.clone()).is_err());
        let no_grid = text.replace("\"periods\": {\"from\": 6, \"to\": 12, \"step\": 0.1},", "");
        assert!(ModelConfig::from_json(&no_grid).unwrap().to_spec(data).is_err());
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(format_number(v).parse::<f64>().unwrap(), v);
        }
    }
}
