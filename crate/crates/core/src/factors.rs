//! Macro factor extraction: stationarity transforms, quarterly-to-annual
//! averaging and correlation-matrix principal components.

use std::collections::BTreeMap;
use std::io::Read;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};

/// Stationarity transformation code (1 to 7).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct TCode(u8);

impl TCode {
    pub fn new(code: u8) -> Result<Self> {
        if (1..=7).contains(&code) {
            Ok(Self(code))
        } else {
            Err(Error::Parameter(format!("transformation code must be 1..=7, got {code}")))
        }
    }

    pub fn code(&self) -> u8 {
        self.0
    }

    /// Observations lost at the start of the series.
    pub fn lost_obs(&self) -> usize {
        match self.0 {
            1 | 4 => 0,
            2 | 5 => 1,
            _ => 2,
        }
    }

    fn needs_log(&self) -> bool {
        matches!(self.0, 4..=6)
    }
}

fn diff(v: &[f64]) -> Vec<f64> {
    v.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Applies a transformation code; the output is shorter by
/// [`TCode::lost_obs`].
///
/// | code | transform |
/// |------|-----------|
/// | 1 | `x` |
/// | 2 | `Δx` |
/// | 3 | `Δ²x` |
/// | 4 | `log x` |
/// | 5 | `Δ log x` |
/// | 6 | `Δ² log x` |
/// | 7 | `Δ(x_t / x_{t-1} - 1)` |
pub fn apply_tcode(series: &[f64], code: TCode) -> Result<Vec<f64>> {
    if series.len() <= code.lost_obs() {
        return Err(Error::Domain(format!(
            "series of length {} too short for transformation code {}",
            series.len(),
            code.0
        )));
    }
    if code.needs_log() {
        if let Some(i) = series.iter().position(|v| !(*v > 0.0)) {
            return Err(Error::Domain(format!(
                "log transformation needs positive values; index {i} holds {}",
                series[i]
            )));
        }
    }
    let out = match code.0 {
        1 => series.to_vec(),
        2 => diff(series),
        3 => diff(&diff(series)),
        4 => series.iter().map(|v| v.ln()).collect(),
        5 => diff(&series.iter().map(|v| v.ln()).collect::<Vec<_>>()),
        6 => diff(&diff(&series.iter().map(|v| v.ln()).collect::<Vec<_>>())),
        7 => {
            if let Some(i) = series[..series.len() - 1].iter().position(|v| *v == 0.0) {
                return Err(Error::Domain(format!("growth rate undefined: index {i} is zero")));
            }
            diff(&series.windows(2).map(|w| w[1] / w[0] - 1.0).collect::<Vec<_>>())
        }
        _ => unreachable!("validated in TCode::new"),
    };
    Ok(out)
}

/// Period label of a quarterly observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Quarter {
    pub year: i64,
    pub quarter: u8,
}

impl Quarter {
    /// Parses `1993Q1`, `1993-Q1`, `1993:1`, ISO dates `1993-01-01` or
    /// `M/D/YYYY` (quarter from the month).
    pub fn parse(label: &str) -> Result<Self> {
        let s = label.trim();
        let bad = || Error::InvalidPanel(format!("cannot parse quarterly label `{label}`"));
        let from_month = |year: i64, month: u32| -> Result<Self> {
            if (1..=12).contains(&month) {
                Ok(Quarter { year, quarter: ((month - 1) / 3 + 1) as u8 })
            } else {
                Err(bad())
            }
        };
        let upper = s.to_ascii_uppercase();
        if let Some((y, q)) = upper.split_once('Q') {
            let year = y.trim_end_matches(['-', ' ']).parse::<i64>().map_err(|_| bad())?;
            let quarter = q.parse::<u8>().map_err(|_| bad())?;
            return if (1..=4).contains(&quarter) { Ok(Quarter { year, quarter }) } else { Err(bad()) };
        }
        if let Some((y, q)) = s.split_once(':') {
            let year = y.parse::<i64>().map_err(|_| bad())?;
            let quarter = q.parse::<u8>().map_err(|_| bad())?;
            return if (1..=4).contains(&quarter) { Ok(Quarter { year, quarter }) } else { Err(bad()) };
        }
        let parts: Vec<&str> = s.split(['-', '/']).collect();
        if parts.len() == 3 {
            if s.contains('/') {
                let month = parts[0].parse::<u32>().map_err(|_| bad())?;
                let year = parts[2].parse::<i64>().map_err(|_| bad())?;
                return from_month(year, month);
            }
            let year = parts[0].parse::<i64>().map_err(|_| bad())?;
            let month = parts[1].parse::<u32>().map_err(|_| bad())?;
            return from_month(year, month);
        }
        Err(bad())
    }
}

/// Averages the four quarters of every year. Each year present must have
/// exactly four observations, one per quarter.
pub fn annualize_quarterly(labels: &[Quarter], values: &[f64]) -> Result<(Vec<i64>, Vec<f64>)> {
    if labels.len() != values.len() {
        return Err(Error::Parameter(format!(
            "{} labels for {} values",
            labels.len(),
            values.len()
        )));
    }
    let mut by_year: BTreeMap<i64, [Option<f64>; 4]> = BTreeMap::new();
    for (lab, &v) in labels.iter().zip(values) {
        let slot = &mut by_year.entry(lab.year).or_default()[(lab.quarter - 1) as usize];
        if slot.is_some() {
            return Err(Error::InvalidPanel(format!("duplicate quarter {}Q{}", lab.year, lab.quarter)));
        }
        *slot = Some(v);
    }
    let mut years = Vec::with_capacity(by_year.len());
    let mut out = Vec::with_capacity(by_year.len());
    for (year, qs) in by_year {
        let vals: Vec<f64> = qs.iter().flatten().copied().collect();
        if vals.len() != 4 {
            return Err(Error::InvalidPanel(format!("year {year} has {} of 4 quarters", vals.len())));
        }
        years.push(year);
        out.push(vals.iter().sum::<f64>() / 4.0);
    }
    Ok((years, out))
}

/// Principal components of standardized data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorSet {
    pub names: Vec<String>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    /// `p x k` row-major, unit-norm columns.
    pub loadings: Vec<f64>,
    /// `T x k` row-major.
    pub scores: Vec<f64>,
    /// Share of total variance per component, non-increasing.
    pub explained: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub n_obs: usize,
    pub n_series: usize,
    pub k: usize,
}

impl FactorSet {
    pub fn loading(&self, series: usize, comp: usize) -> f64 {
        self.loadings[series * self.k + comp]
    }

    pub fn score(&self, t: usize, comp: usize) -> f64 {
        self.scores[t * self.k + comp]
    }
}

/// Extracts `k` principal components from a `T x p` row-major matrix.
///
/// Columns are z-scored (sample standard deviation), the correlation matrix is
/// eigendecomposed, and each loading vector is signed so its largest-magnitude
/// entry is positive.
pub fn extract_pcs(data: &[f64], n_obs: usize, names: &[String], k: usize) -> Result<FactorSet> {
    let p = names.len();
    if data.len() != n_obs * p {
        return Err(Error::Parameter(format!("data has {} cells, expected {}", data.len(), n_obs * p)));
    }
    if n_obs < 2 {
        return Err(Error::Parameter("principal components need at least two observations".into()));
    }
    if k < 1 || k > p {
        return Err(Error::Parameter(format!("number of components must lie in 1..={p}, got {k}")));
    }
    if let Some(i) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidPanel(format!("non-finite value in series `{}`", names[i % p])));
    }
    let mut means = vec![0.0; p];
    let mut sds = vec![0.0; p];
    for j in 0..p {
        let col: Vec<f64> = (0..n_obs).map(|t| data[t * p + j]).collect();
        let m = col.iter().sum::<f64>() / n_obs as f64;
        let ss: f64 = col.iter().map(|v| (v - m).powi(2)).sum();
        let sd = (ss / (n_obs - 1) as f64).sqrt();
        if !(sd > 0.0) || sd <= 1e-14 * m.abs() {
            return Err(Error::ZeroVariance(names[j].clone()));
        }
        means[j] = m;
        sds[j] = sd;
    }
    let z = DMatrix::from_fn(n_obs, p, |t, j| (data[t * p + j] - means[j]) / sds[j]);
    let corr = (z.transpose() * &z) / (n_obs - 1) as f64;
    let eig = SymmetricEigen::new(corr);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let trace: f64 = eig.eigenvalues.iter().map(|v| v.max(0.0)).sum();

    let mut loadings = vec![0.0; p * k];
    let mut eigenvalues = Vec::with_capacity(k);
    let mut explained = Vec::with_capacity(k);
    for (c, &idx) in order.iter().take(k).enumerate() {
        let v = eig.eigenvectors.column(idx);
        let norm = v.norm();
        let mut best = 0;
        for j in 1..p {
            if v[j].abs() > v[best].abs() + 1e-12 {
                best = j;
            }
        }
        let sign = if v[best] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..p {
            loadings[j * k + c] = sign * v[j] / norm;
        }
        let lambda = eig.eigenvalues[idx].max(0.0);
        eigenvalues.push(lambda);
        explained.push(if trace > 0.0 { lambda / trace } else { 0.0 });
    }
    let load = DMatrix::from_row_slice(p, k, &loadings);
    let sc = &z * &load;
    let scores = (0..n_obs * k).map(|i| sc[(i / k, i % k)]).collect();
    Ok(FactorSet {
        names: names.to_vec(),
        means,
        sds,
        loadings,
        scores,
        explained,
        eigenvalues,
        n_obs,
        n_series: p,
        k,
    })
}

/// Wide table: one label column followed by one numeric column per series.
#[derive(Debug, Clone, PartialEq)]
pub struct WideTable {
    pub label_header: String,
    pub labels: Vec<String>,
    pub names: Vec<String>,
    /// Column-major: `columns[j][t]`, NaN for missing.
    pub columns: Vec<Vec<f64>>,
}

impl WideTable {
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(false).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() < 2 {
            return Err(Error::InvalidPanel("wide table needs a label column and at least one series".into()));
        }
        let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
        let mut labels = Vec::new();
        let mut columns = vec![Vec::new(); names.len()];
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            labels.push(rec[0].to_string());
            for (j, col) in columns.iter_mut().enumerate() {
                let cell = &rec[j + 1];
                let v = if cell.is_empty() || cell.eq_ignore_ascii_case("na") || cell.eq_ignore_ascii_case("nan") {
                    f64::NAN
                } else {
                    cell.parse::<f64>().map_err(|_| {
                        Error::InvalidPanel(format!(
                            "line {}: series `{}` value `{cell}` is not numeric",
                            line + 2,
                            names[j]
                        ))
                    })?
                };
                col.push(v);
            }
        }
        Ok(Self {
            label_header: headers[0].to_string(),
            labels,
            names,
            columns,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    /// Row-major `T x p` matrix of all columns.
    pub fn row_major(&self) -> Vec<f64> {
        (0..self.n_rows())
            .flat_map(|t| self.columns.iter().map(move |c| c[t]))
            .collect()
    }
}

/// Reads a `series,tcode` mapping.
pub fn read_tcodes<R: Read>(reader: R) -> Result<BTreeMap<String, TCode>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut map = BTreeMap::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() < 2 {
            return Err(Error::InvalidPanel(format!("line {}: expected `series,tcode`", line + 2)));
        }
        let code = rec[1]
            .parse::<u8>()
            .map_err(|_| Error::InvalidPanel(format!("line {}: tcode `{}` is not an integer", line + 2, &rec[1])))?;
        map.insert(rec[0].to_string(), TCode::new(code)?);
    }
    Ok(map)
}

/// Annual panel of transformed series plus what was dropped on the way.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransformedSeries {
    pub years: Vec<i64>,
    pub names: Vec<String>,
    /// Column-major annual values.
    pub columns: Vec<Vec<f64>>,
    pub dropped: Vec<DroppedSeries>,
    /// Always `tcode -> annualize -> standardize (at PCA time)`.
    pub order: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DroppedSeries {
    pub name: String,
    pub reason: String,
}

impl TransformedSeries {
    pub fn row_major(&self) -> Vec<f64> {
        (0..self.years.len())
            .flat_map(|t| self.columns.iter().map(move |c| c[t]))
            .collect()
    }
}

/// Applies transformation codes to quarterly series, averages each year, and
/// keeps the series with a complete annual record inside the window.
///
/// The default window starts at the first year untouched by the largest
/// differencing loss among the codes in use and ends at the last complete
/// year. Series without a code, with invalid values for their code, or with
/// any missing year inside the window are dropped and listed.
pub fn transform_quarterly(
    table: &WideTable,
    tcodes: &BTreeMap<String, TCode>,
    year_range: Option<(i64, i64)>,
) -> Result<TransformedSeries> {
    let quarters = table.labels.iter().map(|l| Quarter::parse(l)).collect::<Result<Vec<_>>>()?;
    if quarters.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidPanel("quarterly labels must be strictly increasing".into()));
    }
    let mut dropped = Vec::new();
    let mut kept: Vec<(String, BTreeMap<i64, f64>)> = Vec::new();
    let mut max_lost = 0;
    for (name, col) in table.names.iter().zip(&table.columns) {
        let Some(&code) = tcodes.get(name) else {
            dropped.push(DroppedSeries {
                name: name.clone(),
                reason: "no transformation code".into(),
            });
            continue;
        };
        max_lost = max_lost.max(code.lost_obs());
        match transform_with_gaps(col, code) {
            Ok(vals) => {
                let mut by_year: BTreeMap<i64, (f64, usize)> = BTreeMap::new();
                for (q, v) in quarters.iter().zip(&vals) {
                    let e = by_year.entry(q.year).or_insert((0.0, 0));
                    if v.is_finite() {
                        e.0 += v;
                        e.1 += 1;
                    }
                }
                let annual = by_year
                    .into_iter()
                    .filter(|(_, (_, n))| *n == 4)
                    .map(|(y, (s, _))| (y, s / 4.0))
                    .collect();
                kept.push((name.clone(), annual));
            }
            Err(e) => dropped.push(DroppedSeries {
                name: name.clone(),
                reason: e.to_string(),
            }),
        }
    }
    let all_years: Vec<i64> = {
        let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
        for q in &quarters {
            *counts.entry(q.year).or_default() += 1;
        }
        counts.into_iter().filter(|(_, n)| *n == 4).map(|(y, _)| y).collect()
    };
    let (lo, hi) = match year_range {
        Some(r) => r,
        None => {
            let first_clean = quarters.get(max_lost).map(|q| if q.quarter == 1 { q.year } else { q.year + 1 });
            match (first_clean, all_years.last()) {
                (Some(f), Some(&l)) => (f, l),
                _ => return Err(Error::InvalidPanel("no complete year in the quarterly table".into())),
            }
        }
    };
    let years: Vec<i64> = all_years.into_iter().filter(|y| *y >= lo && *y <= hi).collect();
    if years.len() < 2 {
        return Err(Error::InvalidPanel(format!("fewer than two complete years in {lo}..={hi}")));
    }
    let mut names = Vec::new();
    let mut columns = Vec::new();
    for (name, annual) in kept {
        let col: Vec<f64> = years.iter().map(|y| annual.get(y).copied().unwrap_or(f64::NAN)).collect();
        if let Some(pos) = col.iter().position(|v| !v.is_finite()) {
            dropped.push(DroppedSeries {
                name,
                reason: format!("missing annual value in {}", years[pos]),
            });
        } else {
            names.push(name);
            columns.push(col);
        }
    }
    Ok(TransformedSeries {
        years,
        names,
        columns,
        dropped,
        order: "tcode -> annualize -> standardize".into(),
    })
}

/// Transforms a series that may contain leading/trailing gaps, aligning the
/// output with the input (NaN where undefined).
fn transform_with_gaps(col: &[f64], code: TCode) -> Result<Vec<f64>> {
    let mut out = vec![f64::NAN; col.len()];
    let mut start = 0;
    while start < col.len() {
        if !col[start].is_finite() {
            start += 1;
            continue;
        }
        let mut end = start;
        while end < col.len() && col[end].is_finite() {
            end += 1;
        }
        let seg = &col[start..end];
        if seg.len() > code.lost_obs() {
            let tr = apply_tcode(seg, code)?;
            out[start + code.lost_obs()..end].copy_from_slice(&tr);
        }
        start = end;
    }
    Ok(out)
}
