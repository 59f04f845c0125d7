//! Balanced panel data model and long-format ingestion.
//!
//! A [`Panel`] is built from [`RawRecords`] by keeping only the units that have
//! a finite observation of the outcome and of every requested regressor at
//! every time label. Balance is achieved by dropping units, never by imputing.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};

/// Balanced unit-by-time panel with one outcome and `p` regressors.
///
/// Storage is row-major: `y[i * T + t]` and `x[(i * T + t) * p + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    unit_ids: Vec<String>,
    group_labels: Vec<String>,
    time_labels: Vec<i64>,
    y: Vec<f64>,
    x: Vec<f64>,
    var_names: Vec<String>,
    outcome_name: String,
}

impl Panel {
    /// Builds a panel, checking every invariant.
    pub fn new(
        unit_ids: Vec<String>,
        group_labels: Vec<String>,
        time_labels: Vec<i64>,
        y: Vec<f64>,
        x: Vec<f64>,
        var_names: Vec<String>,
    ) -> Result<Self> {
        Self::with_outcome_name(unit_ids, group_labels, time_labels, y, x, var_names, "y")
    }

    pub fn with_outcome_name(
        unit_ids: Vec<String>,
        group_labels: Vec<String>,
        time_labels: Vec<i64>,
        y: Vec<f64>,
        x: Vec<f64>,
        var_names: Vec<String>,
        outcome_name: impl Into<String>,
    ) -> Result<Self> {
        let n = unit_ids.len();
        let t = time_labels.len();
        let p = var_names.len();
        if n == 0 {
            return Err(Error::InvalidPanel("panel needs at least one unit".into()));
        }
        if t < 3 {
            return Err(Error::InvalidPanel(format!(
                "panel needs at least 3 time periods, got {t}"
            )));
        }
        if p == 0 {
            return Err(Error::InvalidPanel("panel needs at least one regressor".into()));
        }
        if group_labels.len() != n {
            return Err(Error::InvalidPanel(format!(
                "{} group labels for {n} units",
                group_labels.len()
            )));
        }
        if y.len() != n * t {
            return Err(Error::InvalidPanel(format!(
                "outcome has {} cells, expected {}",
                y.len(),
                n * t
            )));
        }
        if x.len() != n * t * p {
            return Err(Error::InvalidPanel(format!(
                "regressors have {} cells, expected {}",
                x.len(),
                n * t * p
            )));
        }
        if time_labels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidPanel("time labels must be strictly increasing".into()));
        }
        let mut seen = HashSet::with_capacity(n);
        for id in &unit_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::InvalidPanel(format!("duplicate unit id `{id}`")));
            }
        }
        if let Some(pos) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidPanel(format!(
                "non-finite outcome for unit `{}` at time {}",
                unit_ids[pos / t],
                time_labels[pos % t]
            )));
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            let cell = pos / p;
            return Err(Error::InvalidPanel(format!(
                "non-finite `{}` for unit `{}` at time {}",
                var_names[pos % p],
                unit_ids[cell / t],
                time_labels[cell % t]
            )));
        }
        Ok(Self {
            unit_ids,
            group_labels,
            time_labels,
            y,
            x,
            var_names,
            outcome_name: outcome_name.into(),
        })
    }

    pub fn n_units(&self) -> usize {
        self.unit_ids.len()
    }

    pub fn n_times(&self) -> usize {
        self.time_labels.len()
    }

    pub fn n_regressors(&self) -> usize {
        self.var_names.len()
    }

    pub fn unit_ids(&self) -> &[String] {
        &self.unit_ids
    }

    pub fn group_labels(&self) -> &[String] {
        &self.group_labels
    }

    pub fn time_labels(&self) -> &[i64] {
        &self.time_labels
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    pub fn outcome_name(&self) -> &str {
        &self.outcome_name
    }

    /// Outcome series of unit `i` (length `T`).
    pub fn y_unit(&self, i: usize) -> &[f64] {
        let t = self.n_times();
        &self.y[i * t..(i + 1) * t]
    }

    /// Regressor block of unit `i`, `T x p` row-major.
    pub fn x_unit(&self, i: usize) -> &[f64] {
        let tp = self.n_times() * self.n_regressors();
        &self.x[i * tp..(i + 1) * tp]
    }

    /// Distinct group labels in order of first appearance.
    pub fn groups(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.group_labels
            .iter()
            .filter(|g| seen.insert(g.as_str()))
            .map(String::as_str)
            .collect()
    }

    /// Panel restricted to the given units (in the given order).
    pub fn subset_units(&self, keep: &[usize]) -> Result<Panel> {
        let t = self.n_times();
        let p = self.n_regressors();
        let mut y = Vec::with_capacity(keep.len() * t);
        let mut x = Vec::with_capacity(keep.len() * t * p);
        for &i in keep {
            y.extend_from_slice(self.y_unit(i));
            x.extend_from_slice(self.x_unit(i));
        }
        Panel::with_outcome_name(
            keep.iter().map(|&i| self.unit_ids[i].clone()).collect(),
            keep.iter().map(|&i| self.group_labels[i].clone()).collect(),
            self.time_labels.clone(),
            y,
            x,
            self.var_names.clone(),
            self.outcome_name.clone(),
        )
    }

    /// Panel keeping only the listed regressor columns.
    pub fn select_regressors(&self, cols: &[usize]) -> Result<Panel> {
        let p = self.n_regressors();
        if let Some(&bad) = cols.iter().find(|&&c| c >= p) {
            return Err(Error::Parameter(format!("regressor index {bad} out of range")));
        }
        let x = self
            .x
            .chunks_exact(p)
            .flat_map(|row| cols.iter().map(move |&c| row[c]))
            .collect();
        Panel::with_outcome_name(
            self.unit_ids.clone(),
            self.group_labels.clone(),
            self.time_labels.clone(),
            self.y.clone(),
            x,
            cols.iter().map(|&c| self.var_names[c].clone()).collect(),
            self.outcome_name.clone(),
        )
    }

    /// Converts back to long-format records (one row per unit and time).
    pub fn to_records(&self) -> RawRecords {
        let t = self.n_times();
        let p = self.n_regressors();
        let mut columns = vec![self.outcome_name.clone()];
        columns.extend(self.var_names.iter().cloned());
        let mut rows = Vec::with_capacity(self.n_units() * t);
        for i in 0..self.n_units() {
            let y = self.y_unit(i);
            let x = self.x_unit(i);
            for (s, &time) in self.time_labels.iter().enumerate() {
                let mut values = Vec::with_capacity(p + 1);
                values.push(Some(y[s]));
                values.extend(x[s * p..(s + 1) * p].iter().map(|&v| Some(v)));
                rows.push(RawRow {
                    unit: self.unit_ids[i].clone(),
                    group: self.group_labels[i].clone(),
                    time,
                    values,
                });
            }
        }
        RawRecords { columns, rows }
    }
}

/// One long-format observation.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRow {
    pub unit: String,
    pub group: String,
    pub time: i64,
    pub values: Vec<Option<f64>>,
}

/// Long-format records with named numeric columns, possibly missing.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecords {
    pub columns: Vec<String>,
    pub rows: Vec<RawRow>,
}

impl RawRecords {
    pub fn new(columns: Vec<String>, rows: Vec<RawRow>) -> Result<Self> {
        let records = Self { columns, rows };
        records.validate()?;
        Ok(records)
    }

    fn validate(&self) -> Result<()> {
        let width = self.columns.len();
        let mut keys = HashSet::with_capacity(self.rows.len());
        for row in &self.rows {
            if row.values.len() != width {
                return Err(Error::InvalidPanel(format!(
                    "row for unit `{}` at time {} has {} values, expected {width}",
                    row.unit,
                    row.time,
                    row.values.len()
                )));
            }
            if !keys.insert((row.unit.as_str(), row.time)) {
                return Err(Error::InvalidPanel(format!(
                    "duplicate (unit, time) pair (`{}`, {})",
                    row.unit, row.time
                )));
            }
        }
        Ok(())
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::InvalidPanel(format!("unknown column `{name}`")))
    }

    /// Reads long-format CSV: header with `unit,group,time` followed by numeric
    /// columns. Empty cells are missing.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let pos = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::InvalidPanel(format!("missing required column `{name}`")))
        };
        let (ui, gi, ti) = (pos("unit")?, pos("group")?, pos("time")?);
        let data_cols: Vec<usize> = (0..headers.len()).filter(|c| ![ui, gi, ti].contains(c)).collect();
        let columns = data_cols.iter().map(|&c| headers[c].to_string()).collect();
        let mut rows = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let row_no = line + 2;
            let time = rec[ti].parse::<i64>().map_err(|_| {
                Error::InvalidPanel(format!("line {row_no}: time `{}` is not an integer", &rec[ti]))
            })?;
            let values = data_cols
                .iter()
                .map(|&c| {
                    let cell = &rec[c];
                    if cell.is_empty() || cell.eq_ignore_ascii_case("na") || cell.eq_ignore_ascii_case("nan") {
                        Ok(None)
                    } else {
                        cell.parse::<f64>().map(Some).map_err(|_| {
                            Error::InvalidPanel(format!(
                                "line {row_no}: column `{}` value `{cell}` is not numeric",
                                &headers[c]
                            ))
                        })
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(RawRow {
                unit: rec[ui].to_string(),
                group: rec[gi].to_string(),
                time,
                values,
            });
        }
        Self::new(columns, rows)
    }

    /// Writes long-format CSV readable by [`RawRecords::from_csv`].
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["unit".to_string(), "group".into(), "time".into()];
        header.extend(self.columns.iter().cloned());
        wtr.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![row.unit.clone(), row.group.clone(), row.time.to_string()];
            rec.extend(
                row.values
                    .iter()
                    .map(|v| v.filter(|x| x.is_finite()).map(|x| x.to_string()).unwrap_or_default()),
            );
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Keeps rows with `lo <= time <= hi`.
    pub fn restrict_time(&self, lo: i64, hi: i64) -> RawRecords {
        RawRecords {
            columns: self.columns.clone(),
            rows: self.rows.iter().filter(|r| r.time >= lo && r.time <= hi).cloned().collect(),
        }
    }

    fn unit_series_index(&self) -> Vec<(String, Vec<usize>)> {
        let mut order: Vec<String> = Vec::new();
        let mut map: HashMap<&str, Vec<usize>> = HashMap::new();
        for (r, row) in self.rows.iter().enumerate() {
            map.entry(row.unit.as_str())
                .or_insert_with(|| {
                    order.push(row.unit.clone());
                    Vec::new()
                })
                .push(r);
        }
        order
            .into_iter()
            .map(|u| {
                let mut idx = map.remove(u.as_str()).unwrap_or_default();
                idx.sort_by_key(|&r| self.rows[r].time);
                (u, idx)
            })
            .collect()
    }

    /// Adds `new_name` holding the symmetric percentage change of `source`
    /// between consecutive observed times of each unit. The first time of each
    /// unit, and any pair with a missing or invalid level, is missing.
    pub fn derive_symmetric_pct_change(&mut self, source: &str, new_name: &str) -> Result<()> {
        let src = self.column_index(source)?;
        self.derive_pairwise(new_name, |rows, prev, curr| {
            match (rows[prev].values[src], rows[curr].values[src]) {
                (Some(a), Some(b)) => symmetric_pct_change(a, b).ok(),
                _ => None,
            }
        })
    }

    /// Adds `new_name = numerator[t] / denominator[t-1]` per unit, missing where
    /// the lagged denominator is zero or either input is missing.
    pub fn derive_lag_ratio(&mut self, numerator: &str, denominator: &str, new_name: &str) -> Result<()> {
        let num = self.column_index(numerator)?;
        let den = self.column_index(denominator)?;
        self.derive_pairwise(new_name, |rows, prev, curr| {
            lag_ratio_cell(rows[curr].values[num], rows[prev].values[den])
        })
    }

    fn derive_pairwise<F>(&mut self, new_name: &str, f: F) -> Result<()>
    where
        F: Fn(&[RawRow], usize, usize) -> Option<f64>,
    {
        if self.columns.iter().any(|c| c == new_name) {
            return Err(Error::Parameter(format!("column `{new_name}` already exists")));
        }
        let mut derived = vec![None; self.rows.len()];
        for (_, idx) in self.unit_series_index() {
            for w in idx.windows(2) {
                derived[w[1]] = f(&self.rows, w[0], w[1]);
            }
        }
        self.columns.push(new_name.to_string());
        for (row, v) in self.rows.iter_mut().zip(derived) {
            row.values.push(v);
        }
        Ok(())
    }
}

/// Counts from [`build_panel`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BuildReport {
    pub retained: usize,
    pub dropped: usize,
    pub dropped_units: Vec<String>,
}

/// Symmetric percentage change `(curr - prev) / ((curr + prev) / 2)`.
///
/// Bounded in `[-2, 2]`; a change from zero to zero is defined as `0`.
pub fn symmetric_pct_change(prev: f64, curr: f64) -> Result<f64> {
    if !prev.is_finite() || !curr.is_finite() || prev < 0.0 || curr < 0.0 {
        return Err(Error::Domain(format!(
            "symmetric percentage change needs finite nonnegative levels, got ({prev}, {curr})"
        )));
    }
    let denom = curr + prev;
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((2.0 * (curr - prev) / denom).clamp(-2.0, 2.0))
}

fn lag_ratio_cell(numerator: Option<f64>, lagged_denominator: Option<f64>) -> Option<f64> {
    match (numerator, lagged_denominator) {
        (Some(n), Some(d)) if d != 0.0 && n.is_finite() && d.is_finite() => Some(n / d),
        _ => None,
    }
}

/// `out[t] = numerator[t] / denominator[t - 1]` for `t = 1..T`; cells with a
/// zero or missing lagged denominator are `None`.
pub fn lag_ratio(numerator: &[f64], denominator: &[f64]) -> Result<Vec<Option<f64>>> {
    if numerator.len() != denominator.len() {
        return Err(Error::Parameter(format!(
            "series lengths differ: {} vs {}",
            numerator.len(),
            denominator.len()
        )));
    }
    Ok((1..numerator.len())
        .map(|t| lag_ratio_cell(Some(numerator[t]), Some(denominator[t - 1])))
        .collect())
}

/// Builds the variable-specific balanced sample for `outcome` and `regressors`.
///
/// Time labels are all times present in `records`; a unit survives only if it
/// has finite values of every requested column at every one of them.
pub fn build_panel(records: &RawRecords, outcome: &str, regressors: &[&str]) -> Result<(Panel, BuildReport)> {
    if records.rows.is_empty() {
        return Err(Error::EmptyPanel("an empty record set".into()));
    }
    if regressors.is_empty() {
        return Err(Error::Parameter("at least one regressor is required".into()));
    }
    let oi = records.column_index(outcome)?;
    let ri = regressors
        .iter()
        .map(|r| records.column_index(r))
        .collect::<Result<Vec<_>>>()?;
    let times: Vec<i64> = records.rows.iter().map(|r| r.time).collect::<BTreeSet<_>>().into_iter().collect();
    let t = times.len();
    let p = ri.len();
    let time_pos: HashMap<i64, usize> = times.iter().enumerate().map(|(s, &tl)| (tl, s)).collect();

    let mut unit_ids = Vec::new();
    let mut groups = Vec::new();
    let mut y = Vec::new();
    let mut x = Vec::new();
    let mut dropped_units = Vec::new();
    for (unit, idx) in records.unit_series_index() {
        let mut uy = vec![f64::NAN; t];
        let mut ux = vec![f64::NAN; t * p];
        for &r in &idx {
            let row = &records.rows[r];
            let s = time_pos[&row.time];
            uy[s] = row.values[oi].unwrap_or(f64::NAN);
            for (k, &c) in ri.iter().enumerate() {
                ux[s * p + k] = row.values[c].unwrap_or(f64::NAN);
            }
        }
        if uy.iter().chain(ux.iter()).all(|v| v.is_finite()) {
            groups.push(records.rows[idx[0]].group.clone());
            unit_ids.push(unit);
            y.extend(uy);
            x.extend(ux);
        } else {
            dropped_units.push(unit);
        }
    }
    if unit_ids.is_empty() {
        let mut what = vec![outcome];
        what.extend_from_slice(regressors);
        return Err(Error::EmptyPanel(what.join(", ")));
    }
    let report = BuildReport {
        retained: unit_ids.len(),
        dropped: dropped_units.len(),
        dropped_units,
    };
    let panel = Panel::with_outcome_name(
        unit_ids,
        groups,
        times,
        y,
        x,
        regressors.iter().map(|s| s.to_string()).collect(),
        outcome,
    )?;
    Ok((panel, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(unit: &str, time: i64, vals: &[Option<f64>]) -> RawRow {
        RawRow {
            unit: unit.into(),
            group: format!("g{unit}"),
            time,
            values: vals.to_vec(),
        }
    }

    #[test]
    fn pct_change_examples() {
        assert!((symmetric_pct_change(100.0, 150.0).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(symmetric_pct_change(5.0, 5.0).unwrap(), 0.0);
        assert_eq!(symmetric_pct_change(0.0, 7.0).unwrap(), 2.0);
        assert_eq!(symmetric_pct_change(7.0, 0.0).unwrap(), -2.0);
        assert_eq!(symmetric_pct_change(0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn pct_change_rejects_bad_input() {
        assert!(matches!(symmetric_pct_change(-1.0, 1.0), Err(Error::Domain(_))));
        assert!(symmetric_pct_change(1.0, f64::NAN).is_err());
        assert!(symmetric_pct_change(f64::INFINITY, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn pct_change_antisymmetric_and_bounded(a in 0.0f64..1e9, b in 0.0f64..1e9) {
            let ab = symmetric_pct_change(a, b).unwrap();
            let ba = symmetric_pct_change(b, a).unwrap();
            prop_assert_eq!(ab, -ba);
            prop_assert!(ab.abs() <= 2.0);
        }
    }

    #[test]
    fn lag_ratio_examples() {
        let out = lag_ratio(&[2.0, 4.0, 6.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(out, vec![Some(4.0), Some(3.0)]);
        let c = 2.5;
        assert_eq!(lag_ratio(&[c, c, c], &[c, c, c]).unwrap(), vec![Some(1.0), Some(1.0)]);
        assert_eq!(lag_ratio(&[1.0, 1.0, 1.0], &[0.0, 1.0, 1.0]).unwrap(), vec![None, Some(1.0)]);
        assert!(lag_ratio(&[1.0], &[1.0, 2.0]).is_err());
    }

    fn three_unit_records() -> RawRecords {
        let mut rows = Vec::new();
        for u in ["a", "b", "c"] {
            for t in 0..4 {
                let x = if u == "b" && t == 2 { None } else { Some(t as f64 + 1.0) };
                rows.push(row(u, 2000 + t, &[Some(1.0), x]));
            }
        }
        RawRecords::new(vec!["y".into(), "x".into()], rows).unwrap()
    }

    #[test]
    fn build_drops_incomplete_units() {
        let (panel, report) = build_panel(&three_unit_records(), "y", &["x"]).unwrap();
        assert_eq!(panel.n_units(), 2);
        assert_eq!(report.dropped, 1);
        assert_eq!(report.dropped_units, vec!["b".to_string()]);
        assert_eq!(panel.unit_ids(), &["a".to_string(), "c".to_string()]);
        assert_eq!(panel.time_labels(), &[2000, 2001, 2002, 2003]);
    }

    #[test]
    fn build_keeps_complete_panel_and_is_idempotent() {
        let recs = three_unit_records();
        let (panel, _) = build_panel(&recs, "y", &["y"]).unwrap();
        assert_eq!(panel.n_units(), 3);
        let (p1, _) = build_panel(&recs, "y", &["x"]).unwrap();
        let (p2, r2) = build_panel(&p1.to_records(), "y", &["x"]).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(r2.dropped, 0);
    }

    #[test]
    fn build_errors() {
        let recs = three_unit_records();
        assert!(matches!(build_panel(&recs, "y", &["nope"]), Err(Error::InvalidPanel(_))));
        let empty = RawRecords::new(vec!["y".into()], vec![]).unwrap();
        assert!(matches!(build_panel(&empty, "y", &["y"]), Err(Error::EmptyPanel(_))));
        let all_missing = RawRecords::new(
            vec!["y".into(), "x".into()],
            (0..3).map(|t| row("a", t, &[Some(1.0), None])).collect(),
        )
        .unwrap();
        assert!(matches!(build_panel(&all_missing, "y", &["x"]), Err(Error::EmptyPanel(_))));
    }

    #[test]
    fn duplicate_unit_time_rejected() {
        let rows = vec![row("a", 1, &[Some(1.0)]), row("a", 1, &[Some(2.0)])];
        assert!(RawRecords::new(vec!["y".into()], rows).is_err());
    }

    #[test]
    fn panel_invariants_checked() {
        let ok = Panel::new(
            vec!["a".into()],
            vec!["g".into()],
            vec![1, 2, 3],
            vec![0.0; 3],
            vec![0.0; 3],
            vec!["x".into()],
        );
        assert!(ok.is_ok());
        let short = Panel::new(vec!["a".into()], vec!["g".into()], vec![1, 2], vec![0.0; 2], vec![0.0; 2], vec!["x".into()]);
        assert!(short.is_err());
        let unsorted = Panel::new(vec!["a".into()], vec!["g".into()], vec![1, 3, 2], vec![0.0; 3], vec![0.0; 3], vec!["x".into()]);
        assert!(unsorted.is_err());
        let nan = Panel::new(
            vec!["a".into()],
            vec!["g".into()],
            vec![1, 2, 3],
            vec![0.0, f64::NAN, 0.0],
            vec![0.0; 3],
            vec!["x".into()],
        );
        assert!(nan.is_err());
        let dup = Panel::new(
            vec!["a".into(), "a".into()],
            vec!["g".into(), "g".into()],
            vec![1, 2, 3],
            vec![0.0; 6],
            vec![0.0; 6],
            vec!["x".into()],
        );
        assert!(dup.is_err());
    }

    #[test]
    fn csv_roundtrip_and_derivations() {
        let text = "unit,group,time,em,capx,ppe\n\
                    a,f1,2000,100,1,2\n\
                    a,f1,2001,150,4,0\n\
                    a,f1,2002,150,6,3\n\
                    b,f2,2000,0,,1\n\
                    b,f2,2001,0,1,1\n\
                    b,f2,2002,7,1,1\n";
        let mut recs = RawRecords::from_csv(text.as_bytes()).unwrap();
        assert_eq!(recs.columns, vec!["em", "capx", "ppe"]);
        assert_eq!(recs.rows[3].values[1], None);
        recs.derive_symmetric_pct_change("em", "em_spc").unwrap();
        recs.derive_lag_ratio("capx", "ppe", "inv").unwrap();
        let spc: Vec<_> = recs.rows.iter().map(|r| r.values[3]).collect();
        assert_eq!(spc[0], None);
        assert!((spc[1].unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(spc[4], Some(0.0));
        assert_eq!(spc[5], Some(2.0));
        let inv: Vec<_> = recs.rows.iter().map(|r| r.values[4]).collect();
        assert_eq!(inv[1], Some(2.0));
        assert_eq!(inv[2], None);
        let mut buf = Vec::new();
        recs.write_csv(&mut buf).unwrap();
        let back = RawRecords::from_csv(buf.as_slice()).unwrap();
        assert_eq!(back, recs);
    }

    #[test]
    fn csv_requires_id_columns() {
        assert!(RawRecords::from_csv("unit,time,y\na,1,2\n".as_bytes()).is_err());
        assert!(RawRecords::from_csv("unit,group,time,y\na,g,x,2\n".as_bytes()).is_err());
        assert!(RawRecords::from_csv("unit,group,time,y\na,g,1,abc\n".as_bytes()).is_err());
    }
}
