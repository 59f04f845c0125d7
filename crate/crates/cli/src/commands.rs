use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tvmg_core::aggregate::{mbb_bands, normal_bands, tv_ols_series, BlockLength, PRNG_NAME};
use tvmg_core::bandwidth::{default_alpha_grid, loo_cv_bandwidth};
use tvmg_core::dgp::{simulate_panel, PanelDgpSpec};
use tvmg_core::factors::{extract_pcs, read_tcodes, transform_quarterly, TransformedSeries, WideTable};
use tvmg_core::kernel::bandwidth_from_alpha;
use tvmg_core::mean_group::{duration_filter, significance_periods, static_mg_ols, tvmg_estimate};
use tvmg_core::panel::{build_panel, RawRecords};
use tvmg_core::robustness::{lofo, shift_test};
use tvmg_core::{KernelKind, KernelSpec, Panel};

use crate::args::*;
use crate::error::{require, CliError};
use crate::output::{num, read_input, Outputs, RunMeta};

pub struct Run {
    pub meta: RunMeta,
    pub outputs: Outputs,
    pub out_dir: PathBuf,
}

impl Run {
    fn new(name: &str, out_dir: Option<PathBuf>) -> Result<Self, CliError> {
        Ok(Self {
            meta: RunMeta::new(name),
            outputs: Outputs::default(),
            out_dir: require(out_dir, "out-dir")?,
        })
    }
}

const DEFAULT_LEVEL: f64 = 0.90;
const DEFAULT_ALPHA: f64 = 0.5;

fn kernel_kind(k: Option<KernelArg>) -> KernelKind {
    match k.unwrap_or(KernelArg::Gaussian) {
        KernelArg::Gaussian => KernelKind::Gaussian,
        KernelArg::Epanechnikov => KernelKind::Epanechnikov,
        KernelArg::Uniform => KernelKind::Uniform,
    }
}

fn load_panel(data: &PanelInput, meta: &mut RunMeta) -> Result<Panel, CliError> {
    let path = require(data.input.as_ref(), "input")?;
    let outcome = require(data.outcome.as_deref(), "outcome")?;
    let bytes = read_input(path, &mut meta.inputs)?;
    let records = RawRecords::from_csv(bytes.as_slice())?;
    let regressors: Vec<&str> = match &data.regressors {
        Some(r) => r.iter().map(String::as_str).collect(),
        None => records.columns.iter().map(String::as_str).filter(|c| *c != outcome).collect(),
    };
    let (panel, report) = build_panel(&records, outcome, &regressors)?;
    meta.set("outcome", outcome);
    meta.set("regressors", &regressors);
    meta.set("units_retained", report.retained);
    meta.set("units_dropped", report.dropped);
    meta.set("dropped_units", &report.dropped_units);
    Ok(panel)
}

fn check_level(level: Option<f64>) -> Result<f64, CliError> {
    let level = level.unwrap_or(DEFAULT_LEVEL);
    if level > 0.0 && level < 1.0 {
        Ok(level)
    } else {
        Err(CliError::Usage(format!("--level must lie in (0, 1), got {level}")))
    }
}

/// Resolves the kernel spec from fixed-H, fixed-alpha or cross-validation.
fn smoothing_spec(panel: &Panel, s: &Smoothing, meta: &mut RunMeta) -> Result<KernelSpec, CliError> {
    let kind = kernel_kind(s.kernel);
    meta.set("kernel", kind.as_str());
    let t_len = panel.n_times();
    let chosen = [s.bandwidth.is_some(), s.alpha.is_some(), s.cv].iter().filter(|b| **b).count();
    if chosen > 1 {
        return Err(CliError::Usage("use only one of --bandwidth, --alpha and --cv".into()));
    }
    let spec = if let Some(h) = s.bandwidth {
        meta.set("bandwidth_mode", "fixed-H");
        KernelSpec::new(kind, h)?
    } else if s.cv {
        let grid = s.grid.clone().unwrap_or_else(default_alpha_grid);
        let cv = loo_cv_bandwidth(panel, &grid, kind)?;
        meta.set("bandwidth_mode", "cv");
        meta.set("alpha", cv.best_alpha);
        meta.set("cv_grid", &cv.grid);
        meta.set("cv_scores", &cv.scores);
        KernelSpec::new(kind, cv.best_h)?
    } else {
        let alpha = s.alpha.unwrap_or(DEFAULT_ALPHA);
        meta.set("bandwidth_mode", "fixed-alpha");
        meta.set("alpha", alpha);
        KernelSpec::new(kind, bandwidth_from_alpha(t_len, alpha)?)?
    };
    meta.set("bandwidth", spec.bandwidth);
    Ok(spec)
}

#[derive(Serialize)]
struct PathRow<'a> {
    time: i64,
    var: &'a str,
    beta: f64,
    se: f64,
    ci_lo: f64,
    ci_hi: f64,
    n_eff: usize,
}

pub fn tvmg(a: TvmgArgs) -> Result<Run, CliError> {
    let mut run = Run::new("tvmg", a.data.out_dir.clone())?;
    let level = check_level(a.level)?;
    let min_len = a.min_duration.unwrap_or(1);
    let panel = load_panel(&a.data, &mut run.meta)?;
    let spec = smoothing_spec(&panel, &a.smoothing, &mut run.meta)?;
    let path = tvmg_estimate(&panel, &spec, level)?;
    let report = duration_filter(&significance_periods(&path), min_len)?;
    run.meta.set("level", level);
    run.meta.set("z", path.z);

    let mut rows = Vec::new();
    let mut json_rows = Vec::new();
    for t in 0..path.n_times() {
        for (k, var) in path.coef_names.iter().enumerate() {
            let r = PathRow {
                time: path.time_labels[t],
                var,
                beta: path.beta(t, k),
                se: path.se_at(t, k),
                ci_lo: path.lo(t, k),
                ci_hi: path.hi(t, k),
                n_eff: path.n_eff[t],
            };
            rows.push(vec![
                r.time.to_string(),
                r.var.to_string(),
                num(r.beta),
                num(r.se),
                num(r.ci_lo),
                num(r.ci_hi),
                r.n_eff.to_string(),
            ]);
            json_rows.push(r);
        }
    }
    run.outputs.csv("tvmg.csv", &["time", "var", "beta", "se", "ci_lo", "ci_hi", "n_eff"], rows);
    let undefined: Vec<i64> = path
        .band_defined
        .iter()
        .zip(&path.time_labels)
        .filter(|(d, _)| !**d)
        .map(|(_, t)| *t)
        .collect();
    run.outputs.json(
        "tvmg.json",
        &serde_json::json!({
            "level": level,
            "z": path.z,
            "n_units": path.n_units,
            "bands_undefined_at": undefined,
            "rows": json_rows,
        }),
    );

    let sig_rows = report
        .vars
        .iter()
        .flat_map(|v| {
            v.intervals.iter().map(move |i| {
                vec![
                    v.var.clone(),
                    i.start.to_string(),
                    i.end.to_string(),
                    i.len().to_string(),
                    i.direction.as_str().to_string(),
                ]
            })
        })
        .collect();
    run.outputs
        .csv("significance.csv", &["var", "start", "end", "length", "direction"], sig_rows)
        .note("min_duration", min_len);
    Ok(run)
}

pub fn static_ols(a: StaticArgs) -> Result<Run, CliError> {
    let mut run = Run::new("static-ols", a.data.out_dir.clone())?;
    let panel = load_panel(&a.data, &mut run.meta)?;
    let res = static_mg_ols(&panel)?;
    let rows = res
        .rows
        .iter()
        .map(|r| {
            vec![
                r.var.clone(),
                num(r.coef),
                num(r.sd),
                num(r.t_value),
                res.n_used.to_string(),
                res.n_excluded.to_string(),
            ]
        })
        .collect();
    run.outputs.csv("static_ols.csv", &["var", "coef", "sd", "t_value", "n_used", "n_excluded"], rows);
    Ok(run)
}

pub fn cv_bandwidth(a: CvArgs) -> Result<Run, CliError> {
    let mut run = Run::new("cv-bandwidth", a.data.out_dir.clone())?;
    let panel = load_panel(&a.data, &mut run.meta)?;
    let kind = kernel_kind(a.kernel);
    let grid = a.grid.clone().unwrap_or_else(default_alpha_grid);
    let cv = loo_cv_bandwidth(&panel, &grid, kind)?;
    run.meta.set("kernel", kind.as_str());
    run.meta.set("bandwidth_mode", "cv");
    run.meta.set("alpha", cv.best_alpha);
    run.meta.set("bandwidth", cv.best_h);
    let mut rows: Vec<Vec<String>> = (0..cv.grid.len())
        .map(|i| vec!["grid".into(), num(cv.grid[i]), num(cv.bandwidths[i]), num(cv.scores[i])])
        .collect();
    rows.push(vec![
        "best".into(),
        num(cv.best_alpha),
        num(cv.best_h),
        num(cv.scores[cv.best_index]),
    ]);
    run.outputs.csv("cv.csv", &["row", "alpha", "H", "score"], rows);
    Ok(run)
}

pub fn lofo_cmd(a: LofoArgs) -> Result<Run, CliError> {
    let mut run = Run::new("lofo", a.data.out_dir.clone())?;
    let level = check_level(a.level)?;
    let var = require(a.var.clone(), "var")?;
    let panel = load_panel(&a.data, &mut run.meta)?;
    let k = panel
        .var_names()
        .iter()
        .position(|v| *v == var)
        .ok_or_else(|| CliError::Usage(format!("--var `{var}` is not among the regressors")))?;
    let spec = smoothing_spec(&panel, &a.smoothing, &mut run.meta)?;
    let path = tvmg_estimate(&panel, &spec, level)?;
    let rep = lofo(&panel, &path, &spec, k)?;
    run.meta.set("var", &var);
    run.meta.set("level", level);
    let rows = (0..rep.time_labels.len())
        .map(|t| vec![rep.time_labels[t].to_string(), num(rep.mdr[t]), num(rep.sfr[t])])
        .collect();
    run.outputs
        .csv("lofo.csv", &["time", "mdr", "sfr"], rows)
        .note("n_groups", &rep.n_groups);
    let mut ex_rows = Vec::new();
    for (t, time) in rep.time_labels.iter().enumerate() {
        for ex in &rep.exclusions {
            ex_rows.push(vec![time.to_string(), ex.group.clone(), num(ex.beta[t])]);
        }
    }
    run.outputs.csv("lofo_exclusions.csv", &["time", "group", "beta"], ex_rows);
    Ok(run)
}

pub fn shift(a: ShiftArgs) -> Result<Run, CliError> {
    let mut run = Run::new("shift-test", a.data.out_dir.clone())?;
    let level = check_level(a.level)?;
    let brk = require(a.break_year, "break-year")?;
    let panel = load_panel(&a.data, &mut run.meta)?;
    let results = shift_test(&panel, brk, level)?;
    run.meta.set("break_year", brk);
    run.meta.set("level", level);
    let undefined: Vec<&str> = results.iter().filter(|r| !r.se_defined).map(|r| r.var.as_str()).collect();
    let rows = results
        .iter()
        .map(|r| {
            vec![
                r.var.clone(),
                num(r.pre),
                num(r.post),
                num(r.delta),
                num(r.se),
                num(r.ci_lo),
                num(r.ci_hi),
                num(r.p_value),
                r.n_used.to_string(),
            ]
        })
        .collect();
    run.outputs
        .csv("shift.csv", &["var", "pre", "post", "delta", "se", "ci_lo", "ci_hi", "p", "n_used"], rows)
        .note("se_undefined_for", undefined);
    Ok(run)
}

fn read_wide(path: &Path, meta: &mut RunMeta) -> Result<WideTable, CliError> {
    let bytes = read_input(path, &mut meta.inputs)?;
    Ok(WideTable::from_csv(bytes.as_slice())?)
}

fn wide_column<'a>(table: &'a WideTable, name: &str) -> Result<&'a [f64], CliError> {
    let j = table
        .names
        .iter()
        .position(|n| n == name)
        .ok_or_else(|| CliError::Data(format!("series `{name}` not found")))?;
    let col = &table.columns[j];
    if let Some(t) = col.iter().position(|v| !v.is_finite()) {
        return Err(CliError::Data(format!("series `{name}` is missing at time {}", table.labels[t])));
    }
    Ok(col)
}

pub fn aggregate_tv(a: AggregateArgs) -> Result<Run, CliError> {
    let mut run = Run::new("aggregate-tv", a.out_dir.clone())?;
    let level = check_level(a.level)?;
    let bands = a.bands.unwrap_or(BandsArg::Both);
    let want_mbb = matches!(bands, BandsArg::Mbb | BandsArg::Both);
    let want_normal = matches!(bands, BandsArg::Normal | BandsArg::Both);
    if want_mbb {
        require(a.seed, "seed")?;
        require(a.replications, "replications")?;
    } else if a.replications.is_some() || a.seed.is_some() {
        return Err(CliError::Usage("--replications and --seed apply only to bootstrap bands".into()));
    }
    if a.block_len.is_some() && a.block_scale.is_some() {
        return Err(CliError::Usage("use only one of --block-len and --block-scale".into()));
    }
    let input = require(a.input.clone(), "input")?;
    let outcome = require(a.outcome.clone(), "outcome")?;
    let table = read_wide(&input, &mut run.meta)?;
    let times = table
        .labels
        .iter()
        .map(|l| l.parse::<i64>().map_err(|_| CliError::Data(format!("time label `{l}` is not an integer"))))
        .collect::<Result<Vec<_>, _>>()?;
    let regs = a.regressors.clone().unwrap_or_default();
    let y = wide_column(&table, &outcome)?.to_vec();
    let t_len = y.len();
    let cols = regs.iter().map(|r| wide_column(&table, r)).collect::<Result<Vec<_>, _>>()?;
    let q = regs.len();
    let x: Vec<f64> = (0..t_len).flat_map(|t| cols.iter().map(move |c| c[t])).collect();

    let kind = kernel_kind(a.kernel);
    let spec = match (a.bandwidth, a.alpha) {
        (Some(_), Some(_)) => return Err(CliError::Usage("use only one of --bandwidth and --alpha".into())),
        (Some(h), None) => {
            run.meta.set("bandwidth_mode", "fixed-H");
            KernelSpec::new(kind, h)?
        }
        (None, alpha) => {
            let alpha = alpha.unwrap_or(DEFAULT_ALPHA);
            run.meta.set("bandwidth_mode", "fixed-alpha");
            run.meta.set("alpha", alpha);
            KernelSpec::new(kind, bandwidth_from_alpha(t_len, alpha)?)?
        }
    };
    run.meta.set("kernel", kind.as_str());
    run.meta.set("bandwidth", spec.bandwidth);
    run.meta.set("level", level);
    run.meta.set("outcome", &outcome);
    run.meta.set("regressors", &regs);

    let point = tv_ols_series(&y, &x, q, &spec)?;
    if let Some(t) = (0..t_len).find(|&t| point.at(t).is_none()) {
        return Err(CliError::Numeric(format!(
            "local regression of `{outcome}` is singular at time {}",
            times[t]
        )));
    }

    let names: Vec<String> = std::iter::once("const".to_string()).chain(regs.iter().cloned()).collect();
    let qc = q + 1;
    let mut rows = Vec::new();
    let mut failed_cells = 0usize;
    if want_mbb {
        let block = match a.block_len {
            Some(l) => BlockLength::Fixed(l),
            None => BlockLength::Scale(a.block_scale.unwrap_or(1.0)),
        };
        let seed = a.seed.expect("checked above");
        let b = mbb_bands(&y, &x, q, &spec, block, a.replications.expect("checked above"), level, seed)?;
        failed_cells = b.failed.iter().filter(|f| **f > 0).count();
        run.meta.set("seed", seed);
        run.meta.set("prng", PRNG_NAME);
        run.meta.set("block_len", b.block_len);
        run.meta.set("n_blocks", b.n_blocks);
        for t in 0..t_len {
            for k in 0..qc {
                let c = t * qc + k;
                rows.push(vec![
                    times[t].to_string(),
                    names[k].clone(),
                    num(b.beta_hat[c]),
                    num(b.lo[c]),
                    num(b.hi[c]),
                    "mbb".into(),
                    b.replications.to_string(),
                    b.block_len.to_string(),
                    seed.to_string(),
                ]);
            }
        }
    }
    if want_normal {
        let nb = normal_bands(&y, &x, q, &spec, level)?;
        for t in 0..t_len {
            for k in 0..qc {
                let c = t * qc + k;
                rows.push(vec![
                    times[t].to_string(),
                    names[k].clone(),
                    num(nb.beta_hat[c]),
                    num(nb.lo[c]),
                    num(nb.hi[c]),
                    "normal".into(),
                    String::new(),
                    String::new(),
                    String::new(),
                ]);
            }
        }
    }
    run.outputs
        .csv(
            "aggregate.csv",
            &["time", "coef", "beta", "lo", "hi", "method", "B", "block_len", "seed"],
            rows,
        )
        .note("cells_with_failed_replications", failed_cells);
    Ok(run)
}

fn transformed_csv(run: &mut Run, tr: &TransformedSeries) {
    let mut header = vec!["time"];
    header.extend(tr.names.iter().map(String::as_str));
    let rows = (0..tr.years.len())
        .map(|t| {
            std::iter::once(tr.years[t].to_string())
                .chain(tr.columns.iter().map(|c| num(c[t])))
                .collect()
        })
        .collect();
    run.outputs.csv("transformed.csv", &header, rows).note("order", &tr.order);
    let dropped = tr.dropped.iter().map(|d| vec![d.name.clone(), d.reason.clone()]).collect();
    run.outputs.csv("transform_dropped.csv", &["series", "reason"], dropped);
}

fn run_transform(
    input: &Path,
    tcodes: &Path,
    start: Option<i64>,
    end: Option<i64>,
    meta: &mut RunMeta,
) -> Result<TransformedSeries, CliError> {
    let table = read_wide(input, meta)?;
    let codes_bytes = read_input(tcodes, &mut meta.inputs)?;
    let codes = read_tcodes(codes_bytes.as_slice())?;
    let range = match (start, end) {
        (None, None) => None,
        (Some(s), Some(e)) if s <= e => Some((s, e)),
        (Some(_), Some(_)) => return Err(CliError::Usage("--start-year must not exceed --end-year".into())),
        _ => return Err(CliError::Usage("--start-year and --end-year go together".into())),
    };
    let tr = transform_quarterly(&table, &codes, range)?;
    meta.set("years", [tr.years.first(), tr.years.last()]);
    let used: BTreeMap<&str, u8> = tr.names.iter().filter_map(|n| codes.get(n).map(|c| (n.as_str(), c.code()))).collect();
    meta.set("tcodes", used);
    Ok(tr)
}

pub fn transform(a: TransformArgs) -> Result<Run, CliError> {
    let mut run = Run::new("transform", a.out_dir.clone())?;
    let input = require(a.input.clone(), "input")?;
    let tcodes = require(a.tcodes.clone(), "tcodes")?;
    let tr = run_transform(&input, &tcodes, a.start_year, a.end_year, &mut run.meta)?;
    transformed_csv(&mut run, &tr);
    Ok(run)
}

pub fn pca(a: PcaArgs) -> Result<Run, CliError> {
    let mut run = Run::new("pca", a.out_dir.clone())?;
    let input = require(a.input.clone(), "input")?;
    let k = a.k.unwrap_or(1);
    let (labels, names, data) = if let Some(tc) = &a.tcodes {
        let tr = run_transform(&input, tc, a.start_year, a.end_year, &mut run.meta)?;
        transformed_csv(&mut run, &tr);
        (tr.years.iter().map(i64::to_string).collect(), tr.names.clone(), tr.row_major())
    } else {
        if a.start_year.is_some() || a.end_year.is_some() {
            return Err(CliError::Usage("--start-year/--end-year need --tcodes".into()));
        }
        let table = read_wide(&input, &mut run.meta)?;
        for (name, col) in table.names.iter().zip(&table.columns) {
            if let Some(t) = col.iter().position(|v| !v.is_finite()) {
                return Err(CliError::Data(format!("series `{name}` is missing at {}", table.labels[t])));
            }
        }
        (table.labels.clone(), table.names.clone(), table.row_major())
    };
    let fs = extract_pcs(&data, labels.len(), &names, k)?;
    run.meta.set("k", k);
    let pcs: Vec<String> = (1..=k).map(|c| format!("pc{c}")).collect();
    let mut header = vec!["time"];
    header.extend(pcs.iter().map(String::as_str));
    let scores = (0..fs.n_obs)
        .map(|t| std::iter::once(labels[t].clone()).chain((0..k).map(|c| num(fs.score(t, c)))).collect())
        .collect();
    run.outputs.csv("pca_scores.csv", &header, scores);
    header[0] = "series";
    let loadings = (0..fs.n_series)
        .map(|j| std::iter::once(names[j].clone()).chain((0..k).map(|c| num(fs.loading(j, c)))).collect())
        .collect();
    run.outputs.csv("pca_loadings.csv", &header, loadings);
    let mut cum = 0.0;
    let explained = (0..k)
        .map(|c| {
            cum += fs.explained[c];
            vec![pcs[c].clone(), num(fs.eigenvalues[c]), num(fs.explained[c]), num(cum)]
        })
        .collect();
    run.outputs.csv("pca_explained.csv", &["component", "eigenvalue", "explained", "cumulative"], explained);
    Ok(run)
}

pub fn simulate(a: SimulateArgs) -> Result<Run, CliError> {
    let mut run = Run::new("simulate", a.out_dir.clone())?;
    let seed = require(a.seed, "seed")?;
    let path = require(a.spec.clone(), "spec")?;
    let bytes = read_input(&path, &mut run.meta.inputs)?;
    let text = String::from_utf8(bytes).map_err(|_| CliError::Data(format!("{}: not UTF-8", path.display())))?;
    let mut table: toml::Table =
        toml::from_str(&text).map_err(|e| CliError::Data(format!("{}: {}", path.display(), e.message())))?;
    table.insert("seed".into(), toml::Value::Integer(seed as i64));
    let spec: PanelDgpSpec = table
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Data(format!("{}: {}", path.display(), e.message())))?;
    let sim = simulate_panel(&spec)?;
    run.meta.set("seed", seed);
    run.meta.set("prng", "chacha20 (rand_chacha), stream = unit index");
    run.meta.set("design", &spec);

    let mut w = Vec::new();
    sim.panel.to_records().write_csv(&mut w)?;
    run.outputs.raw_csv("panel.csv", w);
    let p = spec.n_regressors();
    let mut header = vec!["time".to_string()];
    header.extend(sim.panel.var_names().iter().cloned());
    let header_ref: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = (0..spec.n_times)
        .map(|t| {
            std::iter::once(sim.panel.time_labels()[t].to_string())
                .chain((0..p).map(|k| num(sim.beta0[t * p + k])))
                .collect()
        })
        .collect();
    run.outputs.csv("beta0.csv", &header_ref, rows);
    Ok(run)
}
