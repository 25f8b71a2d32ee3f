//! One function per subcommand. Each reads its inputs, runs exactly one
//! library operation, writes its artifacts into the output directory, and
//! reports which files it read and wrote so the dispatcher can record the
//! run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use varcast::forecast::{forecast, write_forecast_csv};
use varcast::ingest::{load_frame, read_frame_csv, write_frame_csv, IngestSpec};
use varcast::numfmt::sig6;
use varcast::series::correlation_matrix;
use varcast::store::{load_model, save_model};
use varcast::var::{
    check_stability, fit_var, information_criteria, residual_diagnostics, select_lag, Criterion,
    DiagnosticOutcome, VarModel,
};
use varcast::SeriesFrame;

use crate::cli::{
    BacktestArgs, CointArgs, CorrArgs, DiagnoseArgs, FitArgs, ForecastArgs, IngestArgs,
    LagChoice, SelectLagArgs,
};
use crate::error::AppError;

/// Which files a finished subcommand touched, for the manifest.
pub struct CmdResult {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
}

fn ensure_out_dir(dir: &Path) -> Result<(), AppError> {
    fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), AppError> {
    fs::write(path, bytes).map_err(|e| AppError::io(path, e))
}

fn read_frame(path: &Path) -> Result<SeriesFrame, AppError> {
    Ok(read_frame_csv(path)?)
}

/// Finishes a `csv::Writer` over an in-memory buffer.
fn finish_csv(w: csv::Writer<Vec<u8>>) -> Vec<u8> {
    w.into_inner().expect("in-memory csv writer cannot fail")
}

/// Resolves a lag choice against a frame: either the fixed order, or the
/// criterion argmin over `1..=p_max`.
fn resolve_lag(
    frame: &SeriesFrame,
    choice: LagChoice,
    p_max: usize,
    criterion: Criterion,
) -> Result<(usize, bool), AppError> {
    match choice {
        LagChoice::Fixed(p) => Ok((p, false)),
        LagChoice::Auto => {
            let table = select_lag(frame, p_max)?;
            Ok((table.chosen_by(criterion), true))
        }
    }
}

/// Prints the stability verdict, warning on stderr when the fit is unstable.
fn report_stability(model: &VarModel) {
    let report = check_stability(model);
    let top = report.eigenvalue_moduli.first().copied().unwrap_or(0.0);
    if report.is_stable {
        println!(
            "stability: stable (largest eigenvalue modulus {}, margin {})",
            sig6(top),
            sig6(report.margin)
        );
    } else {
        println!("stability: UNSTABLE (largest eigenvalue modulus {})", sig6(top));
        eprintln!(
            "warning: fitted model is unstable (largest companion eigenvalue modulus {} >= 1); \
             forecasts will not revert to a finite mean",
            sig6(top)
        );
    }
}

pub fn cmd_ingest(args: &IngestArgs) -> Result<CmdResult, AppError> {
    ensure_out_dir(&args.out_dir)?;
    let mut spec = IngestSpec::new(&args.covid, &args.weather);
    spec.start = Some(args.start);
    spec.end = args.end;
    spec.temp_unit = args.temp_unit;
    spec.columns = args.column_map();

    let (frame, report) = load_frame(&spec)?;

    let frame_path = args.out_dir.join("frame.csv");
    let mut buf = Vec::new();
    write_frame_csv(&frame, &mut buf)?;
    write_bytes(&frame_path, &buf)?;

    let report_path = args.out_dir.join("ingest_report.txt");
    let rendered = report.render();
    write_bytes(&report_path, rendered.as_bytes())?;
    print!("{rendered}");

    Ok(CmdResult {
        inputs: vec![args.covid.clone(), args.weather.clone()],
        outputs: vec![frame_path, report_path],
    })
}

pub fn cmd_corr(args: &CorrArgs) -> Result<CmdResult, AppError> {
    ensure_out_dir(&args.out_dir)?;
    let frame = read_frame(&args.frame)?;
    let corr = correlation_matrix(&frame)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["variable".to_string()];
    header.extend(frame.names().iter().cloned());
    w.write_record(&header).expect("write corr header");
    for (i, name) in frame.names().iter().enumerate() {
        let mut row = vec![name.clone()];
        for j in 0..frame.width() {
            row.push(sig6(corr[(i, j)]));
        }
        w.write_record(&row).expect("write corr row");
    }
    let out_path = args.out_dir.join("corr.csv");
    write_bytes(&out_path, &finish_csv(w))?;
    println!("correlation matrix: {} variables -> {}", frame.width(), out_path.display());

    Ok(CmdResult { inputs: vec![args.frame.clone()], outputs: vec![out_path] })
}

pub fn cmd_coint(args: &CointArgs) -> Result<CmdResult, AppError> {
    ensure_out_dir(&args.out_dir)?;
    let frame = read_frame(&args.frame)?;
    let target = &args.target;
    let x = frame.column_by_name(target)?;
    let x: Vec<f64> = x.iter().copied().collect();

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["variable", "statistic", "p_value", "cointegrated", "slope", "intercept"])
        .expect("write coint header");
    for name in frame.names() {
        if name == target {
            continue;
        }
        let y: Vec<f64> = frame
            .column_by_name(name)
            .expect("listed name exists")
            .iter()
            .copied()
            .collect();
        let r = varcast::cointegration::engle_granger(&y, &x)?;
        w.write_record([
            name.clone(),
            sig6(r.statistic),
            sig6(r.p_value),
            r.cointegrated.to_string(),
            sig6(r.regression_slope),
            sig6(r.regression_intercept),
        ])
        .expect("write coint row");
        println!(
            "{name} vs {target}: statistic {}, p {}, cointegrated {}",
            sig6(r.statistic),
            sig6(r.p_value),
            r.cointegrated
        );
    }
    let out_path = args.out_dir.join("coint.csv");
    write_bytes(&out_path, &finish_csv(w))?;

    Ok(CmdResult { inputs: vec![args.frame.clone()], outputs: vec![out_path] })
}

pub fn cmd_select_lag(args: &SelectLagArgs) -> Result<CmdResult, AppError> {
    ensure_out_dir(&args.out_dir)?;
    let frame = read_frame(&args.frame)?;
    let table = select_lag(&frame, args.p_max)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["lag", "aic", "hqc", "sc", "fpe"]).expect("write lag header");
    for row in &table.rows {
        w.write_record([
            row.lag.to_string(),
            sig6(row.aic),
            sig6(row.hqc),
            sig6(row.sc),
            sig6(row.fpe),
        ])
        .expect("write lag row");
    }
    w.write_record([
        "chosen".to_string(),
        table.chosen.aic.to_string(),
        table.chosen.hqc.to_string(),
        table.chosen.sc.to_string(),
        table.chosen.fpe.to_string(),
    ])
    .expect("write chosen footer");
    let out_path = args.out_dir.join("lag_selection.csv");
    write_bytes(&out_path, &finish_csv(w))?;
    println!(
        "lag selection over 1..={} on {} common observations: aic {}, hqc {}, sc {}, fpe {}",
        args.p_max,
        table.effective_sample,
        table.chosen.aic,
        table.chosen.hqc,
        table.chosen.sc,
        table.chosen.fpe
    );

    Ok(CmdResult { inputs: vec![args.frame.clone()], outputs: vec![out_path] })
}

pub fn cmd_fit(args: &FitArgs) -> Result<CmdResult, AppError> {
    ensure_out_dir(&args.out_dir)?;
    let frame = read_frame(&args.frame)?;
    let (p, was_auto) = resolve_lag(&frame, args.lag, args.p_max, args.criterion)?;
    if was_auto {
        println!("lag: {p} (argmin {} over 1..={})", args.criterion.label(), args.p_max);
    } else {
        println!("lag: {p} (fixed)");
    }

    let model = fit_var(&frame, p)?;

    let model_path = args.out_dir.join("model.json");
    save_model(&model, &model_path)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["equation", "regressor", "estimate"]).expect("write coef header");
    for (eq, eq_name) in model.names.iter().enumerate() {
        w.write_record([eq_name.clone(), "const".to_string(), sig6(model.intercept[eq])])
            .expect("write coef row");
        for (j, phi) in model.coeffs.iter().enumerate() {
            for (k, reg_name) in model.names.iter().enumerate() {
                w.write_record([
                    eq_name.clone(),
                    format!("{reg_name}.l{}", j + 1),
                    sig6(phi[(eq, k)]),
                ])
                .expect("write coef row");
            }
        }
    }
    let coef_path = args.out_dir.join("coefficients.csv");
    write_bytes(&coef_path, &finish_csv(w))?;

    report_stability(&model);
    match information_criteria(&model) {
        Ok(ic) => println!(
            "criteria: aic {}, hqc {}, sc {}, fpe {}",
            sig6(ic.aic),
            sig6(ic.hqc),
            sig6(ic.sc),
            sig6(ic.fpe)
        ),
        Err(e) => println!("criteria: unavailable ({e})"),
    }
    println!("model: {} equations, lag {p}, {} observations -> {}", model.dim(), model.n_obs, model_path.display());

    Ok(CmdResult {
        inputs: vec![args.frame.clone()],
        outputs: vec![model_path, coef_path],
    })
}

pub fn cmd_diagnose(args: &DiagnoseArgs) -> Result<CmdResult, AppError> {
    ensure_out_dir(&args.out_dir)?;
    let frame = read_frame(&args.frame)?;
    let model = load_model(&args.model)?.to_model(&frame)?;
    let lb_lags = args
        .lb_lags
        .unwrap_or_else(|| 20usize.max(model.dim() * model.p + 10));

    let diags = residual_diagnostics(&model, lb_lags)?;

    let mut table = csv::Writer::from_writer(Vec::new());
    table
        .write_record(["variable", "mean", "lb_statistic", "lb_lags", "lb_dof", "lb_p_value", "exact_fit"])
        .expect("write diag header");
    let mut acf_csv = csv::Writer::from_writer(Vec::new());
    acf_csv.write_record(["variable", "lag", "acf"]).expect("write acf header");

    let mut worst: Option<(f64, &str)> = None;
    for d in &diags {
        match &d.outcome {
            DiagnosticOutcome::ExactFit => {
                table
                    .write_record([
                        d.name.clone(),
                        sig6(d.mean),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        "true".to_string(),
                    ])
                    .expect("write diag row");
                println!("{}: residuals numerically zero (exact fit), whiteness test skipped", d.name);
            }
            DiagnosticOutcome::Tested { acf, ljung_box } => {
                table
                    .write_record([
                        d.name.clone(),
                        sig6(d.mean),
                        sig6(ljung_box.statistic),
                        ljung_box.lags.to_string(),
                        ljung_box.dof.to_string(),
                        sig6(ljung_box.p_value),
                        "false".to_string(),
                    ])
                    .expect("write diag row");
                for (lag, value) in acf.iter().enumerate().skip(1) {
                    acf_csv
                        .write_record([d.name.clone(), lag.to_string(), sig6(*value)])
                        .expect("write acf row");
                }
                println!(
                    "{}: mean {}, Ljung-Box Q {} on {} dof, p {}",
                    d.name,
                    sig6(d.mean),
                    sig6(ljung_box.statistic),
                    ljung_box.dof,
                    sig6(ljung_box.p_value)
                );
                if worst.is_none_or(|(p, _)| ljung_box.p_value < p) {
                    worst = Some((ljung_box.p_value, &d.name));
                }
            }
        }
    }
    match worst {
        Some((p, name)) => println!("worst Ljung-Box p-value: {} ({name})", sig6(p)),
        None => println!("all residual columns are exact fits; no whiteness tests ran"),
    }

    let diag_path = args.out_dir.join("diagnostics.csv");
    write_bytes(&diag_path, &finish_csv(table))?;
    let acf_path = args.out_dir.join("residual_acf.csv");
    write_bytes(&acf_path, &finish_csv(acf_csv))?;

    Ok(CmdResult {
        inputs: vec![args.model.clone(), args.frame.clone()],
        outputs: vec![diag_path, acf_path],
    })
}

pub fn cmd_forecast(args: &ForecastArgs) -> Result<CmdResult, AppError> {
    ensure_out_dir(&args.out_dir)?;
    let full = read_frame(&args.frame)?;
    let history = match args.from {
        Some(date) => full.truncate_through(date)?,
        None => full,
    };

    let mut inputs = vec![args.frame.clone()];
    let model = match &args.model {
        Some(model_path) => {
            if args.lag.is_some() {
                return Err(AppError::usage(
                    "pass either --model or --lag, not both: a saved model already fixes the lag order",
                ));
            }
            inputs.push(model_path.clone());
            load_model(model_path)?.to_model(&history)?
        }
        None => {
            let choice = args.lag.unwrap_or(LagChoice::Auto);
            let (p, was_auto) = resolve_lag(&history, choice, args.p_max, args.criterion)?;
            if was_auto {
                println!("lag: {p} (argmin {} over 1..={})", args.criterion.label(), args.p_max);
            } else {
                println!("lag: {p} (fixed)");
            }
            fit_var(&history, p)?
        }
    };

    let mut fc = forecast(&model, &history, args.horizon, args.level)?;
    if args.clip_zero {
        fc.clip_lower_at_zero();
    }

    let mut buf = Vec::new();
    write_forecast_csv(&fc, &mut buf)?;
    let out_path = args.out_dir.join("forecast.csv");
    write_bytes(&out_path, &buf)?;
    println!(
        "forecast: {} steps from {} at level {}{} -> {}",
        fc.horizon,
        fc.origin_date,
        fc.level,
        if args.clip_zero { ", lower bounds clipped at 0" } else { "" },
        out_path.display()
    );

    Ok(CmdResult { inputs, outputs: vec![out_path] })
}

pub fn cmd_backtest(args: &BacktestArgs) -> Result<CmdResult, AppError> {
    ensure_out_dir(&args.out_dir)?;
    let frame = read_frame(&args.frame)?;
    let config = args.to_config();
    let report = varcast::backtest::run_backtest(&frame, &config)?;

    let mut rows_buf = Vec::new();
    varcast::backtest::write_backtest_csv(&report.rows, &mut rows_buf)?;
    let rows_path = args.out_dir.join("backtest_rows.csv");
    write_bytes(&rows_path, &rows_buf)?;

    let mut summary_buf = Vec::new();
    varcast::backtest::write_summary_csv(&report.summary, &mut summary_buf)?;
    let summary_path = args.out_dir.join("backtest_summary.csv");
    write_bytes(&summary_path, &summary_buf)?;

    let mut lags = csv::Writer::from_writer(Vec::new());
    lags.write_record(["cutoff", "lag"]).expect("write lags header");
    for (cutoff, lag) in &report.lags_used {
        lags.write_record([cutoff.to_string(), lag.to_string()]).expect("write lags row");
    }
    let lags_path = args.out_dir.join("backtest_lags.csv");
    write_bytes(&lags_path, &finish_csv(lags))?;

    let mut outputs = vec![rows_path, summary_path, lags_path];
    if report.comparison_weekday.is_some() {
        let mut buf = Vec::new();
        varcast::backtest::write_backtest_csv(report.comparison_rows(), &mut buf)?;
        let cmp_path = args.out_dir.join("backtest_comparison.csv");
        write_bytes(&cmp_path, &buf)?;
        outputs.push(cmp_path);
    }

    for s in &report.summary {
        println!(
            "cutoff {}: coverage {}, mean |error| {}, mean interval width {}",
            s.cutoff,
            s.coverage_rate.map_or_else(|| "n/a".to_string(), sig6),
            s.mean_abs_error.map_or_else(|| "n/a".to_string(), sig6),
            sig6(s.mean_interval_width)
        );
    }

    Ok(CmdResult { inputs: vec![args.frame.clone()], outputs })
}

/// Replays a recorded run: verifies the input hashes, re-executes the
/// recorded argv in-process, then verifies the output hashes.
pub fn cmd_rerun(manifest_path: &Path) -> Result<CmdResult, AppError> {
    let manifest = crate::manifest::Manifest::load(manifest_path)?;
    if manifest.subcommand == "rerun" {
        return Err(AppError::usage("refusing to replay a manifest that records a rerun"));
    }
    if manifest.tool != "varcast" {
        return Err(AppError::manifest_verify(format!(
            "manifest records tool `{}`, expected `varcast`",
            manifest.tool
        )));
    }
    if manifest.version != varcast::VERSION {
        println!(
            "note: manifest was written by varcast {}, this is {}",
            manifest.version,
            varcast::VERSION
        );
    }

    crate::manifest::Manifest::verify_hashes(&manifest.inputs, "input")?;

    crate::run_recorded(&manifest.args)?;

    crate::manifest::Manifest::verify_hashes(&manifest.outputs, "output")?;
    println!(
        "rerun ok: {} reproduced bit-identically ({} inputs, {} outputs verified)",
        manifest.subcommand,
        manifest.inputs.len(),
        manifest.outputs.len()
    );

    Ok(CmdResult { inputs: vec![manifest_path.to_path_buf()], outputs: Vec::new() })
}

/// Parses an ISO `YYYY-MM-DD` date for a clap flag.
pub fn parse_iso_date(s: &str) -> Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map_err(|_| format!("`{s}` is not a YYYY-MM-DD date"))
}
