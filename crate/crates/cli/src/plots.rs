//! Figure panels drawn from result rows.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use garrote::experiments::report::{CtSummaryRow, SweepRow};
use garrote::experiments::{CtMethod, MethodKind};

use crate::svg::{color, Chart, Scale, Series};

/// Files written and warnings raised while plotting.
#[derive(Debug, Default)]
pub struct PlotLog {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

fn write(dir: &Path, name: &str, chart: &Chart, log: &mut PlotLog) -> std::io::Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, chart.render())?;
    log.files.push(path);
    Ok(())
}

fn bottleneck_name(experiment: &str) -> &'static str {
    match experiment {
        "resample" => "sampling ratio R",
        "denoise" => "noise amplitude α",
        _ => "bottleneck",
    }
}

/// Keyed by the bit pattern so that float keys order and compare exactly.
fn by_bottleneck(rows: &[&SweepRow]) -> BTreeMap<u64, Vec<SweepRow>> {
    let mut out: BTreeMap<u64, Vec<SweepRow>> = BTreeMap::new();
    for r in rows {
        out.entry(r.bottleneck.to_bits()).or_default().push((*r).clone());
    }
    out
}

/// Index of the smallest valid e_gen, ties toward stronger regularization.
fn minimum(method: MethodKind, rows: &[SweepRow]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, r) in rows.iter().enumerate().filter(|(_, r)| r.valid && r.e_gen.is_finite()) {
        let better = match best {
            None => true,
            Some(b) => {
                let b = &rows[b];
                r.e_gen < b.e_gen || (r.e_gen == b.e_gen && method.stronger(r.hyperparam, b.hyperparam))
            }
        };
        if better {
            best = Some(i);
        }
    }
    best
}

/// Train-vs-generalization panels (one per method, one curve per
/// bottleneck value) and the MGE-vs-bottleneck panel.
pub fn sweep_plots(experiment: &str, rows: &[SweepRow], dir: &Path) -> std::io::Result<PlotLog> {
    let mut log = PlotLog::default();
    let mut mge_series = Vec::new();
    for (mi, method) in MethodKind::ALL.into_iter().enumerate() {
        let mine: Vec<&SweepRow> = rows.iter().filter(|r| r.method == method && r.valid).collect();
        if mine.is_empty() {
            log.warnings.push(format!(
                "warning: no valid {} points for {experiment}; panel omitted",
                method.name()
            ));
            continue;
        }
        let mut series = Vec::new();
        let mut mge_points = Vec::new();
        for (k, (bits, mut group)) in by_bottleneck(&mine).into_iter().enumerate() {
            group.sort_by(|a, b| a.hyperparam.total_cmp(&b.hyperparam));
            let b = f64::from_bits(bits);
            let mut s = Series::new(
                format!("{} = {}", bottleneck_name(experiment).split(' ').last().unwrap_or(""), short(b)),
                color(k),
                group.iter().map(|r| (r.e_train, r.e_gen)).collect(),
            );
            if let Some(i) = minimum(method, &group) {
                s.highlight = vec![i];
                mge_points.push((b, group[i].e_gen));
            }
            series.push(s);
        }
        let chart = Chart {
            title: format!("{experiment}: {} train vs generalization error", method.name()),
            x_label: "train error".into(),
            y_label: "generalization error".into(),
            x_scale: Scale::Log,
            y_scale: Scale::Log,
            series,
            diagonal: true,
        };
        write(dir, &format!("{experiment}_traingen_{}.svg", method.name()), &chart, &mut log)?;
        mge_series.push(Series::new(method.name(), color(mi), mge_points));
    }
    if !mge_series.is_empty() {
        let chart = Chart {
            title: format!("{experiment}: minimum generalization error"),
            x_label: bottleneck_name(experiment).into(),
            y_label: "MGE".into(),
            x_scale: if experiment == "denoise" { Scale::Log } else { Scale::Linear },
            y_scale: Scale::Log,
            series: mge_series,
            diagonal: false,
        };
        write(dir, &format!("{experiment}_mge.svg"), &chart, &mut log)?;
    }
    Ok(log)
}

/// MSE against angle count with one-standard-deviation error bars.
pub fn ct_plot(rows: &[CtSummaryRow], dir: &Path) -> std::io::Result<PlotLog> {
    let mut log = PlotLog::default();
    let mut series = Vec::new();
    for (i, method) in [CtMethod::Fbp, CtMethod::Lasso, CtMethod::Vg].into_iter().enumerate() {
        let mut mine: Vec<&CtSummaryRow> = rows.iter().filter(|r| r.method == method && r.mse_mean.is_finite()).collect();
        if mine.is_empty() {
            log.warnings.push(format!("warning: no {} points for ct; curve omitted", method.name()));
            continue;
        }
        mine.sort_by_key(|r| r.k);
        let mut s = Series::new(method.name(), color(i), mine.iter().map(|r| (r.k as f64, r.mse_mean)).collect());
        s.errors = Some(mine.iter().map(|r| r.mse_std).collect());
        series.push(s);
    }
    if series.is_empty() {
        log.warnings.push("warning: no ct results; panel omitted".into());
        return Ok(log);
    }
    let chart = Chart {
        title: "ct: reconstruction MSE".into(),
        x_label: "projection angles K".into(),
        y_label: "MSE (mean ± std)".into(),
        x_scale: Scale::Linear,
        y_scale: Scale::Log,
        series,
        diagonal: false,
    };
    write(dir, "ct_mse.svg", &chart, &mut log)?;
    Ok(log)
}

fn short(v: f64) -> String {
    let s = format!("{v:.4}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method: MethodKind, b: f64, h: f64, e_train: f64, e_gen: f64) -> SweepRow {
        SweepRow {
            method,
            bottleneck: b,
            hyperparam: h,
            e_train,
            e_gen,
            e_gen_std: 0.0,
            valid: true,
        }
    }

    #[test]
    fn missing_method_panel_is_omitted_with_a_warning() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![row(MethodKind::Lasso, 0.1, 0.5, 0.2, 0.3)];
        let log = sweep_plots("resample", &rows, dir.path()).unwrap();
        assert_eq!(log.files.len(), 2);
        assert_eq!(log.warnings.len(), 1);
        assert!(log.warnings[0].contains("vg"));
        let svg = std::fs::read_to_string(dir.path().join("resample_traingen_lasso.svg")).unwrap();
        assert_eq!(svg.matches(r#"class="marker""#).count(), 1);
        assert!(svg.contains(r#"class="diagonal""#));
    }

    #[test]
    fn minimum_prefers_stronger_regularization_on_ties() {
        let rows = vec![
            row(MethodKind::Vg, 0.1, -3.0, 0.1, 0.2),
            row(MethodKind::Vg, 0.1, -8.0, 0.1, 0.2),
            row(MethodKind::Vg, 0.1, -1.0, 0.1, 0.4),
        ];
        assert_eq!(minimum(MethodKind::Vg, &rows), Some(1));
        assert_eq!(minimum(MethodKind::Lasso, &rows), Some(0));
    }

    #[test]
    fn ct_plot_has_error_bars() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![
            CtSummaryRow {
                method: CtMethod::Fbp,
                k: 20,
                mse_mean: 0.01,
                mse_std: 0.0,
                best_hyperparam: None,
            },
            CtSummaryRow {
                method: CtMethod::Vg,
                k: 20,
                mse_mean: 0.005,
                mse_std: 0.001,
                best_hyperparam: Some(-3.0),
            },
        ];
        let log = ct_plot(&rows, dir.path()).unwrap();
        assert_eq!(log.warnings.len(), 1);
        let svg = std::fs::read_to_string(dir.path().join("ct_mse.svg")).unwrap();
        assert_eq!(svg.matches(r#"class="errorbar""#).count(), 1);
    }
}
