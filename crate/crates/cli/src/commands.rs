use std::io::Write;

use gmwm::io::Channel;
use gmwm::sim::{simulate, SimSpec};
use gmwm::wv::{avar, compare_wvar, fmt_num, hvar, wvar_with, ClusterConfig, ClusterStat, ComparisonReport, WvConfig};
use gmwm::implied::implied_wv_at;
use gmwm::{auto_rank, gmwm_fit, implied_wv, parse_model, rank_models, FitResult, RankOptions, RankingTable, Transform, WicMethod, WvSeries64};
use serde::Serialize;

use crate::args::{AutoArgs, ClusterArgs, CompareArgs, FitArgs, ImportArgs, MethodArg, PlotArgs, PlotOut, RankArgs, SimulateArgs, TransformArg, WvarArgs};
use crate::config::Settings;
use crate::error::{CliError, CliResult};
use crate::input::{load, pick, pick_all};
use crate::output::{sink, write_json};
use crate::plot::{self, PlotKind, PlotRow, PlotSpec, Role};

fn spec(p: &PlotOut, kind: PlotKind) -> PlotSpec {
    PlotSpec {
        kind,
        ci: !p.no_ci,
        title: p.title.clone(),
    }
}

fn maybe_plot(p: &PlotOut, kind: PlotKind, rows: impl FnOnce() -> CliResult<Vec<PlotRow>>) -> CliResult<()> {
    match &p.plot {
        Some(path) => plot::write_plot(path, &rows()?, &spec(p, kind)),
        None => Ok(()),
    }
}

fn wv_rows(panel: &str, series: &str, wv: &WvSeries64) -> Vec<PlotRow> {
    (0..wv.len())
        .map(|i| PlotRow::new(panel, series, Role::Empirical, wv.scales[i], wv.estimates[i]).with_ci(wv.ci_lo[i], wv.ci_hi[i]))
        .collect()
}

fn method(m: Option<MethodArg>) -> Option<WicMethod> {
    m.map(|m| match m {
        MethodArg::Bootstrap => WicMethod::Bootstrap,
        MethodArg::Fast => WicMethod::Fast,
    })
}

pub fn import(a: &ImportArgs, s: &Settings) -> CliResult<()> {
    let ds = load(&a.input, s)?;
    let mut out = sink(s.output.as_deref())?;
    if s.json {
        write_json(&mut *out, "dataset", &ds)
    } else {
        ds.write_csv(&mut out)?;
        Ok(())
    }
}

#[derive(Serialize)]
struct WvDoc<'a> {
    channel: String,
    wv: &'a WvSeries64,
}

fn wv_of(c: &Channel, freq: f64, levels: Option<usize>, alpha: f64, transform: Transform, eff: Option<f64>) -> CliResult<WvSeries64> {
    let cfg = WvConfig {
        levels,
        transform,
        alpha,
        freq,
        efficiency: eff,
        ..WvConfig::default()
    };
    Ok(wvar_with(&c.samples, &cfg)?)
}

pub fn wvar(a: &WvarArgs, s: &Settings) -> CliResult<()> {
    let ds = load(&a.input, s)?;
    let c = pick(&ds, &a.channel)?;
    let transform = match a.transform {
        TransformArg::Modwt => Transform::Modwt,
        TransformArg::Dwt => Transform::Dwt,
    };
    let wv = wv_of(c, ds.freq, s.levels(a.levels), s.alpha(a.alpha), transform, s.efficiency())?;
    let label = c.label();
    maybe_plot(&a.plot, PlotKind::Wv, || {
        Ok(wv_rows(&label, if wv.robust { "robust WV" } else { "WV" }, &wv))
    })?;
    let mut out = sink(s.output.as_deref())?;
    if s.json {
        write_json(&mut *out, "wv", &WvDoc { channel: label, wv: &wv })
    } else {
        wv.write_csv(&mut out)?;
        Ok(())
    }
}

pub fn cluster(a: &ClusterArgs, s: &Settings, stat: ClusterStat) -> CliResult<()> {
    let ds = load(&a.input, s)?;
    let c = pick(&ds, &a.channel)?;
    let stat = if a.modified {
        if stat != ClusterStat::Allan {
            return Err(CliError::usage("--modified applies to avar only"));
        }
        ClusterStat::ModifiedAllan
    } else {
        stat
    };
    let cfg = ClusterConfig {
        overlapping: a.overlapping || stat == ClusterStat::ModifiedAllan,
        freq: ds.freq,
        alpha: s.alpha(a.alpha),
        ..ClusterConfig::new(stat)
    };
    let av = if stat == ClusterStat::Hadamard {
        hvar(&c.samples, &cfg)?
    } else {
        avar(&c.samples, &cfg)?
    };
    let label = c.label();
    let series = match stat {
        ClusterStat::Allan => "Allan variance",
        ClusterStat::ModifiedAllan => "modified Allan variance",
        ClusterStat::Hadamard => "Hadamard variance",
    };
    maybe_plot(&a.plot, PlotKind::Wv, || {
        Ok((0..av.m.len())
            .map(|i| PlotRow::new(&label, series, Role::Empirical, av.tau[i], av.estimates[i]).with_ci(av.ci_lo[i], av.ci_hi[i]))
            .collect())
    })?;
    let mut out = sink(s.output.as_deref())?;
    if s.json {
        #[derive(Serialize)]
        struct Doc<'a, T> {
            channel: String,
            cluster: &'a T,
        }
        write_json(&mut *out, "cluster", &Doc { channel: label, cluster: &av })
    } else {
        av.write_csv(&mut out)?;
        Ok(())
    }
}

pub fn fit(a: &FitArgs, s: &Settings) -> CliResult<()> {
    let ds = load(&a.input, s)?;
    let c = pick(&ds, &a.channel)?;
    let model = parse_model(&a.model, ds.freq)?;
    let fit = gmwm_fit(&c.samples, &model, &s.fit_options(&a.estimation))?;
    let label = c.label();
    let kind = if a.decomposition { PlotKind::FitDecomposition } else { PlotKind::FitOverlay };
    maybe_plot(&a.plot, kind, || fit_rows(&label, &fit, a.decomposition))?;
    let mut out = sink(s.output.as_deref())?;
    if a.summary && !s.json {
        write!(out, "Channel: {label}\n{}", fit.summary())?;
        out.flush()?;
        return Ok(());
    }
    #[derive(Serialize)]
    struct Doc<'a> {
        channel: String,
        fit: &'a FitResult,
    }
    write_json(&mut *out, "fit", &Doc { channel: label, fit: &fit })
}

fn fit_rows(panel: &str, fit: &FitResult, decomposition: bool) -> CliResult<Vec<PlotRow>> {
    let mut rows = wv_rows(panel, "empirical WV", &fit.wv);
    let name = fit.model.render();
    for (i, v) in fit.implied.iter().enumerate() {
        rows.push(PlotRow::new(panel, &format!("implied {name}"), Role::Implied, fit.wv.scales[i], *v));
    }
    if decomposition {
        let parts = implied_wv(&fit.model, fit.wv.len())?;
        for (k, (label, values)) in parts.block_labels.iter().zip(&parts.decomposition).enumerate() {
            let repeated = parts.block_labels.iter().filter(|l| *l == label).count() > 1;
            let label = if repeated {
                let nth = parts.block_labels[..=k].iter().filter(|l| *l == label).count();
                format!("{label}[{nth}]")
            } else {
                label.clone()
            };
            for (i, v) in values.iter().enumerate() {
                rows.push(PlotRow::new(panel, &label, Role::Component, fit.wv.scales[i], *v));
            }
        }
    }
    Ok(rows)
}

pub fn rank(a: &RankArgs, s: &Settings) -> CliResult<()> {
    let ds = load(&a.input, s)?;
    let c = pick(&ds, &a.channel)?;
    let models = a.models.iter().map(|m| parse_model(m, ds.freq)).collect::<Result<Vec<_>, _>>()?;
    let opts = RankOptions {
        fit: s.fit_options(&a.estimation),
        method: method(a.method),
        ..RankOptions::default()
    };
    let table = rank_models(&c.samples, &models, &opts)?;
    let mut out = sink(s.output.as_deref())?;
    if s.json {
        #[derive(Serialize)]
        struct Doc<'a> {
            channel: String,
            ranking: &'a RankingTable,
        }
        write_json(&mut *out, "ranking", &Doc { channel: c.label(), ranking: &table })
    } else if a.pretty {
        write!(out, "{}", table.pretty())?;
        out.flush()?;
        Ok(())
    } else {
        table.write_csv(&mut out)?;
        Ok(())
    }
}

#[derive(Serialize)]
struct ChannelRanking {
    channel: String,
    ranking: RankingTable,
}

pub fn auto(a: &AutoArgs, s: &Settings) -> CliResult<()> {
    let ds = load(&a.input, s)?;
    let full = parse_model(&a.model, ds.freq)?;
    let opts = RankOptions {
        fit: s.fit_options(&a.estimation),
        method: method(a.method),
        cap: a.cap,
    };
    let mut results = Vec::new();
    for c in pick_all(&ds, &a.channel)? {
        let ranking = auto_rank(&c.samples, &full, &opts)?;
        results.push((c, ChannelRanking { channel: c.label(), ranking }));
    }
    maybe_plot(&a.plot, PlotKind::AutoGrid, || {
        let mut rows = Vec::new();
        for (c, r) in &results {
            let t = &r.ranking;
            let wv = wv_of(c, ds.freq, Some(t.levels), opts.fit.alpha, Transform::Modwt, opts.fit.robust.then_some(opts.fit.efficiency))?;
            rows.extend(wv_rows(&r.channel, "empirical WV", &wv));
            if let Some(best) = t.best() {
                let m = parse_model(&best.model, ds.freq)?;
                let v = implied_wv_at(&m, &best.theta, t.levels)?;
                for (i, y) in v.values.iter().enumerate() {
                    rows.push(PlotRow::new(&r.channel, &best.model, Role::Implied, wv.scales[i], *y));
                }
            }
        }
        Ok(rows)
    })?;
    let mut out = sink(s.output.as_deref())?;
    if s.json {
        #[derive(Serialize)]
        struct Doc<'a> {
            model: String,
            channels: Vec<&'a ChannelRanking>,
        }
        return write_json(
            &mut *out,
            "auto",
            &Doc {
                model: full.render(),
                channels: results.iter().map(|r| &r.1).collect(),
            },
        );
    }
    let mut w = csv::Writer::from_writer(&mut out);
    let mut header = vec!["channel"];
    header.extend(gmwm::selection::RANKING_COLUMNS);
    w.write_record(&header)?;
    for (_, r) in &results {
        for rec in r.ranking.csv_records() {
            w.write_record(std::iter::once(r.channel.clone()).chain(rec))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn compare(a: &CompareArgs, s: &Settings) -> CliResult<()> {
    let ds = load(&a.input, s)?;
    let c = pick(&ds, &a.channel)?;
    let levels = s.levels(a.levels);
    let alpha = s.alpha(a.alpha);
    let classical = wv_of(c, ds.freq, levels, alpha, Transform::Modwt, None)?;
    let robust = wv_of(c, ds.freq, levels, alpha, Transform::Modwt, Some(s.eff))?;
    let report = compare_wvar(&classical, &robust)?;
    let label = c.label();
    maybe_plot(&a.plot, PlotKind::WvCompare, || {
        let mut rows = wv_rows(&label, "classical WV", &classical);
        rows.extend(wv_rows(&label, &format!("robust WV (eff {})", s.eff), &robust));
        Ok(rows)
    })?;
    let mut out = sink(s.output.as_deref())?;
    if s.json {
        #[derive(Serialize)]
        struct Doc<'a> {
            channel: String,
            classical: &'a WvSeries64,
            robust: &'a WvSeries64,
            report: &'a ComparisonReport,
        }
        return write_json(
            &mut *out,
            "compare",
            &Doc {
                channel: label,
                classical: &classical,
                robust: &robust,
                report: &report,
            },
        );
    }
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record([
        "scale", "classical", "classical_lo", "classical_hi", "robust", "robust_lo", "robust_hi", "ratio", "overlap",
    ])?;
    for i in 0..classical.len() {
        w.write_record([
            fmt_num(classical.scales[i]),
            fmt_num(classical.estimates[i]),
            fmt_num(classical.ci_lo[i]),
            fmt_num(classical.ci_hi[i]),
            fmt_num(robust.estimates[i]),
            fmt_num(robust.ci_lo[i]),
            fmt_num(robust.ci_hi[i]),
            fmt_num(report.ratios[i]),
            report.overlap[i].to_string(),
        ])?;
    }
    w.flush()?;
    eprintln!("{label}: {} ({} scales with disjoint intervals)", report.verdict, report.disjoint_scales);
    Ok(())
}

pub fn simulate_cmd(a: &SimulateArgs, s: &Settings) -> CliResult<()> {
    let parsed = parse_model(&a.model, s.freq.unwrap_or(1.0))?;
    let missing: Vec<String> = parsed
        .param_labels()
        .into_iter()
        .zip(parsed.starts())
        .filter_map(|(l, v)| v.is_none().then_some(l))
        .collect();
    if !missing.is_empty() {
        return Err(CliError::usage(format!("simulate needs a value for every parameter; missing: {}", missing.join(", "))));
    }
    let theta = parsed.starts().into_iter().flatten().collect();
    let model = parsed.with_theta(theta)?;
    let values = simulate(&SimSpec {
        model: model.clone(),
        len: a.length,
        seed: s.seed,
        burn_in: a.burn_in,
    })?;
    let mut out = sink(s.output.as_deref())?;
    if s.json {
        #[derive(Serialize)]
        struct Doc<'a> {
            model: String,
            freq: f64,
            seed: u64,
            values: &'a [f64],
        }
        return write_json(
            &mut *out,
            "simulation",
            &Doc {
                model: model.render(),
                freq: model.freq,
                seed: s.seed,
                values: &values,
            },
        );
    }
    writeln!(out, "value")?;
    for v in &values {
        writeln!(out, "{}", fmt_num(*v))?;
    }
    out.flush()?;
    Ok(())
}

pub fn plot_cmd(a: &PlotArgs, s: &Settings) -> CliResult<()> {
    let f = std::fs::File::open(&a.data).map_err(|e| CliError::data(format!("cannot read {}: {e}", a.data.display())))?;
    let rows = plot::read_rows_csv(f)?;
    let spec = PlotSpec {
        kind: a.kind,
        ci: !a.no_ci,
        title: a.title.clone(),
    };
    let svg = plot::render(&rows, &spec)?;
    let mut out = sink(s.output.as_deref())?;
    out.write_all(svg.as_bytes())?;
    out.flush()?;
    Ok(())
}
