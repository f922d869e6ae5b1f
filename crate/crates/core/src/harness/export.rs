//! Run artifacts: rounds.csv, summary.json and curves.svg.
//!
//! CSV floats print in Rust's shortest round-trip form, so identical runs
//! produce byte-identical files. Layout under the output directory:
//! `seed_<s>/rounds.csv` per seed, plus `summary.json` and `curves.svg` at
//! the top; `compare` nests one such tree per policy and overlays all
//! policies in a single top-level `curves.svg`.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;

use super::{
    aggregate_runs, mean_selection_counts, AggregateSeries, ExperimentConfig, RoundRecord,
    RunOutput,
};

/// The three aggregated cumulative series of one policy's runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerRoundAggregates {
    pub cum_net_reward: AggregateSeries,
    pub cum_cost: AggregateSeries,
    pub cum_regret: AggregateSeries,
}

/// Payload of summary.json.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentSummary<'a> {
    pub config: &'a ExperimentConfig,
    pub per_round: PerRoundAggregates,
    /// Mean selection counts across seeds, indexed [subtask][arm]; each
    /// subtask row sums to the horizon.
    pub selection_counts: Vec<Vec<f64>>,
    pub runtime_seconds: f64,
}

/// One policy's curves for the SVG panels.
#[derive(Debug, Clone)]
pub struct PolicyCurves {
    pub name: String,
    pub aggregates: PerRoundAggregates,
}

/// Writes one run's per-round records with the exact column order
/// `t, choice_*, r_*, super_reward, predicted_cost, realized_cost,
/// net_reward, oracle_reward, regret_increment, cum_regret,
/// cum_net_reward, cum_cost`.
pub fn write_rounds_csv(path: &Path, rounds: &[RoundRecord]) -> io::Result<()> {
    let k = rounds.first().map(|r| r.choices.len()).unwrap_or(0);
    let mut out = String::new();
    out.push('t');
    for i in 1..=k {
        let _ = write!(out, ",choice_{i}");
    }
    for i in 1..=k {
        let _ = write!(out, ",r_{i}");
    }
    out.push_str(
        ",super_reward,predicted_cost,realized_cost,net_reward,oracle_reward,\
         regret_increment,cum_regret,cum_net_reward,cum_cost",
    );
    out.push('\n');

    let (mut cum_regret, mut cum_net, mut cum_cost) = (0.0f64, 0.0f64, 0.0f64);
    for r in rounds {
        cum_regret += r.regret_increment;
        cum_net += r.net_reward;
        cum_cost += r.realized_costs.iter().sum::<f64>();
        let _ = write!(out, "{}", r.t);
        for c in &r.choices {
            let _ = write!(out, ",{c}");
        }
        for v in &r.base_rewards {
            let _ = write!(out, ",{v}");
        }
        let predicted: f64 = r.predicted_costs.iter().sum();
        let realized: f64 = r.realized_costs.iter().sum();
        let _ = write!(
            out,
            ",{},{},{},{},{},{},{},{},{}\n",
            r.super_reward,
            predicted,
            realized,
            r.net_reward,
            r.oracle_reward,
            r.regret_increment,
            cum_regret,
            cum_net,
            cum_cost
        );
    }
    fs::write(path, out)
}

pub fn write_summary_json(path: &Path, summary: &ExperimentSummary<'_>) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(summary).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

const PALETTE: [&str; 6] = [
    "#c0392b", "#2980b9", "#27ae60", "#8e44ad", "#d68910", "#16a085",
];

struct Panel<'a> {
    title: &'a str,
    extract: fn(&PerRoundAggregates) -> &AggregateSeries,
}

/// Renders cumulative net reward, cost and regret as three SVG panels with a
/// mean line and a mean±std band per policy.
pub fn write_curves_svg(path: &Path, curves: &[PolicyCurves]) -> io::Result<()> {
    let panels = [
        Panel {
            title: "cumulative net reward",
            extract: |a| &a.cum_net_reward,
        },
        Panel {
            title: "cumulative cost",
            extract: |a| &a.cum_cost,
        },
        Panel {
            title: "cumulative regret",
            extract: |a| &a.cum_regret,
        },
    ];
    let (pw, ph, margin, gap, legend_h) = (360.0, 280.0, 44.0, 24.0, 22.0);
    let width = 3.0 * pw + 2.0 * gap + 2.0 * margin;
    let height = ph + 2.0 * margin + legend_h;

    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" \
         viewBox=\"0 0 {width:.0} {height:.0}\" font-family=\"sans-serif\" font-size=\"11\">\n"
    );
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    for (ci, curve) in curves.iter().enumerate() {
        let color = PALETTE[ci % PALETTE.len()];
        let x = margin + ci as f64 * 130.0;
        let _ = write!(
            svg,
            "<rect x=\"{x:.1}\" y=\"{:.1}\" width=\"12\" height=\"12\" fill=\"{color}\"/>\
             <text x=\"{:.1}\" y=\"{:.1}\">{}</text>\n",
            margin - 30.0,
            x + 16.0,
            margin - 20.0,
            xml_escape(&curve.name)
        );
    }

    for (pi, panel) in panels.iter().enumerate() {
        let left = margin + pi as f64 * (pw + gap);
        let top = margin + legend_h;
        let bottom = top + ph;

        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut horizon = 1usize;
        for curve in curves {
            let series = (panel.extract)(&curve.aggregates);
            horizon = horizon.max(series.mean.len());
            for (m, s) in series.mean.iter().zip(&series.std) {
                lo = lo.min(m - s);
                hi = hi.max(m + s);
            }
        }
        if !lo.is_finite() || !hi.is_finite() {
            lo = 0.0;
            hi = 1.0;
        }
        if (hi - lo).abs() < 1e-12 {
            hi = lo + 1.0;
        }
        let pad = 0.05 * (hi - lo);
        let (lo, hi) = (lo - pad, hi + pad);
        let sx = |t: f64| left + (t / horizon as f64) * pw;
        let sy = |v: f64| bottom - (v - lo) / (hi - lo) * ph;

        let _ = write!(
            svg,
            "<rect x=\"{left:.1}\" y=\"{top:.1}\" width=\"{pw:.1}\" height=\"{ph:.1}\" \
             fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
            left + pw / 2.0,
            top - 6.0,
            panel.title
        );
        let _ = write!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{hi:.3}</text>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{lo:.3}</text>\n\
             <text x=\"{left:.1}\" y=\"{:.1}\">1</text>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{horizon}</text>\n",
            left - 4.0,
            top + 10.0,
            left - 4.0,
            bottom,
            bottom + 14.0,
            left + pw,
            bottom + 14.0,
        );

        for (ci, curve) in curves.iter().enumerate() {
            let color = PALETTE[ci % PALETTE.len()];
            let series = (panel.extract)(&curve.aggregates);
            let n = series.mean.len();
            if n == 0 {
                continue;
            }
            let stride = (n / 400).max(1);
            let points: Vec<usize> = (0..n)
                .step_by(stride)
                .chain(std::iter::once(n - 1))
                .collect();

            let mut band = String::new();
            for &idx in &points {
                let _ = write!(
                    band,
                    "{:.2},{:.2} ",
                    sx((idx + 1) as f64),
                    sy(series.mean[idx] + series.std[idx])
                );
            }
            for &idx in points.iter().rev() {
                let _ = write!(
                    band,
                    "{:.2},{:.2} ",
                    sx((idx + 1) as f64),
                    sy(series.mean[idx] - series.std[idx])
                );
            }
            let _ = write!(
                svg,
                "<polygon points=\"{}\" fill=\"{color}\" fill-opacity=\"0.15\" stroke=\"none\"/>\n",
                band.trim_end()
            );

            let mut line = String::new();
            for &idx in &points {
                let _ = write!(
                    line,
                    "{:.2},{:.2} ",
                    sx((idx + 1) as f64),
                    sy(series.mean[idx])
                );
            }
            let _ = write!(
                svg,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
                line.trim_end()
            );
        }
    }
    svg.push_str("</svg>\n");
    fs::write(path, svg)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Writes the full artifact tree for one policy's runs: per-seed
/// `seed_<s>/rounds.csv`, plus `summary.json` and `curves.svg`.
pub fn export_experiment(
    config: &ExperimentConfig,
    outputs: &[RunOutput],
    dir: &Path,
    runtime_seconds: f64,
) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    for out in outputs {
        let seed_dir = dir.join(format!("seed_{}", out.summary.seed));
        fs::create_dir_all(&seed_dir)?;
        write_rounds_csv(&seed_dir.join("rounds.csv"), &out.rounds)?;
    }
    let aggregates = aggregate_runs(outputs);
    let summary = ExperimentSummary {
        config,
        per_round: aggregates.clone(),
        selection_counts: mean_selection_counts(outputs),
        runtime_seconds,
    };
    write_summary_json(&dir.join("summary.json"), &summary)?;
    write_curves_svg(
        &dir.join("curves.svg"),
        &[PolicyCurves {
            name: config.policy.name.as_str().into(),
            aggregates,
        }],
    )
}
