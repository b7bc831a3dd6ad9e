//! Report rendering.
//!
//! Markdown output rounds for reading: χ² statistics to 2 decimals, p-values
//! to 3 significant figures (scientific notation below 0.001, e.g.
//! `3.18e-4`), probabilities and rates to 3 decimals. Delimited output is a
//! sequence of `# section` headers each followed by a CSV block with a header
//! row; numbers there are written at full precision so they parse back to the
//! in-memory values. Rendering is a pure function of its inputs.

use std::fmt::Write as _;

use super::compare::RecencyComparison;
use super::result::{inter_batch_summary, ExperimentResult, PromptResult};
use super::sweep::SweepResult;
use crate::crawl::CrawlAggregate;
use crate::stats::{ChiSquareResult, MarkovTestResult};
use crate::types::SamplingMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Delimited,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "delimited" | "csv" => Ok(ReportFormat::Delimited),
            other => Err(format!("unknown report format {other:?} (expected markdown or delimited)")),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum ReportItem<'a> {
    Experiment(&'a ExperimentResult),
    Sweep(&'a SweepResult),
    Comparison {
        label_a: &'a str,
        label_b: &'a str,
        comparison: &'a RecencyComparison,
    },
    Crawl {
        label: &'a str,
        aggregate: &'a CrawlAggregate,
    },
}

pub fn render_report(items: &[ReportItem<'_>], format: ReportFormat) -> String {
    match format {
        ReportFormat::Markdown => {
            let mut out = String::new();
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                markdown_item(&mut out, item);
            }
            out
        }
        ReportFormat::Delimited => delimited(items),
    }
}

/// p-value to 3 significant figures.
pub fn format_p_value(p: f64) -> String {
    if p == 0.0 {
        return "0".into();
    }
    if p < 1e-3 {
        return format!("{p:.2e}");
    }
    let decimals = (2 - p.log10().floor() as i32).max(0) as usize;
    format!("{p:.decimals$}")
}

fn chi(x: f64) -> String {
    format!("{x:.2}")
}

fn prob(x: Option<f64>) -> String {
    x.map_or_else(|| "–".into(), |v| format!("{v:.3}"))
}

fn verdict(reject: bool) -> &'static str {
    if reject {
        "Reject"
    } else {
        "NotReject"
    }
}

fn hp1_cells(u: &Option<ChiSquareResult>) -> [String; 3] {
    match u {
        Some(u) => [chi(u.statistic), format_p_value(u.p_value), verdict(u.reject_null).into()],
        None => ["–".into(), "–".into(), "Untested".into()],
    }
}

fn hp2_cells(m: Option<&MarkovTestResult>) -> [String; 4] {
    match m {
        None => ["–".into(), "–".into(), "–".into(), "Untested".into()],
        Some(m) => {
            let yy = format!("{}/{}", m.counts.n_yy, m.counts.from_yes());
            match m.chi_square {
                Some(c) => [
                    prob(m.p_yes_given_yes),
                    chi(c.statistic),
                    yy,
                    verdict(c.reject_null).into(),
                ],
                None => [prob(m.p_yes_given_yes), "–".into(), yy, "Degenerate".into()],
            }
        }
    }
}

fn table(out: &mut String, header: &[&str], rows: &[Vec<String>]) {
    let _ = writeln!(out, "| {} |", header.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(header.len()));
    for r in rows {
        let _ = writeln!(out, "| {} |", r.join(" | "));
    }
    out.push('\n');
}

fn markdown_item(out: &mut String, item: &ReportItem<'_>) {
    match item {
        ReportItem::Experiment(r) => markdown_experiment(out, r),
        ReportItem::Sweep(s) => markdown_sweep(out, s),
        ReportItem::Comparison {
            label_a,
            label_b,
            comparison,
        } => markdown_comparison(out, label_a, label_b, comparison),
        ReportItem::Crawl { label, aggregate } => markdown_crawl(out, label, aggregate),
    }
}

fn markdown_experiment(out: &mut String, r: &ExperimentResult) {
    let _ = writeln!(
        out,
        "## Experiment {} ({}, {}, T = {}, α = {})\n",
        r.experiment_id, r.model_id, r.mode, r.temperature, r.alpha
    );
    let _ = writeln!(out, "{} calls, {} records.\n", r.calls, r.records);

    let _ = writeln!(out, "### Uniformity (HP1)\n");
    let rows: Vec<Vec<String>> = r
        .prompts
        .iter()
        .map(|p| {
            let mut row = vec![
                p.prompt_id.to_string(),
                p.mode.to_string(),
                p.yes_count.to_string(),
                p.no_count.to_string(),
                p.invalid_count.to_string(),
            ];
            row.extend(hp1_cells(&p.uniformity));
            row
        })
        .collect();
    table(out, &["Prompt", "Mode", "Yes", "No", "Invalid", "χ²", "p-value", "Result"], &rows);

    let _ = writeln!(out, "### Independence (HP2)\n");
    let rows: Vec<Vec<String>> = r
        .prompts
        .iter()
        .map(|p| {
            let mut row = vec![p.prompt_id.to_string(), p.mode.to_string(), prob(p.p_yes())];
            row.extend(hp2_cells(p.markov.as_ref()));
            row
        })
        .collect();
    table(out, &["Prompt", "Mode", "P(Y)", "E[P(Y|Y)]", "χ²", "YY/n", "Result"], &rows);

    let _ = writeln!(out, "### Recency\n");
    let mut rows = Vec::new();
    for p in &r.prompts {
        if let Some(rec) = &p.recency {
            for (w, win) in &rec.per_window {
                rows.push(vec![
                    p.prompt_id.to_string(),
                    p.mode.to_string(),
                    format!("{:.3}", rec.baseline_rate),
                    w.to_string(),
                    win.qualifying_positions.to_string(),
                    prob(win.switch_rate),
                    win.recency_effect.map_or_else(|| "–".into(), |e| format!("{e:+.3}")),
                ]);
            }
        }
    }
    if rows.is_empty() {
        let _ = writeln!(out, "No sequence long enough for recency analysis.\n");
    } else {
        table(
            out,
            &["Prompt", "Mode", "Baseline", "w", "Qualifying", "Switch rate", "Recency effect"],
            &rows,
        );
    }

    let few_shot: Vec<&PromptResult> = r
        .prompts
        .iter()
        .filter(|p| p.mode == SamplingMode::FewShot)
        .collect();
    if r.mode == SamplingMode::FewShot || !few_shot.is_empty() {
        markdown_batches(out, &few_shot);
    }

    let notes: Vec<String> = r
        .prompts
        .iter()
        .flat_map(|p| p.notes.iter().map(move |n| format!("{}: {n}", p.prompt_id)))
        .chain(r.warnings.iter().cloned())
        .collect();
    if !notes.is_empty() {
        let _ = writeln!(out, "### Notes\n");
        for n in notes {
            let _ = writeln!(out, "- {n}");
        }
        out.push('\n');
    }
}

fn markdown_batches(out: &mut String, prompts: &[&PromptResult]) {
    let _ = writeln!(out, "### Batches\n");
    if prompts.iter().all(|p| p.batches.is_empty()) {
        let _ = writeln!(out, "no batches\n");
        return;
    }
    let mut rows = Vec::new();
    for p in prompts {
        for b in &p.batches {
            let mut row = vec![
                p.prompt_id.to_string(),
                b.batch_index.to_string(),
                b.yes_count.to_string(),
                b.no_count.to_string(),
                b.invalid_count.to_string(),
            ];
            row.extend(hp1_cells(&b.uniformity));
            let [pyy, c, yy, res] = hp2_cells(b.markov.as_ref());
            row.extend([pyy, c, yy, res]);
            row.push(if b.length_mismatch { "mismatch" } else { "ok" }.into());
            rows.push(row);
        }
    }
    table(
        out,
        &[
            "Prompt", "Batch", "Yes", "No", "Invalid", "χ²", "p-value", "HP1", "E[P(Y|Y)]",
            "HP2 χ²", "YY/n", "HP2", "Length",
        ],
        &rows,
    );

    let _ = writeln!(out, "### Inter-batch summary\n");
    let rows: Vec<Vec<String>> = prompts
        .iter()
        .filter_map(|p| inter_batch_summary(p).ok().map(|s| (p, s)))
        .map(|(p, s)| {
            vec![
                p.prompt_id.to_string(),
                s.batches.to_string(),
                format!("{:.2}", s.mean_yes_percent),
                chi(s.mean_chi_square),
                chi(s.max_chi_square),
                s.batches_rejecting_hp1.to_string(),
                s.batches_rejecting_hp2.to_string(),
                s.batches_degenerate_hp2.to_string(),
            ]
        })
        .collect();
    table(
        out,
        &[
            "Prompt", "Batches", "Mean Yes %", "Mean χ²", "Max χ²", "HP1 rejections",
            "HP2 rejections", "HP2 degenerate",
        ],
        &rows,
    );
}

fn markdown_sweep(out: &mut String, s: &SweepResult) {
    let _ = writeln!(out, "## Temperature sweep\n");
    let rows: Vec<Vec<String>> = s
        .rows
        .iter()
        .map(|r| {
            vec![
                format!("{:.2}", r.temperature),
                r.prompt_id.to_string(),
                prob(r.p_yes),
                prob(r.p_yes_given_yes),
                format!("{}/{}", r.n_yy, r.n_from_yes),
                r.uniformity.map_or("Untested", |u| verdict(u.reject_null)).into(),
                match (r.independence, r.independence_degenerate) {
                    (Some(c), _) => verdict(c.reject_null),
                    (None, true) => "Degenerate",
                    (None, false) => "Untested",
                }
                .into(),
            ]
        })
        .collect();
    table(out, &["Temperature", "Q", "P(Y)", "P(Y|Y)", "YY/n", "HP1", "HP2"], &rows);
}

fn markdown_comparison(out: &mut String, a: &str, b: &str, c: &RecencyComparison) {
    let _ = writeln!(out, "## Recency comparison: {a} vs {b}\n");
    let _ = writeln!(
        out,
        "Baseline switch rate: {a} {:.3}, {b} {:.3}.\n",
        c.recency_a.baseline_rate, c.recency_b.baseline_rate
    );
    let rows: Vec<Vec<String>> = c
        .windows
        .iter()
        .map(|w| {
            let mut row = vec![
                w.window.to_string(),
                w.qualifying_a.to_string(),
                w.qualifying_b.to_string(),
            ];
            match &w.test {
                Some(t) => row.extend([
                    format!("{:.3}", t.mean_a),
                    format!("{:.3}", t.mean_b),
                    format!("{:.3}", t.t_statistic),
                    format!("{:.1}", t.degrees_of_freedom),
                    format_p_value(t.p_value),
                    verdict(t.reject_null).into(),
                ]),
                None => {
                    row.extend(std::iter::repeat_n("–".to_string(), 5));
                    row.push("NotTestable".into());
                }
            }
            row
        })
        .collect();
    table(
        out,
        &["w", "Qualifying A", "Qualifying B", "Rate A", "Rate B", "t", "df", "p-value", "Result"],
        &rows,
    );
}

fn crawl_mode(agg: &CrawlAggregate) -> String {
    match agg.truncate_chars {
        Some(n) => format!("first {n} chars"),
        None => "full page".into(),
    }
}

fn markdown_crawl(out: &mut String, label: &str, agg: &CrawlAggregate) {
    let _ = writeln!(out, "## Crawl: {label}\n");
    let mut row = vec![
        crawl_mode(agg),
        agg.pages.to_string(),
        agg.total_yes.to_string(),
        agg.total_no.to_string(),
        agg.corpus_yes_fraction
            .map_or_else(|| "–".into(), |p| format!("{:.1}%", 100.0 * p)),
        format!("{:.1}%", 100.0 * agg.neither_fraction),
        agg.mean_page_conditional
            .map_or_else(|| "–".into(), |p| format!("{:.1}%", 100.0 * p)),
    ];
    row.extend(hp1_cells(&agg.uniformity_test));
    table(
        out,
        &[
            "Mode", "Pages", "Yes", "No", "Prob.", "No Word %", "Cond. Prob", "χ²", "p-value",
            "Result",
        ],
        &[row],
    );
}

fn num(x: f64) -> String {
    x.to_string()
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn opt_bool(x: Option<bool>) -> String {
    x.map(|b| b.to_string()).unwrap_or_default()
}

struct Section {
    name: &'static str,
    header: &'static [&'static str],
    rows: Vec<Vec<String>>,
}

fn delimited(items: &[ReportItem<'_>]) -> String {
    let mut sections: Vec<Section> = Vec::new();
    let mut section = |name: &'static str, header: &'static [&'static str], row: Vec<String>| {
        match sections.iter_mut().find(|s| s.name == name) {
            Some(s) => s.rows.push(row),
            None => sections.push(Section {
                name,
                header,
                rows: vec![row],
            }),
        }
    };
    for item in items {
        match item {
            ReportItem::Experiment(r) => {
                for p in &r.prompts {
                    let id = || vec![r.experiment_id.clone(), p.prompt_id.to_string(), p.mode.to_string()];
                    let u = p.uniformity.as_ref();
                    let mut row = id();
                    row.extend([
                        p.yes_count.to_string(),
                        p.no_count.to_string(),
                        p.invalid_count.to_string(),
                        opt(u.map(|u| u.statistic)),
                        opt(u.map(|u| u.p_value)),
                        opt_bool(u.map(|u| u.reject_null)),
                    ]);
                    section("uniformity", &UNIFORMITY_HEADER, row);

                    let m = p.markov.as_ref();
                    let c = m.and_then(|m| m.chi_square);
                    let mut row = id();
                    row.extend([
                        opt(p.p_yes()),
                        opt(m.and_then(|m| m.p_yes_given_yes)),
                        m.map_or(String::new(), |m| m.counts.n_yy.to_string()),
                        m.map_or(String::new(), |m| m.counts.n_yn.to_string()),
                        m.map_or(String::new(), |m| m.counts.n_ny.to_string()),
                        m.map_or(String::new(), |m| m.counts.n_nn.to_string()),
                        opt(c.map(|c| c.statistic)),
                        opt(c.map(|c| c.p_value)),
                        opt_bool(c.map(|c| c.reject_null)),
                        opt_bool(m.map(|m| m.degenerate)),
                    ]);
                    section("independence", &INDEPENDENCE_HEADER, row);

                    if let Some(rec) = &p.recency {
                        for (w, win) in &rec.per_window {
                            let mut row = id();
                            row.extend([
                                num(rec.baseline_rate),
                                w.to_string(),
                                win.qualifying_positions.to_string(),
                                opt(win.switch_rate),
                                opt(win.recency_effect),
                            ]);
                            section("recency", &RECENCY_HEADER, row);
                        }
                    }

                    for b in &p.batches {
                        let u = b.uniformity.as_ref();
                        let c = b.markov.as_ref().and_then(|m| m.chi_square);
                        let mut row = id();
                        row.extend([
                            b.batch_index.to_string(),
                            b.yes_count.to_string(),
                            b.no_count.to_string(),
                            b.invalid_count.to_string(),
                            b.length_mismatch.to_string(),
                            opt(u.map(|u| u.statistic)),
                            opt(u.map(|u| u.p_value)),
                            opt(c.map(|c| c.statistic)),
                            opt(c.map(|c| c.p_value)),
                            opt_bool(b.markov.as_ref().map(|m| m.degenerate)),
                        ]);
                        section("batches", &BATCH_HEADER, row);
                    }
                    if let Ok(s) = inter_batch_summary(p) {
                        let mut row = id();
                        row.extend([
                            s.batches.to_string(),
                            num(s.mean_yes_percent),
                            num(s.mean_chi_square),
                            num(s.max_chi_square),
                            s.batches_rejecting_hp1.to_string(),
                            s.batches_rejecting_hp2.to_string(),
                            s.batches_degenerate_hp2.to_string(),
                        ]);
                        section("inter_batch", &INTER_BATCH_HEADER, row);
                    }
                }
            }
            ReportItem::Sweep(s) => {
                for r in &s.rows {
                    section(
                        "sweep",
                        &SWEEP_HEADER,
                        vec![
                            num(r.temperature),
                            r.prompt_id.to_string(),
                            r.valid_count.to_string(),
                            opt(r.p_yes),
                            opt(r.p_yes_given_yes),
                            r.n_yy.to_string(),
                            r.n_from_yes.to_string(),
                            opt(r.uniformity.map(|u| u.statistic)),
                            opt(r.uniformity.map(|u| u.p_value)),
                            opt(r.independence.map(|c| c.statistic)),
                            opt(r.independence.map(|c| c.p_value)),
                            r.independence_degenerate.to_string(),
                        ],
                    );
                }
            }
            ReportItem::Comparison {
                label_a,
                label_b,
                comparison,
            } => {
                for w in &comparison.windows {
                    let t = w.test.as_ref();
                    section(
                        "comparison",
                        &COMPARISON_HEADER,
                        vec![
                            label_a.to_string(),
                            label_b.to_string(),
                            w.window.to_string(),
                            w.qualifying_a.to_string(),
                            w.qualifying_b.to_string(),
                            opt(t.map(|t| t.mean_a)),
                            opt(t.map(|t| t.mean_b)),
                            opt(t.map(|t| t.t_statistic)),
                            opt(t.map(|t| t.degrees_of_freedom)),
                            opt(t.map(|t| t.p_value)),
                            opt_bool(t.map(|t| t.reject_null)),
                        ],
                    );
                }
            }
            ReportItem::Crawl { label, aggregate: a } => {
                let u = a.uniformity_test.as_ref();
                section(
                    "crawl",
                    &CRAWL_HEADER,
                    vec![
                        label.to_string(),
                        a.truncate_chars.map(|n| n.to_string()).unwrap_or_default(),
                        a.pages.to_string(),
                        a.total_yes.to_string(),
                        a.total_no.to_string(),
                        opt(a.corpus_yes_fraction),
                        num(a.neither_fraction),
                        opt(a.mean_page_conditional),
                        opt(u.map(|u| u.statistic)),
                        opt(u.map(|u| u.p_value)),
                        opt_bool(u.map(|u| u.reject_null)),
                    ],
                );
            }
        }
    }

    let mut out = String::new();
    for s in sections {
        let _ = writeln!(out, "# {}", s.name);
        let mut w = csv::Writer::from_writer(Vec::new());
        let _ = w.write_record(s.header);
        for r in &s.rows {
            let _ = w.write_record(r);
        }
        let bytes = w.into_inner().unwrap_or_default();
        out.push_str(&String::from_utf8_lossy(&bytes));
        out.push('\n');
    }
    out
}

const UNIFORMITY_HEADER: [&str; 9] = [
    "experiment_id", "prompt_id", "mode", "yes", "no", "invalid", "chi_square", "p_value", "reject",
];
const INDEPENDENCE_HEADER: [&str; 13] = [
    "experiment_id", "prompt_id", "mode", "p_yes", "p_yes_given_yes", "n_yy", "n_yn", "n_ny",
    "n_nn", "chi_square", "p_value", "reject", "degenerate",
];
const RECENCY_HEADER: [&str; 8] = [
    "experiment_id", "prompt_id", "mode", "baseline_rate", "window", "qualifying_positions",
    "switch_rate", "recency_effect",
];
const BATCH_HEADER: [&str; 13] = [
    "experiment_id", "prompt_id", "mode", "batch_index", "yes", "no", "invalid", "length_mismatch",
    "chi_square", "p_value", "hp2_chi_square", "hp2_p_value", "hp2_degenerate",
];
const INTER_BATCH_HEADER: [&str; 10] = [
    "experiment_id", "prompt_id", "mode", "batches", "mean_yes_percent", "mean_chi_square",
    "max_chi_square", "batches_rejecting_hp1", "batches_rejecting_hp2", "batches_degenerate_hp2",
];
const SWEEP_HEADER: [&str; 12] = [
    "temperature", "prompt_id", "valid", "p_yes", "p_yes_given_yes", "n_yy", "n_from_yes",
    "hp1_chi_square", "hp1_p_value", "hp2_chi_square", "hp2_p_value", "hp2_degenerate",
];
const COMPARISON_HEADER: [&str; 11] = [
    "label_a", "label_b", "window", "qualifying_a", "qualifying_b", "mean_a", "mean_b", "t",
    "df", "p_value", "reject",
];
const CRAWL_HEADER: [&str; 11] = [
    "label", "truncate_chars", "pages", "yes", "no", "yes_fraction", "neither_fraction",
    "mean_page_conditional", "chi_square", "p_value", "reject",
];
