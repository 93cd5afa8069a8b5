use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::bundle::{ConceptReport, ReportBundle};
use super::{temperature_label, RunError};
use crate::metrics::{display_metric, ClassificationReport};
use crate::prompts::PromptId;
use crate::reasoning::NgramTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = RunError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            _ => Err(RunError::ConfigInvalid(format!("unknown format {s:?}"))),
        }
    }
}

/// Pretty JSON with object keys sorted at every level, newline-terminated.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let value = serde_json::to_value(value).expect("bundle types serialize to JSON");
    let mut out = serde_json::to_string_pretty(&value).expect("a JSON value always prints");
    out.push('\n');
    out
}

/// Writes the bundle under `out_dir` and returns the written paths, sorted.
pub fn emit_report(bundle: &ReportBundle, formats: &[ReportFormat], out_dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    let mut files: BTreeMap<String, String> = BTreeMap::new();
    for format in formats {
        match format {
            ReportFormat::Json => {
                files.insert("bundle.json".into(), to_canonical_json(bundle));
            }
            ReportFormat::Csv => files.extend(csv_files(bundle)),
            ReportFormat::Markdown => {
                files.insert("report.md".into(), markdown(bundle));
            }
        }
    }
    fs::create_dir_all(out_dir).map_err(|source| RunError::Io { path: out_dir.to_path_buf(), source })?;
    let mut written = Vec::with_capacity(files.len());
    for (name, contents) in files {
        let path = out_dir.join(name);
        fs::write(&path, contents).map_err(|source| RunError::Io { path: path.clone(), source })?;
        written.push(path);
    }
    Ok(written)
}

const REPORT_HEADER: [&str; 7] = ["Category", "Class", "Support", "Precision", "Recall", "F1-score", "Accuracy"];

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

fn opt(v: Option<f64>) -> String {
    display_metric(v)
}

/// Report files grouped per (prompt, temperature), in bundle order.
fn grouped_reports(bundle: &ReportBundle) -> Vec<((PromptId, f64), Vec<&ConceptReport>)> {
    let mut groups: Vec<((PromptId, f64), Vec<&ConceptReport>)> = Vec::new();
    for r in &bundle.reports {
        let key = (r.prompt, r.temperature);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    groups
}

/// Table rows: one per class, accuracy shown once per category.
fn report_rows(category: &str, report: Option<&ClassificationReport>) -> Vec<Vec<String>> {
    let Some(report) = report else {
        return vec![vec![category.into(), "—".into(), "0".into(), opt(None), opt(None), opt(None), opt(None)]];
    };
    report
        .rows
        .iter()
        .enumerate()
        .map(|(k, row)| {
            vec![
                if k == 0 { category.to_string() } else { String::new() },
                row.class_label.clone(),
                row.support.to_string(),
                opt(row.precision),
                opt(row.recall),
                opt(row.f1),
                if k == 0 { opt(Some(row.accuracy)) } else { String::new() },
            ]
        })
        .collect()
}

fn csv_files(bundle: &ReportBundle) -> BTreeMap<String, String> {
    let mut files = BTreeMap::new();
    for ((prompt, t), reports) in grouped_reports(bundle) {
        let rows = reports.iter().flat_map(|r| report_rows(r.concept.label(), r.report.as_ref()));
        files.insert(format!("report_{prompt}_t{}.csv", temperature_label(t)), csv_string(&REPORT_HEADER, rows));
    }

    let counts = bundle.runs.iter().map(|r| {
        let c = r.counts;
        vec![
            r.prompt.to_string(),
            r.concept.label().into(),
            temperature_label(r.temperature),
            r.iteration.to_string(),
            c.parsed.to_string(),
            c.uncertain.to_string(),
            c.wrong_class.to_string(),
            c.failed.to_string(),
            c.total().to_string(),
        ]
    });
    files.insert(
        "ledger_counts.csv".into(),
        csv_string(
            &["Prompt", "Concept", "Temperature", "Iteration", "Parsed", "Uncertain", "WrongClass", "Failed", "Total"],
            counts,
        ),
    );

    let errors = bundle.errors.iter().map(|e| {
        vec![
            e.prompt.to_string(),
            e.concept.label().into(),
            temperature_label(e.temperature),
            e.iteration.to_string(),
            e.comment_id.clone(),
            e.status.as_str().into(),
            e.reason.clone().unwrap_or_default(),
            e.excerpt.clone().unwrap_or_default(),
        ]
    });
    files.insert(
        "errors.csv".into(),
        csv_string(
            &["Prompt", "Concept", "Temperature", "Iteration", "CommentId", "Status", "Reason", "Excerpt"],
            errors,
        ),
    );

    let dist = bundle.reports.iter().map(|r| {
        let d = r.distribution;
        vec![
            r.prompt.to_string(),
            r.concept.label().into(),
            temperature_label(r.temperature),
            r.threshold.map(|t| t.to_string()).unwrap_or_default(),
            d.model_yes.to_string(),
            d.model_no.to_string(),
            d.uncertain.to_string(),
            d.wrong_class.to_string(),
            d.failed.to_string(),
            d.human_yes.to_string(),
            d.human_no.to_string(),
        ]
    });
    files.insert(
        "distribution.csv".into(),
        csv_string(
            &[
                "Prompt", "Concept", "Temperature", "Threshold", "ModelYes", "ModelNo", "Uncertain", "WrongClass",
                "Failed", "HumanYes", "HumanNo",
            ],
            dist,
        ),
    );

    if !bundle.probability.is_empty() {
        let mut sweep = Vec::new();
        let mut hist = Vec::new();
        let mut scores = Vec::new();
        for p in &bundle.probability {
            let lead = || vec![p.prompt.to_string(), p.concept.label().to_string(), temperature_label(p.temperature)];
            for point in &p.sweep {
                for row in &point.report.rows {
                    let mut r = lead();
                    r.extend([
                        point.threshold.to_string(),
                        row.class_label.clone(),
                        row.support.to_string(),
                        opt(row.precision),
                        opt(row.recall),
                        opt(row.f1),
                        opt(Some(row.accuracy)),
                    ]);
                    sweep.push(r);
                }
            }
            for bin in &p.histogram {
                let mut r = lead();
                r.extend([bin.start.to_string(), bin.count.to_string()]);
                hist.push(r);
            }
            if let Some(report) = &p.score_agreement {
                for row in &report.rows {
                    let mut r = lead();
                    r.extend([
                        row.class_label.clone(),
                        row.support.to_string(),
                        opt(row.precision),
                        opt(row.recall),
                        opt(row.f1),
                        opt(Some(row.accuracy)),
                    ]);
                    scores.push(r);
                }
            }
        }
        let metric_cols = ["Class", "Support", "Precision", "Recall", "F1-score", "Accuracy"];
        let with_lead = |extra: &[&'static str]| -> Vec<&'static str> {
            ["Prompt", "Concept", "Temperature"].into_iter().chain(extra.iter().copied()).collect()
        };
        let sweep_header: Vec<&str> = with_lead(&["Threshold"]).into_iter().chain(metric_cols).collect();
        files.insert("sweep.csv".into(), csv_string(&sweep_header, sweep));
        files.insert("histogram.csv".into(), csv_string(&with_lead(&["BinStart", "Count"]), hist));
        if !scores.is_empty() {
            files.insert("score_agreement.csv".into(), csv_string(&with_lead(&metric_cols), scores));
        }
    }

    if !bundle.alpha.is_empty() {
        let concepts = &bundle.config.concepts;
        let mut header = vec!["Prompt".to_string(), "Temperature".to_string()];
        header.extend(concepts.iter().map(|c| format!("Alpha of {}", c.label())));
        let rows = bundle.alpha.iter().map(|row| {
            let mut r = vec![row.prompt.to_string(), temperature_label(row.temperature)];
            r.extend(row.cells.iter().map(|c| opt(c.alpha.map(|a| a.value))));
            r
        });
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        files.insert("alpha.csv".into(), csv_string(&header, rows));
    }

    if let Some(reasoning) = &bundle.reasoning {
        if let Some(v) = &reasoning.venn {
            files.insert("venn.csv".into(), v.partition.to_csv());
        }
        if let Some(h) = &reasoning.human_venn {
            files.insert("venn_human.csv".into(), h.to_csv());
        }
        let cert = reasoning.certainty.iter().map(|c| {
            vec![
                c.prompt.to_string(),
                c.concept.label().into(),
                c.unlikely.to_string(),
                c.uncertain.to_string(),
                c.likely.to_string(),
            ]
        });
        files.insert(
            "certainty.csv".into(),
            csv_string(&["Prompt", "Concept", "Unlikely", "Uncertain", "Likely"], cert),
        );
        let ngrams = reasoning.ngrams.iter().flat_map(|n| {
            n.table.entries.iter().enumerate().map(move |(rank, e)| {
                vec![
                    n.prompt.to_string(),
                    n.group.label(),
                    n.table.n.to_string(),
                    (rank + 1).to_string(),
                    NgramTable::render_tuple(&e.tokens),
                    e.count.to_string(),
                ]
            })
        });
        files.insert("ngrams.csv".into(), csv_string(&["Prompt", "Group", "N", "Rank", "Ngram", "Count"], ngrams));
        let yn = |b: bool| if b { "yes" } else { "no" }.to_string();
        let samples = reasoning.samples.iter().map(|s| {
            vec![yn(s.cell.hateful), yn(s.cell.offensive), yn(s.cell.toxic), s.ids.join(" ")]
        });
        files.insert("samples.csv".into(), csv_string(&["Hateful", "Offensive", "Toxic", "CommentIds"], samples));
    }

    if let Some(table) = &bundle.comparison {
        let rows = table.rows.iter().map(|r| {
            vec![
                r.prompt.to_string(),
                temperature_label(r.temperature),
                r.concept.label().into(),
                r.class_label.clone(),
                r.support.to_string(),
                opt(r.precision),
                opt(r.recall),
                opt(r.f1),
                opt(r.accuracy),
            ]
        });
        files.insert(
            "comparison.csv".into(),
            csv_string(
                &["Prompt", "Temperature", "Concept", "Class", "Support", "Precision", "Recall", "F1-score", "Accuracy"],
                rows,
            ),
        );
    }
    files
}

fn md_cell(s: &str) -> String {
    s.replace('|', "\\|").replace(['\n', '\r'], " ")
}

fn md_table(out: &mut String, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) {
    let _ = writeln!(out, "| {} |", header.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(header.len()));
    for row in rows {
        let cells: Vec<String> = row.iter().map(|c| md_cell(c)).collect();
        let _ = writeln!(out, "| {} |", cells.join(" | "));
    }
    out.push('\n');
}

fn markdown(bundle: &ReportBundle) -> String {
    let mut out = String::new();
    let cfg = &bundle.config;
    let _ = writeln!(out, "# Experiment {}\n", bundle.experiment);
    let _ = writeln!(out, "- config fingerprint: `{}`", bundle.config_fingerprint);
    let _ = writeln!(out, "- corpus fingerprint: `{}` ({} items)", bundle.corpus_fingerprint, bundle.corpus_size);
    let prompts: Vec<String> = cfg.prompts.iter().map(|p| p.to_string()).collect();
    let temps: Vec<String> = cfg.temperatures.iter().map(|&t| temperature_label(t)).collect();
    let _ = writeln!(out, "- prompts: {}; temperatures: {}; iterations: {}", prompts.join(", "), temps.join(", "), cfg.iterations);
    let t = &cfg.thresholds.0;
    let _ = writeln!(out, "- thresholds: hateful={} offensive={} toxic={}\n", t.hateful, t.offensive, t.toxic);

    out.push_str("## Outcome ledger\n\n");
    md_table(
        &mut out,
        &["Prompt", "Concept", "Temperature", "Iteration", "Parsed", "Uncertain", "Wrong class", "Failed", "Total"],
        bundle.runs.iter().map(|r| {
            let c = r.counts;
            vec![
                r.prompt.to_string(),
                r.concept.label().into(),
                temperature_label(r.temperature),
                r.iteration.to_string(),
                c.parsed.to_string(),
                c.uncertain.to_string(),
                c.wrong_class.to_string(),
                c.failed.to_string(),
                c.total().to_string(),
            ]
        }),
    );

    out.push_str("## Classification reports\n\n");
    for ((prompt, t), reports) in grouped_reports(bundle) {
        let _ = writeln!(out, "### {prompt}, temperature {}\n", temperature_label(t));
        if reports.iter().any(|r| r.threshold.is_some()) {
            let cuts: Vec<String> =
                reports.iter().map(|r| format!("{}={}", r.concept.name(), r.threshold.unwrap_or_default())).collect();
            let _ = writeln!(out, "Probabilities thresholded at {}.\n", cuts.join(", "));
        }
        md_table(&mut out, &REPORT_HEADER, reports.iter().flat_map(|r| report_rows(r.concept.label(), r.report.as_ref())));
    }

    if !bundle.probability.is_empty() {
        out.push_str("## Threshold sweeps\n\n");
        for p in &bundle.probability {
            let _ = writeln!(out, "### {} {}, temperature {}\n", p.prompt, p.concept.label(), temperature_label(p.temperature));
            md_table(
                &mut out,
                &["Threshold", "Class", "Support", "Precision", "Recall", "F1-score", "Accuracy"],
                p.sweep.iter().flat_map(|pt| {
                    pt.report.rows.iter().map(move |row| {
                        vec![
                            pt.threshold.to_string(),
                            row.class_label.clone(),
                            row.support.to_string(),
                            opt(row.precision),
                            opt(row.recall),
                            opt(row.f1),
                            opt(Some(row.accuracy)),
                        ]
                    })
                }),
            );
        }
        let scored: Vec<_> = bundle.probability.iter().filter(|p| p.score_agreement.is_some()).collect();
        if !scored.is_empty() {
            out.push_str("## Score agreement\n\n");
            for p in scored {
                let _ = writeln!(out, "### {} {}, temperature {}\n", p.prompt, p.concept.label(), temperature_label(p.temperature));
                md_table(&mut out, &REPORT_HEADER[1..], report_rows("", p.score_agreement.as_ref()).into_iter().map(|mut r| {
                    r.remove(0);
                    r
                }));
            }
        }
    }

    if !bundle.alpha.is_empty() {
        out.push_str("## Consistency (Krippendorff's alpha)\n\n");
        let mut header = vec!["Prompt".to_string(), "Temperature".to_string()];
        header.extend(cfg.concepts.iter().map(|c| format!("α of {}", c.label())));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        md_table(
            &mut out,
            &header,
            bundle.alpha.iter().map(|row| {
                let mut r = vec![row.prompt.to_string(), temperature_label(row.temperature)];
                r.extend(row.cells.iter().map(|c| opt(c.alpha.map(|a| a.value))));
                r
            }),
        );
    }

    if let Some(reasoning) = &bundle.reasoning {
        out.push_str("## Reasoning analysis\n\n");
        let yn = |b: bool| if b { "yes" } else { "no" }.to_string();
        if let Some(v) = &reasoning.venn {
            let _ = writeln!(out, "### HOT partition ({}, {} items, {} excluded)\n", v.prompt, v.partition.total(), v.excluded.len());
            let human = reasoning.human_venn.as_ref();
            md_table(
                &mut out,
                &["Hateful", "Offensive", "Toxic", "Model", "Human"],
                v.partition.cells().into_iter().map(|c| {
                    vec![
                        yn(c.triple.hateful),
                        yn(c.triple.offensive),
                        yn(c.triple.toxic),
                        c.count.to_string(),
                        human.map(|h| h.count(c.triple).to_string()).unwrap_or_default(),
                    ]
                }),
            );
        }
        if !reasoning.certainty.is_empty() {
            out.push_str("### Certainty bins\n\n");
            md_table(
                &mut out,
                &["Prompt", "Concept", "Unlikely", "Uncertain", "Likely"],
                reasoning.certainty.iter().map(|c| {
                    vec![
                        c.prompt.to_string(),
                        c.concept.label().into(),
                        c.unlikely.to_string(),
                        c.uncertain.to_string(),
                        c.likely.to_string(),
                    ]
                }),
            );
        }
        if !reasoning.ngrams.is_empty() {
            out.push_str("### Top n-grams\n\n");
            md_table(
                &mut out,
                &["Prompt", "Group", "n", "Explanations", "Top n-grams"],
                reasoning.ngrams.iter().map(|n| {
                    let top: Vec<String> = n
                        .table
                        .entries
                        .iter()
                        .take(3)
                        .map(|e| format!("{} {}", NgramTable::render_tuple(&e.tokens), e.count))
                        .collect();
                    vec![n.prompt.to_string(), n.group.label(), n.table.n.to_string(), n.documents.to_string(), top.join("; ")]
                }),
            );
        }
        if !reasoning.samples.is_empty() {
            out.push_str("### Samples for manual reading\n\n");
            md_table(
                &mut out,
                &["Hateful", "Offensive", "Toxic", "Comment ids"],
                reasoning
                    .samples
                    .iter()
                    .map(|s| vec![yn(s.cell.hateful), yn(s.cell.offensive), yn(s.cell.toxic), s.ids.join(", ")]),
            );
        }
    }

    if let Some(table) = &bundle.comparison {
        out.push_str("## Prompt comparison\n\n");
        let _ = writeln!(out, "{}\n", table.header);
        md_table(
            &mut out,
            &["Prompt", "Temperature", "Concept", "Class", "Support", "Precision", "Recall", "F1-score", "Accuracy"],
            table.rows.iter().map(|r| {
                vec![
                    r.prompt.to_string(),
                    temperature_label(r.temperature),
                    r.concept.label().into(),
                    r.class_label.clone(),
                    r.support.to_string(),
                    opt(r.precision),
                    opt(r.recall),
                    opt(r.f1),
                    opt(r.accuracy),
                ]
            }),
        );
    }

    out.push_str("## Error ledger\n\n");
    if bundle.errors.is_empty() {
        out.push_str("No items were excluded.\n");
    } else {
        md_table(
            &mut out,
            &["Prompt", "Concept", "Temperature", "Iteration", "Comment", "Status", "Reason", "Excerpt"],
            bundle.errors.iter().map(|e| {
                vec![
                    e.prompt.to_string(),
                    e.concept.label().into(),
                    temperature_label(e.temperature),
                    e.iteration.to_string(),
                    e.comment_id.clone(),
                    e.status.as_str().into(),
                    e.reason.clone().unwrap_or_default(),
                    e.excerpt.clone().unwrap_or_default(),
                ]
            }),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_json_sorts_keys() {
        let v = serde_json::json!({"b": 1, "a": {"d": 2, "c": 0.5}});
        assert_eq!(to_canonical_json(&v), "{\n  \"a\": {\n    \"c\": 0.5,\n    \"d\": 2\n  },\n  \"b\": 1\n}\n");
    }

    #[test]
    fn report_rows_show_accuracy_once() {
        let r = crate::metrics::classification_report(&[true, false, true], &[true, false, false]).unwrap();
        let rows = report_rows("Hateful", Some(&r));
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0][0], "Hateful");
        assert_eq!(rows[0][6], "0.67");
        assert_eq!(rows[1][0], "");
        assert_eq!(rows[1][6], "");
        let csv = csv_string(&REPORT_HEADER, rows);
        assert!(csv.starts_with("Category,Class,Support,Precision,Recall,F1-score,Accuracy\n"));
    }

    #[test]
    fn formats_parse() {
        assert_eq!("md".parse::<ReportFormat>().unwrap(), ReportFormat::Markdown);
        assert!("xml".parse::<ReportFormat>().is_err());
    }
}
