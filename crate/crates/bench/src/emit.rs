//! Result rows and their CSV/JSON emission. Floats carry 17 significant
//! digits so the CSV round-trips bit-exactly.

use crate::config::OutputFormat;
use crate::error::{BenchError, Result};
use std::fs;
use std::path::Path;

pub const CSV_HEADER: &str =
    "kernel,family,param,mu,method,k,iters,converged,setup_s,solve_s,relres,seed";

/// One (method, parameter, seed) cell of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub kernel: String,
    pub family: String,
    pub param: f64,
    pub mu: f64,
    pub method: String,
    pub k: usize,
    pub iters: usize,
    pub converged: bool,
    pub setup_s: f64,
    pub solve_s: f64,
    pub relres: f64,
    pub seed: u64,
}

/// 17 significant digits; round-trips every finite f64 exactly.
pub fn fmt_g17(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        }
    } else {
        format!("{x:.16e}")
    }
}

fn parse_g17(s: &str) -> std::result::Result<f64, String> {
    match s {
        "NaN" => Ok(f64::NAN),
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s.parse().map_err(|_| format!("bad float '{s}'")),
    }
}

pub fn results_to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.kernel,
            r.family,
            fmt_g17(r.param),
            fmt_g17(r.mu),
            r.method,
            r.k,
            r.iters,
            r.converged,
            fmt_g17(r.setup_s),
            fmt_g17(r.solve_s),
            fmt_g17(r.relres),
            r.seed
        ));
    }
    out
}

fn json_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

fn json_number(x: f64) -> String {
    if x.is_finite() {
        fmt_g17(x)
    } else {
        // JSON has no NaN/inf literals
        "null".to_string()
    }
}

/// JSON array of objects with exactly the CSV's field set.
pub fn results_to_json(rows: &[ResultRow]) -> String {
    let mut out = String::from("[\n");
    for (i, r) in rows.iter().enumerate() {
        out.push_str(&format!(
            "  {{\"kernel\":\"{}\",\"family\":\"{}\",\"param\":{},\"mu\":{},\"method\":\"{}\",\"k\":{},\"iters\":{},\"converged\":{},\"setup_s\":{},\"solve_s\":{},\"relres\":{},\"seed\":{}}}{}\n",
            json_escape(&r.kernel),
            json_escape(&r.family),
            json_number(r.param),
            json_number(r.mu),
            json_escape(&r.method),
            r.k,
            r.iters,
            r.converged,
            json_number(r.setup_s),
            json_number(r.solve_s),
            json_number(r.relres),
            r.seed,
            if i + 1 < rows.len() { "," } else { "" }
        ));
    }
    out.push(']');
    out.push('\n');
    out
}

/// Parses CSV produced by [`results_to_csv`].
pub fn parse_results_csv(text: &str, origin: &Path) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines().enumerate();
    let perr = |line: usize, msg: String| BenchError::Parse {
        path: origin.to_path_buf(),
        line,
        msg,
    };
    match lines.next() {
        Some((_, h)) if h == CSV_HEADER => {}
        Some((_, h)) => return Err(perr(1, format!("unexpected header '{h}'"))),
        None => return Err(perr(1, "empty file".into())),
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 12 {
            return Err(perr(
                lineno + 1,
                format!("expected 12 fields, found {}", fields.len()),
            ));
        }
        let f = |i: usize| parse_g17(fields[i]).map_err(|m| perr(lineno + 1, m));
        rows.push(ResultRow {
            kernel: fields[0].to_string(),
            family: fields[1].to_string(),
            param: f(2)?,
            mu: f(3)?,
            method: fields[4].to_string(),
            k: fields[5]
                .parse()
                .map_err(|_| perr(lineno + 1, format!("bad integer '{}'", fields[5])))?,
            iters: fields[6]
                .parse()
                .map_err(|_| perr(lineno + 1, format!("bad integer '{}'", fields[6])))?,
            converged: match fields[7] {
                "true" => true,
                "false" => false,
                other => return Err(perr(lineno + 1, format!("bad boolean '{other}'"))),
            },
            setup_s: f(8)?,
            solve_s: f(9)?,
            relres: f(10)?,
            seed: fields[11]
                .parse()
                .map_err(|_| perr(lineno + 1, format!("bad integer '{}'", fields[11])))?,
        });
    }
    Ok(rows)
}

/// Writes rows in the requested format.
pub fn emit_results(rows: &[ResultRow], format: OutputFormat, path: &Path) -> Result<()> {
    let text = match format {
        OutputFormat::Csv => results_to_csv(rows),
        OutputFormat::Json => results_to_json(rows),
    };
    fs::write(path, text)?;
    Ok(())
}

/// Per-cell means over seeds, in first-seen cell order.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub kernel: String,
    pub family: String,
    pub param: f64,
    pub mu: f64,
    pub method: String,
    pub runs: usize,
    pub mean_k: f64,
    pub frac_converged: f64,
    pub mean_iters: f64,
    pub mean_setup_s: f64,
    pub mean_solve_s: f64,
    pub mean_relres: f64,
}

pub const SUMMARY_HEADER: &str =
    "kernel,family,param,mu,method,runs,mean_k,frac_converged,mean_iters,mean_setup_s,mean_solve_s,mean_relres";

/// Averages rows over seeds per (kernel, mu, method) cell. Plain sums over
/// the rows in order, divided by the count.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut order: Vec<(String, String, f64, f64, String)> = Vec::new();
    let mut groups: Vec<Vec<&ResultRow>> = Vec::new();
    for r in rows {
        let key = (
            r.kernel.clone(),
            r.family.clone(),
            r.param,
            r.mu,
            r.method.clone(),
        );
        match order.iter().position(|k| *k == key) {
            Some(i) => groups[i].push(r),
            None => {
                order.push(key);
                groups.push(vec![r]);
            }
        }
    }
    groups
        .iter()
        .map(|g| {
            let n = g.len() as f64;
            let first = g[0];
            SummaryRow {
                kernel: first.kernel.clone(),
                family: first.family.clone(),
                param: first.param,
                mu: first.mu,
                method: first.method.clone(),
                runs: g.len(),
                mean_k: g.iter().map(|r| r.k as f64).sum::<f64>() / n,
                frac_converged: g.iter().filter(|r| r.converged).count() as f64 / n,
                mean_iters: g.iter().map(|r| r.iters as f64).sum::<f64>() / n,
                mean_setup_s: g.iter().map(|r| r.setup_s).sum::<f64>() / n,
                mean_solve_s: g.iter().map(|r| r.solve_s).sum::<f64>() / n,
                mean_relres: g.iter().map(|r| r.relres).sum::<f64>() / n,
            }
        })
        .collect()
}

pub fn summary_to_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.kernel,
            r.family,
            fmt_g17(r.param),
            fmt_g17(r.mu),
            r.method,
            r.runs,
            fmt_g17(r.mean_k),
            fmt_g17(r.frac_converged),
            fmt_g17(r.mean_iters),
            fmt_g17(r.mean_setup_s),
            fmt_g17(r.mean_solve_s),
            fmt_g17(r.mean_relres),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn sample_rows() -> Vec<ResultRow> {
        vec![
            ResultRow {
                kernel: "gaussian(l2=50)".into(),
                family: "gaussian".into(),
                param: 50.0,
                mu: 1e-4,
                method: "afn".into(),
                k: 40,
                iters: 7,
                converged: true,
                setup_s: 0.123456789,
                solve_s: 0.03,
                relres: 3.2e-5,
                seed: 0,
            },
            ResultRow {
                kernel: "gaussian(l2=50)".into(),
                family: "gaussian".into(),
                param: 50.0,
                mu: 1e-4,
                method: "afn".into(),
                k: 40,
                iters: 9,
                converged: true,
                setup_s: 0.2,
                solve_s: 0.04,
                relres: 9.9e-5,
                seed: 1,
            },
            ResultRow {
                kernel: "gaussian(l2=50)".into(),
                family: "gaussian".into(),
                param: 50.0,
                mu: 1e-4,
                method: "cg".into(),
                k: 0,
                iters: 500,
                converged: false,
                setup_s: 0.0,
                solve_s: 1.5,
                relres: f64::NAN,
                seed: 0,
            },
        ]
    }

    #[test]
    fn csv_round_trip_is_byte_identical() {
        let rows = sample_rows();
        let csv = results_to_csv(&rows);
        let parsed = parse_results_csv(&csv, &PathBuf::from("<mem>")).unwrap();
        let csv2 = results_to_csv(&parsed);
        assert_eq!(csv, csv2);
    }

    #[test]
    fn empty_rows_emit_header_only() {
        assert_eq!(results_to_csv(&[]), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn json_field_set_matches_csv_header() {
        let rows = sample_rows();
        let json = results_to_json(&rows);
        for field in CSV_HEADER.split(',') {
            assert!(
                json.contains(&format!("\"{field}\":")),
                "missing field {field}"
            );
        }
        // NaN becomes null; the document must not contain bare NaN tokens
        assert!(json.contains("\"relres\":null"));
        assert!(!json.contains(":NaN"));
    }

    #[test]
    fn g17_round_trips_awkward_values() {
        for v in [
            1.0 / 3.0,
            f64::MIN_POSITIVE,
            1.7976931348623157e308,
            -0.0,
            6.02e23,
        ] {
            let s = fmt_g17(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "value {v} via '{s}'");
        }
        assert_eq!(fmt_g17(f64::NAN), "NaN");
    }

    #[test]
    fn summary_means_match_recomputation() {
        let rows = sample_rows();
        let summary = summarize(&rows);
        assert_eq!(summary.len(), 2);
        let afn = &summary[0];
        assert_eq!(afn.runs, 2);
        assert_eq!(afn.mean_iters, (7.0 + 9.0) / 2.0);
        assert_eq!(afn.mean_setup_s, (0.123456789 + 0.2) / 2.0);
        assert_eq!(afn.frac_converged, 1.0);
        let cg = &summary[1];
        assert_eq!(cg.runs, 1);
        assert_eq!(cg.frac_converged, 0.0);
    }
}
