use std::path::Path;

use super::ResultRow;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "scenario,method,tau,nrf,trials,seed,mean_nmse,std_nmse,mean_analytic_mse,failed_trials";

/// Plain decimal with `digits` significant digits.
pub fn format_sig(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "NaN".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return format!("{:.*}", digits.saturating_sub(1), 0.0);
    }
    // Round in scientific form first so the exponent accounts for carries.
    let sci = format!("{:.*e}", digits.saturating_sub(1), x);
    let exp: i32 = sci.split('e').nth(1).and_then(|e| e.parse().ok()).unwrap_or(0);
    let rounded: f64 = sci.parse().unwrap_or(x);
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    format!("{:.*}", decimals, rounded)
}

pub fn csv_string(rows: &[ResultRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.scenario,
            r.method,
            r.tau,
            r.nrf,
            r.trials,
            r.seed,
            format_sig(r.mean_nmse, 6),
            format_sig(r.std_nmse, 6),
            format_sig(r.mean_analytic_mse, 6),
            r.failed_trials
        ));
    }
    out
}

pub fn emit_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    std::fs::write(path, csv_string(rows))?;
    Ok(())
}

pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(CSV_HEADER) {
        return Err(Error::Parse("unexpected CSV header".into()));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 10 {
                return Err(Error::Parse(format!("expected 10 fields: `{line}`")));
            }
            let int = |s: &str| s.parse::<usize>().map_err(|e| Error::Parse(format!("`{s}`: {e}")));
            let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("`{s}`: {e}")));
            Ok(ResultRow {
                scenario: f[0].into(),
                method: f[1].into(),
                tau: int(f[2])?,
                nrf: int(f[3])?,
                trials: int(f[4])?,
                seed: f[5].parse().map_err(|e| Error::Parse(format!("`{}`: {e}", f[5])))?,
                mean_nmse: num(f[6])?,
                std_nmse: num(f[7])?,
                mean_analytic_mse: num(f[8])?,
                failed_trials: int(f[9])?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(format_sig(0.123456789, 6), "0.123457");
        assert_eq!(format_sig(1234567.0, 6), "1234570");
        assert_eq!(format_sig(9.9999999, 6), "10.0000");
        assert_eq!(format_sig(-0.000012345678, 6), "-0.0000123457");
        assert_eq!(format_sig(0.0, 6), "0.00000");
        assert_eq!(format_sig(f64::NAN, 6), "NaN");
    }

    #[test]
    fn empty_rows_give_header_only() {
        assert_eq!(csv_string(&[]), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn round_trip_to_six_digits() {
        let row = ResultRow {
            scenario: "fig1".into(),
            method: "eigen/fd".into(),
            tau: 7,
            nrf: 1,
            trials: 100,
            seed: 42,
            mean_nmse: 0.31415926535,
            std_nmse: 0.0271828182,
            mean_analytic_mse: 0.30103,
            failed_trials: 2,
        };
        let back = parse_csv(&csv_string(std::slice::from_ref(&row))).unwrap();
        assert_eq!(back.len(), 1);
        let b = &back[0];
        assert_eq!((b.tau, b.nrf, b.trials, b.seed, b.failed_trials), (7, 1, 100, 42, 2));
        for (x, y) in [(b.mean_nmse, row.mean_nmse), (b.std_nmse, row.std_nmse), (b.mean_analytic_mse, row.mean_analytic_mse)] {
            assert!((x - y).abs() <= 5e-6 * y.abs());
        }
    }
}
