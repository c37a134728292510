use std::cmp::Ordering;
use std::io::Write;

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 11] = [
    "scheme",
    "tau",
    "dc",
    "d",
    "rate_lb_ct",
    "rate_lb_dt",
    "rate_emp",
    "mse_emp",
    "critical_dc",
    "seed",
    "flags",
];

/// One sweep cell. Empty fields are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub scheme: &'static str,
    pub tau: f64,
    pub dc: Option<f64>,
    pub d: Option<f64>,
    pub rate_lb_ct: Option<f64>,
    pub rate_lb_dt: Option<f64>,
    pub rate_emp: Option<f64>,
    pub mse_emp: Option<f64>,
    pub critical_dc: Option<f64>,
    pub seed: Option<u64>,
    /// Standard error of `rate_emp`; not written.
    pub rate_se: Option<f64>,
    pub flags: Vec<&'static str>,
}

impl CsvRow {
    pub fn new(scheme: &'static str, tau: f64) -> Self {
        Self {
            scheme,
            tau,
            dc: None,
            d: None,
            rate_lb_ct: None,
            rate_lb_dt: None,
            rate_emp: None,
            mse_emp: None,
            critical_dc: None,
            seed: None,
            rate_se: None,
            flags: Vec::new(),
        }
    }

    fn key_cmp(&self, other: &Self) -> Ordering {
        fn opt(a: Option<f64>, b: Option<f64>) -> Ordering {
            match (a, b) {
                (Some(x), Some(y)) => x.total_cmp(&y),
                (a, b) => a.is_some().cmp(&b.is_some()),
            }
        }
        self.scheme
            .cmp(other.scheme)
            .then(self.tau.total_cmp(&other.tau))
            .then(opt(self.dc, other.dc))
            .then(opt(self.d, other.d))
            .then(self.seed.cmp(&other.seed))
    }
}

pub fn sort_rows(rows: &mut [CsvRow]) {
    rows.sort_by(CsvRow::key_cmp);
}

fn num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes the header and the rows in key order.
pub fn emit_csv<W: Write>(out: W, rows: &[CsvRow]) -> Result<()> {
    let mut sorted = rows.to_vec();
    sort_rows(&mut sorted);
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in &sorted {
        w.write_record([
            r.scheme.to_string(),
            r.tau.to_string(),
            num(r.dc),
            num(r.d),
            num(r.rate_lb_ct),
            num(r.rate_lb_dt),
            num(r.rate_emp),
            num(r.mse_emp),
            num(r.critical_dc),
            r.seed.map(|s| s.to_string()).unwrap_or_default(),
            r.flags.join(";"),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_fields_and_order() {
        let mut a = CsvRow::new("diq", 1.0);
        a.dc = Some(2.0);
        a.flags = vec!["dt_infeasible"];
        let mut b = CsvRow::new("bounds-only", 2.0);
        b.dc = Some(1.0);
        b.rate_lb_ct = Some(0.25);
        let mut c = CsvRow::new("bounds-only", 0.5);
        c.dc = Some(3.0);
        let mut buf = Vec::new();
        emit_csv(&mut buf, &[a, b, c]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER.join(","));
        assert_eq!(lines[1], "bounds-only,0.5,3,,,,,,,,");
        assert_eq!(lines[2], "bounds-only,2,1,,0.25,,,,,,");
        assert_eq!(lines[3], "diq,1,2,,,,,,,,dt_infeasible");
    }
}
