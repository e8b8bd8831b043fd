//! Deterministic text renderings: CSV (comma, `.` decimal, LF), JSON and
//! aligned markdown. Column names carry their units.

use std::fmt::Write;

use serde::Serialize;

use crate::error::Result;
use crate::error_budget::{ErrorBudgetRow, KappaConvention};
use crate::herald::{BellResult, HeraldChannel};

/// Note attached to every table output.
pub fn kappa_note(convention: KappaConvention) -> String {
    format!(
        "random error 2E_R = kappa * W * omega_R * tau; this table uses kappa convention {convention}. \
         table: kappa = 0.5; printed-eq37: kappa = 2 (4x the table values); \
         oracle: kappa measured from the interference integral (about 1)"
    )
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

#[derive(Serialize)]
struct TableRowJson<'a> {
    species: &'a str,
    wavelength_nm: f64,
    lifetime_ns: f64,
    recoil_khz: String,
    recoil_khz_raw: f64,
    timebin_error_percent: String,
    timebin_error_raw: f64,
    random_error_percent: String,
    random_error_raw: f64,
    timebin_length_ell: f64,
}

#[derive(Serialize)]
struct TableJson<'a> {
    w: f64,
    kappa_convention: &'static str,
    kappa: f64,
    note: String,
    rows: Vec<TableRowJson<'a>>,
}

pub fn table1_json(rows: &[ErrorBudgetRow], w: f64, convention: KappaConvention) -> Result<String> {
    to_json(&TableJson {
        w,
        kappa_convention: convention.tag(),
        kappa: convention.kappa(),
        note: kappa_note(convention),
        rows: rows
            .iter()
            .map(|r| TableRowJson {
                species: &r.species_label,
                wavelength_nm: r.wavelength_nm,
                lifetime_ns: r.lifetime_ns,
                recoil_khz: r.recoil_display(),
                recoil_khz_raw: r.recoil_frequency_khz,
                timebin_error_percent: r.timebin_display(),
                timebin_error_raw: r.timebin_error,
                random_error_percent: r.random_display(),
                random_error_raw: r.random_error,
                timebin_length_ell: r.timebin_length_ell,
            })
            .collect(),
    })
}

pub fn table1_csv(rows: &[ErrorBudgetRow], convention: KappaConvention) -> String {
    let mut out = format!("# {}\n", kappa_note(convention));
    out.push_str(
        "species,wavelength_nm,lifetime_ns,recoil_khz,recoil_khz_raw,timebin_error_percent,timebin_error_raw,\
         random_error_percent,random_error_raw,timebin_length_ell,kappa_convention,kappa\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.species_label,
            r.wavelength_nm,
            r.lifetime_ns,
            r.recoil_display(),
            r.recoil_frequency_khz,
            r.timebin_display(),
            r.timebin_error,
            r.random_display(),
            r.random_error,
            r.timebin_length_ell,
            convention.tag(),
            convention.kappa()
        );
    }
    out
}

pub fn table1_markdown(rows: &[ErrorBudgetRow], w: f64, convention: KappaConvention) -> String {
    let header = [
        "species",
        "lambda (nm)",
        "tau (ns)",
        "omega_R/2pi (kHz)",
        "2E_T (%)",
        "2E_R (%)",
        "ell",
    ];
    let body: Vec<[String; 7]> = rows
        .iter()
        .map(|r| {
            [
                r.species_label.clone(),
                format!("{}", r.wavelength_nm),
                format!("{}", r.lifetime_ns),
                r.recoil_display(),
                r.timebin_display(),
                r.random_display(),
                format!("{:.3}", r.timebin_length_ell),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &body {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: &[&str]| {
        let parts: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        format!("| {} |\n", parts.join(" | "))
    };
    let mut out = format!("w = {w}, kappa convention: {convention}\n\n");
    out.push_str(&line(&header));
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&format!("|-{}-|\n", rule.join("-|-")));
    for row in &body {
        let cells: Vec<&str> = row.iter().map(String::as_str).collect();
        out.push_str(&line(&cells));
    }
    out.push('\n');
    out.push_str(&kappa_note(convention));
    out.push('\n');
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChannelReport {
    pub channel: HeraldChannel,
    pub fidelity: f64,
    pub coherence_abs: f64,
    pub coherence_arg_rad: f64,
    pub herald_probability: f64,
    pub population_down_up: f64,
    pub population_up_down: f64,
}

impl ChannelReport {
    pub fn new(channel: HeraldChannel, r: &BellResult) -> Self {
        ChannelReport {
            channel,
            fidelity: r.fidelity,
            coherence_abs: r.coherence.norm(),
            coherence_arg_rad: r.coherence.arg(),
            herald_probability: r.herald_probability,
            population_down_up: r.population_down_up,
            population_up_down: r.population_up_down,
        }
    }
}

/// CSV of sweep points; `values` are the swept values in grid order and
/// `points[i]` the (yield, W, per-channel results) of value i.
pub fn sweep_csv(column: &str, values: &[f64], points: &[(f64, f64, Vec<ChannelReport>)]) -> String {
    let mut out = format!("{column},yield,w_factor");
    for c in HeraldChannel::ALL {
        let l = c.label();
        let _ = write!(
            out,
            ",fidelity_{l},coherence_abs_{l},coherence_arg_rad_{l},herald_probability_{l}"
        );
    }
    out.push('\n');
    for (v, (y, wf, chans)) in values.iter().zip(points) {
        let _ = write!(out, "{v},{y},{wf}");
        for c in chans {
            let _ = write!(
                out,
                ",{},{},{},{}",
                c.fidelity, c.coherence_abs, c.coherence_arg_rad, c.herald_probability
            );
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error_budget::generate_table1;

    #[test]
    fn table_formats() {
        let rows = generate_table1(2.0, KappaConvention::Table).unwrap();
        let csv = table1_csv(&rows, KappaConvention::Table);
        assert_eq!(csv.lines().count(), 14);
        assert!(!csv.contains('\r'));
        let md = table1_markdown(&rows, 2.0, KappaConvention::Table);
        assert!(md.contains("| 171Yb+@369"));
        let json = table1_json(&rows, 2.0, KappaConvention::PrintedEq37).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["rows"].as_array().unwrap().len(), 12);
        assert_eq!(v["kappa"], 2.0);
    }

    #[test]
    fn empty_sweep_is_header_only() {
        let csv = sweep_csv("w", &[], &[]);
        assert_eq!(csv.lines().count(), 1);
        assert!(csv.starts_with("w,yield,w_factor,fidelity_1001"));
    }
}
