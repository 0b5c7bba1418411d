//! CSV tables written by `report`.
//!
//! `complexity.csv`: `N,n_bs_ours,n_bs_paper_formula,n_bs_general,od_ours,od_clements,od_reck`
//!
//! `fidelity.csv`: `N,db_per_bs,fidelity`

use serde::Serialize;
use tomodit_core::circuit::ComplexityRow;
use tomodit_core::simulator::SweepPoint;

use crate::error::{CliError, CliResult};

#[derive(Serialize)]
struct ComplexityRecord {
    #[serde(rename = "N")]
    n: usize,
    n_bs_ours: usize,
    n_bs_paper_formula: usize,
    n_bs_general: usize,
    od_ours: usize,
    od_clements: usize,
    od_reck: usize,
}

#[derive(Serialize)]
struct FidelityRecord {
    #[serde(rename = "N")]
    n: usize,
    db_per_bs: f64,
    fidelity: f64,
}

fn to_text<T: Serialize>(rows: impl IntoIterator<Item = T>) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::bad_input(format!("CSV error: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::bad_input(e.to_string()))
}

pub fn complexity_csv(rows: &[ComplexityRow]) -> CliResult<String> {
    to_text(rows.iter().map(|r| ComplexityRecord {
        n: r.n,
        n_bs_ours: r.n_bs_ours,
        n_bs_paper_formula: r.n_bs_paper_formula,
        n_bs_general: r.n_bs_general,
        od_ours: r.od_ours,
        od_clements: r.od_clements,
        od_reck: r.od_reck,
    }))
}

pub fn fidelity_csv(curves: &[(usize, Vec<SweepPoint>)]) -> CliResult<String> {
    to_text(curves.iter().flat_map(|(n, pts)| {
        pts.iter().map(move |p| FidelityRecord {
            n: *n,
            db_per_bs: p.db,
            fidelity: p.fidelity,
        })
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tomodit_core::circuit::comparison_table;

    #[test]
    fn complexity_header_and_row() {
        let text = complexity_csv(&comparison_table([3]).unwrap()).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "N,n_bs_ours,n_bs_paper_formula,n_bs_general,od_ours,od_clements,od_reck"
        );
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[0], "3");
        assert_eq!(row[2], "14");
        assert_eq!(row[3], "36");
    }

    #[test]
    fn fidelity_rows_parse_back() {
        let pts = vec![SweepPoint {
            db: 0.25,
            fidelity: 0.99,
        }];
        let text = fidelity_csv(&[(5, pts)]).unwrap();
        let mut r = csv::Reader::from_reader(text.as_bytes());
        assert_eq!(r.headers().unwrap(), vec!["N", "db_per_bs", "fidelity"]);
        let rec = r.records().next().unwrap().unwrap();
        assert_eq!(rec.get(1).unwrap().parse::<f64>().unwrap(), 0.25);
    }
}
