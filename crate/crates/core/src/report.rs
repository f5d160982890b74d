//! CSV export of simulation artifacts (RFC-4180, header row, decimal dot).

use std::path::Path;

use crate::availability::AvailabilityMatrix;
use crate::error::Result;
use crate::pairing::Pairing;
use crate::rates::PairEval;
use crate::sim::GapRow;
use crate::topology::Topology;

/// Formats a value with `sig` significant digits (plain decimal notation;
/// integer parts wider than `sig` digits are kept intact).
pub fn fmt_sig(v: f64, sig: usize) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let exponent = v.abs().log10().floor() as i32;
    let decimals = (sig as i32 - 1 - exponent).max(0) as usize;
    format!("{v:.decimals$}")
}

/// Writes user positions, distances, fading, and gains.
pub fn write_topology_csv(path: &Path, topology: &Topology) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["user", "x_m", "y_m", "distance_m", "fading_power", "gain"])?;
    for u in 0..topology.n_users() {
        let (x, y) = topology.positions[u];
        w.write_record([
            u.to_string(),
            fmt_sig(x, 6),
            fmt_sig(y, 6),
            fmt_sig(topology.distances[u], 6),
            fmt_sig(topology.fading_power[u], 6),
            fmt_sig(topology.gains[u], 6),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the availability matrix as one 0/1 row per user.
pub fn write_availability_csv(path: &Path, avail: &AvailabilityMatrix) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["user".to_string()];
    header.extend((0..avail.m_channels()).map(|c| format!("channel_{c}")));
    w.write_record(&header)?;
    for u in 0..avail.n_users() {
        let mut record = vec![u.to_string()];
        record.extend(
            (0..avail.m_channels()).map(|c| if avail.available(u, c) { "1" } else { "0" }.to_string()),
        );
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes one row per cluster: members, channel, power split, and pair EE.
/// `evals` must be aligned with `pairing.pairs`.
pub fn write_pairing_csv(path: &Path, pairing: &Pairing, evals: &[PairEval]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "pair",
        "strong_user",
        "weak_user",
        "channel",
        "delta_strong",
        "delta_weak",
        "pair_ee",
    ])?;
    for (j, ((&(s, weak), &c), ev)) in pairing
        .pairs
        .iter()
        .zip(&pairing.channel_of_pair)
        .zip(evals)
        .enumerate()
    {
        w.write_record([
            j.to_string(),
            s.to_string(),
            weak.to_string(),
            c.to_string(),
            fmt_sig(ev.delta_strong, 6),
            fmt_sig(ev.delta_weak, 6),
            fmt_sig(ev.pair_ee, 6),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a best-fitness convergence trace, one row per iteration.
pub fn write_trace_csv(path: &Path, trace: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["iteration", "best_fitness"])?;
    for (i, &f) in trace.iter().enumerate() {
        w.write_record([i.to_string(), fmt_sig(f, 6)])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the oracle-vs-heuristic gap table, one row per instance.
pub fn write_gap_csv(path: &Path, rows: &[GapRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["instance", "oracle_ee", "zoup_ee", "gap", "feasible"])?;
    for r in rows {
        w.write_record([
            r.instance.to_string(),
            fmt_sig(r.oracle_ee, 6),
            fmt_sig(r.zoup_ee, 6),
            fmt_sig(r.gap, 6),
            r.feasible.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::eval_pair;
    use tempfile::tempdir;

    #[test]
    fn fmt_sig_gives_six_significant_digits() {
        assert_eq!(fmt_sig(0.0, 6), "0");
        assert_eq!(fmt_sig(1.0, 6), "1.00000");
        assert_eq!(fmt_sig(123.456789, 6), "123.457");
        assert_eq!(fmt_sig(0.0012345678, 6), "0.00123457");
        assert_eq!(fmt_sig(-9.87654321, 6), "-9.87654");
        assert_eq!(fmt_sig(1234567.0, 6), "1234567");
    }

    #[test]
    fn artifact_files_are_written_with_headers() {
        let dir = tempdir().unwrap();
        let topo = Topology::from_gains(vec![0.02, 0.001]);
        let avail = AvailabilityMatrix::all_true(2, 3);
        let pairing = Pairing {
            pairs: vec![(0, 1)],
            channel_of_pair: vec![1],
            unpaired: vec![],
        };
        let evals = vec![eval_pair(1000.0, 0.02, 0.001, 0.3, 0.7, 1.0)];

        let topo_path = dir.path().join("topology.csv");
        write_topology_csv(&topo_path, &topo).unwrap();
        let text = std::fs::read_to_string(&topo_path).unwrap();
        assert!(text.starts_with("user,x_m,y_m,distance_m,fading_power,gain"));
        assert_eq!(text.lines().count(), 3);

        let avail_path = dir.path().join("availability.csv");
        write_availability_csv(&avail_path, &avail).unwrap();
        let text = std::fs::read_to_string(&avail_path).unwrap();
        assert!(text.starts_with("user,channel_0,channel_1,channel_2"));
        assert!(text.contains("0,1,1,1"));

        let pairing_path = dir.path().join("pairing.csv");
        write_pairing_csv(&pairing_path, &pairing, &evals).unwrap();
        let text = std::fs::read_to_string(&pairing_path).unwrap();
        assert!(text.starts_with("pair,strong_user,weak_user,channel,delta_strong"));
        assert!(text.lines().nth(1).unwrap().starts_with("0,0,1,1,"));

        let trace_path = dir.path().join("trace.csv");
        write_trace_csv(&trace_path, &[1.0, 2.0, 2.0]).unwrap();
        let text = std::fs::read_to_string(&trace_path).unwrap();
        assert_eq!(text.lines().count(), 4);
    }
}
