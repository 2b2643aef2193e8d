//! Flat CSV tables for plotting a trace with an external tool.
//!
//! `loads.csv`: commanded and produced loads. `xy.csv`: force vector of
//! each thruster. `forces.csv`: force magnitude against its desired value.
//! `theta.csv`: manifold coordinate. `azimuth.csv`: azimuths in degrees.

use std::fs;
use std::path::{Path, PathBuf};

use super::trace::Trace;
use super::HarnessError;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn write_table(path: &Path, head: Vec<String>, rows: impl Iterator<Item = Vec<f64>>) -> Result<(), HarnessError> {
    let io = |e: csv::Error| HarnessError::io(path, std::io::Error::other(e));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(&head).map_err(io)?;
    for row in rows {
        w.write_record(row.iter().map(|x| format!("{x:.16e}"))).map_err(io)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

fn names(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |i| format!("{prefix}_{i}"))
}

/// Writes the plot tables into `dir`, creating it if needed, and returns
/// the files written.
pub fn emit_plot_data(trace: &Trace, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let d = trace.dims;
    let s = &trace.samples;
    let t = || std::iter::once("t".to_string());
    let mut out = Vec::new();

    let path = dir.join("loads.csv");
    let head = t()
        .chain(["tau_cmd_x", "tau_cmd_y", "tau_cmd_n", "tau_x", "tau_y", "tau_n"].map(String::from))
        .collect();
    write_table(
        &path,
        head,
        s.iter().map(|r| [&[r.t][..], &r.tau_cmd, &r.tau].concat()),
    )?;
    out.push(path);

    let path = dir.join("xy.csv");
    let head = t()
        .chain((1..=d.m).flat_map(|i| [format!("fx_{i}"), format!("fy_{i}")]))
        .collect();
    write_table(
        &path,
        head,
        s.iter().map(|r| {
            let mut row = vec![r.t];
            for (f, a) in r.force.iter().zip(&r.alpha) {
                row.extend([f * a.cos(), f * a.sin()]);
            }
            row
        }),
    )?;
    out.push(path);

    let path = dir.join("forces.csv");
    let head = t().chain(names("F", d.m)).chain(names("Fd", d.m)).collect();
    write_table(
        &path,
        head,
        s.iter().map(|r| {
            let mut row = vec![r.t];
            row.extend(&r.force);
            row.extend((0..d.m).map(|i| {
                let o = d.offset(i);
                norm(&r.xi_d[o..o + d.width(i)])
            }));
            row
        }),
    )?;
    out.push(path);

    let path = dir.join("theta.csv");
    let head = t().chain(names("theta", d.q)).collect();
    write_table(&path, head, s.iter().map(|r| [&[r.t][..], &r.theta].concat()))?;
    out.push(path);

    let path = dir.join("azimuth.csv");
    let head = t().chain(names("alpha_deg", d.m)).collect();
    write_table(
        &path,
        head,
        s.iter().map(|r| std::iter::once(r.t).chain(r.alpha.iter().map(|a| a.to_degrees())).collect()),
    )?;
    out.push(path);

    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{run, scenario};
    use crate::presets;

    #[test]
    fn writes_all_tables() {
        let scn = scenario::Scenario {
            duration: 0.05,
            ..scenario::ramp_oscillate()
        };
        let trace = run(&presets::cse1(), &scn).unwrap().trace;
        let dir = tempfile::tempdir().unwrap();
        let files = emit_plot_data(&trace, dir.path()).unwrap();
        assert_eq!(files.len(), 5);
        let forces = std::fs::read_to_string(dir.path().join("forces.csv")).unwrap();
        let mut lines = forces.lines();
        assert_eq!(lines.next().unwrap(), "t,F_1,F_2,F_3,Fd_1,Fd_2,Fd_3");
        assert_eq!(lines.count(), trace.samples.len());
    }
}
