//! Per-step trace records and their CSV form.
//!
//! Column order:
//! `t, tau_cmd_{x,y,n}, tau_{x,y,n}, xi_1..xi_p, xid_1..xid_p,
//! theta_1..theta_q, F_1..F_m, alpha_1..alpha_m, cbf_1..cbf_m, V, J`.
//! Floats are written with 17 significant digits, booleans as 0/1.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::HarnessError;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub tau_cmd: [f64; 3],
    pub tau: [f64; 3],
    pub xi: Vec<f64>,
    pub xi_d: Vec<f64>,
    pub theta: Vec<f64>,
    pub force: Vec<f64>,
    pub alpha: Vec<f64>,
    pub cbf_active: Vec<bool>,
    pub v: f64,
    pub j: f64,
}

impl TraceSample {
    pub fn residual(&self) -> f64 {
        (0..3).map(|k| (self.tau[k] - self.tau_cmd[k]).powi(2)).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceDims {
    pub p: usize,
    pub q: usize,
    pub m: usize,
}

impl TraceDims {
    /// Number of varying-azimuth thrusters, from `p = 2m₁ + m₂`, `m = m₁ + m₂`.
    pub fn m1(&self) -> usize {
        self.p - self.m
    }

    pub fn width(&self, i: usize) -> usize {
        if i < self.m1() {
            2
        } else {
            1
        }
    }

    pub fn offset(&self, i: usize) -> usize {
        (0..i).map(|k| self.width(k)).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub dims: TraceDims,
    pub samples: Vec<TraceSample>,
}

pub fn header(dims: TraceDims) -> Vec<String> {
    let mut h: Vec<String> = ["t", "tau_cmd_x", "tau_cmd_y", "tau_cmd_n", "tau_x", "tau_y", "tau_n"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let push = |h: &mut Vec<String>, prefix: &str, n: usize| h.extend((1..=n).map(|i| format!("{prefix}_{i}")));
    push(&mut h, "xi", dims.p);
    push(&mut h, "xid", dims.p);
    push(&mut h, "theta", dims.q);
    push(&mut h, "F", dims.m);
    push(&mut h, "alpha", dims.m);
    push(&mut h, "cbf", dims.m);
    h.push("V".into());
    h.push("J".into());
    h
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<W: Write>(trace: &Trace, out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(trace.dims))?;
    let mut row = Vec::new();
    for s in &trace.samples {
        row.clear();
        row.push(fmt(s.t));
        row.extend(s.tau_cmd.iter().chain(&s.tau).map(|&x| fmt(x)));
        row.extend(s.xi.iter().chain(&s.xi_d).chain(&s.theta).chain(&s.force).chain(&s.alpha).map(|&x| fmt(x)));
        row.extend(s.cbf_active.iter().map(|&b| if b { "1" } else { "0" }.to_string()));
        row.push(fmt(s.v));
        row.push(fmt(s.j));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(trace: &Trace) -> String {
    let mut buf = Vec::new();
    write_csv(trace, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is ascii")
}

/// Parses a trace, inferring `p`, `q`, `m` from the header.
pub fn read_csv<R: Read>(input: R) -> Result<Trace, String> {
    let mut r = csv::Reader::from_reader(input);
    let head = r.headers().map_err(|e| e.to_string())?.clone();
    let count = |prefix: &str| head.iter().filter(|h| h.strip_prefix(prefix).is_some_and(|n| n.parse::<usize>().is_ok())).count();
    let dims = TraceDims {
        p: count("xi_"),
        q: count("theta_"),
        m: count("F_"),
    };
    let expected = header(dims);
    if head.iter().ne(expected.iter().map(String::as_str)) {
        return Err(format!("header does not match the trace layout: {}", head.iter().collect::<Vec<_>>().join(",")));
    }
    let mut samples = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let num = |i: usize| -> Result<f64, String> {
            rec[i].trim().parse::<f64>().map_err(|e| format!("row {}: column {}: {e}", line + 2, expected[i]))
        };
        let mut c = 0;
        let mut take = |n: usize| -> Result<Vec<f64>, String> {
            let v = (c..c + n).map(num).collect::<Result<Vec<_>, _>>()?;
            c += n;
            Ok(v)
        };
        let t = take(1)?[0];
        let tc = take(3)?;
        let tau = take(3)?;
        let xi = take(dims.p)?;
        let xi_d = take(dims.p)?;
        let theta = take(dims.q)?;
        let force = take(dims.m)?;
        let alpha = take(dims.m)?;
        let cbf = take(dims.m)?;
        let vj = take(2)?;
        samples.push(TraceSample {
            t,
            tau_cmd: [tc[0], tc[1], tc[2]],
            tau: [tau[0], tau[1], tau[2]],
            xi,
            xi_d,
            theta,
            force,
            alpha,
            cbf_active: cbf.iter().map(|&b| b != 0.0).collect(),
            v: vj[0],
            j: vj[1],
        });
    }
    Ok(Trace { dims, samples })
}

pub fn write_trace(trace: &Trace, path: &Path) -> Result<(), HarnessError> {
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    write_csv(trace, std::io::BufWriter::new(file)).map_err(|e| HarnessError::io(path, std::io::Error::other(e)))
}

pub fn read_trace(path: &Path) -> Result<Trace, HarnessError> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    read_csv(std::io::BufReader::new(file)).map_err(|message| HarnessError::Format {
        path: path.to_path_buf(),
        message,
    })
}
