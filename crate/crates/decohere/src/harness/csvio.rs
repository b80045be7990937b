//! CSV emission and parsing. Floats are serialized with 17 significant
//! decimal digits so a read/write round trip changes no digit; decimal
//! point, comma delimiter, LF line endings, no locale formatting.

use std::path::Path;

use crate::error::{Error, Result};
use crate::measures::{MeasureRecord, MeasureUncertainties, Quantity};

use super::{DecayFit, SweepRow};

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::Parse(format!("bad float: {s}")))
}

pub const SWEEP_HEADER: &str = "ell,ell_sq,E,C,CG,CL,T,K,M";
pub const SWEEP_HEADER_UNC: &str = "ell,ell_sq,E,C,CG,CL,T,K,M,dE,dC,dCG,dCL,dT,dK,dM";
pub const RATES_HEADER: &str = "quantity,gamma_fit,intercept,asymptote,points_used,residual_rms";

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let with_unc = rows.iter().any(|r| r.record.uncertainties.is_some());
    let mut out = String::new();
    out.push_str(if with_unc { SWEEP_HEADER_UNC } else { SWEEP_HEADER });
    out.push('\n');
    for row in rows {
        let r = &row.record;
        let mut fields = vec![
            fmt_f64(row.ell),
            fmt_f64(row.ell_sq),
            fmt_f64(r.e),
            fmt_f64(r.c),
            fmt_f64(r.c_g),
            fmt_f64(r.c_l),
            fmt_f64(r.t),
            fmt_f64(r.k),
            fmt_f64(r.m),
        ];
        if with_unc {
            let u = r.uncertainties.unwrap_or(MeasureUncertainties {
                e: 0.0,
                c: 0.0,
                c_g: 0.0,
                c_l: 0.0,
                t: 0.0,
                k: 0.0,
                m: 0.0,
            });
            fields.extend([
                fmt_f64(u.e),
                fmt_f64(u.c),
                fmt_f64(u.c_g),
                fmt_f64(u.c_l),
                fmt_f64(u.t),
                fmt_f64(u.k),
                fmt_f64(u.m),
            ]);
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn sweep_from_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty sweep CSV".into()))?
        .trim();
    let with_unc = match header {
        h if h == SWEEP_HEADER => false,
        h if h == SWEEP_HEADER_UNC => true,
        other => return Err(Error::Parse(format!("unexpected sweep header: {other}"))),
    };
    let want = if with_unc { 16 } else { 9 };
    let mut rows = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != want {
            return Err(Error::Parse(format!(
                "row has {} fields, expected {want}: {line}",
                f.len()
            )));
        }
        let v: Vec<f64> = f.iter().map(|s| parse_f64(s)).collect::<Result<_>>()?;
        let uncertainties = if with_unc {
            Some(MeasureUncertainties {
                e: v[9],
                c: v[10],
                c_g: v[11],
                c_l: v[12],
                t: v[13],
                k: v[14],
                m: v[15],
            })
        } else {
            None
        };
        rows.push(SweepRow {
            ell: v[0],
            ell_sq: v[1],
            record: MeasureRecord {
                e: v[2],
                c: v[3],
                c_g: v[4],
                c_l: v[5],
                t: v[6],
                k: v[7],
                m: v[8],
                uncertainties,
            },
            ree_converged: true,
        });
    }
    Ok(rows)
}

pub fn rates_to_csv(fits: &[DecayFit]) -> String {
    let mut out = String::from(RATES_HEADER);
    out.push('\n');
    for f in fits {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            f.quantity.label(),
            fmt_f64(f.gamma_fit),
            fmt_f64(f.intercept),
            fmt_f64(f.asymptote),
            f.points_used,
            fmt_f64(f.residual_rms)
        ));
    }
    out
}

pub fn rates_from_csv(text: &str) -> Result<Vec<DecayFit>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty rates CSV".into()))?
        .trim();
    if header != RATES_HEADER {
        return Err(Error::Parse(format!("unexpected rates header: {header}")));
    }
    let mut fits = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(Error::Parse(format!("bad rates row: {line}")));
        }
        fits.push(DecayFit {
            quantity: Quantity::parse(f[0])?,
            gamma_fit: parse_f64(f[1])?,
            intercept: parse_f64(f[2])?,
            asymptote: parse_f64(f[3])?,
            points_used: f[4]
                .parse()
                .map_err(|_| Error::Parse(format!("bad points_used: {}", f[4])))?,
            residual_rms: parse_f64(f[5])?,
        });
    }
    Ok(fits)
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents)?;
    Ok(())
}

pub fn read_file(path: &Path) -> Result<String> {
    Ok(std::fs::read_to_string(path)?)
}
