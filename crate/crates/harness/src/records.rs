//! Run records and CSV emission.

use std::io::{self, Write};
use std::path::Path;

/// One emitted measurement point of a single run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    pub policy: String,
    pub adversary: String,
    pub t: usize,
    pub cum_play_loss: f64,
    pub cum_switch_cost: f64,
    pub regret: f64,
    pub switches: f64,
}

/// Formats a value with 12 significant digits in plain decimal notation.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).clamp(0, 32) as usize;
    format!("{:.*}", decimals, x)
}

pub const RECORD_HEADER: &str =
    "seed,policy,adversary,t,cum_play_loss,cum_switch_cost,regret,switches";

pub fn write_records<W: Write>(out: &mut W, records: &[RunRecord]) -> io::Result<()> {
    out.write_all(RECORD_HEADER.as_bytes())?;
    out.write_all(b"\n")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.seed,
            r.policy,
            r.adversary,
            r.t,
            fmt_sig(r.cum_play_loss),
            fmt_sig(r.cum_switch_cost),
            fmt_sig(r.regret),
            fmt_sig(r.switches)
        )?;
    }
    Ok(())
}

pub fn write_records_csv(path: &Path, records: &[RunRecord]) -> io::Result<()> {
    let mut file = io::BufWriter::new(std::fs::File::create(path)?);
    write_records(&mut file, records)?;
    file.flush()
}

/// Aggregated curve point: mean and standard error of the regret across
/// seeds at one recorded round.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub policy: String,
    pub adversary: String,
    pub t: usize,
    pub mean_regret: f64,
    pub se_regret: f64,
    pub n_seeds: usize,
}

pub const CURVE_HEADER: &str = "policy,adversary,t,mean_regret,se_regret,n_seeds";

pub fn write_curves<W: Write>(out: &mut W, curves: &[CurvePoint]) -> io::Result<()> {
    out.write_all(CURVE_HEADER.as_bytes())?;
    out.write_all(b"\n")?;
    for c in curves {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            c.policy,
            c.adversary,
            c.t,
            fmt_sig(c.mean_regret),
            fmt_sig(c.se_regret),
            c.n_seeds
        )?;
    }
    Ok(())
}

pub fn write_curves_csv(path: &Path, curves: &[CurvePoint]) -> io::Result<()> {
    let mut file = io::BufWriter::new(std::fs::File::create(path)?);
    write_curves(&mut file, curves)?;
    file.flush()
}

/// One sweep measurement: mean final regret at a swept parameter value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub policy: String,
    pub mean_final_regret: f64,
    pub se_final_regret: f64,
    pub n_seeds: usize,
}

pub const SWEEP_HEADER: &str = "value,policy,mean_final_regret,se_final_regret,n_seeds";

pub fn write_sweep<W: Write>(out: &mut W, points: &[SweepPoint]) -> io::Result<()> {
    out.write_all(SWEEP_HEADER.as_bytes())?;
    out.write_all(b"\n")?;
    for p in points {
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt_sig(p.value),
            p.policy,
            fmt_sig(p.mean_final_regret),
            fmt_sig(p.se_final_regret),
            p.n_seeds
        )?;
    }
    Ok(())
}

pub fn write_sweep_csv(path: &Path, points: &[SweepPoint]) -> io::Result<()> {
    let mut file = io::BufWriter::new(std::fs::File::create(path)?);
    write_sweep(&mut file, points)?;
    file.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt_sig_keeps_twelve_significant_digits() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(1.0), "1.00000000000");
        assert_eq!(fmt_sig(1234.56789), "1234.56789000");
        assert_eq!(fmt_sig(-0.001234), "-0.00123400000000");
        assert_eq!(fmt_sig(123456789012.0), "123456789012");
    }

    #[test]
    fn records_csv_shape() {
        let records = vec![RunRecord {
            seed: 3,
            policy: "exp2".into(),
            adversary: "cin".into(),
            t: 44,
            cum_play_loss: 21.5,
            cum_switch_cost: 3.0,
            regret: 5.25,
            switches: 3.0,
        }];
        let mut buf = Vec::new();
        write_records(&mut buf, &records).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), RECORD_HEADER);
        assert_eq!(
            lines.next().unwrap(),
            "3,exp2,cin,44,21.5000000000,3.00000000000,5.25000000000,3.00000000000"
        );
        assert!(text.ends_with('\n'));
        assert!(!text.contains('\r'));
    }
}
