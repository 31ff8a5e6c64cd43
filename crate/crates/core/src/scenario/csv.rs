use std::io::Write;

use crate::error::Result;
use crate::optics::YieldTable;
use crate::rate::KeyRatePoint;

pub const RATES_HEADER: &str = "distance_km,source,method,mu1,mu2,q_z,E_z,y11_lower,e11_upper,rate";
pub const YIELDS_HEADER: &str = "i,j,basis,role,yield";

/// Scientific notation with 17 significant digits, enough to round-trip.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_rates_csv<W: Write + ?Sized>(
    out: &mut W,
    rows: &[(String, KeyRatePoint)],
) -> Result<()> {
    writeln!(out, "{RATES_HEADER}")?;
    for (source, p) in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            format_real(p.distance_km),
            source,
            p.method,
            format_real(p.mu1),
            format_real(p.mu2),
            format_real(p.gains.q_z),
            format_real(p.qber_z()),
            format_real(p.y11_lower),
            format_real(p.e11_x),
            format_real(p.rate),
        )?;
    }
    Ok(())
}

pub fn write_yields_csv<W: Write + ?Sized>(out: &mut W, table: &YieldTable) -> Result<()> {
    writeln!(out, "{YIELDS_HEADER}")?;
    for (i, j, basis, role, y) in table.rows() {
        writeln!(out, "{i},{j},{basis},{},{}", role.as_str(), format_real(y))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for x in [0.1, 1.0 / 3.0, 5.978_826_100_276_253e-7, 0.0, 1e-300] {
            assert_eq!(format_real(x).parse::<f64>().unwrap(), x);
        }
    }
}
