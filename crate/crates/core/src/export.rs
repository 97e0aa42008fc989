//! CSV writers for the experiment tables. Floats use 17 significant digits.

use std::io::{self, Write};

use crate::boundary::FluxRecord;
use crate::domain::ApproximationReport;
use crate::experiments::{GapRecord, LayerRecord};
use crate::linalg::EigenPair;
use crate::onedim::ResonanceRow;

fn g(x: f64) -> String {
    format!("{x:.16e}")
}

/// `operator,eps,k,lambda,residual`.
pub fn write_spectrum_csv<W: Write>(mut out: W, rows: &[(&str, f64, &[EigenPair])]) -> io::Result<()> {
    writeln!(out, "operator,eps,k,lambda,residual")?;
    for (op, eps, pairs) in rows {
        for (i, p) in pairs.iter().enumerate() {
            writeln!(out, "{op},{},{},{},{}", g(*eps), i + 1, g(p.lambda), g(p.residual))?;
        }
    }
    Ok(())
}

/// `eps,h,h1_error,l2_error,grad_error,f_norm`.
pub fn write_approx_csv<W: Write>(mut out: W, rows: &[ApproximationReport]) -> io::Result<()> {
    writeln!(out, "eps,h,h1_error,l2_error,grad_error,f_norm")?;
    for r in rows {
        writeln!(out, "{},{},{},{},{},{}", g(r.eps), g(r.h), g(r.h1_error), g(r.l2_error), g(r.grad_error), g(r.f_norm))?;
    }
    Ok(())
}

/// `eps,k,lambda,flux,flux_over_lambda,eps2_lambda,regime`.
pub fn write_flux_csv<W: Write>(mut out: W, rows: &[FluxRecord]) -> io::Result<()> {
    writeln!(out, "eps,k,lambda,flux,flux_over_lambda,eps2_lambda,regime")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            g(r.eps),
            r.k,
            g(r.lambda),
            g(r.flux),
            g(r.flux_over_lambda),
            g(r.eps2_lambda()),
            r.regime
        )?;
    }
    Ok(())
}

/// `eps,k,lambda_eps,lambda_0,gap,ratio_thm_a,ratio_l2,resolved`.
pub fn write_gaps_csv<W: Write>(mut out: W, rows: &[GapRecord]) -> io::Result<()> {
    writeln!(out, "eps,k,lambda_eps,lambda_0,gap,ratio_thm_a,ratio_l2,resolved")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            g(r.eps),
            r.k,
            g(r.lambda_eps),
            g(r.lambda_0),
            g(r.gap),
            g(r.ratio_thm_a),
            g(r.ratio_l2),
            if r.resolved { "resolved" } else { "underresolved" }
        )?;
    }
    Ok(())
}

/// `eps,k,lambda,eps2_lambda,flux,flux_over_lambda,flux_over_lambda_1p5`.
pub fn write_oned_scan_csv<W: Write>(mut out: W, rows: &[ResonanceRow]) -> io::Result<()> {
    writeln!(out, "eps,k,lambda,eps2_lambda,flux,flux_over_lambda,flux_over_lambda_1p5")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            g(r.eps),
            r.k,
            g(r.lambda),
            g(r.eps2_lambda),
            g(r.flux),
            g(r.flux_over_lambda),
            g(r.flux_over_lambda_1p5)
        )?;
    }
    Ok(())
}

/// `eps,k,lambda,c_layer,layer_energy,layer_energy_over_lambda`.
pub fn write_layer_csv<W: Write>(mut out: W, rows: &[LayerRecord]) -> io::Result<()> {
    writeln!(out, "eps,k,lambda,c_layer,layer_energy,layer_energy_over_lambda")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            g(r.eps),
            r.k,
            g(r.lambda),
            g(r.c_layer),
            g(r.energy),
            g(r.energy_over_lambda())
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::Regime;

    #[test]
    fn values_round_trip() {
        let x = 0.1 + 0.2;
        let s = g(x);
        assert_eq!(s.parse::<f64>().unwrap(), x);
    }

    #[test]
    fn flux_rows_carry_regime() {
        let r = FluxRecord {
            eps: 0.125,
            k: 1,
            lambda: 20.0,
            flux: 80.0,
            flux_raw: 80.0,
            flux_over_lambda: 4.0,
            regime: Regime::Eps2LambdaLt1,
        };
        let mut buf = Vec::new();
        write_flux_csv(&mut buf, &[r]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let line = text.lines().nth(1).unwrap();
        assert_eq!(line.split(',').count(), 7);
        assert!(line.ends_with(",eps2_lambda_lt_1"));
    }
}
