//! File formats: profiles and line fields (JSON and CSV), field exports,
//! and report writers. All float text uses either the shortest
//! round-tripping JSON form or 18 significant decimal digits in CSV, so a
//! write/read cycle reproduces every bit.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::derivative::DerivativeSample;
use crate::engine::MaximalField;
use crate::explorer::{LineField, RatioScanReport};
use crate::profile::RadialProfile;
use crate::verifier::VerificationReport;
use crate::{Error, Result};

fn fl(x: f64) -> String {
    format!("{x:.17e}")
}

/// Reads a profile from JSON or CSV, chosen by file extension.
pub fn read_profile(path: &Path) -> Result<RadialProfile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Profile(format!("cannot read profile {}: {e}", path.display())))?;
    if path.extension().and_then(|e| e.to_str()) == Some("csv") {
        profile_from_csv(&text)
    } else {
        serde_json::from_str(&text)
            .map_err(|e| Error::Profile(format!("malformed profile {}: {e}", path.display())))
    }
}

pub fn write_profile(path: &Path, p: &RadialProfile) -> Result<()> {
    let body = if path.extension().and_then(|e| e.to_str()) == Some("csv") {
        profile_to_csv(p)
    } else {
        let mut s = serde_json::to_string_pretty(p)?;
        s.push('\n');
        s
    };
    Ok(std::fs::write(path, body)?)
}

fn profile_from_csv(text: &str) -> Result<RadialProfile> {
    let mut dimension: Option<u32> = None;
    let mut grid = Vec::new();
    let mut values = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(v) = rest.trim().strip_prefix("dimension=") {
                dimension = Some(v.trim().parse().map_err(|e| {
                    Error::Profile(format!("line {}: bad dimension: {e}", ln + 1))
                })?);
            }
            continue;
        }
        if line.starts_with(|c: char| c.is_alphabetic()) {
            continue;
        }
        let mut cols = line.split(',');
        let (t, f) = (cols.next(), cols.next());
        match (t, f) {
            (Some(t), Some(f)) => {
                grid.push(t.trim().parse::<f64>().map_err(|e| {
                    Error::Profile(format!("line {}: bad knot: {e}", ln + 1))
                })?);
                values.push(f.trim().parse::<f64>().map_err(|e| {
                    Error::Profile(format!("line {}: bad value: {e}", ln + 1))
                })?);
            }
            _ => return Err(Error::Profile(format!("line {}: need two columns", ln + 1))),
        }
    }
    let dimension =
        dimension.ok_or_else(|| Error::Profile("missing '# dimension=n' header".into()))?;
    RadialProfile::new(dimension, grid, values)
}

fn profile_to_csv(p: &RadialProfile) -> String {
    let mut out = format!("# dimension={}\nt,f\n", p.dimension());
    for (t, f) in p.knots().iter().zip(p.values()) {
        let _ = writeln!(out, "{},{}", fl(*t), fl(*f));
    }
    out
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLineField {
    dimension: u32,
    grid: Vec<f64>,
    values: Vec<f64>,
}

/// Reads a line field (piecewise-linear potential, dimension 1) from the
/// profile file format.
pub fn read_line_field(path: &Path) -> Result<LineField> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Profile(format!("cannot read field {}: {e}", path.display())))?;
    let raw: RawLineField = serde_json::from_str(&text)
        .map_err(|e| Error::Profile(format!("malformed field {}: {e}", path.display())))?;
    if raw.dimension != 1 {
        return Err(Error::Profile(format!(
            "line fields live in dimension 1, got {}",
            raw.dimension
        )));
    }
    LineField::new(raw.grid, raw.values)
}

pub fn write_line_field(path: &Path, field: &LineField) -> Result<()> {
    let payload = serde_json::json!({
        "dimension": 1,
        "grid": field.knots(),
        "values": field.potential(),
    });
    let mut s = serde_json::to_string_pretty(&payload)?;
    s.push('\n');
    Ok(std::fs::write(path, s)?)
}

/// Field export: one row per sample with the argmax geometry.
pub fn write_field_csv(path: &Path, field: &MaximalField, config_hash: &str) -> Result<()> {
    let mut out = format!(
        "# config={config_hash}\n# operator={} dimension={} profile={}\ns,value,d,r,c,multi_modal\n",
        field.operator.code(),
        field.dimension,
        field.profile_id
    );
    for smp in &field.samples {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fl(smp.s),
            fl(smp.value),
            fl(smp.ball.d),
            fl(smp.ball.r),
            fl(smp.c),
            u8::from(smp.diagnostics.multi_modal)
        );
    }
    Ok(std::fs::write(path, out)?)
}

/// Field export mirroring the in-memory structure, with the config hash on
/// the side.
pub fn write_field_json(path: &Path, field: &MaximalField, config_hash: &str) -> Result<()> {
    let payload = serde_json::json!({
        "config_hash": config_hash,
        "field": field,
    });
    let mut s = serde_json::to_string_pretty(&payload)?;
    s.push('\n');
    Ok(std::fs::write(path, s)?)
}

/// Per-sample derivative rows with the stationarity verdict. The threshold
/// matches the acceptance suite.
pub fn write_derivative_csv(
    path: &Path,
    rows: &[DerivativeSample],
    config_hash: &str,
) -> Result<()> {
    let mut out = format!(
        "# config={config_hash}\ns,value,fd,h_local,class,formula,residual,residual_scale,boundary_magnitude,excess,multi_modal,stationarity_ok\n"
    );
    for row in rows {
        let stationarity_ok = row.residual.abs() <= 1e-6 * row.residual_scale + 1e-300;
        let _ = writeln!(
            out,
            "{},{},{},{},{:?},{},{},{},{},{},{},{}",
            fl(row.s),
            fl(row.value),
            fl(row.fd),
            fl(row.h_local),
            row.class,
            fl(row.formula),
            fl(row.residual),
            fl(row.residual_scale),
            row.boundary_magnitude.map(fl).unwrap_or_default(),
            fl(row.excess),
            u8::from(row.multi_modal),
            u8::from(stationarity_ok)
        );
    }
    Ok(std::fs::write(path, out)?)
}

pub fn write_verification_json(path: &Path, report: &VerificationReport) -> Result<()> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(std::fs::write(path, s)?)
}

/// Flat CSV: one row per criterion, then one row per variation measurement.
pub fn write_verification_csv(path: &Path, report: &VerificationReport) -> Result<()> {
    let mut out = format!("# config={}\nsection,id,name,passed,detail\n", report.config_hash);
    for c in &report.criteria {
        let _ = writeln!(
            out,
            "criterion,{},{},{},\"{}\"",
            c.id,
            c.name,
            c.passed,
            c.detail.replace('"', "'")
        );
    }
    let _ = writeln!(
        out,
        "# variation columns: profile,operator,dimension,resolution,total_variation,grad_l1,ratio,stabilization_gap"
    );
    for v in &report.variation {
        let _ = writeln!(
            out,
            "variation,{},{},{},{},{},{},{},{}",
            v.profile_id,
            v.operator,
            v.dimension,
            v.resolution,
            fl(v.total_variation),
            fl(v.grad_l1),
            fl(v.ratio),
            fl(v.stabilization_gap)
        );
    }
    Ok(std::fs::write(path, out)?)
}

/// Conditional-operator trend table.
pub fn write_trend_csv(path: &Path, report: &RatioScanReport, config_hash: &str) -> Result<()> {
    let mut out = format!(
        "# config={config_hash}\n# convention={}\nfamily,param,ratio,growing\n",
        report.convention
    );
    for trend in &report.trends {
        for (p, r) in trend.params.iter().zip(&trend.ratios) {
            let _ = writeln!(out, "{},{},{},{}", trend.family, fl(*p), fl(*r), trend.growing);
        }
    }
    Ok(std::fs::write(path, out)?)
}

/// Writes any serializable payload as pretty JSON with a trailing newline.
pub fn write_json<T: serde::Serialize>(path: &Path, payload: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(payload)?;
    s.push('\n');
    Ok(std::fs::write(path, s)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_round_trips_through_json_and_csv() {
        let dir = tempfile::tempdir().unwrap();
        let p = RadialProfile::new(
            3,
            vec![0.0, 0.1 + 1e-13, std::f64::consts::PI / 3.0, 2.0],
            vec![0.3, -1.0 / 3.0, 0.7, 0.0],
        )
        .unwrap();
        for name in ["p.json", "p.csv"] {
            let path = dir.path().join(name);
            write_profile(&path, &p).unwrap();
            let back = read_profile(&path).unwrap();
            assert_eq!(back.dimension(), p.dimension());
            assert_eq!(back.knots(), p.knots());
            assert_eq!(back.values(), p.values());
        }
    }

    #[test]
    fn csv_without_dimension_header_is_rejected() {
        let err = profile_from_csv("t,f\n0.0,1.0\n1.0,0.0\n").unwrap_err();
        assert!(format!("{err}").contains("dimension"));
    }

    #[test]
    fn line_field_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let f = LineField::new(vec![0.0, 0.5, 1.25], vec![0.0, 1.0 / 7.0, 0.0]).unwrap();
        let path = dir.path().join("field.json");
        write_line_field(&path, &f).unwrap();
        let back = read_line_field(&path).unwrap();
        assert_eq!(back.knots(), f.knots());
        assert_eq!(back.potential(), f.potential());
    }

    #[test]
    fn field_csv_has_the_documented_columns() {
        use crate::engine::{maximal_field, EngineConfig, OperatorKind};
        let dir = tempfile::tempdir().unwrap();
        let p = RadialProfile::new(2, vec![0.0, 1.0], vec![1.0, 0.0]).unwrap();
        let field = maximal_field(
            &p,
            &[0.5, 1.0],
            OperatorKind::NonCentered,
            "tent",
            &EngineConfig::default(),
        )
        .unwrap();
        let path = dir.path().join("f.csv");
        write_field_csv(&path, &field, "abc123").unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# config=abc123\n"));
        assert!(text.contains("s,value,d,r,c,multi_modal"));
        assert_eq!(text.lines().count(), 5);
    }
}
