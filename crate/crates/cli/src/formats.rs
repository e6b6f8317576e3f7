//! Profile CSV, `key: value` metadata documents and the SVG profile plot.
//!
//! Floats are written with 17 significant digits so a file read back gives the
//! same `f64` bits.

use std::fmt::Write as _;
use std::io::{Read, Write};

use biconserv_core::evolve::{EndReason, ProfileCurve, ProfileMethod, ProfileRhs};

use crate::CliError;

pub const PROFILE_HEADER: [&str; 5] = ["x_n", "alpha", "alpha_p", "alpha_pp", "lambda_n"];

/// Exact decimal form of a float.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn parse_f64(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok()
}

pub fn write_profile_csv<W: Write>(profile: &ProfileCurve, w: W) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(PROFILE_HEADER).map_err(CliError::io)?;
    for i in 0..profile.len() {
        out.write_record([
            fmt_f64(profile.xs[i]),
            fmt_f64(profile.alpha[i]),
            fmt_f64(profile.alpha_p[i]),
            fmt_f64(profile.alpha_pp[i]),
            fmt_f64(profile.lambda_n(i)),
        ])
        .map_err(CliError::io)?;
    }
    out.flush().map_err(|e| CliError::io(e.into()))?;
    Ok(())
}

/// Rows of a profile CSV. Checks the header, the column count, that every
/// field is a finite number and that `x_n` increases strictly.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileTable {
    pub xs: Vec<f64>,
    pub alpha: Vec<f64>,
    pub alpha_p: Vec<f64>,
    pub alpha_pp: Vec<f64>,
    pub lambda_n: Vec<f64>,
}

pub fn read_profile_csv<R: Read>(r: R) -> Result<ProfileTable, CliError> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = rd.headers().map_err(|e| CliError::schema(format!("unreadable header: {e}")))?;
    if header.iter().collect::<Vec<_>>() != PROFILE_HEADER {
        return Err(CliError::schema(format!(
            "expected header {}, got {}",
            PROFILE_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut t = ProfileTable {
        xs: Vec::new(),
        alpha: Vec::new(),
        alpha_p: Vec::new(),
        alpha_pp: Vec::new(),
        lambda_n: Vec::new(),
    };
    for (line, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| CliError::schema(format!("row {}: {e}", line + 2)))?;
        let mut v = [0.0; 5];
        for (k, slot) in v.iter_mut().enumerate() {
            *slot = rec
                .get(k)
                .and_then(parse_f64)
                .filter(|x| x.is_finite())
                .ok_or_else(|| CliError::schema(format!("row {}: column {} is not a finite number", line + 2, PROFILE_HEADER[k])))?;
        }
        if let Some(last) = t.xs.last() {
            if !(v[0] > *last) {
                return Err(CliError::schema(format!("row {}: x_n does not increase", line + 2)));
            }
        }
        t.xs.push(v[0]);
        t.alpha.push(v[1]);
        t.alpha_p.push(v[2]);
        t.alpha_pp.push(v[3]);
        t.lambda_n.push(v[4]);
    }
    if t.xs.is_empty() {
        return Err(CliError::schema("profile CSV has no rows"));
    }
    Ok(t)
}

/// Ordered `key: value` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Meta {
    pub entries: Vec<(String, String)>,
}

impl Meta {
    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str, CliError> {
        self.get(key).ok_or_else(|| CliError::schema(format!("metadata lacks '{key}'")))
    }

    pub fn require_f64(&self, key: &str) -> Result<f64, CliError> {
        let v = self.require(key)?;
        parse_f64(v).ok_or_else(|| CliError::schema(format!("metadata '{key}' is not a number: {v}")))
    }

    /// Entries whose key starts with `prefix`, prefix removed.
    pub fn with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = (&'a str, &'a str)> + 'a {
        self.entries
            .iter()
            .filter_map(move |(k, v)| k.strip_prefix(prefix).map(|k| (k, v.as_str())))
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k}: {v}");
        }
        s
    }

    /// Blank lines and lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut m = Meta::default();
        for (i, line) in text.lines().enumerate() {
            let t = line.trim_end();
            if t.trim().is_empty() || t.trim_start().starts_with('#') {
                continue;
            }
            let (k, v) = t
                .split_once(": ")
                .or_else(|| t.strip_suffix(':').map(|k| (k, "")))
                .ok_or_else(|| CliError::schema(format!("metadata line {}: expected 'key: value'", i + 1)))?;
            m.push(k.trim(), v);
        }
        Ok(m)
    }
}

pub fn method_name(m: ProfileMethod) -> &'static str {
    match m {
        ProfileMethod::Ode => "ode",
        ProfileMethod::ClosedForm => "closed-form",
    }
}

pub fn parse_method(s: &str) -> Option<ProfileMethod> {
    match s {
        "ode" => Some(ProfileMethod::Ode),
        "closed-form" => Some(ProfileMethod::ClosedForm),
        _ => None,
    }
}

/// Rebuild a profile from its table and the metadata that `build` wrote.
pub fn restore_profile(table: &ProfileTable, meta: &Meta, rhs: ProfileRhs, seed_spec: String) -> Result<ProfileCurve, CliError> {
    let method = parse_method(meta.require("method")?)
        .ok_or_else(|| CliError::schema(format!("unknown method '{}'", meta.get("method").unwrap_or_default())))?;
    let lo = meta.require_f64("validity.lo")?;
    let hi = meta.require_f64("validity.hi")?;
    let end = |k: &str| -> Result<EndReason, CliError> {
        let v = meta.require(k)?;
        EndReason::parse(v).ok_or_else(|| CliError::schema(format!("unknown end reason '{v}'")))
    };
    let ends = (end("end.lo")?, end("end.hi")?);
    if table.xs[0] != lo || *table.xs.last().unwrap() != hi {
        return Err(CliError::schema("first and last x_n do not match the recorded validity interval"));
    }
    Ok(ProfileCurve {
        seed_spec,
        rhs,
        method,
        xs: table.xs.clone(),
        alpha: table.alpha.clone(),
        alpha_p: table.alpha_p.clone(),
        alpha_pp: table.alpha_pp.clone(),
        validity: (lo, hi),
        ends,
    })
}

const SVG_W: f64 = 640.0;
const SVG_H: f64 = 400.0;
const MARGIN: f64 = 48.0;

/// The profile `(x_n, α)` as an SVG polyline with axes. The output depends
/// only on the samples.
pub fn profile_svg(xs: &[f64], alpha: &[f64], title: &str) -> Result<String, CliError> {
    if xs.is_empty() || xs.len() != alpha.len() {
        return Err(CliError::schema("nothing to plot"));
    }
    let range = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo < 1e-12 {
            (lo - 0.5, hi + 0.5)
        } else {
            let pad = 0.05 * (hi - lo);
            (lo - pad, hi + pad)
        }
    };
    let (x0, x1) = range(xs);
    let (y0, y1) = range(alpha);
    let (pw, ph) = (SVG_W - 2.0 * MARGIN, SVG_H - 2.0 * MARGIN);
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| SVG_H - MARGIN - (y - y0) / (y1 - y0) * ph;
    // axes through the origin when it is in view, else along the frame
    let ax = if x0 <= 0.0 && 0.0 <= x1 { sx(0.0) } else { MARGIN };
    let ay = if y0 <= 0.0 && 0.0 <= y1 { sy(0.0) } else { SVG_H - MARGIN };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{SVG_W}" height="{SVG_H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<title>{}</title>"#, escape(title));
    let _ = writeln!(
        s,
        r#"<line class="axis-x" x1="{MARGIN:.3}" y1="{ay:.3}" x2="{:.3}" y2="{ay:.3}" stroke="black" stroke-width="1"/>"#,
        SVG_W - MARGIN
    );
    let _ = writeln!(
        s,
        r#"<line class="axis-y" x1="{ax:.3}" y1="{MARGIN:.3}" x2="{ax:.3}" y2="{:.3}" stroke="black" stroke-width="1"/>"#,
        SVG_H - MARGIN
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.3}" y="{:.3}" font-size="12" text-anchor="end">x_n</text>"#,
        SVG_W - MARGIN,
        ay - 6.0
    );
    let _ = writeln!(s, r#"<text x="{:.3}" y="{:.3}" font-size="12">alpha</text>"#, ax + 6.0, MARGIN + 12.0);
    for (x, anchor) in [(x0, "start"), (x1, "end")] {
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" font-size="10" text-anchor="{anchor}">{x:.4}</text>"#,
            sx(x),
            SVG_H - MARGIN + 16.0
        );
    }
    let mut pts = String::new();
    for (i, (x, y)) in xs.iter().zip(alpha).enumerate() {
        if i > 0 {
            pts.push(' ');
        }
        let _ = write!(pts, "{:.3},{:.3}", sx(*x), sy(*y));
    }
    let _ = writeln!(
        s,
        r#"<polyline class="profile" fill="none" stroke="steelblue" stroke-width="1.5" points="{pts}"/>"#
    );
    s.push_str("</svg>\n");
    Ok(s)
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn meta_round_trip_and_errors() {
        let mut m = Meta::default();
        m.push("seed", "sphere:n=2,r=1");
        m.push("empty", "");
        m.push("validity.lo", fmt_f64(-0.1));
        let back = Meta::parse(&m.render()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.require_f64("validity.lo").unwrap(), -0.1);
        assert!(back.require("missing").is_err());
        assert!(Meta::parse("no separator here").is_err());
        assert_eq!(Meta::parse("# comment\n\na: b\n").unwrap().get("a"), Some("b"));
    }

    #[test]
    fn csv_schema_errors() {
        assert!(read_profile_csv("".as_bytes()).is_err());
        assert!(read_profile_csv("x_n,alpha,alpha_p,alpha_pp,lambda_n\n".as_bytes()).is_err());
        assert!(read_profile_csv("x,alpha,alpha_p,alpha_pp,lambda_n\n0,0,0,0,0\n".as_bytes()).is_err());
        assert!(read_profile_csv("x_n,alpha,alpha_p,alpha_pp,lambda_n\n0,0,0,0\n".as_bytes()).is_err());
        assert!(read_profile_csv("x_n,alpha,alpha_p,alpha_pp,lambda_n\n0,0,0,0,nan\n".as_bytes()).is_err());
        assert!(read_profile_csv("x_n,alpha,alpha_p,alpha_pp,lambda_n\n1,0,0,0,0\n0,0,0,0,0\n".as_bytes()).is_err());
        let t = read_profile_csv("x_n,alpha,alpha_p,alpha_pp,lambda_n\n0,1,2,3,4\n".as_bytes()).unwrap();
        assert_eq!(t.lambda_n, [4.0]);
    }

    #[test]
    fn svg_is_fixed_and_deterministic() {
        let xs: Vec<f64> = (-10..=10).map(|i| i as f64 / 10.0).collect();
        let a: Vec<f64> = xs.iter().map(|x| x * x / 6.0).collect();
        let s = profile_svg(&xs, &a, "t").unwrap();
        assert!(s.contains(r#"viewBox="0 0 640 400""#));
        assert_eq!(s.matches("<polyline").count(), 1);
        assert_eq!(s, profile_svg(&xs, &a, "t").unwrap());
        assert!(profile_svg(&[], &[], "t").is_err());
        // constant data still gets a finite frame
        assert!(!profile_svg(&[0.0, 1.0], &[0.0, 0.0], "t").unwrap().contains("NaN"));
    }

    proptest! {
        #[test]
        fn decimal_form_is_exact(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            let back = parse_f64(&fmt_f64(x)).unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }
}
