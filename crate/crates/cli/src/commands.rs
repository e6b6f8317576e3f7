//! The five commands. Each returns its exit code or a [`CliError`].

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use biconserv_core::catalog::{catalog as catalog_entries, IsoparSeed};
use biconserv_core::chart::{Chart, DomainBox};
use biconserv_core::evolve::{closed_form_profile, evolve, solve_profile, EvolveOptions, EvolvedChart, ProfileRhs};
use biconserv_core::expr::BoundExpr;
use biconserv_core::graph_lab::{biharmonic_graph_residuals, minimal_graph_divergence, minimal_graph_residual, GraphChart};
use biconserv_core::kernel::eigenframe_condition;
use biconserv_core::report::{Criterion, ResidualReport};
use biconserv_core::verify::{bhh_properness_check, codazzi_report, run_suite, OrthoMetric, Tolerances, SUITES};

use crate::formats::{fmt_f64, method_name, profile_svg, read_profile_csv, restore_profile, write_profile_csv, Meta};
use crate::spec::{parse, parse_seed, Target};
use crate::{BuildArgs, CatalogArgs, CliError, ExportArgs, GraphArgs, Method, VerifyArgs, EXIT_FAIL, EXIT_PASS};

/// Suites that apply to plain charts.
pub const CHART_SUITES: &[&str] = &["eigenframe", "codazzi", "bhh"];

/// Format version written into metadata documents.
pub const META_FORMAT: &str = "biconserv-profile 1";

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn list(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("{{{}}}", parts.join(", "))
}

/// The catalog listing, one line per entry, sorted by spec.
pub fn catalog_text() -> String {
    let mut s = String::new();
    for e in catalog_entries() {
        s.push_str(&format!(
            "{} | lambda0 = {} | mu0 = {} | symmetry {} | {} | {}\n",
            e.spec,
            list(&e.lambda0),
            list(&e.mu0),
            e.symmetry,
            if e.evolvable { "evolvable" } else { "not evolvable" },
            e.description
        ));
    }
    s
}

pub fn catalog(a: &CatalogArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    emit(a.out.as_deref(), &catalog_text(), stdout)?;
    Ok(EXIT_PASS)
}

pub fn tolerances(overrides: &[String], base: Tolerances) -> Result<Tolerances, CliError> {
    let mut t = base;
    for o in overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("tolerance override '{o}' is not NAME=VALUE")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| CliError::usage(format!("tolerance {k} needs a number, got '{v}'")))?;
        t.set(k.trim(), v).map_err(|e| {
            CliError::usage(format!("{e} (known: {})", Tolerances::NAMES.join(", ")))
        })?;
    }
    Ok(t)
}

fn check_x_max(x: f64) -> Result<(), CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::usage(format!("--xmax must be positive, got {x}")))
    }
}

/// Profile and evolved chart of a seed.
pub fn construct(seed: &IsoparSeed, x_max: f64, method: Method) -> Result<EvolvedChart, CliError> {
    check_x_max(x_max)?;
    let opts = EvolveOptions::default();
    let profile = match method {
        Method::Ode => solve_profile(seed, x_max, &opts)?,
        Method::ClosedForm => closed_form_profile(seed, x_max, &opts)?,
    };
    Ok(evolve(seed, &profile)?)
}

/// `residual.<name>.max` (or `.min` for floors) and `.verdict` lines.
pub fn summary_lines(reports: &[ResidualReport], meta: &mut Meta) {
    for r in reports {
        match r.criterion {
            Criterion::AtMost => meta.push(format!("residual.{}.max", r.name), fmt_f64(r.max_abs)),
            Criterion::AtLeast => meta.push(format!("residual.{}.min", r.name), fmt_f64(r.min_abs)),
        }
        meta.push(format!("residual.{}.verdict", r.name), r.verdict);
    }
}

fn report_lines(reports: &[ResidualReport], meta: &mut Meta) {
    for r in reports {
        let k = |f: &str| format!("report.{}.{f}", r.name);
        meta.push(k("verdict"), r.verdict);
        meta.push(k("samples"), r.samples);
        meta.push(k("max_abs"), fmt_f64(r.max_abs));
        meta.push(k("min_abs"), fmt_f64(r.min_abs));
        meta.push(k("mean_abs"), fmt_f64(r.mean_abs));
        let need = match r.criterion {
            Criterion::AtMost => "<=",
            Criterion::AtLeast => ">",
        };
        meta.push(k("need"), format!("{need} {}", fmt_f64(r.tolerance)));
        let worst: Vec<String> = r.worst_point.iter().map(|x| fmt_f64(*x)).collect();
        meta.push(k("worst_point"), worst.join(" "));
        if !r.note.is_empty() {
            meta.push(k("note"), &r.note);
        }
    }
}

fn seed_lines(ev: &EvolvedChart, meta: &mut Meta) {
    let s = &ev.seed;
    meta.push("seed", s.spec());
    meta.push("n", s.n);
    meta.push("lambda0", list(&s.lambda0));
    meta.push("mu0", list(&s.mu0));
    meta.push("symmetry", &s.symmetry_tag);
    meta.push("convention.normal", ev.convention());
    meta.push("convention.frame", "D_{e_i} N0 = -lambda0_i e_i, D_{e_i} e_n = -mu0_i e_i");
    meta.push("convention.profile", "alpha'' = R(x_n, alpha, alpha')");
}

fn tolerance_lines(tol: &Tolerances, meta: &mut Meta) {
    for name in Tolerances::NAMES {
        meta.push(format!("tol.{name}"), format!("{:e}", tol.get(name).expect("listed name")));
    }
}

pub fn build(a: &BuildArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, CliError> {
    let seed = parse_seed(&a.seed)?;
    let tol = tolerances(&a.tol, Tolerances::default())?;
    let ev = construct(&seed, a.x_max, a.method)?;
    let reports = run_suite("eigenframe", &ev, &tol)?;
    let passed = reports.iter().all(ResidualReport::passed);
    let p = &ev.profile;

    let mut meta = Meta::default();
    meta.push("format", META_FORMAT);
    seed_lines(&ev, &mut meta);
    meta.push("method", method_name(p.method));
    meta.push("x_max", format!("{:e}", a.x_max));
    meta.push("eps_focal", format!("{:e}", p.rhs.eps_focal));
    meta.push("validity.lo", fmt_f64(p.validity.0));
    meta.push("validity.hi", fmt_f64(p.validity.1));
    meta.push("end.lo", p.ends.0.as_str());
    meta.push("end.hi", p.ends.1.as_str());
    meta.push("samples", p.len());
    tolerance_lines(&tol, &mut meta);
    summary_lines(&reports, &mut meta);
    meta.push("verdict", if passed { "pass" } else { "fail" });

    match &a.out {
        Some(path) => {
            let f = fs::File::create(path)?;
            write_profile_csv(p, std::io::BufWriter::new(f))?;
            fs::write(meta_path(path), meta.render())?;
        }
        None => write_profile_csv(p, &mut *stdout)?,
    }
    for r in &reports {
        let _ = writeln!(stderr, "{r}");
    }
    let _ = writeln!(
        stderr,
        "{}: validity [{}, {}] ({}, {}), {} samples",
        seed.spec(),
        p.validity.0,
        p.validity.1,
        p.ends.0.as_str(),
        p.ends.1.as_str(),
        p.len()
    );
    Ok(if passed { EXIT_PASS } else { EXIT_FAIL })
}

/// `profile.csv` -> `profile.meta`
pub fn meta_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta")
}

/// Seed, tolerances and evolved chart from files written by `build`.
pub fn load_build(csv: &Path) -> Result<(EvolvedChart, Tolerances, Meta), CliError> {
    let table = read_profile_csv(fs::File::open(csv)?)?;
    let mpath = meta_path(csv);
    let text = fs::read_to_string(&mpath)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", mpath.display())))?;
    let meta = Meta::parse(&text)?;
    if meta.require("format")? != META_FORMAT {
        return Err(CliError::schema(format!("unsupported format '{}'", meta.get("format").unwrap_or_default())));
    }
    let seed = parse_seed(meta.require("seed")?)?;
    let mut tol = Tolerances::default();
    for (name, v) in meta.with_prefix("tol.") {
        let v = crate::formats::parse_f64(v).ok_or_else(|| CliError::schema(format!("tolerance {name} is not a number")))?;
        tol.set(name, v)?;
    }
    let rhs = ProfileRhs::from_seed(&seed, meta.require_f64("eps_focal")?);
    let profile = restore_profile(&table, &meta, rhs, seed.spec())?;
    Ok((evolve(&seed, &profile)?, tol, meta))
}

fn parse_perturb(s: &str, n: usize) -> Result<(usize, f64), CliError> {
    let bad = || CliError::usage(format!("--perturb expects INDEX:SLOPE, got '{s}'"));
    let (i, v) = s.split_once(':').ok_or_else(bad)?;
    let i: usize = i.trim().parse().map_err(|_| bad())?;
    let v: f64 = v.trim().parse().map_err(|_| bad())?;
    // the perturbation varies along x1, which the Codazzi equations leave free
    // for the first curvature
    if i == 0 || i >= n {
        return Err(CliError::usage(format!("--perturb index must lie in 1..{n}, got {i}")));
    }
    Ok((i, v))
}

fn chart_grid(chart: &dyn Chart) -> Vec<Vec<f64>> {
    let per_axis = match chart.dim_domain() {
        0..=2 => 6,
        3 => 4,
        _ => 3,
    };
    chart.domain().scaled(0.8).grid(per_axis)
}

/// Suites that work on any hypersurface chart.
pub fn chart_suite(name: &str, chart: &dyn Chart, tol: &Tolerances) -> Result<Vec<ResidualReport>, CliError> {
    let pts = chart_grid(chart);
    Ok(match name {
        "eigenframe" => {
            let mut r = ResidualReport::new("eigenframe", tol.eigenframe);
            for p in &pts {
                r.push(eigenframe_condition(chart, p)?.max, p);
            }
            vec![r]
        }
        "codazzi" => vec![codazzi_report(&OrthoMetric::from_chart(chart), &pts, tol.codazzi)],
        "bhh" => vec![bhh_properness_check(chart, &pts, tol.bhh_floor)?],
        other => {
            return Err(CliError::usage(format!(
                "suite {other} needs an evolved seed; charts support {}",
                CHART_SUITES.join(", ")
            )))
        }
    })
}

pub fn verify(a: &VerifyArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, CliError> {
    for s in &a.suites {
        if !SUITES.contains(&s.as_str()) {
            return Err(CliError::usage(format!("unknown suite '{s}' (known: {})", SUITES.join(", "))));
        }
    }
    let mut meta = Meta::default();
    meta.push("format", "biconserv-report 1");
    let mut reports = Vec::new();

    let target = match (&a.profile, &a.seed) {
        (Some(csv), _) => {
            let (ev, tol, _) = load_build(csv)?;
            Some((ev, tolerances(&a.tol, tol)?))
        }
        (None, Some(spec)) => match parse(spec)? {
            Target::Seed(seed) => {
                let tol = tolerances(&a.tol, Tolerances::default())?;
                Some((construct(&seed, a.x_max, Method::Ode)?, tol))
            }
            Target::Chart(chart) => {
                let tol = tolerances(&a.tol, Tolerances::default())?;
                let names: Vec<&str> = if a.suites.is_empty() {
                    CHART_SUITES.to_vec()
                } else {
                    a.suites.iter().map(String::as_str).collect()
                };
                if a.perturb.is_some() {
                    return Err(CliError::usage("--perturb applies to evolved seeds"));
                }
                meta.push("chart", chart.label());
                meta.push("convention.normal", chart.convention());
                meta.push("suites", names.join(","));
                tolerance_lines(&tol, &mut meta);
                for name in &names {
                    reports.extend(chart_suite(name, &*chart, &tol)?);
                }
                None
            }
        },
        (None, None) => return Err(CliError::usage("verify needs --seed or --profile")),
    };

    if let Some((ev, tol)) = target {
        let names: Vec<&str> = if a.suites.is_empty() {
            SUITES.to_vec()
        } else {
            a.suites.iter().map(String::as_str).collect()
        };
        seed_lines(&ev, &mut meta);
        meta.push("chart", ev.label());
        meta.push("method", method_name(ev.profile.method));
        meta.push("validity.lo", fmt_f64(ev.profile.validity.0));
        meta.push("validity.hi", fmt_f64(ev.profile.validity.1));
        meta.push("suites", names.join(","));
        tolerance_lines(&tol, &mut meta);
        let perturb = a.perturb.as_deref().map(|s| parse_perturb(s, ev.n())).transpose()?;
        for name in &names {
            match (name, perturb) {
                (&"codazzi", Some((i, slope))) => {
                    let om = OrthoMetric::from_chart(&ev).perturbed(i, slope);
                    let rep = codazzi_report(&om, &ev.interior(0.8).grid(3), tol.codazzi);
                    let mut rep = rep.with_note(format!("curvature {i} perturbed by {slope}*x1"));
                    rep.name = "codazzi:perturbed".into();
                    reports.push(rep);
                }
                _ => reports.extend(run_suite(name, &ev, &tol)?),
            }
        }
    }

    let passed = reports.iter().all(ResidualReport::passed);
    summary_lines(&reports, &mut meta);
    report_lines(&reports, &mut meta);
    meta.push("verdict", if passed { "pass" } else { "fail" });
    emit(a.out.as_deref(), &meta.render(), stdout)?;
    for r in &reports {
        let _ = writeln!(stderr, "{r}");
    }
    Ok(if passed { EXIT_PASS } else { EXIT_FAIL })
}

fn parse_axis(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::usage(format!("grid axis '{s}' is neither a number nor lo:hi:count"));
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let num = |t: &str| t.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(bad);
    match parts.as_slice() {
        [x] => Ok(vec![num(x)?]),
        [lo, hi, k] => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            let k: usize = k.parse().map_err(|_| bad())?;
            if k == 0 || (k > 1 && !(hi > lo)) {
                return Err(bad());
            }
            Ok(if k == 1 { vec![lo] } else { biconserv_core::chart::linspace(lo, hi, k) })
        }
        _ => Err(bad()),
    }
}

/// Grid points of a `--grid` spec in `n` dimensions.
pub fn parse_grid(spec: &str, n: usize) -> Result<Vec<Vec<f64>>, CliError> {
    let axes: Vec<Vec<f64>> = spec.split(',').map(parse_axis).collect::<Result<_, _>>()?;
    let axes = match axes.len() {
        1 => vec![axes[0].clone(); n],
        k if k == n => axes,
        k => return Err(CliError::usage(format!("grid has {k} axes but the graph has dimension {n}"))),
    };
    let mut pts: Vec<Vec<f64>> = vec![Vec::new()];
    for ax in &axes {
        pts = pts
            .iter()
            .flat_map(|p| {
                ax.iter().map(move |x| {
                    let mut q = p.clone();
                    q.push(*x);
                    q
                })
            })
            .collect();
    }
    Ok(pts)
}

fn bind_params(mut e: BoundExpr, spec: Option<&str>) -> Result<BoundExpr, CliError> {
    for pair in spec.unwrap_or("").split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("--param expects name=value, got '{pair}'")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| CliError::usage(format!("parameter {k} needs a number, got '{v}'")))?;
        e = e.bind(k.trim(), v);
    }
    let free = e.unbound();
    if !free.is_empty() {
        return Err(CliError::usage(format!("unbound parameters: {} (use --param)", free.join(", "))));
    }
    Ok(e)
}

pub const GRAPH_COLUMNS: [&str; 4] = ["minimal", "minimal_divergence", "biharmonic_max", "biharmonic_vertical"];

pub fn graph(a: &GraphArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let e = BoundExpr::parse(&a.expr).map_err(|e| CliError::usage(format!("{e} in '{}'", a.expr)))?;
    let n = a.n.unwrap_or_else(|| e.expr.arity().max(2));
    if n == 0 || n < e.expr.arity() {
        return Err(CliError::usage(format!(
            "--n {n} is smaller than the highest variable x{}",
            e.expr.arity()
        )));
    }
    let e = bind_params(e, a.param.as_deref())?;
    let pts = parse_grid(&a.grid, n)?;
    let lo: Vec<f64> = (0..n).map(|i| pts.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min)).collect();
    let hi: Vec<f64> = (0..n).map(|i| pts.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max)).collect();
    let gc = GraphChart::new(n, Arc::new(e), DomainBox::new(lo, hi)).named(a.expr.clone());

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    header.extend(GRAPH_COLUMNS.iter().map(|s| s.to_string()));
    w.write_record(&header).map_err(CliError::io)?;
    for p in &pts {
        let b = biharmonic_graph_residuals(&gc, p)?;
        let mut row: Vec<String> = p.iter().map(|x| fmt_f64(*x)).collect();
        row.push(fmt_f64(minimal_graph_residual(&gc, p)?));
        row.push(fmt_f64(minimal_graph_divergence(&gc, p)?));
        row.push(fmt_f64(b.max_abs()));
        row.push(fmt_f64(b.vertical));
        w.write_record(&row).map_err(CliError::io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::usage(format!("io: {e}")))?;
    emit(a.out.as_deref(), &String::from_utf8(bytes).expect("ascii"), stdout)?;
    Ok(EXIT_PASS)
}

pub fn export_svg(a: &ExportArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let f = fs::File::open(&a.input).map_err(|e| CliError::usage(format!("cannot read {}: {e}", a.input.display())))?;
    let t = read_profile_csv(f)?;
    let svg = profile_svg(&t.xs, &t.alpha, "profile alpha(x_n)")?;
    emit(a.out.as_deref(), &svg, stdout)?;
    Ok(EXIT_PASS)
}
