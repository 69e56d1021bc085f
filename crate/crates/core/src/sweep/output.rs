use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::config::{Axis, SweepSpec};
use super::run::{AuditRecord, SweepOutcome, SweepRow};
use crate::error::{Error, Result};

pub const CSV_COLUMNS: [&str; 16] = [
    "sigma_p",
    "epsilon",
    "c_xi",
    "xi",
    "eta",
    "n_b",
    "mu",
    "n_s",
    "delta_t",
    "schmidt_number",
    "m_used",
    "j_c",
    "j_q",
    "ratio",
    "ratio_db",
    "physicality_margin",
];

fn f(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io {
        context: "formatting CSV".into(),
        source: std::io::Error::other(e),
    }
}

/// First line of every CSV: code version and spec hash.
pub fn header_comment(spec: &SweepSpec) -> String {
    format!(
        "# doppler-qfi {}, spec sha256 {}\n",
        env!("CARGO_PKG_VERSION"),
        spec.hash_hex()
    )
}

/// Result rows as CSV bytes, 17 significant digits, no locale.
pub fn rows_csv(spec: &SweepSpec, rows: &[SweepRow]) -> Result<Vec<u8>> {
    let mut buf = header_comment(spec).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(CSV_COLUMNS).map_err(csv_err)?;
        for r in rows {
            let p = &r.point;
            w.write_record([
                f(p.sigma_p),
                f(r.epsilon),
                f(p.c_xi),
                f(r.xi),
                f(p.eta),
                f(p.n_b),
                f(r.mu),
                f(r.n_s),
                f(r.duration),
                f(r.schmidt_number),
                r.m_used.to_string(),
                f(r.jc),
                f(r.jq),
                f(r.ratio),
                f(r.ratio_db),
                f(r.physicality_margin),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|source| Error::Io {
            context: "formatting CSV".into(),
            source,
        })?;
    }
    Ok(buf)
}

pub fn audit_csv(spec: &SweepSpec, audit: &[AuditRecord]) -> Result<Vec<u8>> {
    let mut buf = header_comment(spec).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record([
            "row",
            "sigma_p",
            "c_xi",
            "eta",
            "n_b",
            "pairs",
            "j_q",
            "j_q_oracle",
            "rel_err",
            "status",
        ])
        .map_err(csv_err)?;
        let opt = |x: Option<f64>| x.map(f).unwrap_or_default();
        for a in audit {
            w.write_record([
                a.index.to_string(),
                f(a.point.sigma_p),
                f(a.point.c_xi),
                f(a.point.eta),
                f(a.point.n_b),
                a.pairs.to_string(),
                f(a.jq),
                opt(a.oracle),
                opt(a.rel_err),
                a.status.clone(),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|source| Error::Io {
            context: "formatting CSV".into(),
            source,
        })?;
    }
    Ok(buf)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|source| Error::Io {
        context: format!("writing {}", path.display()),
        source,
    })
}

/// Writes the CSV, the audit CSV (when audited) and optional SVG plots into `dir`.
pub fn write_outputs(
    spec: &SweepSpec,
    outcome: &SweepOutcome,
    dir: &Path,
    plots: bool,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        context: format!("creating {}", dir.display()),
        source,
    })?;
    let name = &spec.output.name;
    let mut written = Vec::new();
    let main = dir.join(format!("{name}.csv"));
    write_file(&main, &rows_csv(spec, &outcome.rows)?)?;
    written.push(main);
    if !outcome.audit.is_empty() {
        let p = dir.join(format!("{name}_audit.csv"));
        write_file(&p, &audit_csv(spec, &outcome.audit)?)?;
        written.push(p);
    }
    if plots {
        for (file, svg) in plot_files(spec, &outcome.rows) {
            let p = dir.join(file);
            write_file(&p, svg.as_bytes())?;
            written.push(p);
        }
    }
    Ok(written)
}

/// SVG documents for a sweep: an `η × N_B` heatmap of the ratio in dB per
/// `(σ_p, c_ξ)` slice, and a ratio-versus-`σ_p` chart when `σ_p` is swept.
pub fn plot_files(spec: &SweepSpec, rows: &[SweepRow]) -> Vec<(String, String)> {
    let name = &spec.output.name;
    let (ne, nb) = (spec.eta.len(), spec.n_b.len());
    let (nc, ns) = (spec.c_xi.len(), spec.sigma_p_axis.len());
    let mut out = Vec::new();
    if ne > 1 && nb > 1 {
        let slice = ne * nb;
        for (i, chunk) in rows.chunks(slice).enumerate() {
            let (si, ci) = (i / nc, i % nc);
            let p = chunk[0].point;
            let title = format!(
                "10 log10(J_q/J_c), sigma_p = {:.3e}, c_xi = {}",
                p.sigma_p, p.c_xi
            );
            let z: Vec<f64> = chunk.iter().map(|r| r.ratio_db).collect();
            out.push((
                format!("{name}_s{si}_c{ci}.svg"),
                heatmap(&title, &spec.eta, &spec.n_b, &z),
            ));
        }
    }
    if ns > 1 {
        let stride = nc * ne * nb;
        let series: Vec<(String, Vec<(f64, f64)>)> = (0..stride)
            .map(|j| {
                let p = rows[j].point;
                let pts = (0..ns)
                    .map(|s| {
                        (
                            rows[s * stride + j].point.sigma_p,
                            rows[s * stride + j].ratio_db,
                        )
                    })
                    .collect();
                (format!("c_xi={} eta={} N_B={}", p.c_xi, p.eta, p.n_b), pts)
            })
            .collect();
        out.push((
            format!("{name}_sigma_p.svg"),
            line_chart(
                "10 log10(J_q/J_c) vs sigma_p",
                &series,
                spec.sigma_p_axis.is_log(),
            ),
        ));
    }
    out
}

const W: f64 = 640.0;
const H: f64 = 480.0;
const ML: f64 = 80.0;
const MR: f64 = 120.0;
const MT: f64 = 40.0;
const MB: f64 = 60.0;

fn color(t: f64) -> String {
    // dark blue -> teal -> yellow
    const STOPS: [(f64, f64, f64); 5] = [
        (68.0, 1.0, 84.0),
        (59.0, 82.0, 139.0),
        (33.0, 145.0, 140.0),
        (94.0, 201.0, 98.0),
        (253.0, 231.0, 37.0),
    ];
    let t = if t.is_finite() {
        t.clamp(0.0, 1.0)
    } else {
        0.0
    };
    let x = t * 4.0;
    let i = (x.floor() as usize).min(3);
    let u = x - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let mix = |p: f64, q: f64| (p + (q - p) * u).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(a.0, b.0),
        mix(a.1, b.1),
        mix(a.2, b.2)
    )
}

fn ticks(axis: &Axis) -> Vec<(f64, String)> {
    let v = axis.values();
    let n = v.len();
    if axis.is_log() {
        let (lo, hi) = (v[0].log10(), v[n - 1].log10());
        let mut out = Vec::new();
        let mut d = lo.ceil() as i32;
        while f64::from(d) <= hi + 1e-9 {
            let pos = if hi > lo {
                (f64::from(d) - lo) / (hi - lo)
            } else {
                0.0
            };
            out.push((pos, format!("1e{d}")));
            d += 1;
        }
        out
    } else {
        vec![
            (0.0, format!("{:.3}", v[0])),
            (1.0, format!("{:.3}", v[n - 1])),
        ]
    }
}

fn svg_open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{title}</text>"#,
        W / 2.0
    );
    s
}

fn heatmap(title: &str, x: &Axis, y: &Axis, z: &[f64]) -> String {
    let (nx, ny) = (x.len(), y.len());
    let (pw, ph) = (W - ML - MR, H - MT - MB);
    let (cw, ch) = (pw / nx as f64, ph / ny as f64);
    let lo = z.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut s = svg_open(title);
    for (ix, _) in x.values().iter().enumerate() {
        for iy in 0..ny {
            let v = z[ix * ny + iy];
            let (px, py) = (ML + ix as f64 * cw, MT + ph - (iy + 1) as f64 * ch);
            let _ = writeln!(
                s,
                r#"<rect x="{px:.2}" y="{py:.2}" width="{:.2}" height="{:.2}" fill="{}"><title>{v:.4} dB</title></rect>"#,
                cw + 0.5,
                ch + 0.5,
                color((v - lo) / span)
            );
        }
    }
    // tick positions refer to cell centers of the first and last cells
    for (t, label) in ticks(x) {
        let px = ML + cw / 2.0 + t * (pw - cw);
        let _ = writeln!(
            s,
            r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#,
            MT + ph + 18.0
        );
    }
    for (t, label) in ticks(y) {
        let py = MT + ph - ch / 2.0 - t * (ph - ch);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{py:.2}" text-anchor="end">{label}</text>"#,
            ML - 6.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">eta</text>"#,
        ML + pw / 2.0,
        H - 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">N_B</text>"#,
        MT + ph / 2.0,
        MT + ph / 2.0
    );
    let bx = W - MR + 30.0;
    for k in 0..50 {
        let t = k as f64 / 49.0;
        let _ = writeln!(
            s,
            r#"<rect x="{bx}" y="{:.2}" width="20" height="{:.2}" fill="{}"/>"#,
            MT + ph * (1.0 - t) - ph / 50.0,
            ph / 50.0 + 0.5,
            color(t)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}">{hi:.3} dB</text>"#,
        bx + 24.0,
        MT + 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}">{lo:.3} dB</text>"#,
        bx + 24.0,
        MT + ph
    );
    s.push_str("</svg>\n");
    s
}

fn line_chart(title: &str, series: &[(String, Vec<(f64, f64)>)], log_x: bool) -> String {
    const PALETTE: [&str; 6] = [
        "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
    ];
    let tx = |x: f64| if log_x { x.log10() } else { x };
    let all = series.iter().flat_map(|(_, p)| p.iter().copied());
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for (x, y) in all {
        x0 = x0.min(tx(x));
        x1 = x1.max(tx(x));
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let (pw, ph) = (W - ML - MR, H - MT - MB);
    let px = |x: f64| ML + (tx(x) - x0) / (x1 - x0) * pw;
    let py = |y: f64| MT + ph - (y - y0) / (y1 - y0) * ph;
    let mut s = svg_open(title);
    let _ = writeln!(
        s,
        r#"<rect x="{ML}" y="{MT}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for (i, (label, pts)) in series.iter().enumerate() {
        let c = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{}"/>"#,
            path.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" fill="{c}" font-size="10">{label}</text>"#,
            W - MR + 4.0,
            MT + 12.0 * (i + 1) as f64
        );
    }
    if log_x {
        let mut d = x0.ceil() as i32;
        while f64::from(d) <= x1 + 1e-9 {
            let x = ML + (f64::from(d) - x0) / (x1 - x0) * pw;
            let _ = writeln!(
                s,
                r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{d}</text>"#,
                MT + ph + 18.0
            );
            d += 1;
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{y1:.3}</text>"#,
        ML - 6.0,
        MT + 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{y0:.3}</text>"#,
        ML - 6.0,
        MT + ph
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">sigma_p (rad/s)</text>"#,
        ML + pw / 2.0,
        H - 16.0
    );
    s.push_str("</svg>\n");
    s
}
