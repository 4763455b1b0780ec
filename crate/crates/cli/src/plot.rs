//! Static SVG figures for run records and main-effects tables.

use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use r2p2_core::controller::Role;
use r2p2_core::geometry::{angle_diff, bearing_to};
use r2p2_core::mission::{RunRecord, Sample};

const W: f64 = 720.0;
const H: f64 = 480.0;
const MARGIN: f64 = 56.0;

fn role_color(role: Option<Role>) -> &'static str {
    match role {
        Some(Role::Push) => "#d62728",
        Some(Role::Prevent) => "#1f77b4",
        Some(Role::Support) => "#2ca02c",
        None => "#7f7f7f",
    }
}

struct Svg {
    body: String,
    width: f64,
    height: f64,
}

impl Svg {
    fn new(width: f64, height: f64) -> Self {
        Self {
            body: String::new(),
            width,
            height,
        }
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, color: &str, width: f64) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{color}" stroke-width="{width}"/>"#
        );
    }

    fn polyline(&mut self, pts: &[(f64, f64)], color: &str, width: f64) {
        if pts.is_empty() {
            return;
        }
        let mut d = String::new();
        for (x, y) in pts {
            let _ = write!(d, "{x:.2},{y:.2} ");
        }
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="{width}"/>"#,
            d.trim_end()
        );
    }

    fn circle(&mut self, x: f64, y: f64, r: f64, fill: &str) {
        let _ = writeln!(self.body, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r:.2}" fill="{fill}"/>"#);
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        let _ = writeln!(
            self.body,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{fill}"/>"#
        );
    }

    fn text(&mut self, x: f64, y: f64, size: f64, anchor: &str, s: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" font-family="sans-serif" font-size="{size}" text-anchor="{anchor}">{}</text>"#,
            escape(s)
        );
    }

    fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
             <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Linear map from a data range onto a pixel range.
#[derive(Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    p0: f64,
    p1: f64,
}

impl Axis {
    fn new(lo: f64, hi: f64, p0: f64, p1: f64) -> Self {
        let (lo, hi) = if (hi - lo).abs() < 1e-12 { (lo - 1.0, hi + 1.0) } else { (lo, hi) };
        Self { lo, hi, p0, p1 }
    }

    fn map(&self, v: f64) -> f64 {
        self.p0 + (v - self.lo) / (self.hi - self.lo) * (self.p1 - self.p0)
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Framed panel with min/max tick labels on both axes.
fn panel(svg: &mut Svg, x: Axis, y: Axis, title: &str, xlabel: &str) {
    let (l, r) = (x.p0, x.p1);
    let (b, t) = (y.p0, y.p1);
    svg.line(l, b, r, b, "black", 1.0);
    svg.line(l, b, l, t, "black", 1.0);
    svg.text((l + r) / 2.0, t - 6.0, 13.0, "middle", title);
    svg.text(l, b + 14.0, 10.0, "middle", &format!("{:.2}", x.lo));
    svg.text(r, b + 14.0, 10.0, "middle", &format!("{:.2}", x.hi));
    svg.text((l + r) / 2.0, b + 26.0, 10.0, "middle", xlabel);
    svg.text(l - 4.0, b, 10.0, "end", &format!("{:.2}", y.lo));
    svg.text(l - 4.0, t + 8.0, 10.0, "end", &format!("{:.2}", y.hi));
}

fn legend(svg: &mut Svg, x: f64, y: f64) {
    for (i, (name, role)) in [("push", Some(Role::Push)), ("prevent", Some(Role::Prevent)), ("support", Some(Role::Support)), ("none", None)]
        .into_iter()
        .enumerate()
    {
        let yy = y + 14.0 * i as f64;
        svg.rect(x, yy - 8.0, 10.0, 10.0, role_color(role));
        svg.text(x + 14.0, yy, 10.0, "start", name);
    }
}

fn waypoints(record: &RunRecord) -> Result<Vec<(f64, f64)>> {
    let cfg = record.config.as_ref().context("record has no config snapshot")?;
    Ok(cfg.mission.waypoints_m.iter().map(|p| (p[0], p[1])).collect())
}

/// Box path against the waypoints, with role-coloured robot traces.
pub fn trajectory(record: &RunRecord) -> Result<String> {
    let wps = waypoints(record)?;
    let s = &record.samples;
    if s.is_empty() {
        bail!("record has no samples");
    }
    let xs = s
        .iter()
        .flat_map(|x| std::iter::once(x.box_pose.x).chain(x.robots.iter().map(|r| r.pose.x)))
        .chain(wps.iter().map(|p| p.0));
    let ys = s
        .iter()
        .flat_map(|x| std::iter::once(x.box_pose.y).chain(x.robots.iter().map(|r| r.pose.y)))
        .chain(wps.iter().map(|p| p.1));
    let (x0, x1) = bounds(xs);
    let (y0, y1) = bounds(ys);
    // Equal scale on both axes.
    let span = (x1 - x0).max(y1 - y0) + 0.2;
    let (cx, cy) = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
    let side = H - 2.0 * MARGIN;
    let ax = Axis::new(cx - span / 2.0, cx + span / 2.0, MARGIN, MARGIN + side);
    let ay = Axis::new(cy - span / 2.0, cy + span / 2.0, H - MARGIN, MARGIN);
    let mut svg = Svg::new(W, H);
    panel(&mut svg, ax, ay, "box and robot trajectories", "x (m)");

    let n = s[0].robots.len();
    for k in 0..n {
        for pair in s.windows(2) {
            let (a, b) = (&pair[0].robots[k], &pair[1].robots[k]);
            svg.line(ax.map(a.pose.x), ay.map(a.pose.y), ax.map(b.pose.x), ay.map(b.pose.y), role_color(a.role), 1.0);
        }
    }
    let path: Vec<(f64, f64)> = s.iter().map(|x| (ax.map(x.box_pose.x), ay.map(x.box_pose.y))).collect();
    svg.polyline(&path, "black", 2.0);
    let mut reference = vec![(ax.map(s[0].box_pose.x), ay.map(s[0].box_pose.y))];
    reference.extend(wps.iter().map(|p| (ax.map(p.0), ay.map(p.1))));
    svg.polyline(&reference, "#999999", 1.0);
    for (i, p) in wps.iter().enumerate() {
        svg.circle(ax.map(p.0), ay.map(p.1), 5.0, "#ff7f0e");
        svg.text(ax.map(p.0) + 7.0, ay.map(p.1) - 7.0, 10.0, "start", &format!("wp{}", i + 1));
    }
    legend(&mut svg, W - 110.0, MARGIN + 10.0);
    svg.text(W - 110.0, MARGIN + 80.0, 10.0, "start", record.outcome.describe());
    Ok(svg.finish())
}

/// Role of every robot over time, with the box primitive on top.
pub fn roles(record: &RunRecord) -> Result<String> {
    let s = &record.samples;
    if s.is_empty() {
        bail!("record has no samples");
    }
    let n = s[0].robots.len();
    let t_end = s[s.len() - 1].t.max(1e-9);
    let ax = Axis::new(0.0, t_end, MARGIN + 40.0, W - MARGIN);
    let row_h = (H - 2.0 * MARGIN - 40.0) / (n as f64 + 1.0);
    let mut svg = Svg::new(W, H);
    svg.text(W / 2.0, MARGIN - 20.0, 13.0, "middle", "roles and box primitive");
    let bar = |i: usize| -> f64 { MARGIN + row_h * i as f64 };

    svg.text(ax.p0 - 6.0, bar(0) + row_h * 0.6, 10.0, "end", "primitive");
    for r in 0..n {
        svg.text(ax.p0 - 6.0, bar(r + 1) + row_h * 0.6, 10.0, "end", &format!("robot {r}"));
    }
    for (i, x) in s.iter().enumerate() {
        let t1 = s.get(i + 1).map_or(x.t + 0.05, |n| n.t);
        let (p0, p1) = (ax.map(x.t), ax.map(t1.min(t_end)));
        let w = (p1 - p0).max(0.5);
        let prim = match x.primitive.map(|p| format!("{p:?}")) {
            Some(name) if name.contains("Anti") => "#9467bd",
            Some(name) if name.contains("Clock") => "#8c564b",
            Some(_) => "#17becf",
            None => "#dddddd",
        };
        svg.rect(p0, bar(0) + 2.0, w, row_h - 4.0, prim);
        for (k, r) in x.robots.iter().enumerate() {
            let color = if r.flag { "#000000" } else { role_color(r.role) };
            svg.rect(p0, bar(k + 1) + 2.0, w, row_h - 4.0, color);
        }
    }
    let base = bar(n + 1) + 4.0;
    svg.line(ax.p0, base, ax.p1, base, "black", 1.0);
    svg.text(ax.p0, base + 14.0, 10.0, "middle", "0");
    svg.text(ax.p1, base + 14.0, 10.0, "middle", &format!("{t_end:.2} s"));
    legend(&mut svg, W - 110.0, H - 60.0);
    svg.text(MARGIN, H - 20.0, 10.0, "start", "black: stop flag raised; primitive: purple anticlockwise, brown clockwise, cyan straight");
    Ok(svg.finish())
}

/// The four time series: heading error to the target, box angular speed,
/// and the mean commanded speed of push and prevent robots.
pub fn speed_series(record: &RunRecord) -> Result<[Vec<(f64, f64)>; 4]> {
    let wps = waypoints(record)?;
    let mut out: [Vec<(f64, f64)>; 4] = Default::default();
    for x in &record.samples {
        let wp = wps[x.waypoint.min(wps.len() - 1)];
        if let Ok(b) = bearing_to(x.box_pose.position(), r2p2_core::Vec2::new(wp.0, wp.1)) {
            out[0].push((x.t, angle_diff(b, x.box_pose.theta).abs().to_degrees()));
        }
        out[1].push((x.t, x.box_twist.omega));
        for (slot, role) in [(2, Role::Push), (3, Role::Prevent)] {
            if let Some(v) = mean_speed(x, role) {
                out[slot].push((x.t, v));
            }
        }
    }
    Ok(out)
}

fn mean_speed(x: &Sample, role: Role) -> Option<f64> {
    let vs: Vec<f64> = x.robots.iter().filter(|r| r.role == Some(role)).map(|r| r.v).collect();
    (!vs.is_empty()).then(|| vs.iter().sum::<f64>() / vs.len() as f64)
}

pub fn speeds(record: &RunRecord) -> Result<String> {
    let series = speed_series(record)?;
    let titles = [
        "heading error (deg)",
        "box angular speed (rad/s)",
        "push robot speed (m/s)",
        "prevent robot speed (m/s)",
    ];
    let t_end = record.samples.last().map_or(1.0, |s| s.t);
    let mut svg = Svg::new(W, H);
    let (pw, ph) = ((W - 3.0 * MARGIN) / 2.0, (H - 3.0 * MARGIN) / 2.0);
    for (i, (data, title)) in series.iter().zip(titles).enumerate() {
        let (col, row) = ((i % 2) as f64, (i / 2) as f64);
        let left = MARGIN + col * (pw + MARGIN);
        let top = MARGIN + row * (ph + MARGIN);
        let ax = Axis::new(0.0, t_end, left, left + pw);
        let (lo, hi) = bounds(data.iter().map(|p| p.1));
        let (lo, hi) = if data.is_empty() { (0.0, 1.0) } else { (lo.min(0.0), hi) };
        let ay = Axis::new(lo, hi, top + ph, top);
        panel(&mut svg, ax, ay, title, "t (s)");
        let pts: Vec<(f64, f64)> = data.iter().map(|p| (ax.map(p.0), ay.map(p.1))).collect();
        svg.polyline(&pts, "#1f77b4", 1.2);
    }
    Ok(svg.finish())
}

/// One parsed row of a main-effects CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectRow {
    pub factor: String,
    pub level: usize,
    pub value: f64,
    pub mean: Option<f64>,
    pub delta: Option<f64>,
}

pub fn read_main_effects(text: &str) -> Result<Vec<EffectRow>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name).with_context(|| format!("missing column `{name}`"));
    let (f, l, v, m, d) = (col("factor")?, col("level")?, col("value")?, col("mean_time_s")?, col("delta_s")?);
    let opt = |s: &str| -> Result<Option<f64>> { Ok(if s.is_empty() { None } else { Some(s.parse()?) }) };
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        rows.push(EffectRow {
            factor: rec[f].to_string(),
            level: rec[l].parse()?,
            value: rec[v].parse()?,
            mean: opt(&rec[m])?,
            delta: opt(&rec[d])?,
        });
    }
    Ok(rows)
}

/// Per-factor level-mean lines with the delta printed above each panel.
pub fn main_effects(rows: &[EffectRow]) -> Result<String> {
    let mut factors: Vec<&str> = Vec::new();
    for r in rows {
        if !factors.contains(&r.factor.as_str()) {
            factors.push(&r.factor);
        }
    }
    if factors.is_empty() {
        bail!("no main-effect rows");
    }
    let (lo, hi) = bounds(rows.iter().filter_map(|r| r.mean));
    let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 1.0) };
    let cols = factors.len().min(4);
    let nrows = factors.len().div_ceil(cols);
    let width = MARGIN + cols as f64 * 170.0;
    let height = MARGIN + nrows as f64 * 200.0;
    let mut svg = Svg::new(width, height);
    for (i, name) in factors.iter().enumerate() {
        let left = MARGIN + (i % cols) as f64 * 170.0;
        let top = MARGIN / 2.0 + (i / cols) as f64 * 200.0 + 30.0;
        let ax = Axis::new(1.0, 3.0, left, left + 120.0);
        let ay = Axis::new(lo, hi, top + 130.0, top);
        let mine: Vec<&EffectRow> = rows.iter().filter(|r| r.factor == *name).collect();
        let delta = mine.iter().find_map(|r| r.delta);
        let title = match delta {
            Some(d) => format!("{name} (Δ {d:.2} s)"),
            None => format!("{name} (no data)"),
        };
        panel(&mut svg, ax, ay, &title, "level");
        let pts: Vec<(f64, f64)> = mine
            .iter()
            .filter_map(|r| r.mean.map(|m| (ax.map(r.level as f64), ay.map(m))))
            .collect();
        svg.polyline(&pts, "#1f77b4", 1.5);
        for (x, y) in &pts {
            svg.circle(*x, *y, 3.0, "#1f77b4");
        }
        for r in &mine {
            svg.text(ax.map(r.level as f64), top + 158.0, 9.0, "middle", &format!("{}", r.value));
        }
    }
    Ok(svg.finish())
}
