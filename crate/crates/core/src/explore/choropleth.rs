use super::department::{DepartmentAggregate, ValueField};
use super::svg::{escape, format_tick, mix_color, SvgDocument, HEIGHT, WIDTH};
use super::ExploreError;
use serde_json::Value;
use std::collections::BTreeMap;
use std::fmt::Write as _;

pub const LOW_COLOR: &str = "#f7fbff";
pub const HIGH_COLOR: &str = "#08306b";
pub const MISSING_COLOR: &str = "#dddddd";

type Ring = Vec<(f64, f64)>;

/// A department outline: polygons, each an outer ring followed by holes.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub code: String,
    pub polygons: Vec<Vec<Ring>>,
}

/// Reads a FeatureCollection whose features carry the department code in
/// `code_property`. Numeric codes are zero-padded to two characters.
pub fn parse_departments(geojson: &str, code_property: &str) -> Result<Vec<Region>, ExploreError> {
    let bad = |msg: String| ExploreError::GeoJson(msg);
    let root: Value = serde_json::from_str(geojson).map_err(|e| bad(e.to_string()))?;
    if root.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(bad("top level is not a FeatureCollection".into()));
    }
    let features = root
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("missing `features` array".into()))?;
    let mut regions: Vec<Region> = Vec::with_capacity(features.len());
    for (i, feature) in features.iter().enumerate() {
        let code = match feature.get("properties").and_then(|p| p.get(code_property)) {
            Some(Value::String(s)) => s.trim().to_uppercase(),
            Some(Value::Number(num)) => num.to_string(),
            _ => return Err(bad(format!("feature {i} has no `{code_property}` property"))),
        };
        let code = if code.len() == 1 { format!("0{code}") } else { code };
        let geometry = feature.get("geometry").ok_or_else(|| bad(format!("feature {i} has no geometry")))?;
        let coords = geometry.get("coordinates");
        let polygons = match geometry.get("type").and_then(Value::as_str) {
            Some("Polygon") => vec![polygon(coords, i)?],
            Some("MultiPolygon") => coords
                .and_then(Value::as_array)
                .ok_or_else(|| bad(format!("feature {i}: MultiPolygon without coordinates")))?
                .iter()
                .map(|p| polygon(Some(p), i))
                .collect::<Result<_, _>>()?,
            other => return Err(bad(format!("feature {i}: unsupported geometry {other:?}"))),
        };
        // Several features for one department are merged.
        match regions.iter_mut().find(|r| r.code == code) {
            Some(region) => region.polygons.extend(polygons),
            None => regions.push(Region { code, polygons }),
        }
    }
    if regions.is_empty() {
        return Err(bad("no features".into()));
    }
    Ok(regions)
}

fn polygon(value: Option<&Value>, feature: usize) -> Result<Vec<Ring>, ExploreError> {
    let bad = || ExploreError::GeoJson(format!("feature {feature}: malformed polygon coordinates"));
    let rings = value.and_then(Value::as_array).ok_or_else(bad)?;
    rings
        .iter()
        .map(|ring| {
            let ring = ring.as_array().ok_or_else(bad)?;
            let points: Ring = ring
                .iter()
                .map(|pt| match pt.as_array().map(|a| a.as_slice()) {
                    Some([x, y, ..]) => match (x.as_f64(), y.as_f64()) {
                        (Some(x), Some(y)) if x.is_finite() && y.is_finite() => Ok((x, y)),
                        _ => Err(bad()),
                    },
                    _ => Err(bad()),
                })
                .collect::<Result<_, _>>()?;
            if points.len() < 3 {
                return Err(bad());
            }
            Ok(points)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Choropleth {
    pub svg: String,
    /// Fill colour per department code drawn.
    pub fills: BTreeMap<String, String>,
    /// Aggregate codes that have no outline in the map.
    pub unmapped: Vec<String>,
}

/// Colour for `value` on the linear scale `[min, max]`; the low end when the
/// scale is degenerate.
pub fn scale_color(value: f64, min: f64, max: f64) -> String {
    let t = if max > min { (value - min) / (max - min) } else { 0.0 };
    mix_color(LOW_COLOR, HIGH_COLOR, t)
}

/// Shades each department by `value_field`. Departments in the map but not in
/// `aggregates` are drawn in a neutral grey.
pub fn render_choropleth(
    geojson: &str,
    code_property: &str,
    aggregates: &[DepartmentAggregate],
    value_field: &str,
) -> Result<Choropleth, ExploreError> {
    let field = ValueField::parse(value_field)?;
    let regions = parse_departments(geojson, code_property)?;
    let values: BTreeMap<&str, f64> = aggregates.iter().map(|a| (a.code.as_str(), field.get(a))).collect();
    let min = values.values().copied().fold(f64::INFINITY, f64::min);
    let max = values.values().copied().fold(f64::NEG_INFINITY, f64::max);

    // Equirectangular projection with longitude shrunk by cos(mean latitude).
    let all = || regions.iter().flat_map(|r| r.polygons.iter().flatten().flatten());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all() {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let mid_lat = (y0 + y1) / 2.0;
    let kx = if mid_lat.abs() <= 90.0 { mid_lat.to_radians().cos().max(0.1) } else { 1.0 };
    let (map_w, map_h) = (700.0, HEIGHT - 60.0);
    let span_x = ((x1 - x0) * kx).max(1e-12);
    let span_y = (y1 - y0).max(1e-12);
    let s = (map_w / span_x).min(map_h / span_y);
    let off_x = 20.0 + (map_w - span_x * s) / 2.0;
    let off_y = 40.0 + (map_h - span_y * s) / 2.0;
    let project = |(x, y): (f64, f64)| (off_x + (x - x0) * kx * s, off_y + (y1 - y) * s);

    let mut doc = SvgDocument::new();
    doc.text(WIDTH / 2.0, 26.0, &format!("{} by department", field.name()), "middle", 16.0);
    doc.open_group("departments");
    let mut fills = BTreeMap::new();
    for region in &regions {
        let (fill, label) = match values.get(region.code.as_str()) {
            Some(v) => (scale_color(*v, min, max), format!("{}: {}", region.code, format_tick(*v))),
            None => (MISSING_COLOR.to_string(), format!("{}: no data", region.code)),
        };
        let mut d = String::new();
        for poly in &region.polygons {
            for ring in poly {
                for (i, pt) in ring.iter().enumerate() {
                    let (px, py) = project(*pt);
                    let _ = write!(d, "{}{px:.2} {py:.2} ", if i == 0 { "M" } else { "L" });
                }
                d.push_str("Z ");
            }
        }
        doc.open_group_with("department", &[("data-code", &region.code)]);
        doc.raw(&format!("<title>{}</title>", escape(&label)));
        doc.filled_path(d.trim_end(), &fill);
        doc.close_group();
        fills.insert(region.code.clone(), fill);
    }
    doc.close_group();

    doc.open_group("legend");
    let (lx, ly0, ly1) = (800.0, 80.0, 400.0);
    let steps = 40;
    for i in 0..steps {
        let t = 1.0 - (i as f64 + 0.5) / steps as f64;
        let ya = ly0 + (ly1 - ly0) * i as f64 / steps as f64;
        let yb = ly0 + (ly1 - ly0) * (i + 1) as f64 / steps as f64;
        doc.line(lx, ya, lx, yb, &mix_color(LOW_COLOR, HIGH_COLOR, t), 18.0);
    }
    if min.is_finite() {
        for (v, y) in [(max, ly0), ((min + max) / 2.0, (ly0 + ly1) / 2.0), (min, ly1)] {
            doc.line(lx + 9.0, y, lx + 14.0, y, "#000000", 1.0);
            doc.text(lx + 18.0, y + 4.0, &format_tick(v), "start", 11.0);
        }
    }
    doc.text(lx - 10.0, ly1 + 30.0, field.name(), "start", 12.0);
    doc.close_group();

    let mapped: Vec<&str> = regions.iter().map(|r| r.code.as_str()).collect();
    let unmapped = values.keys().filter(|c| !mapped.contains(c)).map(|c| c.to_string()).collect();
    Ok(Choropleth { svg: doc.finish(), fills, unmapped })
}
